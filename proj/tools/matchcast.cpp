#include <iostream>

#include "matchcast/cli.hpp"

int main(int argc, char** argv) { return matchcast::cli::run(argc, argv, std::cout, std::cerr); }
