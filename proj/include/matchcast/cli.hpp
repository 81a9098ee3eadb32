#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace matchcast::cli {

// Exit codes: 0 success, 1 configuration or usage error, 2 data error, 3 model error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matchcast::cli
