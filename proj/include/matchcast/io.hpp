#pragma once

#include <string>
#include <string_view>

namespace matchcast::io {

std::string read_file(const std::string& path);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace matchcast::io
