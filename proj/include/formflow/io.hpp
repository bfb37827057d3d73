#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace formflow {

// Shortest text that parses back to the same double.
std::string format_double(double v);

// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace formflow
