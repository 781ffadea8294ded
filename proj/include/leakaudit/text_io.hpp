#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace leakaudit {

// Splits on every tab; empty fields are kept.
std::vector<std::string_view> split_tabs(std::string_view line);

// Strict number parsing; the whole field must be consumed.
double parse_double(std::string_view field, std::string_view what);
std::uint64_t parse_u64(std::string_view field, std::string_view what);

std::string read_file(const std::filesystem::path& path);

// All lines without their terminators. A trailing "\r" is stripped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace leakaudit
