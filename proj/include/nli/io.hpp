#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nli::io {

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place. Parent
// directories are created as needed.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view data);

}  // namespace nli::io
