#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace citescope::io {

// Whole-file read; throws std::runtime_error naming the path on failure.
std::string read_file(const std::filesystem::path& path);

// Splits on '\n'; a trailing newline does not produce a final empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to <path>.tmp then renames, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace citescope::io
