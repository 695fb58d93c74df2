#pragma once

#include <string>
#include <vector>

namespace radsum::io {

std::string read_text_file(const std::string& path);

// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

// Splits on '\n'; a trailing newline does not produce an empty last line.
std::vector<std::string> split_lines(const std::string& text);

void ensure_parent_dir(const std::string& path);

}  // namespace radsum::io
