#pragma once

#include <filesystem>
#include <string>

namespace boardgraph {

// Write-to-temp-then-rename so readers never observe a partial file.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

}  // namespace boardgraph
