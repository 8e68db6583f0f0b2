#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace docrel::cli {

// Writes every file to a sibling temporary first and renames only after all
// writes succeeded, so a failure leaves no partial outputs behind.
void write_files_atomically(
    const std::vector<std::pair<std::filesystem::path, std::string>>& files);

void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace docrel::cli
