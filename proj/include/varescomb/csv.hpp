#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace varescomb::csv {

/// Minimal unquoted CSV table: header row plus string cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    /// Column index, or npos.
    std::size_t find(std::string_view name) const;
    /// Column index; throws DataError naming the file when missing.
    std::size_t require(std::string_view name, const std::filesystem::path& source) const;
};

Table read(const std::filesystem::path& path);
std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace varescomb::csv
