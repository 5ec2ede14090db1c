#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace errdecode {

/// Minimal comma-separated table with a header row. Fields never contain
/// commas or quotes in the formats this project writes.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;  // throws Error(Format) when absent
    bool has_column(std::string_view name) const;
    std::string to_string() const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& file);
void write_csv(const std::filesystem::path& file, const CsvTable& table);

/// Shortest representation that round-trips through strtod.
std::string format_number(double value);
double parse_number(std::string_view field);

}  // namespace errdecode
