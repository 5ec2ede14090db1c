#include "errdecode/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"

namespace errdecode {

namespace {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        fields.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw format_error(fmt::format("CSV column '{}' not found", name));
}

bool CsvTable::has_column(std::string_view name) const {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

std::string CsvTable::to_string() const {
    std::string out = fmt::format("{}\n", fmt::join(header, ","));
    for (const auto& row : rows) out += fmt::format("{}\n", fmt::join(row, ","));
    return out;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                throw format_error(fmt::format("malformed CSV: line {} has {} fields, header has {}", line_no,
                                               fields.size(), table.header.size()));
            }
            table.rows.push_back(std::move(fields));
        }
    }
    if (table.header.empty()) throw format_error("malformed CSV: empty input");
    return table;
}

CsvTable read_csv(const std::filesystem::path& file) { return parse_csv(read_text(file)); }

void write_csv(const std::filesystem::path& file, const CsvTable& table) { write_text(file, table.to_string()); }

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    return fmt::format("{}", value);
}

double parse_number(std::string_view field) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) throw format_error(fmt::format("malformed CSV: '{}' is not a number", field));
    return value;
}

}  // namespace errdecode
