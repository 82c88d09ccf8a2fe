#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace medcap {

/// Minimal RFC-4180 reader: quoted fields, "" escapes, CRLF or LF rows.
/// Rows keep their 1-based line number for error reporting.
struct CsvRow {
    std::size_t line_no = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(const std::string& text, const std::string& origin);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

}  // namespace medcap
