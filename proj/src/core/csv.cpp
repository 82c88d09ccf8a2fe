#include "medcap/core/csv.hpp"

#include "medcap/core/error.hpp"
#include "medcap/core/jsonl.hpp"

namespace medcap {

std::vector<CsvRow> parse_csv(const std::string& text, const std::string& origin) {
    std::vector<CsvRow> rows;
    CsvRow row;
    row.line_no = 1;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;
    std::size_t line_no = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        if (row_has_content || !row.fields.empty()) {
            end_field();
            rows.push_back(std::move(row));
        }
        row = CsvRow{};
        row.line_no = line_no;
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw_validation(origin + ":" + std::to_string(line_no) +
                                     ": quote inside unquoted field");
                in_quotes = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                ++line_no;
                end_row();
                break;
            default:
                field += c;
                row_has_content = true;
        }
    }
    if (in_quotes) throw_validation(origin + ": unterminated quoted field");
    end_row();
    return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    return parse_csv(read_text_file(path), path.string());
}

}  // namespace medcap
