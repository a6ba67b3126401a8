#include "infoveil/csv.hpp"

#include "infoveil/error.hpp"

namespace infoveil::csv {

std::vector<Row> parse(std::string_view text) {
    std::vector<Row> rows;
    std::size_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();

    // Skip a UTF-8 byte order mark.
    if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

    while (i < n) {
        const std::size_t row_line = line;
        if (text[i] == '#') {
            while (i < n && text[i] != '\n') ++i;
            if (i < n) ++i;
            ++line;
            continue;
        }
        if (text[i] == '\n' || (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n')) {
            i += text[i] == '\r' ? 2 : 1;
            ++line;
            continue;
        }

        Row row{row_line, {}};
        std::string field;
        bool in_quotes = false;
        bool done = false;
        while (!done) {
            if (i >= n) {
                if (in_quotes) throw Error(ErrorCode::InvalidArgument, "unterminated quoted field", std::to_string(row_line));
                row.fields.push_back(std::move(field));
                break;
            }
            const char c = text[i];
            if (in_quotes) {
                if (c == '"') {
                    if (i + 1 < n && text[i + 1] == '"') {
                        field.push_back('"');
                        i += 2;
                    } else {
                        in_quotes = false;
                        ++i;
                    }
                } else {
                    if (c == '\n') ++line;
                    field.push_back(c);
                    ++i;
                }
                continue;
            }
            switch (c) {
                case '"':
                    in_quotes = true;
                    ++i;
                    break;
                case ',':
                    row.fields.push_back(std::move(field));
                    field.clear();
                    ++i;
                    break;
                case '\r':
                    ++i;
                    break;
                case '\n':
                    row.fields.push_back(std::move(field));
                    ++i;
                    ++line;
                    done = true;
                    break;
                default:
                    field.push_back(c);
                    ++i;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string joinRow(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

}  // namespace infoveil::csv
