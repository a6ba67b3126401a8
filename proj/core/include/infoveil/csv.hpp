#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace infoveil::csv {

/// One parsed record with the 1-based line it started on.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerant. Blank
/// lines and lines starting with '#' are skipped.
std::vector<Row> parse(std::string_view text);

std::string escape(std::string_view field);
std::string joinRow(const std::vector<std::string>& fields);

}  // namespace infoveil::csv
