#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crowdqc::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// Throws Error(malformed_payload) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape_field(std::string_view field);

/// One record terminated by CRLF.
std::string format_row(const Row& row);

}  // namespace crowdqc::csv
