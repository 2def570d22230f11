#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hsdef::csv {

struct Row {
    std::size_t line = 0;  // 1-based line on which the record starts
    std::vector<std::string> fields;
};

// RFC 4180 reader: quoted fields may hold the delimiter, doubled quotes and
// line breaks. A UTF-8 byte order mark at the start of input is skipped.
class Reader {
public:
    explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delimiter_(delimiter) {}

    /// Next record, or nullopt at end of input. Throws std::runtime_error on
    /// an unterminated quoted field.
    std::optional<Row> next();

private:
    std::istream& in_;
    char delimiter_;
    std::size_t line_ = 1;
    bool started_ = false;
};

/// Quotes a field when it contains the delimiter, a quote or a line break.
std::string escape(std::string_view field, char delimiter = ',');

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

} // namespace hsdef::csv
