#include "hsdef/csv.hpp"

#include <stdexcept>

namespace hsdef::csv {

std::optional<Row> Reader::next() {
    if (!started_) {
        started_ = true;
        if (in_.peek() == 0xEF) {
            char bom[3];
            in_.read(bom, 3);
            if (!(static_cast<unsigned char>(bom[1]) == 0xBB && static_cast<unsigned char>(bom[2]) == 0xBF)) {
                in_.seekg(0);
            }
        }
    }
    if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;

    Row row;
    row.line = line_;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    int c;
    while ((c = in_.get()) != std::char_traits<char>::eof()) {
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line_;
                field += ch;
            }
            continue;
        }
        if (ch == '"' && field.empty() && !field_was_quoted) {
            quoted = true;
            field_was_quoted = true;
        } else if (ch == delimiter_) {
            row.fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (ch == '\r' && in_.peek() == '\n') {
            continue;
        } else if (ch == '\n') {
            ++line_;
            row.fields.push_back(std::move(field));
            return row;
        } else {
            field += ch;
        }
    }
    if (quoted) throw std::runtime_error("unterminated quoted field starting on line " + std::to_string(row.line));
    row.fields.push_back(std::move(field));
    return row;
}

std::string escape(std::string_view field, char delimiter) {
    if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << delimiter;
        out << escape(fields[i], delimiter);
    }
    out << '\n';
}

} // namespace hsdef::csv
