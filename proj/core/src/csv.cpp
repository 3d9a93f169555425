#include "ledgergraph/csv.hpp"

#include <fstream>
#include <istream>
#include <sstream>

#include "ledgergraph/errors.hpp"

namespace ledgergraph::csv {
namespace {

// Character-level parser state shared by the strict entry points.
struct Parser {
    std::istream& in;
    const ParseOptions& opts;
    std::size_t line = 1;  // current physical line, 1-based

    explicit Parser(std::istream& s, const ParseOptions& o) : in(s), opts(o) {}

    int get() {
        const int c = in.get();
        if (c == '\n') ++line;
        return c;
    }
    int peek() { return in.peek(); }

    // Reads one logical row.  Returns false on clean EOF before any
    // character of a new row.
    bool next_row(Row& row) {
        row.fields.clear();
        if (peek() == std::char_traits<char>::eof()) return false;
        row.line = line;

        std::string field;
        bool quoted = false;        // currently inside an open quote
        bool was_quoted = false;    // this field started with a quote
        std::size_t field_line = line;

        auto end_field = [&] {
            row.fields.push_back(std::move(field));
            field.clear();
            quoted = false;
            was_quoted = false;
        };

        for (;;) {
            const int ci = get();
            if (ci == std::char_traits<char>::eof()) {
                if (quoted) {
                    throw CsvError(field_line, CsvError::Kind::unterminated_quote,
                                   "unterminated quoted field at end of input");
                }
                end_field();
                return true;
            }
            const char c = static_cast<char>(ci);
            if (quoted) {
                if (c == '"') {
                    if (peek() == '"') {
                        get();
                        field.push_back('"');
                    } else {
                        quoted = false;  // closing quote; delimiter/EOL must follow
                    }
                } else {
                    field.push_back(c);  // includes embedded newlines
                }
                continue;
            }
            if (c == '"') {
                if (field.empty() && !was_quoted) {
                    quoted = true;
                    was_quoted = true;
                    field_line = line;
                } else {
                    throw CsvError(line, CsvError::Kind::stray_quote,
                                   "quote in the middle of a field");
                }
            } else if (c == opts.delimiter) {
                end_field();
                field_line = line;
            } else if (c == '\r') {
                if (peek() == '\n') {
                    get();
                    end_field();
                    return true;
                }
                field.push_back(c);  // lone CR is data
            } else if (c == '\n') {
                end_field();
                return true;
            } else {
                if (was_quoted) {
                    throw CsvError(line, CsvError::Kind::data_after_quote, "data after closing quote");
                }
                field.push_back(c);
            }
        }
    }
};

}  // namespace

std::vector<Row> parse_stream(std::istream& in, const ParseOptions& opts) {
    // Strip a UTF-8 byte-order mark if present.
    if (in.peek() == 0xEF) {
        char bom[3] = {};
        in.read(bom, 3);
        if (in.gcount() != 3 || bom[1] != char(0xBB) || bom[2] != char(0xBF)) {
            throw CsvError(1, CsvError::Kind::malformed_bom, "malformed byte-order mark");
        }
    }

    std::vector<Row> rows;
    Parser parser(in, opts);
    Row row;
    while (parser.next_row(row)) {
        // A trailing newline produces one empty single-field row; drop it.
        if (row.fields.size() == 1 && row.fields[0].empty() &&
            parser.peek() == std::char_traits<char>::eof()) {
            break;
        }
        if (opts.enforce_rectangular && !rows.empty() &&
            row.fields.size() != rows.front().fields.size()) {
            throw CsvError(row.line, CsvError::Kind::ragged_row,
                           "expected " + std::to_string(rows.front().fields.size()) +
                               " fields, found " + std::to_string(row.fields.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Row> parse_string(const std::string& text, const ParseOptions& opts) {
    std::istringstream in(text);
    return parse_stream(in, opts);
}

std::vector<Row> parse_file(const std::string& path, const ParseOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return parse_stream(in, opts);
}

std::string format_row(const std::vector<std::string>& fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(delimiter);
        const std::string& f = fields[i];
        const bool needs_quote = f.find_first_of(std::string{delimiter} + "\"\r\n") !=
                                 std::string::npos;
        if (!needs_quote) {
            out += f;
            continue;
        }
        out.push_back('"');
        for (char c : f) {
            if (c == '"') out.push_back('"');
            out.push_back(c);
        }
        out.push_back('"');
    }
    return out;
}

}  // namespace ledgergraph::csv
