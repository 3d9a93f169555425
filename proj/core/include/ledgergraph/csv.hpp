#pragma once

// RFC-4180 CSV reader with position-aware diagnostics.
//
// General-ledger exports are messy: quoted fields with embedded commas and
// newlines, CRLF line endings, UTF-8 byte-order marks, occasional ragged
// rows.  This parser handles the format strictly (quotes must balance,
// quotes inside quoted fields must be doubled) and reports failures with the
// 1-based physical line where the offending field started, which is what a
// user needs to fix the export.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ledgergraph::csv {

struct Row {
    std::vector<std::string> fields;
    // Physical line (1-based) where this row started.  Rows with quoted
    // embedded newlines span several physical lines; this is the first.
    std::size_t line = 0;
};

struct ParseOptions {
    char delimiter = ',';
    // When true (the default) every row must have the same field count as
    // the first row; a ragged row throws CsvError.
    bool enforce_rectangular = true;
};

// Parses an entire character stream.  Handles a UTF-8 BOM on the first line
// and both LF and CRLF row terminators.  Empty input yields no rows; a
// trailing newline does not create a trailing empty row.
// Throws CsvError on unbalanced quotes, a stray quote in an unquoted field,
// EOF inside a quoted field, or (optionally) ragged rows.
std::vector<Row> parse_stream(std::istream& in, const ParseOptions& opts = {});

// Convenience wrapper over an in-memory string (used heavily by tests).
std::vector<Row> parse_string(const std::string& text, const ParseOptions& opts = {});

// Opens and parses a file; throws Error if the file cannot be opened.
std::vector<Row> parse_file(const std::string& path, const ParseOptions& opts = {});

// Serializes one row per RFC 4180: fields containing the delimiter, a quote,
// or a newline are quoted, with embedded quotes doubled.
std::string format_row(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace ledgergraph::csv
