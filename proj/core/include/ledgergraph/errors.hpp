#pragma once

// Exception hierarchy for the ledgergraph library.  Every failure that a
// caller can plausibly recover from (bad input files, malformed config,
// degenerate metric inputs) throws one of these; programming errors use
// assertions instead.

#include <stdexcept>
#include <string>

namespace ledgergraph {

// Root of the hierarchy so callers can catch everything from this library
// with a single handler.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed CSV input: unbalanced quotes, ragged rows, truncated files.
// Carries the 1-based source line so diagnostics point at the byte stream,
// not at some post-parse record index, plus a machine-readable kind so
// recovering callers can tell "row continues on the next line" apart from
// "row is junk".
class CsvError : public Error {
public:
    enum class Kind {
        unterminated_quote,  // EOF (or end of fragment) inside an open quote
        stray_quote,         // quote in the middle of an unquoted field
        data_after_quote,    // characters between a closing quote and the delimiter
        ragged_row,          // field count differs from the first row
        malformed_bom,
    };

    CsvError(std::size_t line, Kind kind, const std::string& what)
        : Error("csv line " + std::to_string(line) + ": " + what), line_(line), kind_(kind) {}
    std::size_t line() const { return line_; }
    Kind kind() const { return kind_; }

private:
    std::size_t line_;
    Kind kind_;
};

// Configuration problems: missing keys, values out of range, unknown enum
// strings.  Thrown while loading config files or resolving CLI overrides.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

// Evaluation-metric inputs that make the requested statistic undefined,
// e.g. AUC over a single-class label set.
class MetricError : public Error {
public:
    explicit MetricError(const std::string& what) : Error("metric: " + what) {}
};

// Non-finite values surfacing mid-computation (overflowing activations,
// NaN losses); the message names the stage or layer that produced them.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("numeric: " + what) {}
};

// Anything that makes a pipeline stage impossible to run: empty graphs where
// a model expects nodes, checkpoint/shape mismatches, unwritable outputs.
class PipelineError : public Error {
public:
    explicit PipelineError(const std::string& what) : Error("pipeline: " + what) {}
};

}  // namespace ledgergraph
