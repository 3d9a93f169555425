#pragma once

// Ledger ingest: raw CSV -> validated, deduplicated, normalized records plus
// a before/after quality report.
//
// The unit of accounting here is the *candidate record*: a raw row can yield
// up to two candidates (one per populated debit/credit amount cell).  Every
// candidate either survives normalization or increments exactly one drop
// counter, so the conservation identity
//
//     records_before == records_after + sum(drop_counts) + dedup_removed
//
// holds exactly, by construction, and is asserted in tests.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ledgergraph/csv.hpp"

namespace ledgergraph::ingest {

enum class Side { debit, credit };

std::string_view side_name(Side s);

// One normalized general-ledger detail line.  Amounts are stored in integer
// minor units (10^precision per currency unit) so that deduplication,
// aggregation, and re-serialization are exact.
struct LedgerRecord {
    std::string period;      // canonical "YYYYQn"
    std::string voucher_id;  // groups the lines of one business record
    std::int64_t line_no = 0;
    std::string account_code;
    Side side = Side::debit;
    std::int64_t amount_minor = 0;            // >= 1 for surviving records
    std::optional<std::string> posting_date;  // canonical "YYYY-MM-DD"

    // The dedup primary key: (period, voucher_id, line_no, account_code,
    // side, amount_minor).  posting_date deliberately excluded.
    auto key() const {
        return std::tie(period, voucher_id, line_no, account_code, side, amount_minor);
    }
    bool operator==(const LedgerRecord&) const = default;
};

// Which source columns carry which logical fields.  Two layouts are
// supported: split amount columns (debit + credit mapped) as in typical GL
// exports, or a single amount column with an explicit side column (the
// layout this module itself writes).  Unused names stay empty.
struct ColumnMap {
    std::string period;
    std::string voucher;
    std::string line;     // optional; falls back to the physical source line
    std::string account;
    std::string debit;    // layout A
    std::string credit;   // layout A
    std::string amount;   // layout B
    std::string side;     // layout B
    std::string date;     // optional
};

struct IngestConfig {
    ColumnMap columns;
    char delimiter = ',';
    // Account codes must match this pattern after trimming/padding.
    std::string code_pattern = R"(^\d{3,10}$)";
    // If > 0, purely numeric codes shorter than this are left-padded with
    // zeros before the pattern check.
    unsigned code_pad_width = 0;
    // Decimal places per currency unit; amounts are rounded half-up to this
    // precision using string digit arithmetic (never through a double).
    unsigned precision = 2;
    // Accepted posting-date layouts, tried in order.  Supports the
    // directives %Y, %m, %d with literal separators.
    std::vector<std::string> date_formats = {"%Y-%m-%d", "%m/%d/%Y", "%Y/%m/%d"};
};

// A non-fatal problem with one source row.
struct Diagnostic {
    std::size_t line = 0;  // physical 1-based line in the source
    std::string reason;
};

struct ParsedLedger {
    std::vector<std::string> header;
    std::vector<csv::Row> rows;             // data rows only, in file order
    std::vector<Diagnostic> diagnostics;    // malformed rows, skipped
    std::size_t source_rows = 0;            // data rows seen (kept + skipped)
};

struct NormalizeResult {
    std::vector<LedgerRecord> records;
    std::uint64_t candidates = 0;  // records_before for this batch
    std::map<std::string, std::uint64_t> drop_counts;     // reason -> count
    std::map<std::string, std::uint64_t> warning_counts;  // reason -> count
    // Key-field health tallies, counted independently of the drop cascade.
    std::uint64_t key_missing_candidates = 0;
    std::uint64_t invalid_code_candidates = 0;
};

struct DedupResult {
    std::vector<LedgerRecord> records;
    std::uint64_t removed = 0;
};

// The before/after quality report.  Ingest-stage fields are filled by
// quality_report; the graph-stage fields are filled in later by the graph
// builder and default to zero until then.
struct QualityStats {
    std::uint64_t source_rows = 0;
    std::uint64_t records_before = 0;  // candidate records
    std::uint64_t records_after = 0;
    std::uint64_t dedup_removed = 0;
    std::map<std::string, std::uint64_t> drop_counts;
    std::map<std::string, std::uint64_t> warning_counts;
    double key_field_missing_rate_before = 0.0;
    double key_field_missing_rate_after = 0.0;
    double invalid_code_rate_before = 0.0;
    double invalid_code_rate_after = 0.0;

    // Graph stage.
    std::uint64_t pair_count = 0;
    std::uint64_t one_sided_vouchers = 0;
    std::uint64_t node_count = 0;
    std::uint64_t unique_edges = 0;      // after merging parallel pairs
    std::uint64_t edge_count_final = 0;  // after pruning
    double self_loop_ratio_before = 0.0;
    double self_loop_ratio_after = 0.0;
    double truncation_ratio = 0.0;
    double isolated_node_ratio = 0.0;
    double sparsity = 0.0;
};

// --- Operations ---------------------------------------------------------

// Reads the header and all data rows.  Malformed rows (bad quoting, wrong
// field count) become diagnostics and are skipped; a mapped column missing
// from the header is fatal and throws ConfigError.
ParsedLedger parse_ledger_file(std::istream& in, const IngestConfig& cfg);

// Validation + canonicalization.  Every candidate record either lands in
// `records` or in exactly one drop_counts bucket:
//   bad_period, empty_voucher, empty_code, invalid_code,
//   no_amount, bad_amount, zero_amount, bad_side.
// Warnings (record kept): negative_amount_reversed, bad_date.
NormalizeResult normalize_records(const ParsedLedger& parsed, const IngestConfig& cfg);

// Keeps the first occurrence of each primary key; order of survivors is
// input order.
DedupResult deduplicate(std::vector<LedgerRecord> records);

QualityStats quality_report(const ParsedLedger& parsed, const NormalizeResult& norm,
                            const DedupResult& dedup);

struct IngestOutput {
    std::vector<LedgerRecord> records;
    QualityStats stats;
    std::vector<Diagnostic> diagnostics;
};

// parse -> normalize -> dedup -> report, in one call.
IngestOutput ingest_stream(std::istream& in, const IngestConfig& cfg);
IngestOutput ingest_file(const std::string& path, const IngestConfig& cfg);

// Writes records as CSV with the canonical header
//   period,voucher_id,line_no,account_code,side,amount,posting_date
// which ingest_stream can re-read (amount/side layout).  Round-trip of
// already-normalized records is the identity.
void write_normalized_csv(std::ostream& out, const std::vector<LedgerRecord>& records,
                          const IngestConfig& cfg);

// The column mapping matching write_normalized_csv output.
ColumnMap normalized_columns();

// --- Parsing helpers (exposed for tests) --------------------------------

// Decimal text -> signed minor units, rounded half-up (away from zero) at
// `precision` digits via string arithmetic.  Accepts optional sign, "$",
// thousands commas.  nullopt on malformed input; empty/whitespace is
// malformed here (callers distinguish missing cells before calling).
std::optional<std::int64_t> parse_amount_minor(std::string_view text, unsigned precision);

// "2017Q1", "2017-q1", "2017 Q1", "2017/Q1" and "YYYY-MM"/"YYYYMM" (month
// mapped to its calendar quarter) -> canonical "YYYYQn".
std::optional<std::string> parse_period(std::string_view text);

// Tries each configured format; returns canonical ISO "YYYY-MM-DD".
// Validates real calendar dates (month lengths, leap years).
std::optional<std::string> parse_date(std::string_view text,
                                      const std::vector<std::string>& formats);

// Minor units -> fixed-point decimal text with `precision` places.
std::string format_amount(std::int64_t minor, unsigned precision);

}  // namespace ledgergraph::ingest
