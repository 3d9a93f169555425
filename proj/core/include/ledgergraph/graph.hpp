#pragma once

// The weighted directed account-association graph and the operations that
// produce it: voucher pair extraction, merging, pruning, and weight
// normalization.
//
// Node ids are indices into a lexicographically sorted account-code list,
// and edges are kept sorted by (src, dst), so identical record sets produce
// byte-identical graphs regardless of input order.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ledgergraph/ingest.hpp"

namespace ledgergraph::graph {

using NodeId = std::uint32_t;

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    std::uint64_t raw_count = 0;   // merged voucher co-occurrence count
    double raw_amount = 0.0;       // merged amount, currency units
    double weight = 0.0;           // 0 until normalize_weights
};

struct AccountGraph {
    std::string period;
    std::vector<std::string> nodes;  // sorted account codes; index = NodeId
    std::vector<Edge> edges;         // sorted by (src, dst), unique pairs
    // Adjacency: per node, indices into `edges`.
    std::vector<std::vector<std::uint32_t>> out_edges;  // edges with src = node
    std::vector<std::vector<std::uint32_t>> in_edges;   // edges with dst = node

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
    std::optional<NodeId> node_id(std::string_view code) const;
    bool has_edge(NodeId src, NodeId dst) const;
    void rebuild_adjacency();
};

// One debit->credit account pairing extracted from a voucher, with the
// conservative amount bound min(debit line, credit line).
struct Pair {
    std::string debit_account;
    std::string credit_account;
    std::int64_t amount_minor = 0;
};

struct PairExtraction {
    std::vector<Pair> pairs;
    std::uint64_t one_sided_vouchers = 0;  // vouchers with no debit or no credit line
};

// Within each (period, voucher) group, emits the full ordered cross product
// of debit lines x credit lines, one Pair per line pairing.
PairExtraction extract_pairs(const std::vector<ingest::LedgerRecord>& records);

// Merges parallel pairs into unique directed edges (raw_count = occurrence
// count, raw_amount = exact minor-unit sum scaled to currency units).
AccountGraph build_graph(const PairExtraction& extraction, const std::string& period,
                         unsigned precision = 2);

struct PrunePolicy {
    std::uint64_t min_count = 2;  // drop edges with raw_count below this
    double winsor_quantile = 0.995;
};

// Single-voucher periods have no repeat co-occurrence to distinguish stable
// relations from noise; a raw_count floor above 1 would erase the graph.
std::uint64_t default_min_count(std::uint64_t voucher_count);

struct PruneDeltas {
    std::uint64_t self_loops_removed = 0;
    std::uint64_t low_count_removed = 0;
    std::uint64_t edges_truncated = 0;  // raw_amount clipped at the quantile
    double self_loop_ratio_before = 0.0;
    double truncation_ratio = 0.0;  // edges_truncated / surviving edges
};

// Removes self-loops, drops edges with raw_count < policy.min_count, then
// winsorizes raw_amount at the nearest-rank winsor_quantile of the surviving
// amount distribution (clipped, not dropped).
std::pair<AccountGraph, PruneDeltas> prune_graph(const AccountGraph& g, const PrunePolicy& policy);

enum class WeightScheme { frequency, amount };

std::string_view scheme_name(WeightScheme s);
std::optional<WeightScheme> parse_scheme(std::string_view name);

// weight = log1p(raw_count) or log1p(raw_amount) per scheme, then each
// node's incoming weights are divided by their sum, making every in-star a
// convex combination: sum_{u in N_in(v)} w_uv = 1 whenever in-degree >= 1.
// (An all-zero in-star — possible under the amount scheme — is left as
// zeros.)
AccountGraph normalize_weights(const AccountGraph& g, WeightScheme scheme);

// Fills the graph-stage fields of a quality report from a pre-prune graph,
// the prune deltas, and the final graph.
void fill_graph_stats(ingest::QualityStats& stats, const PairExtraction& extraction,
                      const AccountGraph& merged, const PruneDeltas& deltas,
                      const AccountGraph& final_graph);

// --- Serialization ------------------------------------------------------

// One edge per line: src_code<TAB>dst_code<TAB>raw_count<TAB>raw_amount<TAB>weight
void write_edge_list(std::ostream& out, const AccountGraph& g);

// JSON companion to the edge list: period, node list, feature names.
void write_graph_header_json(std::ostream& out, const AccountGraph& g,
                             const std::vector<std::string>& feature_names);

struct DotOptions {
    // Edges drawn emphasized (bold red) — e.g. flagged anomalies.
    std::set<std::pair<NodeId, NodeId>> highlighted;
    // Restrict output to these nodes (empty = all).
    std::set<NodeId> node_subset;
    std::string graph_name = "ledger";
};

void write_dot(std::ostream& out, const AccountGraph& g, const DotOptions& opts = {});

}  // namespace ledgergraph::graph
