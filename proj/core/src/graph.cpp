#include "ledgergraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>

#include "ledgergraph/errors.hpp"

namespace ledgergraph::graph {
namespace {

// Shortest round-trip decimal text for a double; keeps serialized graphs
// lossless and byte-stable.
std::string format_double(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string quote_dot(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::optional<NodeId> AccountGraph::node_id(std::string_view code) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), code);
    if (it == nodes.end() || *it != code) return std::nullopt;
    return static_cast<NodeId>(it - nodes.begin());
}

bool AccountGraph::has_edge(NodeId src, NodeId dst) const {
    const auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(src, dst),
                                     [](const Edge& e, const std::pair<NodeId, NodeId>& key) {
                                         return std::make_pair(e.src, e.dst) < key;
                                     });
    return it != edges.end() && it->src == src && it->dst == dst;
}

void AccountGraph::rebuild_adjacency() {
    out_edges.assign(nodes.size(), {});
    in_edges.assign(nodes.size(), {});
    for (std::uint32_t i = 0; i < edges.size(); ++i) {
        out_edges[edges[i].src].push_back(i);
        in_edges[edges[i].dst].push_back(i);
    }
}

PairExtraction extract_pairs(const std::vector<ingest::LedgerRecord>& records) {
    // Group record indices by (period, voucher).  An ordered map keeps the
    // group iteration deterministic whatever the record order was.
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<std::size_t>,
                                                            std::vector<std::size_t>>>
        groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& group = groups[{records[i].period, records[i].voucher_id}];
        (records[i].side == ingest::Side::debit ? group.first : group.second).push_back(i);
    }

    PairExtraction out;
    for (const auto& [key, group] : groups) {
        const auto& [debits, credits] = group;
        if (debits.empty() || credits.empty()) {
            ++out.one_sided_vouchers;
            continue;
        }
        // Full ordered cross product, one pair per line pairing, with the
        // conservative amount bound min(debit, credit).
        for (const std::size_t d : debits) {
            for (const std::size_t c : credits) {
                out.pairs.push_back({records[d].account_code, records[c].account_code,
                                     std::min(records[d].amount_minor,
                                              records[c].amount_minor)});
            }
        }
    }
    return out;
}

AccountGraph build_graph(const PairExtraction& extraction, const std::string& period,
                         unsigned precision) {
    AccountGraph g;
    g.period = period;

    std::vector<std::string> codes;
    codes.reserve(extraction.pairs.size() * 2);
    for (const auto& p : extraction.pairs) {
        codes.push_back(p.debit_account);
        codes.push_back(p.credit_account);
    }
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    g.nodes = std::move(codes);

    // Merge parallel pairs.  Counts and minor-unit amounts accumulate in
    // integers, so the merged edge is exact and independent of pair order.
    std::map<std::pair<NodeId, NodeId>, std::pair<std::uint64_t, std::int64_t>> merged;
    for (const auto& p : extraction.pairs) {
        const NodeId src = *g.node_id(p.debit_account);
        const NodeId dst = *g.node_id(p.credit_account);
        auto& slot = merged[{src, dst}];
        slot.first += 1;
        slot.second += p.amount_minor;
    }

    double scale = 1.0;
    for (unsigned i = 0; i < precision; ++i) scale *= 10.0;
    g.edges.reserve(merged.size());
    for (const auto& [key, agg] : merged) {
        Edge e;
        e.src = key.first;
        e.dst = key.second;
        e.raw_count = agg.first;
        e.raw_amount = static_cast<double>(agg.second) / scale;
        g.edges.push_back(e);
    }
    g.rebuild_adjacency();
    return g;
}

std::uint64_t default_min_count(std::uint64_t voucher_count) {
    return voucher_count > 1 ? 2 : 1;
}

std::pair<AccountGraph, PruneDeltas> prune_graph(const AccountGraph& g,
                                                 const PrunePolicy& policy) {
    AccountGraph out;
    out.period = g.period;
    out.nodes = g.nodes;
    PruneDeltas deltas;

    std::uint64_t self_loops = 0;
    for (const Edge& e : g.edges) {
        if (e.src == e.dst) {
            ++self_loops;
            continue;
        }
        if (e.raw_count < policy.min_count) {
            ++deltas.low_count_removed;
            continue;
        }
        out.edges.push_back(e);
    }
    deltas.self_loops_removed = self_loops;
    deltas.self_loop_ratio_before =
        g.edges.empty() ? 0.0 : static_cast<double>(self_loops) / g.edges.size();

    // Winsorize: clip amounts above the nearest-rank quantile of the
    // surviving distribution.  Clipping (not dropping) keeps the edge while
    // damping its weight under the amount scheme.
    if (!out.edges.empty() && policy.winsor_quantile > 0.0 && policy.winsor_quantile < 1.0) {
        std::vector<double> amounts;
        amounts.reserve(out.edges.size());
        for (const Edge& e : out.edges) amounts.push_back(e.raw_amount);
        std::sort(amounts.begin(), amounts.end());
        const std::size_t n = amounts.size();
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(policy.winsor_quantile * static_cast<double>(n)));
        rank = std::min(std::max<std::size_t>(rank, 1), n);
        const double threshold = amounts[rank - 1];
        for (Edge& e : out.edges) {
            if (e.raw_amount > threshold) {
                e.raw_amount = threshold;
                ++deltas.edges_truncated;
            }
        }
        deltas.truncation_ratio = static_cast<double>(deltas.edges_truncated) / n;
    }
    out.rebuild_adjacency();
    return {std::move(out), deltas};
}

std::string_view scheme_name(WeightScheme s) {
    return s == WeightScheme::frequency ? std::string_view("frequency")
                                        : std::string_view("amount");
}

std::optional<WeightScheme> parse_scheme(std::string_view name) {
    if (name == "frequency") return WeightScheme::frequency;
    if (name == "amount") return WeightScheme::amount;
    return std::nullopt;
}

AccountGraph normalize_weights(const AccountGraph& g, WeightScheme scheme) {
    AccountGraph out = g;
    for (Edge& e : out.edges) {
        e.weight = scheme == WeightScheme::frequency
                       ? std::log1p(static_cast<double>(e.raw_count))
                       : std::log1p(e.raw_amount);
    }
    // Each in-star becomes a convex combination.  (log1p(raw_count) is
    // always positive, so a zero in-sum can only happen under the amount
    // scheme with all-zero amounts; such stars are left untouched.)
    for (NodeId v = 0; v < out.nodes.size(); ++v) {
        double sum = 0.0;
        for (const std::uint32_t ei : out.in_edges[v]) sum += out.edges[ei].weight;
        if (sum > 0.0) {
            for (const std::uint32_t ei : out.in_edges[v]) out.edges[ei].weight /= sum;
        }
    }
    return out;
}

void fill_graph_stats(ingest::QualityStats& stats, const PairExtraction& extraction,
                      const AccountGraph& merged, const PruneDeltas& deltas,
                      const AccountGraph& final_graph) {
    stats.pair_count = extraction.pairs.size();
    stats.one_sided_vouchers = extraction.one_sided_vouchers;
    stats.node_count = merged.nodes.size();
    stats.unique_edges = merged.edges.size();
    stats.edge_count_final = final_graph.edges.size();
    stats.self_loop_ratio_before = deltas.self_loop_ratio_before;
    std::uint64_t self_loops_after = 0;
    for (const Edge& e : final_graph.edges) {
        if (e.src == e.dst) ++self_loops_after;
    }
    stats.self_loop_ratio_after =
        final_graph.edges.empty() ? 0.0
                                  : static_cast<double>(self_loops_after) /
                                        final_graph.edges.size();
    stats.truncation_ratio = deltas.truncation_ratio;
    std::uint64_t isolated = 0;
    for (NodeId v = 0; v < final_graph.nodes.size(); ++v) {
        if (final_graph.in_edges[v].empty() && final_graph.out_edges[v].empty()) ++isolated;
    }
    stats.isolated_node_ratio =
        final_graph.nodes.empty() ? 0.0
                                  : static_cast<double>(isolated) / final_graph.nodes.size();
    const double n = static_cast<double>(final_graph.nodes.size());
    stats.sparsity = n > 1 ? static_cast<double>(final_graph.edges.size()) / (n * (n - 1)) : 0.0;
}

void write_edge_list(std::ostream& out, const AccountGraph& g) {
    for (const Edge& e : g.edges) {
        out << g.nodes[e.src] << '\t' << g.nodes[e.dst] << '\t' << e.raw_count << '\t'
            << format_double(e.raw_amount) << '\t' << format_double(e.weight) << '\n';
    }
}

void write_graph_header_json(std::ostream& out, const AccountGraph& g,
                             const std::vector<std::string>& feature_names) {
    // Hand-assembled to keep nlohmann out of the hot library path for a
    // trivial fixed schema.
    out << "{\n  \"period\": \"" << g.period << "\",\n  \"node_count\": " << g.nodes.size()
        << ",\n  \"edge_count\": " << g.edges.size() << ",\n  \"nodes\": [";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        out << (i ? ", " : "") << '"' << g.nodes[i] << '"';
    }
    out << "],\n  \"feature_names\": [";
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        out << (i ? ", " : "") << '"' << feature_names[i] << '"';
    }
    out << "]\n}\n";
}

void write_dot(std::ostream& out, const AccountGraph& g, const DotOptions& opts) {
    const bool restricted = !opts.node_subset.empty();
    auto included = [&](NodeId v) { return !restricted || opts.node_subset.count(v) > 0; };

    out << "digraph " << quote_dot(opts.graph_name) << " {\n  rankdir=LR;\n"
        << "  node [shape=box, fontname=\"Helvetica\"];\n";
    for (NodeId v = 0; v < g.nodes.size(); ++v) {
        if (included(v)) out << "  " << quote_dot(g.nodes[v]) << ";\n";
    }
    for (const Edge& e : g.edges) {
        if (!included(e.src) || !included(e.dst)) continue;
        out << "  " << quote_dot(g.nodes[e.src]) << " -> " << quote_dot(g.nodes[e.dst])
            << " [label=\"" << e.raw_count << "\"";
        if (opts.highlighted.count({e.src, e.dst}) > 0) {
            out << ", color=red, penwidth=2.0";
        }
        out << "];\n";
    }
    out << "}\n";
}

}  // namespace ledgergraph::graph
