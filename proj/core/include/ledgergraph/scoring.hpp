#pragma once

// Reconstruction-deviation anomaly scores and the audit-facing report.
//
// An edge the trained model reconstructs with low probability is structurally
// surprising: its score is s = 1 - p_hat.  Node risk aggregates incident edge
// scores; localization hands the auditor a node's worst incident edges plus
// the surrounding subgraph, traceable back to voucher counts.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ledgergraph/graph.hpp"
#include "ledgergraph/model.hpp"

namespace ledgergraph::scoring {

struct EdgeScore {
    graph::NodeId src = 0;
    graph::NodeId dst = 0;
    double score = 0.0;  // 1 - p_hat, in [0, 1]
    double p_hat = 0.0;
    double weight = 0.0;
    std::uint64_t raw_count = 0;  // voucher co-occurrence provenance
};

enum class NodeScoreMode { mean, weighted };

std::string_view mode_name(NodeScoreMode m);
std::optional<NodeScoreMode> parse_mode(std::string_view name);

struct NodeScore {
    graph::NodeId node = 0;
    double score = 0.0;
    // True for isolated nodes: no incident edges, score pinned to 0.
    bool no_evidence = false;
};

struct LocalizationClue {
    graph::NodeId node = 0;
    // The node's highest-scoring incident edges, rank order.
    std::vector<EdgeScore> top_edges;
    // 1-hop induced subgraph around those edges, for export.
    std::vector<graph::NodeId> subgraph_nodes;      // sorted
    std::vector<std::uint32_t> subgraph_edge_idx;   // indices into the graph's edge list
};

struct AnomalyReport {
    NodeScoreMode node_mode = NodeScoreMode::mean;
    std::vector<EdgeScore> edge_scores;       // aligned with g.edges
    std::vector<NodeScore> node_scores;       // aligned with g.nodes
    std::vector<std::uint32_t> edge_ranking;  // indices into edge_scores
    std::vector<graph::NodeId> node_ranking;
    std::vector<LocalizationClue> localization;  // for the top-ranked nodes
};

// --- Operations ---------------------------------------------------------

// s = 1 - sigmoid(z_src . z_dst) for every edge, in edge-list order.
// Graph and embeddings must agree on node count.
std::vector<EdgeScore> score_edges(const graph::AccountGraph& g, const Eigen::MatrixXd& z);

// mean: arithmetic mean of incident edge scores (both directions);
// weighted: sum(w*s)/sum(w) (falls back to the plain mean when the incident
// weights sum to 0).  Isolated nodes score 0 and are flagged no_evidence.
std::vector<NodeScore> score_nodes(const std::vector<EdgeScore>& edge_scores,
                                   const graph::AccountGraph& g, NodeScoreMode mode);

// Deterministic rankings: score descending, then lexicographic account
// code(s) ascending.  k past the population returns everything.
std::vector<std::uint32_t> rank_edges(const std::vector<EdgeScore>& scores,
                                      const graph::AccountGraph& g, std::size_t k);
std::vector<graph::NodeId> rank_nodes(const std::vector<NodeScore>& scores,
                                      const graph::AccountGraph& g, std::size_t k);

// The node's k worst incident edges plus the induced 1-hop subgraph.
// Throws PipelineError for an unknown account code.
LocalizationClue localize(const graph::AccountGraph& g, const std::vector<EdgeScore>& edge_scores,
                          std::string_view account_code, std::size_t k);

// Full report: scores, rankings (top_k each, 0 = all), and localization for
// the localize_nodes top-ranked nodes.
AnomalyReport build_report(const graph::AccountGraph& g, const Eigen::MatrixXd& z,
                           NodeScoreMode mode, std::size_t top_k = 0,
                           std::size_t localize_nodes = 5, std::size_t localize_k = 5);

// --- Serialization ------------------------------------------------------

// Stable JSON document (account codes, not ids); byte-identical for
// identical inputs.
void write_report_json(std::ostream& out, const AnomalyReport& report,
                       const graph::AccountGraph& g);

// Ranked edges as CSV: rank,src,dst,score,p_hat,raw_count
void write_ranking_csv(std::ostream& out, const AnomalyReport& report,
                       const graph::AccountGraph& g);

// DOT export of one localization clue with its anomalous edges emphasized.
void write_localization_dot(std::ostream& out, const LocalizationClue& clue,
                            const graph::AccountGraph& g);

}  // namespace ledgergraph::scoring
