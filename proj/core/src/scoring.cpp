#include "ledgergraph/scoring.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "ledgergraph/errors.hpp"

namespace ledgergraph::scoring {
namespace {

using json = nlohmann::ordered_json;

// Shared tie rule: score descending, then lexicographic codes so audits are
// replayable down to the row order.
bool edge_before(const EdgeScore& a, const EdgeScore& b, const graph::AccountGraph& g) {
    if (a.score != b.score) return a.score > b.score;
    if (g.nodes[a.src] != g.nodes[b.src]) return g.nodes[a.src] < g.nodes[b.src];
    return g.nodes[a.dst] < g.nodes[b.dst];
}

}  // namespace

std::string_view mode_name(NodeScoreMode m) {
    return m == NodeScoreMode::mean ? std::string_view("mean") : std::string_view("weighted");
}

std::optional<NodeScoreMode> parse_mode(std::string_view name) {
    if (name == "mean") return NodeScoreMode::mean;
    if (name == "weighted") return NodeScoreMode::weighted;
    return std::nullopt;
}

std::vector<EdgeScore> score_edges(const graph::AccountGraph& g, const Eigen::MatrixXd& z) {
    if (static_cast<std::size_t>(z.rows()) != g.node_count()) {
        throw PipelineError("embedding rows (" + std::to_string(z.rows()) +
                            ") do not match graph nodes (" + std::to_string(g.node_count()) +
                            ")");
    }
    std::vector<EdgeScore> out;
    out.reserve(g.edges.size());
    for (const auto& e : g.edges) {
        EdgeScore s;
        s.src = e.src;
        s.dst = e.dst;
        s.p_hat = model::stable_sigmoid(z.row(e.src).dot(z.row(e.dst)));
        s.score = 1.0 - s.p_hat;
        s.weight = e.weight;
        s.raw_count = e.raw_count;
        out.push_back(s);
    }
    return out;
}

std::vector<NodeScore> score_nodes(const std::vector<EdgeScore>& edge_scores,
                                   const graph::AccountGraph& g, NodeScoreMode mode) {
    struct Acc {
        double sum = 0, wsum = 0, wtot = 0;
        std::uint64_t count = 0;
    };
    std::vector<Acc> acc(g.node_count());
    for (const auto& s : edge_scores) {
        for (const graph::NodeId v : {s.src, s.dst}) {
            acc[v].sum += s.score;
            acc[v].wsum += s.weight * s.score;
            acc[v].wtot += s.weight;
            ++acc[v].count;
        }
    }
    std::vector<NodeScore> out(g.node_count());
    for (graph::NodeId v = 0; v < g.node_count(); ++v) {
        out[v].node = v;
        if (acc[v].count == 0) {
            out[v].no_evidence = true;  // isolated: no incident edge to judge
            continue;
        }
        const double mean = acc[v].sum / static_cast<double>(acc[v].count);
        out[v].score = (mode == NodeScoreMode::weighted && acc[v].wtot > 0.0)
                           ? acc[v].wsum / acc[v].wtot
                           : mean;
    }
    return out;
}

std::vector<std::uint32_t> rank_edges(const std::vector<EdgeScore>& scores,
                                      const graph::AccountGraph& g, std::size_t k) {
    std::vector<std::uint32_t> idx(scores.size());
    for (std::uint32_t i = 0; i < scores.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
        return edge_before(scores[a], scores[b], g);
    });
    if (idx.size() > k) idx.resize(k);
    return idx;
}

std::vector<graph::NodeId> rank_nodes(const std::vector<NodeScore>& scores,
                                      const graph::AccountGraph& g, std::size_t k) {
    std::vector<graph::NodeId> idx(scores.size());
    for (graph::NodeId i = 0; i < scores.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](graph::NodeId a, graph::NodeId b) {
        if (scores[a].score != scores[b].score) return scores[a].score > scores[b].score;
        return g.nodes[a] < g.nodes[b];
    });
    if (idx.size() > k) idx.resize(k);
    return idx;
}

LocalizationClue localize(const graph::AccountGraph& g, const std::vector<EdgeScore>& edge_scores,
                          std::string_view account_code, std::size_t k) {
    const auto id = g.node_id(account_code);
    if (!id) {
        throw PipelineError("unknown account code '" + std::string(account_code) + "'");
    }
    LocalizationClue clue;
    clue.node = *id;

    std::vector<std::uint32_t> incident;
    incident.insert(incident.end(), g.in_edges[*id].begin(), g.in_edges[*id].end());
    incident.insert(incident.end(), g.out_edges[*id].begin(), g.out_edges[*id].end());
    std::sort(incident.begin(), incident.end());
    incident.erase(std::unique(incident.begin(), incident.end()), incident.end());
    std::sort(incident.begin(), incident.end(), [&](std::uint32_t a, std::uint32_t b) {
        return edge_before(edge_scores[a], edge_scores[b], g);
    });
    if (incident.size() > k) incident.resize(k);
    for (const auto ei : incident) clue.top_edges.push_back(edge_scores[ei]);

    // 1-hop closure over the selected edges, then the induced edge set.
    std::set<graph::NodeId> nodes{*id};
    for (const auto& s : clue.top_edges) {
        nodes.insert(s.src);
        nodes.insert(s.dst);
    }
    clue.subgraph_nodes.assign(nodes.begin(), nodes.end());
    for (std::uint32_t ei = 0; ei < g.edges.size(); ++ei) {
        if (nodes.count(g.edges[ei].src) > 0 && nodes.count(g.edges[ei].dst) > 0) {
            clue.subgraph_edge_idx.push_back(ei);
        }
    }
    return clue;
}

AnomalyReport build_report(const graph::AccountGraph& g, const Eigen::MatrixXd& z,
                           NodeScoreMode mode, std::size_t top_k, std::size_t localize_nodes,
                           std::size_t localize_k) {
    AnomalyReport report;
    report.node_mode = mode;
    report.edge_scores = score_edges(g, z);
    report.node_scores = score_nodes(report.edge_scores, g, mode);
    const std::size_t edge_k = top_k == 0 ? report.edge_scores.size() : top_k;
    const std::size_t node_k = top_k == 0 ? report.node_scores.size() : top_k;
    report.edge_ranking = rank_edges(report.edge_scores, g, edge_k);
    report.node_ranking = rank_nodes(report.node_scores, g, node_k);
    for (std::size_t i = 0; i < std::min(localize_nodes, report.node_ranking.size()); ++i) {
        report.localization.push_back(
            localize(g, report.edge_scores, g.nodes[report.node_ranking[i]], localize_k));
    }
    return report;
}

void write_report_json(std::ostream& out, const AnomalyReport& report,
                       const graph::AccountGraph& g) {
    json doc;
    doc["period"] = g.period;
    doc["node_score_mode"] = std::string(mode_name(report.node_mode));

    json edges = json::array();
    for (const auto& s : report.edge_scores) {
        json e;
        e["src"] = g.nodes[s.src];
        e["dst"] = g.nodes[s.dst];
        e["score"] = s.score;
        e["p_hat"] = s.p_hat;
        e["weight"] = s.weight;
        e["raw_count"] = s.raw_count;
        edges.push_back(std::move(e));
    }
    doc["edge_scores"] = std::move(edges);

    json nodes = json::array();
    for (const auto& s : report.node_scores) {
        json n;
        n["account"] = g.nodes[s.node];
        n["score"] = s.score;
        n["no_evidence"] = s.no_evidence;
        nodes.push_back(std::move(n));
    }
    doc["node_scores"] = std::move(nodes);

    json eranks = json::array();
    for (std::size_t i = 0; i < report.edge_ranking.size(); ++i) {
        const auto& s = report.edge_scores[report.edge_ranking[i]];
        json r;
        r["rank"] = i + 1;
        r["src"] = g.nodes[s.src];
        r["dst"] = g.nodes[s.dst];
        r["score"] = s.score;
        eranks.push_back(std::move(r));
    }
    doc["edge_ranking"] = std::move(eranks);

    json nranks = json::array();
    for (std::size_t i = 0; i < report.node_ranking.size(); ++i) {
        const auto& s = report.node_scores[report.node_ranking[i]];
        json r;
        r["rank"] = i + 1;
        r["account"] = g.nodes[s.node];
        r["score"] = s.score;
        nranks.push_back(std::move(r));
    }
    doc["node_ranking"] = std::move(nranks);

    json clues = json::array();
    for (const auto& clue : report.localization) {
        json c;
        c["account"] = g.nodes[clue.node];
        json ce = json::array();
        for (const auto& s : clue.top_edges) {
            json e;
            const bool outgoing = s.src == clue.node;
            e["counterpart"] = g.nodes[outgoing ? s.dst : s.src];
            e["direction"] = outgoing ? "out" : "in";
            e["score"] = s.score;
            e["p_hat"] = s.p_hat;
            e["raw_count"] = s.raw_count;
            ce.push_back(std::move(e));
        }
        c["edges"] = std::move(ce);
        json cn = json::array();
        for (const auto v : clue.subgraph_nodes) cn.push_back(g.nodes[v]);
        c["subgraph_nodes"] = std::move(cn);
        clues.push_back(std::move(c));
    }
    doc["localization"] = std::move(clues);

    out << doc.dump(2) << '\n';
}

void write_ranking_csv(std::ostream& out, const AnomalyReport& report,
                       const graph::AccountGraph& g) {
    out << "rank,src,dst,score,p_hat,raw_count\n";
    for (std::size_t i = 0; i < report.edge_ranking.size(); ++i) {
        const auto& s = report.edge_scores[report.edge_ranking[i]];
        // json serialization gives shortest-round-trip doubles; reuse it so
        // CSV and JSON agree byte for byte on every score.
        out << (i + 1) << ',' << g.nodes[s.src] << ',' << g.nodes[s.dst] << ','
            << json(s.score).dump() << ',' << json(s.p_hat).dump() << ',' << s.raw_count
            << '\n';
    }
}

void write_localization_dot(std::ostream& out, const LocalizationClue& clue,
                            const graph::AccountGraph& g) {
    graph::DotOptions opts;
    opts.graph_name = "clue_" + g.nodes[clue.node];
    opts.node_subset.insert(clue.subgraph_nodes.begin(), clue.subgraph_nodes.end());
    for (const auto& s : clue.top_edges) opts.highlighted.insert({s.src, s.dst});
    graph::write_dot(out, g, opts);
}

}  // namespace ledgergraph::scoring
