#include "ledgergraph/bench.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include "ledgergraph/errors.hpp"
#include "ledgergraph/features.hpp"

namespace ledgergraph::bench {
namespace {

// Folds the data seed into a distinct stream for the model so the SBM coin
// flips and the weight init never share draws.
constexpr std::uint64_t kModelSeedSalt = 0xd6e8feb86659fd93ULL;

std::uint64_t edge_key(graph::NodeId u, graph::NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

}  // namespace

BenchResult run_benchmark(const BenchConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchResult res;

    const synthetic::SyntheticData data = synthetic::generate_synthetic(cfg.spec);
    res.positives_injected = data.positives.size();
    if (data.positives.empty()) {
        throw ConfigError("benchmark spec injects no anomalies; metrics would be undefined");
    }

    const graph::PairExtraction pairs = graph::extract_pairs(data.records);
    const graph::AccountGraph merged = graph::build_graph(pairs, cfg.spec.period);
    const auto pruned = graph::prune_graph(merged, cfg.prune);
    res.graph = graph::normalize_weights(pruned.first, cfg.scheme);

    const features::NodeFeatureMatrix x =
        features::compute_node_features(data.records, res.graph);

    model::ModelConfig mc = cfg.model;
    mc.dims[0] = static_cast<int>(x.values.cols());
    mc.seed = cfg.spec.seed ^ kModelSeedSalt;
    model::TrainResult trained = model::train(res.graph, x, mc);
    res.trace = trained.trace;

    res.report = scoring::build_report(res.graph, trained.embeddings.z, cfg.node_mode);

    // Ground-truth join: injected (src, dst) pairs -> edge labels.
    std::unordered_set<std::uint64_t> positive_pairs;
    for (const auto& t : data.positives) {
        const auto u = res.graph.node_id(t.src);
        const auto v = res.graph.node_id(t.dst);
        if (u && v) positive_pairs.insert(edge_key(*u, *v));
    }
    res.edge_labels.resize(res.graph.edge_count(), 0);
    std::vector<double> edge_scores(res.graph.edge_count());
    std::vector<int> node_labels(res.graph.node_count(), 0);
    for (std::size_t i = 0; i < res.graph.edges.size(); ++i) {
        const auto& e = res.graph.edges[i];
        const bool pos = positive_pairs.count(edge_key(e.src, e.dst)) > 0;
        res.edge_labels[i] = pos ? 1 : 0;
        if (pos) {
            ++res.positives_in_graph;
            node_labels[e.src] = 1;
            node_labels[e.dst] = 1;
        }
        edge_scores[i] = res.report.edge_scores[i].score;
    }

    res.edge_metrics = metrics::compute_metrics(edge_scores, res.edge_labels, cfg.ks);
    std::vector<double> node_scores(res.graph.node_count());
    for (std::size_t v = 0; v < res.graph.node_count(); ++v) {
        node_scores[v] = res.report.node_scores[v].score;
    }
    res.node_metrics = metrics::compute_metrics(node_scores, node_labels, cfg.ks);

    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

SeedAverages run_seeds(const BenchConfig& cfg, int seed_count) {
    if (seed_count < 1) throw ConfigError("seed_count must be >= 1");
    SeedAverages avg;
    for (int i = 0; i < seed_count; ++i) {
        BenchConfig run_cfg = cfg;
        run_cfg.spec.seed = cfg.spec.seed + static_cast<std::uint64_t>(i);
        BenchResult r = run_benchmark(run_cfg);
        avg.edge_auc += r.edge_metrics.auc_roc;
        avg.edge_accuracy += r.edge_metrics.accuracy;
        const auto it = r.edge_metrics.precision_at.find(10);
        if (it != r.edge_metrics.precision_at.end()) avg.edge_precision_at_10 += it->second;
        avg.runs.push_back(std::move(r));
    }
    avg.edge_auc /= seed_count;
    avg.edge_accuracy /= seed_count;
    avg.edge_precision_at_10 /= seed_count;
    return avg;
}

std::vector<SweepRow> lr_sweep(const std::vector<double>& grid, const BenchConfig& base,
                               int seed_count) {
    if (grid.empty()) throw ConfigError("learning-rate grid is empty");
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    std::vector<SweepRow> rows;
    rows.reserve(sorted.size());
    for (const double lr : sorted) {
        BenchConfig cfg = base;
        cfg.model.learning_rate = lr;
        const SeedAverages avg = run_seeds(cfg, seed_count);
        rows.push_back({lr, avg.edge_accuracy, avg.edge_auc});
    }
    return rows;
}

}  // namespace ledgergraph::bench
