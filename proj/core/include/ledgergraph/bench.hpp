#pragma once

// Benchmark harness: synthetic data -> full detection pipeline -> metrics
// against the generator's ground truth, plus the learning-rate sweep.

#include <cstdint>
#include <vector>

#include "ledgergraph/graph.hpp"
#include "ledgergraph/metrics.hpp"
#include "ledgergraph/model.hpp"
#include "ledgergraph/scoring.hpp"
#include "ledgergraph/synthetic.hpp"

namespace ledgergraph::bench {

struct BenchConfig {
    synthetic::SyntheticSpec spec;
    model::ModelConfig model;  // dims[0] fixed up from the feature count
    graph::PrunePolicy prune{.min_count = 1, .winsor_quantile = 0.995};
    graph::WeightScheme scheme = graph::WeightScheme::frequency;
    scoring::NodeScoreMode node_mode = scoring::NodeScoreMode::mean;
    std::vector<int> ks = {10, 100};
};

// The spec's seed drives generation AND (xor-folded) the model seed, so one
// number reproduces the whole run.
struct BenchResult {
    metrics::MetricSet edge_metrics;
    metrics::MetricSet node_metrics;
    scoring::AnomalyReport report;
    graph::AccountGraph graph;
    model::TrainTrace trace;
    std::vector<int> edge_labels;  // aligned with graph.edges
    std::uint64_t positives_injected = 0;
    std::uint64_t positives_in_graph = 0;
    double seconds = 0.0;
};

// One end-to-end run: generate -> pairs -> graph -> prune -> weights ->
// features -> train -> score -> label join -> metrics.  Node labels: a node
// is positive iff it touches a positive edge.
BenchResult run_benchmark(const BenchConfig& cfg);

// Convenience: run_benchmark over seeds {base_seed, base_seed+1, ...} and
// average the headline metrics.
struct SeedAverages {
    double edge_auc = 0.0;
    double edge_accuracy = 0.0;
    double edge_precision_at_10 = 0.0;
    std::vector<BenchResult> runs;
};

SeedAverages run_seeds(const BenchConfig& cfg, int seed_count);

struct SweepRow {
    double learning_rate = 0.0;
    double accuracy = 0.0;  // seed-averaged edge accuracy
    double auc = 0.0;       // seed-averaged edge AUC-ROC
};

// One seed-averaged benchmark per grid point, identical seed set per point;
// rows sorted ascending by learning rate.
std::vector<SweepRow> lr_sweep(const std::vector<double>& grid, const BenchConfig& base,
                               int seed_count);

}  // namespace ledgergraph::bench
