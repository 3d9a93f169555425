// Microbenchmarks for the hot pipeline stages.  Run manually:
//   ./benchmarks/ledgergraph_benchmarks --benchmark_min_time=0.5

#include <benchmark/benchmark.h>

#include <sstream>
#include <string>
#include <vector>

#include "ledgergraph/csv.hpp"
#include "ledgergraph/features.hpp"
#include "ledgergraph/graph.hpp"
#include "ledgergraph/ingest.hpp"
#include "ledgergraph/model.hpp"
#include "ledgergraph/rng.hpp"
#include "ledgergraph/scoring.hpp"
#include "ledgergraph/synthetic.hpp"

using namespace ledgergraph;

namespace {

synthetic::SyntheticSpec bench_spec(int communities, int per_community, int rpe) {
    synthetic::SyntheticSpec spec;
    spec.communities = communities;
    spec.nodes_per_community = per_community;
    spec.intra_p = 0.15;
    spec.inter_p = 0.01;
    spec.records_per_edge = rpe;
    spec.seed = 99;
    return spec;
}

std::string synthetic_csv(const synthetic::SyntheticSpec& spec) {
    std::ostringstream out;
    synthetic::write_csv(out, synthetic::generate_synthetic(spec), 2);
    return out.str();
}

ingest::IngestConfig normalized_ingest() {
    ingest::IngestConfig cfg;
    cfg.columns = ingest::normalized_columns();
    return cfg;
}

struct TrainFixture {
    graph::AccountGraph g;
    features::NodeFeatureMatrix x;
    model::ModelConfig cfg;
    TrainFixture() {
        const auto spec = bench_spec(4, 25, 3);
        const auto data = synthetic::generate_synthetic(spec);
        const auto merged =
            graph::build_graph(graph::extract_pairs(data.records), spec.period, 2);
        const auto [pruned, deltas] = graph::prune_graph(merged, {.min_count = 1});
        g = graph::normalize_weights(pruned, graph::WeightScheme::frequency);
        x = features::compute_node_features(data.records, g, 2);
        cfg.layers = 2;
        cfg.dims = {static_cast<int>(x.values.cols()), 32, 8};
        cfg.seed = 99;
    }
};

void BM_csv_parse(benchmark::State& state) {
    const auto csv = synthetic_csv(bench_spec(4, 25, 5));
    for (auto _ : state) {
        std::istringstream in(csv);
        auto rows = csv::parse_stream(in);
        benchmark::DoNotOptimize(rows);
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * csv.size()));
}
BENCHMARK(BM_csv_parse);

void BM_ingest_normalize(benchmark::State& state) {
    const auto csv = synthetic_csv(bench_spec(4, 25, 5));
    const auto cfg = normalized_ingest();
    for (auto _ : state) {
        std::istringstream in(csv);
        auto out = ingest::ingest_stream(in, cfg);
        benchmark::DoNotOptimize(out);
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * csv.size()));
}
BENCHMARK(BM_ingest_normalize);

void BM_extract_build(benchmark::State& state) {
    const auto spec = bench_spec(4, 25, 5);
    const auto data = synthetic::generate_synthetic(spec);
    for (auto _ : state) {
        auto g = graph::build_graph(graph::extract_pairs(data.records), spec.period, 2);
        benchmark::DoNotOptimize(g);
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * data.records.size()));
}
BENCHMARK(BM_extract_build);

void BM_train_epoch(benchmark::State& state) {
    static const TrainFixture fx;
    auto cfg = fx.cfg;
    cfg.epochs = 1;  // one resample + forward + backward + Adam step
    for (auto _ : state) {
        auto r = model::train(fx.g, fx.x, cfg);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * fx.g.edges.size()));
}
BENCHMARK(BM_train_epoch);

void BM_score(benchmark::State& state) {
    static const TrainFixture fx;
    auto cfg = fx.cfg;
    cfg.epochs = 30;
    const auto trained = model::train(fx.g, fx.x, cfg);
    for (auto _ : state) {
        auto report = scoring::build_report(fx.g, trained.embeddings.z,
                                            scoring::NodeScoreMode::mean);
        benchmark::DoNotOptimize(report);
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * fx.g.edges.size()));
}
BENCHMARK(BM_score);

void BM_end_to_end_small(benchmark::State& state) {
    const auto csv = synthetic_csv(bench_spec(2, 10, 3));
    const auto icfg = normalized_ingest();
    for (auto _ : state) {
        std::istringstream in(csv);
        const auto ing = ingest::ingest_stream(in, icfg);
        const auto merged =
            graph::build_graph(graph::extract_pairs(ing.records), "2024Q1", 2);
        const auto [pruned, deltas] = graph::prune_graph(merged, {.min_count = 1});
        const auto g = graph::normalize_weights(pruned, graph::WeightScheme::frequency);
        const auto x = features::compute_node_features(ing.records, g, 2);
        model::ModelConfig mc;
        mc.layers = 2;
        mc.dims = {static_cast<int>(x.values.cols()), 16, 8};
        mc.epochs = 20;
        mc.seed = 5;
        const auto trained = model::train(g, x, mc);
        auto report = scoring::build_report(g, trained.embeddings.z,
                                            scoring::NodeScoreMode::mean);
        benchmark::DoNotOptimize(report);
    }
}
BENCHMARK(BM_end_to_end_small);

}  // namespace

BENCHMARK_MAIN();
