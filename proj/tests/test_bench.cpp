#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ledgergraph/bench.hpp"
#include "ledgergraph/scoring.hpp"

using namespace ledgergraph;

namespace {

// Small but non-trivial: 2 communities of 6, dense inside, 3 injected
// cross-community edges, short training run.
bench::BenchConfig tiny_bench() {
    bench::BenchConfig cfg;
    cfg.spec.communities = 2;
    cfg.spec.nodes_per_community = 6;
    cfg.spec.intra_p = 0.5;
    cfg.spec.inter_p = 0.05;
    cfg.spec.records_per_edge = 2;
    cfg.spec.anomaly_records_per_edge = 1;
    cfg.spec.cross_edges = 3;
    cfg.spec.seed = 11;
    cfg.model.layers = 2;
    cfg.model.dims = {0, 16, 8};  // dims[0] fixed up internally
    cfg.model.epochs = 40;
    cfg.ks = {10};
    return cfg;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("benchmark runs end to end with aligned ground truth") {
    const auto res = bench::run_benchmark(tiny_bench());

    CHECK(res.positives_injected == 3);
    // min_count 1 pruning keeps single-voucher injections in the graph.
    CHECK(res.positives_in_graph == 3);
    REQUIRE(res.edge_labels.size() == res.graph.edges.size());
    CHECK(std::count(res.edge_labels.begin(), res.edge_labels.end(), 1) == 3);

    CHECK(res.trace.epoch_loss.size() == 40);
    CHECK_FALSE(res.trace.diverged);
    CHECK(res.edge_metrics.auc_roc >= 0.0);
    CHECK(res.edge_metrics.auc_roc <= 1.0);
    CHECK(res.edge_metrics.precision_at.count(10) == 1);
    CHECK(res.node_metrics.auc_roc >= 0.0);
    CHECK(res.report.edge_scores.size() == res.graph.edges.size());
    CHECK(res.seconds > 0.0);

    SUBCASE("labels mark exactly the injected pairs") {
        for (std::size_t i = 0; i < res.graph.edges.size(); ++i) {
            const auto& e = res.graph.edges[i];
            const bool crosses = res.graph.nodes[e.src][0] != res.graph.nodes[e.dst][0];
            if (res.edge_labels[i] == 1) CHECK(crosses);
        }
    }
}

TEST_CASE("benchmark runs reproduce byte-identically from the seed") {
    const auto cfg = tiny_bench();
    const auto a = bench::run_benchmark(cfg);
    const auto b = bench::run_benchmark(cfg);

    CHECK(a.edge_metrics.auc_roc == b.edge_metrics.auc_roc);
    CHECK(a.edge_metrics.accuracy == b.edge_metrics.accuracy);
    CHECK(a.trace.epoch_loss == b.trace.epoch_loss);
    CHECK(a.edge_labels == b.edge_labels);

    std::ostringstream ra, rb;
    scoring::write_report_json(ra, a.report, a.graph);
    scoring::write_report_json(rb, b.report, b.graph);
    CHECK(ra.str() == rb.str());
}

TEST_CASE("on an easy instance the detector separates injected edges") {
    auto cfg = tiny_bench();
    cfg.spec.seed = 1;
    cfg.model.epochs = 120;
    const auto res = bench::run_benchmark(cfg);

    // Training made real progress...
    REQUIRE_FALSE(res.trace.diverged);
    CHECK(res.trace.final_loss < 0.7 * res.trace.epoch_loss.front());

    // ...and injected cross-community edges score above the organic ones.
    std::vector<double> injected, organic;
    for (std::size_t i = 0; i < res.edge_labels.size(); ++i) {
        (res.edge_labels[i] ? injected : organic)
            .push_back(res.report.edge_scores[i].score);
    }
    REQUIRE_FALSE(injected.empty());
    REQUIRE_FALSE(organic.empty());
    CHECK(median_of(injected) > median_of(organic));
}

TEST_CASE("seed averaging reports the plain mean over runs") {
    auto cfg = tiny_bench();
    cfg.model.epochs = 20;
    const auto avg = bench::run_seeds(cfg, 2);
    REQUIRE(avg.runs.size() == 2);
    CHECK(avg.edge_auc ==
          doctest::Approx((avg.runs[0].edge_metrics.auc_roc +
                           avg.runs[1].edge_metrics.auc_roc) / 2.0).epsilon(1e-15));
    CHECK(avg.edge_accuracy ==
          doctest::Approx((avg.runs[0].edge_metrics.accuracy +
                           avg.runs[1].edge_metrics.accuracy) / 2.0).epsilon(1e-15));
    // Seeds differ, so the two runs are genuinely different instances.
    CHECK(avg.runs[0].trace.epoch_loss != avg.runs[1].trace.epoch_loss);
}

TEST_CASE("learning-rate sweep returns one row per grid point, sorted") {
    auto cfg = tiny_bench();
    cfg.model.epochs = 15;
    const auto rows = bench::lr_sweep({0.1, 0.001}, cfg, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].learning_rate == 0.001);
    CHECK(rows[1].learning_rate == 0.1);
    for (const auto& r : rows) {
        CHECK(r.auc >= 0.0);
        CHECK(r.auc <= 1.0);
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
    }
}
