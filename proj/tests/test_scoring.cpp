#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgergraph/errors.hpp"
#include "ledgergraph/model.hpp"
#include "ledgergraph/scoring.hpp"
#include "testutil.hpp"

using namespace ledgergraph;

namespace {

// Independent logistic reference for expected probabilities.
double ref_sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Eigen::MatrixXd column(std::vector<double> v) {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) z(static_cast<Eigen::Index>(i), 0) = v[i];
    return z;
}

// A -> B (w 2, count 3), A -> C (w 1, count 2), B -> C (w 0.5, count 1),
// plus an isolated node D.  Embeddings A=2, B=1, C=-1, D=0.
struct Fixture {
    graph::AccountGraph g;
    Eigen::MatrixXd z;
    Fixture() {
        g = testutil::make_graph("2024Q1", {{"A", "B", 3, 0.0, 2.0},
                                            {"A", "C", 2, 0.0, 1.0},
                                            {"B", "C", 1, 0.0, 0.5}});
        g.nodes.push_back("D");
        g.rebuild_adjacency();
        z = column({2.0, 1.0, -1.0, 0.0});
    }
};

}  // namespace

TEST_CASE("edge scores are reconstruction deviations in edge-list order") {
    const Fixture f;
    const auto es = scoring::score_edges(f.g, f.z);
    REQUIRE(es.size() == 3);
    for (std::size_t i = 0; i < es.size(); ++i) {
        CHECK(es[i].src == f.g.edges[i].src);
        CHECK(es[i].dst == f.g.edges[i].dst);
        CHECK(es[i].weight == f.g.edges[i].weight);
        CHECK(es[i].raw_count == f.g.edges[i].raw_count);
        CHECK(es[i].score == 1.0 - es[i].p_hat);
    }
    // A->B: dot 2; A->C: dot -2; B->C: dot -1.
    CHECK(es[0].p_hat == doctest::Approx(ref_sigmoid(2.0)).epsilon(1e-15));
    CHECK(es[1].p_hat == doctest::Approx(ref_sigmoid(-2.0)).epsilon(1e-15));
    CHECK(es[2].p_hat == doctest::Approx(ref_sigmoid(-1.0)).epsilon(1e-15));

    SUBCASE("embedding rows must cover every node") {
        CHECK_THROWS_AS(scoring::score_edges(f.g, column({1.0, 2.0})), PipelineError);
    }
}

TEST_CASE("node scores aggregate incident edges per mode") {
    const Fixture f;
    const auto es = scoring::score_edges(f.g, f.z);
    const double s_ab = es[0].score, s_ac = es[1].score, s_bc = es[2].score;

    SUBCASE("mean over both incident directions") {
        const auto ns = scoring::score_nodes(es, f.g, scoring::NodeScoreMode::mean);
        REQUIRE(ns.size() == 4);
        CHECK(ns[0].node == 0);
        CHECK(ns[0].score == doctest::Approx((s_ab + s_ac) / 2.0).epsilon(1e-15));
        CHECK(ns[1].score == doctest::Approx((s_ab + s_bc) / 2.0).epsilon(1e-15));
        CHECK(ns[2].score == doctest::Approx((s_ac + s_bc) / 2.0).epsilon(1e-15));
        CHECK_FALSE(ns[0].no_evidence);
        CHECK(ns[3].no_evidence);  // isolated D
        CHECK(ns[3].score == 0.0);
    }
    SUBCASE("weighted mode divides by the incident weight sum") {
        const auto ns = scoring::score_nodes(es, f.g, scoring::NodeScoreMode::weighted);
        CHECK(ns[1].score ==
              doctest::Approx((2.0 * s_ab + 0.5 * s_bc) / 2.5).epsilon(1e-15));
        CHECK(ns[3].no_evidence);
    }
    SUBCASE("zero incident weights fall back to the plain mean") {
        const auto g0 = testutil::make_graph("2024Q1", {{"A", "B", 1, 0.0, 0.0},
                                                         {"B", "C", 1, 0.0, 0.0}});
        const auto z0 = column({2.0, 1.0, -1.0});
        const auto es0 = scoring::score_edges(g0, z0);
        const auto mean = scoring::score_nodes(es0, g0, scoring::NodeScoreMode::mean);
        const auto wtd = scoring::score_nodes(es0, g0, scoring::NodeScoreMode::weighted);
        for (std::size_t i = 0; i < mean.size(); ++i) CHECK(wtd[i].score == mean[i].score);
    }
}

TEST_CASE("rankings order by score then account code") {
    // A->C and C->A tie exactly (same dot product both ways).
    auto g = testutil::make_graph("2024Q1", {{"A", "B", 1, 0.0, 1.0},
                                             {"A", "C", 1, 0.0, 1.0},
                                             {"B", "C", 1, 0.0, 1.0},
                                             {"C", "A", 1, 0.0, 1.0}});
    const auto z = column({2.0, 1.0, -1.0});
    const auto es = scoring::score_edges(g, z);
    // Scores: A->B low, B->C mid, A->C == C->A high.
    const auto full = scoring::rank_edges(es, g, 10);
    CHECK(full == std::vector<std::uint32_t>{1, 3, 2, 0});
    const auto top2 = scoring::rank_edges(es, g, 2);
    CHECK(top2 == std::vector<std::uint32_t>{1, 3});
    CHECK(scoring::rank_edges(es, g, 0).empty());

    SUBCASE("node ties break by code") {
        const auto g2 = testutil::make_graph("2024Q1", {{"A", "B", 1, 0.0, 1.0},
                                                         {"B", "A", 1, 0.0, 1.0}});
        const auto es2 = scoring::score_edges(g2, column({1.0, 1.0}));
        const auto order = scoring::rank_nodes(
            scoring::score_nodes(es2, g2, scoring::NodeScoreMode::mean), g2, 5);
        CHECK(order == std::vector<graph::NodeId>{0, 1});
    }
}

TEST_CASE("localization returns worst incident edges plus the 1-hop subgraph") {
    // Star around B, with one edge (E -> F) outside B's neighborhood.
    const auto g = testutil::make_graph("2024Q1", {{"A", "B", 1, 0.0, 1.0},
                                                   {"B", "C", 1, 0.0, 1.0},
                                                   {"B", "E", 1, 0.0, 1.0},
                                                   {"D", "B", 1, 0.0, 1.0},
                                                   {"E", "F", 1, 0.0, 1.0}});
    // A=0 B=1 C=2 D=3 E=4 F=5; dots: A->B 3, B->C -2, B->E 0, D->B -1, E->F 0.
    const auto z = column({3.0, 1.0, -2.0, -1.0, 0.0, 5.0});
    const auto es = scoring::score_edges(g, z);

    SUBCASE("top-k incident edges by score") {
        const auto clue = scoring::localize(g, es, "B", 2);
        CHECK(clue.node == 1);
        REQUIRE(clue.top_edges.size() == 2);
        // Worst: B->C (score sigma(2)), then D->B (sigma(1)).
        CHECK(clue.top_edges[0].src == 1);
        CHECK(clue.top_edges[0].dst == 2);
        CHECK(clue.top_edges[1].src == 3);
        CHECK(clue.top_edges[1].dst == 1);
        CHECK(clue.subgraph_nodes == std::vector<graph::NodeId>{1, 2, 3});
        // Induced edges among {B, C, D}: B->C and D->B.
        CHECK(clue.subgraph_edge_idx == std::vector<std::uint32_t>{1, 3});
    }
    SUBCASE("k past the incident count returns every incident edge") {
        const auto clue = scoring::localize(g, es, "B", 10);
        CHECK(clue.top_edges.size() == 4);
        CHECK(clue.subgraph_nodes == std::vector<graph::NodeId>{0, 1, 2, 3, 4});
        // E->F stays out: F is not in the 1-hop set.
        CHECK(clue.subgraph_edge_idx == std::vector<std::uint32_t>{0, 1, 2, 3});
    }
    SUBCASE("unknown account codes are rejected") {
        CHECK_THROWS_AS(scoring::localize(g, es, "ZZZ", 3), PipelineError);
    }
}

TEST_CASE("reports serialize deterministically with full rankings by default") {
    const Fixture f;
    const auto report = scoring::build_report(f.g, f.z, scoring::NodeScoreMode::mean,
                                              /*top_k=*/0, /*localize_nodes=*/2,
                                              /*localize_k=*/2);
    CHECK(report.edge_ranking.size() == f.g.edges.size());
    CHECK(report.node_ranking.size() == f.g.node_count());
    REQUIRE(report.localization.size() == 2);
    CHECK(report.localization[0].node == report.node_ranking[0]);

    std::ostringstream a, b;
    scoring::write_report_json(a, report, f.g);
    scoring::write_report_json(b, report, f.g);
    CHECK(a.str() == b.str());

    const auto doc = nlohmann::json::parse(a.str());
    CHECK(doc.at("period") == "2024Q1");
    CHECK(doc.at("node_score_mode") == "mean");
    REQUIRE(doc.at("edge_scores").size() == 3);
    const auto& e0 = doc.at("edge_scores").at(0);
    CHECK(e0.at("src") == "A");
    CHECK(e0.at("dst") == "B");
    CHECK(e0.at("raw_count") == 3);
    CHECK(e0.at("score").get<double>() == report.edge_scores[0].score);
    REQUIRE(doc.at("node_scores").size() == 4);
    CHECK(doc.at("node_scores").at(3).at("account") == "D");
    CHECK(doc.at("node_scores").at(3).at("no_evidence") == true);
    CHECK(doc.at("edge_ranking").at(0).at("rank") == 1);
    CHECK(doc.at("node_ranking").size() == 4);
    REQUIRE(doc.at("localization").size() == 2);
    CHECK(doc.at("localization").at(0).contains("account"));
    CHECK(doc.at("localization").at(0).contains("edges"));
    CHECK(doc.at("localization").at(0).contains("subgraph_nodes"));

    SUBCASE("ranking CSV carries the documented header and rank order") {
        std::ostringstream csv;
        scoring::write_ranking_csv(csv, report, f.g);
        std::istringstream lines(csv.str());
        std::string line;
        REQUIRE(std::getline(lines, line));
        CHECK(line == "rank,src,dst,score,p_hat,raw_count");
        std::size_t rows = 0;
        std::string first_row;
        while (std::getline(lines, line)) {
            if (rows == 0) first_row = line;
            ++rows;
        }
        CHECK(rows == report.edge_ranking.size());
        // Top edge is A->C, the strongest deviation.
        CHECK(first_row.rfind("1,A,C,", 0) == 0);
    }
}
