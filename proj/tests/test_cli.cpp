#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ledgergraph/synthetic.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

// Path to the built command-line binary, injected by CTest.
const char* cli_path() { return std::getenv("LEDGERGRAPH_CLI"); }

struct RunResult {
    int exit_code = -1;
    std::string out;
};

// Runs `<cli> args`, capturing stdout+stderr.
RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const auto capture =
        fs::temp_directory_path() / ("ledgergraph-cli-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(counter++) + ".log");
    const std::string cmd =
        std::string("\"") + cli_path() + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = testutil::slurp(capture.string());
    fs::remove(capture);
    return r;
}

// Column mapping for the bundled split-layout sample.
std::string sample_config_json() {
    return R"({
  "ingest": {
    "columns": {
      "period": "period", "voucher": "voucher", "line": "line",
      "account": "account", "debit": "debit_amount", "credit": "credit_amount",
      "date": "posting_date"
    }
  }
})";
}

std::string tiny_bench_config_json() {
    return R"({
  "seed": 3,
  "model": {"hidden_dims": [8, 4], "epochs": 10},
  "bench": {
    "communities": 2, "nodes_per_community": 5, "intra_p": 0.6, "inter_p": 0.05,
    "records_per_edge": 2, "cross_edges": 2, "seeds": 1
  },
  "sweep": {"grid": [0.01, 0.1]}
})";
}

}  // namespace

#define REQUIRE_CLI()                                              \
    if (cli_path() == nullptr) {                                   \
        WARN("LEDGERGRAPH_CLI not set; skipping CLI round trips"); \
        return;                                                    \
    }

TEST_CASE("version and help exit cleanly") {
    REQUIRE_CLI();
    const auto v = run_cli("--version");
    CHECK(v.exit_code == 0);
    CHECK(v.out.find("0.1.0") != std::string::npos);
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("ingest --help").exit_code == 0);
}

TEST_CASE("usage errors exit with the config/usage status") {
    REQUIRE_CLI();
    testutil::TempDir tmp;
    CHECK(run_cli("").exit_code == 2);                  // no subcommand
    CHECK(run_cli("--definitely-not-a-flag").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);        // unknown subcommand
    // Nonexistent input file fails flag validation.
    CHECK(run_cli("ingest /nonexistent/ledger.csv --out " + tmp.file("o1")).exit_code == 2);
    // No inputs and no replay source.
    const auto r = run_cli("ingest --out " + tmp.file("o2"));
    CHECK(r.exit_code == 2);
}

TEST_CASE("config file problems are reported as usage errors") {
    REQUIRE_CLI();
    testutil::TempDir tmp;
    const auto bad = tmp.file("bad.json");
    testutil::spit(bad, R"({"no_such_key": 1})");
    const auto sample = testutil::repo_file("data/sample_ledger.csv");
    const auto r = run_cli("ingest " + sample + " --config " + bad + " --out " + tmp.file("out"));
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("no_such_key") != std::string::npos);
}

TEST_CASE("ingest subcommand writes artifacts and replays exactly") {
    REQUIRE_CLI();
    testutil::TempDir tmp;
    const auto cfg = tmp.file("cfg.json");
    testutil::spit(cfg, sample_config_json());
    const auto sample = testutil::repo_file("data/sample_ledger.csv");

    const auto out1 = tmp.file("run1");
    const auto r1 = run_cli("ingest " + sample + " --config " + cfg + " --out " + out1);
    CHECK(r1.exit_code == 0);
    CHECK(r1.out.find("records") != std::string::npos);
    CHECK(fs::exists(fs::path(out1) / "records.csv"));
    CHECK(fs::exists(fs::path(out1) / "quality.json"));
    CHECK(fs::exists(fs::path(out1) / "manifest.json"));

    SUBCASE("--replay reruns from the manifest alone") {
        const auto out2 = tmp.file("run2");
        const auto r2 = run_cli("ingest --replay " + (fs::path(out1) / "manifest.json").string() +
                                " --out " + out2);
        CHECK(r2.exit_code == 0);
        CHECK(testutil::slurp((fs::path(out2) / "quality.json").string()) ==
              testutil::slurp((fs::path(out1) / "quality.json").string()));
        CHECK(testutil::slurp((fs::path(out2) / "records.csv").string()) ==
              testutil::slurp((fs::path(out1) / "records.csv").string()));
    }
    SUBCASE("--replay and explicit inputs are mutually exclusive") {
        const auto r3 = run_cli("ingest " + sample + " --replay " +
                                (fs::path(out1) / "manifest.json").string() + " --out " +
                                tmp.file("run3"));
        CHECK(r3.exit_code == 2);
    }
}

TEST_CASE("pipeline subcommand trains and reruns deterministically") {
    REQUIRE_CLI();
    ledgergraph::synthetic::SyntheticSpec spec;
    spec.communities = 2;
    spec.nodes_per_community = 5;
    spec.intra_p = 0.6;
    spec.inter_p = 0.05;
    spec.records_per_edge = 2;
    spec.seed = 17;
    const auto data = ledgergraph::synthetic::generate_synthetic(spec);
    std::ostringstream csv;
    ledgergraph::synthetic::write_csv(csv, data, 2);

    testutil::TempDir tmp;
    const auto input = tmp.file("ledger.csv");
    testutil::spit(input, csv.str());
    const auto cfg = tmp.file("cfg.json");
    testutil::spit(cfg, R"({"model": {"hidden_dims": [8, 4], "epochs": 20}})");

    const auto out1 = tmp.file("p1"), out2 = tmp.file("p2");
    const auto r1 = run_cli("pipeline " + input + " --config " + cfg + " --out " + out1);
    REQUIRE(r1.exit_code == 0);
    CHECK(fs::exists(fs::path(out1) / "2024Q1" / "report.json"));
    CHECK(fs::exists(fs::path(out1) / "2024Q1" / "checkpoint.json"));

    const auto r2 = run_cli("pipeline " + input + " --config " + cfg + " --out " + out2);
    REQUIRE(r2.exit_code == 0);
    CHECK(testutil::slurp((fs::path(out1) / "2024Q1" / "report.json").string()) ==
          testutil::slurp((fs::path(out2) / "2024Q1" / "report.json").string()));

    SUBCASE("scoring flags are accepted") {
        const auto r3 = run_cli("pipeline " + input + " --config " + cfg +
                                " --scheme amount --neighbor-policy both --top 5 --out " +
                                tmp.file("p3"));
        CHECK(r3.exit_code == 0);
    }
}

TEST_CASE("bench subcommand writes ground-truth metrics") {
    REQUIRE_CLI();
    testutil::TempDir tmp;
    const auto cfg = tmp.file("bench.json");
    testutil::spit(cfg, tiny_bench_config_json());
    const auto out = tmp.file("bench-out");

    const auto r = run_cli("bench --config " + cfg + " --seeds 1 --out " + out);
    REQUIRE(r.exit_code == 0);
    const auto metrics_path = fs::path(out) / "metrics.json";
    REQUIRE(fs::exists(metrics_path));
    const auto doc = nlohmann::json::parse(testutil::slurp(metrics_path.string()));
    REQUIRE(doc.at("runs").size() == 1);
    CHECK(doc.at("runs").at(0).contains("edge_auc"));
    CHECK(doc.at("runs").at(0).at("positives_injected") == 2);
    const auto manifest = nlohmann::json::parse(
        testutil::slurp((fs::path(out) / "manifest.json").string()));
    CHECK(manifest.at("command") == "bench");

    SUBCASE("an infeasible synthetic spec is a config error") {
        const auto bad = tmp.file("bad-bench.json");
        testutil::spit(bad, R"({
  "bench": {"communities": 2, "nodes_per_community": 2, "intra_p": 0.0,
            "inter_p": 1.0, "cross_edges": 1, "seeds": 1}
})");
        CHECK(run_cli("bench --config " + bad + " --out " + tmp.file("bb")).exit_code == 2);
    }
}

TEST_CASE("sweep subcommand writes one row per learning rate") {
    REQUIRE_CLI();
    testutil::TempDir tmp;
    const auto cfg = tmp.file("sweep.json");
    testutil::spit(cfg, tiny_bench_config_json());
    const auto out = tmp.file("sweep-out");

    const auto r = run_cli("sweep --config " + cfg + " --seeds 1 --out " + out);
    REQUIRE(r.exit_code == 0);
    const auto csv = testutil::slurp((fs::path(out) / "sweep.csv").string());
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line.find("learning_rate") != std::string::npos);
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 2);
}
