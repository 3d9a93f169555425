// ledgergraph: structural anomaly detection on general-ledger data.
//
//   ledgergraph ingest   <ledger.csv>...   normalize + quality report
//   ledgergraph pipeline <ledger.csv>...   full run: graph, train, rank
//   ledgergraph bench                      synthetic benchmark vs ground truth
//   ledgergraph sweep                      learning-rate sweep on the benchmark
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ledgergraph/errors.hpp"
#include "ledgergraph/pipeline.hpp"
#include "ledgergraph/version.hpp"

namespace lg = ledgergraph;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App& sub, CommonArgs& args) {
    sub.add_option("--config", args.config_path, "Config JSON (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    sub.add_option("--out", args.out_dir, "Output directory (created as needed)");
    sub.add_option("--seed", args.seed, "Override the run seed");
}

lg::pipeline::PipelineConfig resolve_config(const CommonArgs& args) {
    lg::pipeline::PipelineConfig cfg = args.config_path.empty()
                                           ? lg::pipeline::default_config()
                                           : lg::pipeline::load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw lg::PipelineError("cannot open output file " + path.string());
    return out;
}

void print_quality_summary(const lg::ingest::QualityStats& s) {
    std::printf("records: %llu candidates -> %llu kept (%llu dropped, %llu duplicates)\n",
                static_cast<unsigned long long>(s.records_before),
                static_cast<unsigned long long>(s.records_after),
                static_cast<unsigned long long>(s.records_before - s.records_after -
                                                s.dedup_removed),
                static_cast<unsigned long long>(s.dedup_removed));
    for (const auto& [reason, n] : s.drop_counts) {
        std::printf("  drop %-24s %llu\n", reason.c_str(), static_cast<unsigned long long>(n));
    }
    for (const auto& [reason, n] : s.warning_counts) {
        std::printf("  warn %-24s %llu\n", reason.c_str(), static_cast<unsigned long long>(n));
    }
}

// Field-wise mean over per-seed metric sets, for the benchmark summary.
lg::metrics::MetricSet mean_metrics(const std::vector<lg::bench::BenchResult>& runs, bool node) {
    lg::metrics::MetricSet m;
    if (runs.empty()) return m;
    for (const auto& r : runs) {
        const auto& src = node ? r.node_metrics : r.edge_metrics;
        m.accuracy += src.accuracy;
        m.precision += src.precision;
        m.recall += src.recall;
        m.f1 += src.f1;
        m.auc_roc += src.auc_roc;
        m.auprc += src.auprc;
        for (const auto& [k, v] : src.precision_at) m.precision_at[k] += v;
        for (const auto& [k, v] : src.recall_at) m.recall_at[k] += v;
    }
    const double n = static_cast<double>(runs.size());
    m.accuracy /= n;
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    m.auc_roc /= n;
    m.auprc /= n;
    for (auto& [k, v] : m.precision_at) v /= n;
    for (auto& [k, v] : m.recall_at) v /= n;
    m.threshold_rule = runs.front().edge_metrics.threshold_rule + ", seed-averaged";
    return m;
}

int cmd_ingest(const CommonArgs& args, const std::vector<std::string>& inputs,
               const std::string& replay) {
    lg::pipeline::PipelineConfig cfg;
    std::vector<std::string> files = inputs;
    if (!replay.empty()) {
        const auto info = lg::pipeline::read_manifest(replay);
        if (info.command != "ingest") {
            throw lg::ConfigError("manifest records command '" + info.command +
                                  "', not 'ingest'");
        }
        cfg = info.config;
        files = info.inputs;
        if (args.seed) cfg.seed = *args.seed;
    } else {
        cfg = resolve_config(args);
    }
    const auto outcome = lg::pipeline::run_ingest(files, cfg, args.out_dir);
    print_quality_summary(outcome.stats);
    for (const auto& o : outcome.outputs) {
        std::printf("wrote %s/%s\n", args.out_dir.c_str(), o.c_str());
    }
    return 0;
}

int cmd_pipeline(const CommonArgs& args, const std::vector<std::string>& inputs,
                 const std::string& replay, const std::optional<std::size_t>& top,
                 const std::string& scheme, const std::string& policy) {
    lg::pipeline::PipelineConfig cfg;
    std::vector<std::string> files = inputs;
    if (!replay.empty()) {
        const auto info = lg::pipeline::read_manifest(replay);
        if (info.command != "pipeline") {
            throw lg::ConfigError("manifest records command '" + info.command +
                                  "', not 'pipeline'");
        }
        cfg = info.config;
        files = info.inputs;
        if (args.seed) cfg.seed = *args.seed;
    } else {
        cfg = resolve_config(args);
    }
    if (top) cfg.top_k = *top;
    if (!scheme.empty()) cfg.scheme = *lg::graph::parse_scheme(scheme);
    if (!policy.empty()) cfg.model.neighbor_policy = *lg::model::parse_policy(policy);

    const auto outcome = lg::pipeline::run_pipeline(files, cfg, args.out_dir);
    print_quality_summary(outcome.stats);
    for (const auto& p : outcome.periods) {
        if (p.edges == 0) {
            std::printf("period %s: %zu nodes, empty graph (nothing trained)\n",
                        p.period.c_str(), p.nodes);
        } else {
            std::printf("period %s: %zu nodes, %zu edges, final loss %.6f\n", p.period.c_str(),
                        p.nodes, p.edges, p.final_loss);
        }
    }
    std::printf("wrote %zu files under %s (see manifest.json)\n",
                outcome.manifest.outputs.size(), args.out_dir.c_str());
    return 0;
}

int cmd_bench(const CommonArgs& args, const std::optional<int>& seeds) {
    lg::pipeline::PipelineConfig cfg = resolve_config(args);
    if (seeds) cfg.bench_seeds = *seeds;

    const auto bc = lg::pipeline::make_bench_config(cfg);
    const auto avg = lg::bench::run_seeds(bc, cfg.bench_seeds);

    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) throw lg::PipelineError("cannot create output directory " + args.out_dir);
    {
        auto f = open_out(fs::path(args.out_dir) / "metrics.json");
        lg::pipeline::write_metrics_json(f, mean_metrics(avg.runs, false),
                                         mean_metrics(avg.runs, true), avg.runs);
    }
    lg::pipeline::RunManifest m;
    m.tool_version = LEDGERGRAPH_VERSION_STRING;
    m.command = "bench";
    m.seed = cfg.seed;
    m.resolved_config_json = lg::pipeline::config_to_json_text(cfg);
    m.config_digest = lg::pipeline::fnv1a_hex(m.resolved_config_json);
    m.outputs = {"metrics.json"};
    double total = 0.0;
    for (const auto& r : avg.runs) total += r.seconds;
    m.stage_seconds = {{"bench", total}};
    {
        auto f = open_out(fs::path(args.out_dir) / "manifest.json");
        lg::pipeline::write_manifest_json(f, m);
    }

    std::printf("benchmark over %d seeds (base %llu):\n", cfg.bench_seeds,
                static_cast<unsigned long long>(cfg.seed));
    std::printf("  edge AUC-ROC   %.4f\n", avg.edge_auc);
    std::printf("  edge accuracy  %.4f\n", avg.edge_accuracy);
    std::printf("  edge P@10      %.4f\n", avg.edge_precision_at_10);
    std::printf("wrote %s/metrics.json\n", args.out_dir.c_str());
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::optional<int>& seeds) {
    lg::pipeline::PipelineConfig cfg = resolve_config(args);
    if (seeds) cfg.bench_seeds = *seeds;

    const auto bc = lg::pipeline::make_bench_config(cfg);
    const auto rows = lg::bench::lr_sweep(cfg.sweep_grid, bc, cfg.bench_seeds);

    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) throw lg::PipelineError("cannot create output directory " + args.out_dir);
    {
        auto f = open_out(fs::path(args.out_dir) / "sweep.csv");
        lg::pipeline::write_sweep_csv(f, rows);
    }
    lg::pipeline::RunManifest m;
    m.tool_version = LEDGERGRAPH_VERSION_STRING;
    m.command = "sweep";
    m.seed = cfg.seed;
    m.resolved_config_json = lg::pipeline::config_to_json_text(cfg);
    m.config_digest = lg::pipeline::fnv1a_hex(m.resolved_config_json);
    m.outputs = {"sweep.csv"};
    {
        auto f = open_out(fs::path(args.out_dir) / "manifest.json");
        lg::pipeline::write_manifest_json(f, m);
    }

    std::printf("%-14s %-10s %s\n", "learning_rate", "accuracy", "auc");
    for (const auto& r : rows) {
        std::printf("%-14g %-10.4f %.4f\n", r.learning_rate, r.accuracy, r.auc);
    }
    std::printf("wrote %s/sweep.csv\n", args.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structural anomaly detection on general-ledger account graphs"};
    app.set_version_flag("--version", LEDGERGRAPH_VERSION_STRING);
    app.require_subcommand(1);

    CommonArgs ingest_args, pipeline_args, bench_args, sweep_args;
    std::vector<std::string> ingest_inputs, pipeline_inputs;
    std::string ingest_replay, pipeline_replay;
    std::optional<std::size_t> top;
    std::string scheme, policy;
    std::optional<int> bench_seed_count, sweep_seed_count;

    CLI::App* ingest = app.add_subcommand("ingest", "Normalize ledger CSVs, report data quality");
    add_common(*ingest, ingest_args);
    CLI::Option* ingest_in =
        ingest->add_option("inputs", ingest_inputs, "Ledger CSV files")->check(CLI::ExistingFile);
    ingest->add_option("--replay", ingest_replay, "Re-run from a manifest.json")
        ->check(CLI::ExistingFile)
        ->excludes(ingest_in);

    CLI::App* pipeline =
        app.add_subcommand("pipeline", "Full run: ingest, graph, train, score, report");
    add_common(*pipeline, pipeline_args);
    CLI::Option* pipeline_in = pipeline->add_option("inputs", pipeline_inputs, "Ledger CSV files")
                                   ->check(CLI::ExistingFile);
    pipeline->add_option("--replay", pipeline_replay, "Re-run from a manifest.json")
        ->check(CLI::ExistingFile)
        ->excludes(pipeline_in);
    pipeline->add_option("--top", top, "Ranking length in reports (0 = all edges/nodes)");
    pipeline->add_option("--scheme", scheme, "Edge weight scheme")
        ->check(CLI::IsMember({"frequency", "amount"}));
    pipeline->add_option("--neighbor-policy", policy, "Message-passing direction")
        ->check(CLI::IsMember({"in", "out", "both"}));

    CLI::App* bench =
        app.add_subcommand("bench", "Synthetic benchmark with known injected anomalies");
    add_common(*bench, bench_args);
    bench->add_option("--seeds", bench_seed_count, "Number of seeds to average over");

    CLI::App* sweep = app.add_subcommand("sweep", "Learning-rate sweep on the benchmark");
    add_common(*sweep, sweep_args);
    sweep->add_option("--seeds", sweep_seed_count, "Number of seeds to average over");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit clean, usage errors -> 2
    }

    try {
        if (ingest->parsed()) {
            if (ingest_inputs.empty() && ingest_replay.empty()) {
                std::fprintf(stderr, "error: no input files (pass CSVs or --replay)\n");
                return 2;
            }
            return cmd_ingest(ingest_args, ingest_inputs, ingest_replay);
        }
        if (pipeline->parsed()) {
            if (pipeline_inputs.empty() && pipeline_replay.empty()) {
                std::fprintf(stderr, "error: no input files (pass CSVs or --replay)\n");
                return 2;
            }
            return cmd_pipeline(pipeline_args, pipeline_inputs, pipeline_replay, top, scheme,
                                policy);
        }
        if (bench->parsed()) return cmd_bench(bench_args, bench_seed_count);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_seed_count);
        std::fprintf(stderr, "error: no subcommand\n");
        return 2;
    } catch (const lg::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
