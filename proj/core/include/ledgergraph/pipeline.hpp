#pragma once

// End-to-end orchestration: resolved run configuration, the
// ingest -> graph -> train -> score pipeline over period-partitioned inputs,
// and the replayable run manifest.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ledgergraph/bench.hpp"
#include "ledgergraph/graph.hpp"
#include "ledgergraph/ingest.hpp"
#include "ledgergraph/model.hpp"
#include "ledgergraph/scoring.hpp"
#include "ledgergraph/synthetic.hpp"

namespace ledgergraph::pipeline {

struct PipelineConfig {
    ingest::IngestConfig ingest;
    graph::PrunePolicy prune;
    // When true, the raw_count floor adapts to the data (1 for
    // single-voucher periods, prune.min_count otherwise).
    bool prune_auto_min_count = true;
    graph::WeightScheme scheme = graph::WeightScheme::frequency;
    model::ModelConfig model;  // dims[0] = 0 until the feature count is known
    scoring::NodeScoreMode node_mode = scoring::NodeScoreMode::mean;
    std::size_t top_k = 50;            // ranking length in reports (0 = all)
    std::size_t localize_nodes = 5;    // clues for this many top nodes
    std::size_t localize_k = 5;        // incident edges per clue
    std::vector<int> metric_ks = {10, 100};
    std::uint64_t seed = 42;           // the run's single entropy source

    // Benchmark / sweep settings (cmd bench, cmd sweep).
    synthetic::SyntheticSpec bench;
    int bench_seeds = 5;
    std::vector<double> sweep_grid = {1e-4, 1e-3, 1e-2, 1e-1, 0.5};
};

// Built-in defaults (identical to configs/default.json).
PipelineConfig default_config();

// JSON round trip.  Unknown keys are rejected so typos fail loudly; both
// throw ConfigError on malformed documents.
PipelineConfig config_from_json_text(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json_text(const PipelineConfig& cfg);

// Assembles the per-run benchmark configuration from a pipeline config.
bench::BenchConfig make_bench_config(const PipelineConfig& cfg);

// --- Run manifest -------------------------------------------------------

struct RunManifest {
    std::string tool_version;
    std::string command;
    std::string config_digest;  // digest of resolved_config_json
    std::map<std::string, std::string> input_digests;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::string> outputs;
    std::string resolved_config_json;  // embedded for exact replay
};

void write_manifest_json(std::ostream& out, const RunManifest& m);

// Reads back the pieces needed to replay: embedded config + input paths.
struct ReplayInfo {
    PipelineConfig config;
    std::vector<std::string> inputs;
    std::string command;
};
ReplayInfo read_manifest(const std::string& path);

// --- Digests ------------------------------------------------------------

// FNV-1a 64-bit, hex-encoded; stable content fingerprints for manifests and
// determinism checks.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string fnv1a_hex(std::string_view text);
std::string fnv1a_hex_of_file(const std::string& path);

// --- Full pipeline ------------------------------------------------------

struct PeriodOutcome {
    std::string period;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    double final_loss = 0.0;
    std::vector<std::string> outputs;
};

struct PipelineOutcome {
    ingest::QualityStats stats;  // ingest-stage totals over all inputs
    std::vector<PeriodOutcome> periods;
    RunManifest manifest;
};

// Ingests every input file, splits records by period, and per period:
// builds/prunes/normalizes the graph, computes features, trains, scores,
// and writes the artifact set under out_dir/<period>/ (edge list, graph
// JSON + DOT, checkpoint, report JSON, ranking CSV).  Also writes the
// normalized records, quality stats, and the run manifest under out_dir.
// Directories are created as needed; throws PipelineError on IO failure.
PipelineOutcome run_pipeline(const std::vector<std::string>& inputs, const PipelineConfig& cfg,
                             const std::string& out_dir);

// Ingest-only entry (cmd ingest): normalized records CSV + quality JSON.
struct IngestOutcome {
    ingest::QualityStats stats;
    std::vector<std::string> outputs;
    RunManifest manifest;
};
IngestOutcome run_ingest(const std::vector<std::string>& inputs, const PipelineConfig& cfg,
                         const std::string& out_dir);

void write_quality_json(std::ostream& out, const ingest::QualityStats& stats);
void write_metrics_json(std::ostream& out, const metrics::MetricSet& edge,
                        const metrics::MetricSet& node,
                        const std::vector<bench::BenchResult>& runs);
void write_sweep_csv(std::ostream& out, const std::vector<bench::SweepRow>& rows);

}  // namespace ledgergraph::pipeline
