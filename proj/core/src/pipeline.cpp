#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ledgergraph/errors.hpp"
#include "ledgergraph/features.hpp"
#include "ledgergraph/metrics.hpp"
#include "ledgergraph/pipeline.hpp"
#include "ledgergraph/version.hpp"

namespace ledgergraph::pipeline {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw PipelineError("cannot open output file " + path.string());
    }
    return out;
}

struct IngestAgg {
    std::vector<ingest::LedgerRecord> records;
    ingest::QualityStats stats;
};

// Multi-file ingest with one *global* deduplication pass, so the same record
// appearing in two exports is still collapsed.  The counters recombine the
// per-file tallies exactly (all rates are ratios of summed counts), keeping
// the conservation identity records_before == records_after + drops + dedup
// intact across the whole batch.
IngestAgg ingest_all(const std::vector<std::string>& inputs, const ingest::IngestConfig& icfg) {
    if (inputs.empty()) {
        throw ConfigError("at least one input file is required");
    }
    IngestAgg agg;
    std::uint64_t key_missing = 0;
    std::uint64_t invalid_code = 0;
    std::uint64_t skipped_rows = 0;
    for (const auto& path : inputs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw PipelineError("cannot open input file " + path);
        }
        ingest::ParsedLedger parsed = ingest::parse_ledger_file(in, icfg);
        ingest::NormalizeResult norm = ingest::normalize_records(parsed, icfg);
        agg.stats.source_rows += parsed.source_rows;
        agg.stats.records_before += norm.candidates;
        for (const auto& [reason, n] : norm.drop_counts) agg.stats.drop_counts[reason] += n;
        for (const auto& [reason, n] : norm.warning_counts) agg.stats.warning_counts[reason] += n;
        key_missing += norm.key_missing_candidates;
        invalid_code += norm.invalid_code_candidates;
        skipped_rows += parsed.diagnostics.size();
        agg.records.insert(agg.records.end(), std::make_move_iterator(norm.records.begin()),
                           std::make_move_iterator(norm.records.end()));
    }
    ingest::DedupResult dedup = ingest::deduplicate(std::move(agg.records));
    agg.records = std::move(dedup.records);
    agg.stats.records_after = agg.records.size();
    agg.stats.dedup_removed = dedup.removed;
    if (skipped_rows > 0) {
        agg.stats.warning_counts["malformed_row_skipped"] += skipped_rows;
    }
    if (agg.stats.records_before > 0) {
        agg.stats.key_field_missing_rate_before =
            static_cast<double>(key_missing) / agg.stats.records_before;
        agg.stats.invalid_code_rate_before =
            static_cast<double>(invalid_code) / agg.stats.records_before;
    }
    std::uint64_t missing_after = 0;
    for (const auto& r : agg.records) {
        if (r.period.empty() || r.voucher_id.empty() || r.account_code.empty() ||
            r.amount_minor <= 0) {
            ++missing_after;
        }
    }
    if (!agg.records.empty()) {
        agg.stats.key_field_missing_rate_after =
            static_cast<double>(missing_after) / agg.records.size();
    }
    agg.stats.invalid_code_rate_after = 0.0;
    return agg;
}

// Running totals for the graph-stage quality ratios across periods; for a
// single period this reduces to fill_graph_stats exactly.
struct GraphStatAgg {
    std::uint64_t pairs = 0;
    std::uint64_t one_sided = 0;
    std::uint64_t nodes = 0;
    std::uint64_t merged_edges = 0;
    std::uint64_t final_edges = 0;
    std::uint64_t self_loops_before = 0;
    std::uint64_t self_loops_after = 0;
    std::uint64_t truncated = 0;
    std::uint64_t isolated = 0;
    double ordered_pairs = 0.0;  // sum over periods of n_p * (n_p - 1)

    void add(const graph::PairExtraction& extraction, const graph::AccountGraph& merged,
             const graph::PruneDeltas& deltas, const graph::AccountGraph& final_graph) {
        pairs += extraction.pairs.size();
        one_sided += extraction.one_sided_vouchers;
        nodes += merged.nodes.size();
        merged_edges += merged.edges.size();
        final_edges += final_graph.edges.size();
        self_loops_before += deltas.self_loops_removed;
        truncated += deltas.edges_truncated;
        for (const graph::Edge& e : final_graph.edges) {
            if (e.src == e.dst) ++self_loops_after;
        }
        for (graph::NodeId v = 0; v < final_graph.nodes.size(); ++v) {
            if (final_graph.in_edges[v].empty() && final_graph.out_edges[v].empty()) ++isolated;
        }
        const double n = static_cast<double>(final_graph.nodes.size());
        if (n > 1) ordered_pairs += n * (n - 1.0);
    }

    void fill(ingest::QualityStats& stats) const {
        stats.pair_count = pairs;
        stats.one_sided_vouchers = one_sided;
        stats.node_count = nodes;
        stats.unique_edges = merged_edges;
        stats.edge_count_final = final_edges;
        stats.self_loop_ratio_before =
            merged_edges == 0 ? 0.0 : static_cast<double>(self_loops_before) / merged_edges;
        stats.self_loop_ratio_after =
            final_edges == 0 ? 0.0 : static_cast<double>(self_loops_after) / final_edges;
        stats.truncation_ratio =
            final_edges == 0 ? 0.0 : static_cast<double>(truncated) / final_edges;
        stats.isolated_node_ratio =
            nodes == 0 ? 0.0 : static_cast<double>(isolated) / nodes;
        stats.sparsity = ordered_pairs > 0.0 ? final_edges / ordered_pairs : 0.0;
    }
};

json metric_set_json(const metrics::MetricSet& m) {
    json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["auc_roc"] = m.auc_roc;
    j["auprc"] = m.auprc;
    json pk = json::object();
    for (const auto& [k, v] : m.precision_at) pk[std::to_string(k)] = v;
    j["precision_at"] = std::move(pk);
    json rk = json::object();
    for (const auto& [k, v] : m.recall_at) rk[std::to_string(k)] = v;
    j["recall_at"] = std::move(rk);
    j["threshold_rule"] = m.threshold_rule;
    return j;
}

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& inputs,
                           const PipelineConfig& cfg) {
    RunManifest m;
    m.tool_version = LEDGERGRAPH_VERSION_STRING;
    m.command = command;
    m.seed = cfg.seed;
    m.resolved_config_json = config_to_json_text(cfg);
    m.config_digest = fnv1a_hex(m.resolved_config_json);
    for (const auto& path : inputs) {
        m.input_digests[path] = fnv1a_hex_of_file(path);
    }
    return m;
}

}  // namespace

// --- Digests --------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a_hex(std::string_view text) {
    const std::uint64_t h = fnv1a64(text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fnv1a_hex_of_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PipelineError("cannot open file for digest: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    return fnv1a_hex(content);
}

// --- Manifest ---------------------------------------------------------------

void write_manifest_json(std::ostream& out, const RunManifest& m) {
    json doc;
    doc["format_version"] = 1;
    doc["tool_version"] = m.tool_version;
    doc["command"] = m.command;
    doc["seed"] = m.seed;
    doc["config_digest"] = m.config_digest;
    json inputs = json::object();
    for (const auto& [path, digest] : m.input_digests) inputs[path] = digest;
    doc["inputs"] = std::move(inputs);
    json stages = json::array();
    for (const auto& [stage, secs] : m.stage_seconds) {
        stages.push_back(json{{"stage", stage}, {"seconds", secs}});
    }
    doc["stage_seconds"] = std::move(stages);
    doc["outputs"] = m.outputs;
    try {
        doc["resolved_config"] = json::parse(m.resolved_config_json);
    } catch (const json::exception& e) {
        throw PipelineError(std::string("manifest holds malformed config JSON: ") + e.what());
    }
    out << doc.dump(2) << "\n";
}

ReplayInfo read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PipelineError("cannot open manifest " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw PipelineError(std::string("malformed manifest: ") + e.what());
    }
    ReplayInfo info;
    try {
        info.command = doc.at("command").get<std::string>();
        info.config = config_from_json_text(doc.at("resolved_config").dump());
        for (const auto& [input, digest] : doc.at("inputs").items()) {
            (void)digest;
            info.inputs.push_back(input);
        }
    } catch (const json::exception& e) {
        throw PipelineError(std::string("manifest is missing required fields: ") + e.what());
    }
    return info;
}

// --- Writers ----------------------------------------------------------------

void write_quality_json(std::ostream& out, const ingest::QualityStats& stats) {
    json doc;
    doc["source_rows"] = stats.source_rows;
    doc["records_before"] = stats.records_before;
    doc["records_after"] = stats.records_after;
    doc["dedup_removed"] = stats.dedup_removed;
    doc["drop_counts"] = stats.drop_counts;
    doc["warning_counts"] = stats.warning_counts;
    doc["key_field_missing_rate_before"] = stats.key_field_missing_rate_before;
    doc["key_field_missing_rate_after"] = stats.key_field_missing_rate_after;
    doc["invalid_code_rate_before"] = stats.invalid_code_rate_before;
    doc["invalid_code_rate_after"] = stats.invalid_code_rate_after;
    json g;
    g["pair_count"] = stats.pair_count;
    g["one_sided_vouchers"] = stats.one_sided_vouchers;
    g["node_count"] = stats.node_count;
    g["unique_edges"] = stats.unique_edges;
    g["edge_count_final"] = stats.edge_count_final;
    g["self_loop_ratio_before"] = stats.self_loop_ratio_before;
    g["self_loop_ratio_after"] = stats.self_loop_ratio_after;
    g["truncation_ratio"] = stats.truncation_ratio;
    g["isolated_node_ratio"] = stats.isolated_node_ratio;
    g["sparsity"] = stats.sparsity;
    doc["graph"] = std::move(g);
    out << doc.dump(2) << "\n";
}

void write_metrics_json(std::ostream& out, const metrics::MetricSet& edge,
                        const metrics::MetricSet& node,
                        const std::vector<bench::BenchResult>& runs) {
    json doc;
    doc["edge"] = metric_set_json(edge);
    doc["node"] = metric_set_json(node);
    json per_run = json::array();
    for (const auto& r : runs) {
        json j;
        j["edge_auc"] = r.edge_metrics.auc_roc;
        j["edge_accuracy"] = r.edge_metrics.accuracy;
        j["node_auc"] = r.node_metrics.auc_roc;
        j["final_loss"] = r.trace.final_loss;
        j["diverged"] = r.trace.diverged;
        j["positives_injected"] = r.positives_injected;
        j["positives_in_graph"] = r.positives_in_graph;
        j["seconds"] = r.seconds;
        per_run.push_back(std::move(j));
    }
    doc["runs"] = std::move(per_run);
    out << doc.dump(2) << "\n";
}

void write_sweep_csv(std::ostream& out, const std::vector<bench::SweepRow>& rows) {
    out << "learning_rate,accuracy,auc\n";
    for (const auto& r : rows) {
        out << json(r.learning_rate).dump() << ',' << json(r.accuracy).dump() << ','
            << json(r.auc).dump() << '\n';
    }
}

// --- Entry points -------------------------------------------------------

IngestOutcome run_ingest(const std::vector<std::string>& inputs, const PipelineConfig& cfg,
                         const std::string& out_dir) {
    const auto t0 = Clock::now();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw PipelineError("cannot create output directory " + out_dir + ": " + ec.message());
    }
    IngestOutcome outcome;
    outcome.manifest = start_manifest("ingest", inputs, cfg);

    IngestAgg agg = ingest_all(inputs, cfg.ingest);
    outcome.stats = agg.stats;
    const auto t1 = Clock::now();

    const fs::path base(out_dir);
    {
        auto f = open_out(base / "records.csv");
        ingest::write_normalized_csv(f, agg.records, cfg.ingest);
    }
    outcome.outputs.push_back("records.csv");
    {
        auto f = open_out(base / "quality.json");
        write_quality_json(f, outcome.stats);
    }
    outcome.outputs.push_back("quality.json");
    const auto t2 = Clock::now();

    outcome.manifest.stage_seconds = {{"ingest", seconds_between(t0, t1)},
                                      {"write", seconds_between(t1, t2)}};
    outcome.manifest.outputs = outcome.outputs;
    {
        auto f = open_out(base / "manifest.json");
        write_manifest_json(f, outcome.manifest);
    }
    return outcome;
}

PipelineOutcome run_pipeline(const std::vector<std::string>& inputs, const PipelineConfig& cfg,
                             const std::string& out_dir) {
    const auto t0 = Clock::now();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw PipelineError("cannot create output directory " + out_dir + ": " + ec.message());
    }
    PipelineOutcome outcome;
    outcome.manifest = start_manifest("pipeline", inputs, cfg);
    const fs::path base(out_dir);

    // Ingest (all files, one global dedup), then partition by period: each
    // quarter gets its own graph and its own trained model, so structural
    // change across quarters shows up as differing rankings rather than one
    // blurred average.
    IngestAgg agg = ingest_all(inputs, cfg.ingest);
    outcome.stats = agg.stats;
    const auto t_ingest = Clock::now();

    double write_secs = 0.0;
    {
        const auto w0 = Clock::now();
        auto f = open_out(base / "records.csv");
        ingest::write_normalized_csv(f, agg.records, cfg.ingest);
        write_secs += seconds_between(w0, Clock::now());
    }
    outcome.manifest.outputs.push_back("records.csv");

    std::map<std::string, std::vector<ingest::LedgerRecord>> by_period;
    for (auto& r : agg.records) {
        by_period[r.period].push_back(std::move(r));
    }
    agg.records.clear();

    GraphStatAgg gagg;
    double graph_secs = 0.0;
    double train_secs = 0.0;
    double score_secs = 0.0;

    for (const auto& [period, recs] : by_period) {
        PeriodOutcome po;
        po.period = period;
        const fs::path pdir = base / period;
        fs::create_directories(pdir, ec);
        if (ec) {
            throw PipelineError("cannot create output directory " + pdir.string() + ": " +
                                ec.message());
        }
        auto record_output = [&](const std::string& name) {
            po.outputs.push_back(period + "/" + name);
            outcome.manifest.outputs.push_back(period + "/" + name);
        };

        // Graph stage.
        const auto g0 = Clock::now();
        const graph::PairExtraction extraction = graph::extract_pairs(recs);
        const graph::AccountGraph merged =
            graph::build_graph(extraction, period, cfg.ingest.precision);
        graph::PrunePolicy policy = cfg.prune;
        if (cfg.prune_auto_min_count) {
            std::unordered_set<std::string_view> vouchers;
            for (const auto& r : recs) vouchers.insert(r.voucher_id);
            policy.min_count = graph::default_min_count(vouchers.size());
        }
        const auto [pruned, deltas] = graph::prune_graph(merged, policy);
        const graph::AccountGraph g = graph::normalize_weights(pruned, cfg.scheme);
        gagg.add(extraction, merged, deltas, g);
        po.nodes = g.node_count();
        po.edges = g.edge_count();
        graph_secs += seconds_between(g0, Clock::now());

        if (g.edges.empty()) {
            // Nothing to train on (e.g. every voucher one-sided, or all pairs
            // pruned): emit the graph artifacts so the emptiness is visible.
            const auto w0 = Clock::now();
            {
                auto f = open_out(pdir / "edges.tsv");
                graph::write_edge_list(f, g);
            }
            record_output("edges.tsv");
            {
                auto f = open_out(pdir / "graph.json");
                graph::write_graph_header_json(f, g, features::feature_names());
            }
            record_output("graph.json");
            {
                auto f = open_out(pdir / "graph.dot");
                graph::write_dot(f, g);
            }
            record_output("graph.dot");
            write_secs += seconds_between(w0, Clock::now());
            outcome.periods.push_back(std::move(po));
            continue;
        }

        // Model stage.
        const auto m0 = Clock::now();
        const features::NodeFeatureMatrix x =
            features::compute_node_features(recs, g, cfg.ingest.precision);
        model::ModelConfig mc = cfg.model;
        mc.dims[0] = static_cast<int>(x.values.cols());
        mc.seed = cfg.seed;
        const model::TrainResult trained = model::train(g, x, mc);
        po.final_loss = trained.trace.final_loss;
        train_secs += seconds_between(m0, Clock::now());

        // Scoring stage.
        const auto s0 = Clock::now();
        const scoring::AnomalyReport report =
            scoring::build_report(g, trained.embeddings.z, cfg.node_mode, cfg.top_k,
                                  cfg.localize_nodes, cfg.localize_k);
        score_secs += seconds_between(s0, Clock::now());

        // Artifacts.
        const auto w0 = Clock::now();
        {
            auto f = open_out(pdir / "edges.tsv");
            graph::write_edge_list(f, g);
        }
        record_output("edges.tsv");
        {
            auto f = open_out(pdir / "graph.json");
            graph::write_graph_header_json(f, g, x.names);
        }
        record_output("graph.json");
        {
            graph::DotOptions dot;
            const std::size_t mark = std::min<std::size_t>(10, report.edge_ranking.size());
            for (std::size_t i = 0; i < mark; ++i) {
                const auto& e = report.edge_scores[report.edge_ranking[i]];
                dot.highlighted.insert({e.src, e.dst});
            }
            auto f = open_out(pdir / "graph.dot");
            graph::write_dot(f, g, dot);
        }
        record_output("graph.dot");
        {
            auto f = open_out(pdir / "checkpoint.json");
            model::save_checkpoint(f, trained.params, mc);
        }
        record_output("checkpoint.json");
        {
            auto f = open_out(pdir / "report.json");
            scoring::write_report_json(f, report, g);
        }
        record_output("report.json");
        {
            auto f = open_out(pdir / "ranking.csv");
            scoring::write_ranking_csv(f, report, g);
        }
        record_output("ranking.csv");
        write_secs += seconds_between(w0, Clock::now());

        outcome.periods.push_back(std::move(po));
    }

    gagg.fill(outcome.stats);

    const auto w0 = Clock::now();
    {
        auto f = open_out(base / "quality.json");
        write_quality_json(f, outcome.stats);
    }
    outcome.manifest.outputs.push_back("quality.json");
    write_secs += seconds_between(w0, Clock::now());

    outcome.manifest.stage_seconds = {{"ingest", seconds_between(t0, t_ingest)},
                                      {"graph", graph_secs},
                                      {"train", train_secs},
                                      {"score", score_secs},
                                      {"write", write_secs}};
    {
        auto f = open_out(base / "manifest.json");
        write_manifest_json(f, outcome.manifest);
    }
    return outcome;
}

}  // namespace ledgergraph::pipeline
