#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ledgergraph/errors.hpp"
#include "ledgergraph/pipeline.hpp"

// PipelineConfig <-> JSON.  Every key is optional (defaults apply), unknown
// keys are rejected so a typo like "learning_rte" cannot silently fall back
// to a default, and serialization always writes the fully resolved tree.

namespace ledgergraph::pipeline {
namespace {

using json = nlohmann::ordered_json;

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const auto a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& into) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
}

void read_enum_str(const json& obj, const char* key, auto parse, auto& into) {
    if (!obj.contains(key)) return;
    const auto name = obj.at(key).get<std::string>();
    const auto parsed = parse(name);
    if (!parsed) throw ConfigError(std::string("unknown value '") + name + "' for " + key);
    into = *parsed;
}

json columns_to_json(const ingest::ColumnMap& c) {
    json j;
    j["period"] = c.period;
    j["voucher"] = c.voucher;
    j["line"] = c.line;
    j["account"] = c.account;
    j["debit"] = c.debit;
    j["credit"] = c.credit;
    j["amount"] = c.amount;
    j["side"] = c.side;
    j["date"] = c.date;
    return j;
}

}  // namespace

PipelineConfig default_config() {
    PipelineConfig cfg;
    cfg.ingest.columns = ingest::normalized_columns();
    cfg.model.dims = {0, 64, 32};  // dims[0] resolved from the feature count
    cfg.model.layers = 2;
    cfg.bench.cross_edges = 22;  // ~5% of the fixture's expected organic edges
    return cfg;
}

PipelineConfig config_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    expect_keys(doc, "config", {"seed", "ingest", "graph", "model", "scoring", "bench", "sweep"});

    PipelineConfig cfg = default_config();
    read(doc, "seed", cfg.seed);

    if (doc.contains("ingest")) {
        const json& ji = doc.at("ingest");
        expect_keys(ji, "ingest",
                    {"delimiter", "precision", "code_pattern", "code_pad_width", "date_formats",
                     "columns"});
        std::string delim(1, cfg.ingest.delimiter);
        read(ji, "delimiter", delim);
        if (delim.size() != 1) throw ConfigError("delimiter must be a single character");
        cfg.ingest.delimiter = delim[0];
        read(ji, "precision", cfg.ingest.precision);
        if (cfg.ingest.precision > 9) throw ConfigError("precision must be <= 9");
        read(ji, "code_pattern", cfg.ingest.code_pattern);
        read(ji, "code_pad_width", cfg.ingest.code_pad_width);
        read(ji, "date_formats", cfg.ingest.date_formats);
        if (ji.contains("columns")) {
            const json& jc = ji.at("columns");
            expect_keys(jc, "ingest.columns",
                        {"period", "voucher", "line", "account", "debit", "credit", "amount",
                         "side", "date"});
            auto& c = cfg.ingest.columns;
            // A explicit mapping replaces the default wholesale: mixing two
            // layouts' leftovers would be incoherent.
            c = ingest::ColumnMap{};
            read(jc, "period", c.period);
            read(jc, "voucher", c.voucher);
            read(jc, "line", c.line);
            read(jc, "account", c.account);
            read(jc, "debit", c.debit);
            read(jc, "credit", c.credit);
            read(jc, "amount", c.amount);
            read(jc, "side", c.side);
            read(jc, "date", c.date);
        }
    }

    if (doc.contains("graph")) {
        const json& jg = doc.at("graph");
        expect_keys(jg, "graph", {"min_edge_count", "winsor_quantile", "weight_scheme"});
        if (jg.contains("min_edge_count")) {
            const json& v = jg.at("min_edge_count");
            if (v.is_string() && v.get<std::string>() == "auto") {
                cfg.prune_auto_min_count = true;
            } else if (v.is_number_unsigned() || v.is_number_integer()) {
                cfg.prune_auto_min_count = false;
                cfg.prune.min_count = v.get<std::uint64_t>();
            } else {
                throw ConfigError("min_edge_count must be \"auto\" or a non-negative integer");
            }
        }
        read(jg, "winsor_quantile", cfg.prune.winsor_quantile);
        if (!(cfg.prune.winsor_quantile > 0.0 && cfg.prune.winsor_quantile <= 1.0)) {
            throw ConfigError("winsor_quantile must lie in (0, 1]");
        }
        read_enum_str(jg, "weight_scheme", graph::parse_scheme, cfg.scheme);
    }

    if (doc.contains("model")) {
        const json& jm = doc.at("model");
        expect_keys(jm, "model",
                    {"hidden_dims", "activation", "learning_rate", "epochs", "negative_ratio",
                     "neighbor_policy"});
        std::vector<int> hidden = {cfg.model.dims.begin() + 1, cfg.model.dims.end()};
        read(jm, "hidden_dims", hidden);
        if (hidden.empty()) throw ConfigError("hidden_dims must not be empty");
        cfg.model.dims.assign(1, 0);
        cfg.model.dims.insert(cfg.model.dims.end(), hidden.begin(), hidden.end());
        cfg.model.layers = static_cast<int>(hidden.size());
        read_enum_str(jm, "activation", model::parse_activation, cfg.model.activation);
        read(jm, "learning_rate", cfg.model.learning_rate);
        read(jm, "epochs", cfg.model.epochs);
        read(jm, "negative_ratio", cfg.model.negative_ratio);
        read_enum_str(jm, "neighbor_policy", model::parse_policy, cfg.model.neighbor_policy);
    }

    if (doc.contains("scoring")) {
        const json& js = doc.at("scoring");
        expect_keys(js, "scoring",
                    {"node_mode", "top_k", "localize_nodes", "localize_k", "metric_ks"});
        read_enum_str(js, "node_mode", scoring::parse_mode, cfg.node_mode);
        read(js, "top_k", cfg.top_k);
        read(js, "localize_nodes", cfg.localize_nodes);
        read(js, "localize_k", cfg.localize_k);
        read(js, "metric_ks", cfg.metric_ks);
    }

    if (doc.contains("bench")) {
        const json& jb = doc.at("bench");
        expect_keys(jb, "bench",
                    {"communities", "nodes_per_community", "intra_p", "inter_p", "amount_mu",
                     "amount_sigma", "records_per_edge", "anomaly_records_per_edge",
                     "cross_edges", "hub_nodes", "hub_extra_edges", "perturbed_edges",
                     "perturb_factor", "period", "seeds"});
        auto& b = cfg.bench;
        read(jb, "communities", b.communities);
        read(jb, "nodes_per_community", b.nodes_per_community);
        read(jb, "intra_p", b.intra_p);
        read(jb, "inter_p", b.inter_p);
        read(jb, "amount_mu", b.amount_mu);
        read(jb, "amount_sigma", b.amount_sigma);
        read(jb, "records_per_edge", b.records_per_edge);
        read(jb, "anomaly_records_per_edge", b.anomaly_records_per_edge);
        read(jb, "cross_edges", b.cross_edges);
        read(jb, "hub_nodes", b.hub_nodes);
        read(jb, "hub_extra_edges", b.hub_extra_edges);
        read(jb, "perturbed_edges", b.perturbed_edges);
        read(jb, "perturb_factor", b.perturb_factor);
        read(jb, "period", b.period);
        read(jb, "seeds", cfg.bench_seeds);
        if (cfg.bench_seeds < 1) throw ConfigError("bench seeds must be >= 1");
    }

    if (doc.contains("sweep")) {
        const json& js = doc.at("sweep");
        expect_keys(js, "sweep", {"grid"});
        read(js, "grid", cfg.sweep_grid);
        if (cfg.sweep_grid.empty()) throw ConfigError("sweep grid must not be empty");
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_to_json_text(const PipelineConfig& cfg) {
    json doc;
    doc["seed"] = cfg.seed;

    json ji;
    ji["delimiter"] = std::string(1, cfg.ingest.delimiter);
    ji["precision"] = cfg.ingest.precision;
    ji["code_pattern"] = cfg.ingest.code_pattern;
    ji["code_pad_width"] = cfg.ingest.code_pad_width;
    ji["date_formats"] = cfg.ingest.date_formats;
    ji["columns"] = columns_to_json(cfg.ingest.columns);
    doc["ingest"] = std::move(ji);

    json jg;
    if (cfg.prune_auto_min_count) {
        jg["min_edge_count"] = "auto";
    } else {
        jg["min_edge_count"] = cfg.prune.min_count;
    }
    jg["winsor_quantile"] = cfg.prune.winsor_quantile;
    jg["weight_scheme"] = std::string(graph::scheme_name(cfg.scheme));
    doc["graph"] = std::move(jg);

    json jm;
    jm["hidden_dims"] = std::vector<int>{cfg.model.dims.begin() + 1, cfg.model.dims.end()};
    jm["activation"] = std::string(model::activation_name(cfg.model.activation));
    jm["learning_rate"] = cfg.model.learning_rate;
    jm["epochs"] = cfg.model.epochs;
    jm["negative_ratio"] = cfg.model.negative_ratio;
    jm["neighbor_policy"] = std::string(model::policy_name(cfg.model.neighbor_policy));
    doc["model"] = std::move(jm);

    json js;
    js["node_mode"] = std::string(scoring::mode_name(cfg.node_mode));
    js["top_k"] = cfg.top_k;
    js["localize_nodes"] = cfg.localize_nodes;
    js["localize_k"] = cfg.localize_k;
    js["metric_ks"] = cfg.metric_ks;
    doc["scoring"] = std::move(js);

    json jb;
    jb["communities"] = cfg.bench.communities;
    jb["nodes_per_community"] = cfg.bench.nodes_per_community;
    jb["intra_p"] = cfg.bench.intra_p;
    jb["inter_p"] = cfg.bench.inter_p;
    jb["amount_mu"] = cfg.bench.amount_mu;
    jb["amount_sigma"] = cfg.bench.amount_sigma;
    jb["records_per_edge"] = cfg.bench.records_per_edge;
    jb["anomaly_records_per_edge"] = cfg.bench.anomaly_records_per_edge;
    jb["cross_edges"] = cfg.bench.cross_edges;
    jb["hub_nodes"] = cfg.bench.hub_nodes;
    jb["hub_extra_edges"] = cfg.bench.hub_extra_edges;
    jb["perturbed_edges"] = cfg.bench.perturbed_edges;
    jb["perturb_factor"] = cfg.bench.perturb_factor;
    jb["period"] = cfg.bench.period;
    jb["seeds"] = cfg.bench_seeds;
    doc["bench"] = std::move(jb);

    json jw;
    jw["grid"] = cfg.sweep_grid;
    doc["sweep"] = std::move(jw);

    return doc.dump(2) + "\n";
}

bench::BenchConfig make_bench_config(const PipelineConfig& cfg) {
    bench::BenchConfig bc;
    bc.spec = cfg.bench;
    bc.spec.seed = cfg.seed;
    bc.model = cfg.model;
    // Injected edges are deliberately rare; a raw_count floor above 1 would
    // silently erase the very signal the benchmark measures.
    bc.prune.min_count = 1;
    bc.prune.winsor_quantile = cfg.prune.winsor_quantile;
    bc.scheme = cfg.scheme;
    bc.node_mode = cfg.node_mode;
    bc.ks = cfg.metric_ks;
    return bc;
}

}  // namespace ledgergraph::pipeline
