#include "ledgergraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "ledgergraph/errors.hpp"
#include "ledgergraph/rng.hpp"

namespace ledgergraph::synthetic {
namespace {

std::uint64_t pair_key(int u, int v) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
}

}  // namespace

void SyntheticSpec::validate() const {
    if (communities < 1 || nodes_per_community < 1) {
        throw ConfigError("synthetic graph needs at least one community and node");
    }
    if (node_count() < 2) throw ConfigError("synthetic graph needs at least two nodes");
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError(std::string(name) + " must lie in [0, 1]");
        }
    };
    prob(intra_p, "intra_p");
    prob(inter_p, "inter_p");
    if (records_per_edge < 1 || anomaly_records_per_edge < 1) {
        throw ConfigError("records per edge must be >= 1");
    }
    if (cross_edges < 0 || hub_nodes < 0 || hub_extra_edges < 0 || perturbed_edges < 0) {
        throw ConfigError("injection counts must be >= 0");
    }
    if (hub_nodes > node_count()) throw ConfigError("more hub nodes than nodes");
    if (communities < 2 && (cross_edges > 0 || hub_nodes > 0)) {
        throw ConfigError("cross-community injections need >= 2 communities");
    }
    if (!(perturb_factor > 0.0)) throw ConfigError("perturb_factor must be positive");
    if (amount_sigma < 0.0) throw ConfigError("amount_sigma must be >= 0");
    if (nodes_per_community > 999) {
        throw ConfigError("code scheme supports at most 999 nodes per community");
    }
    if (!ingest::parse_period(period)) {
        throw ConfigError("period '" + period + "' is not parseable");
    }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int n = spec.node_count();
    const auto community_of = [&](int v) { return v / spec.nodes_per_community; };

    // Account codes encode the community for readability: community c
    // (1-based) owns codes c*1000 .. c*1000+size-1.
    std::vector<std::string> codes(n);
    for (int v = 0; v < n; ++v) {
        codes[v] = std::to_string((community_of(v) + 1) * 1000 + v % spec.nodes_per_community);
    }

    struct GenEdge {
        int src, dst;
        bool perturbed = false;
        int vouchers;
    };

    // Organic structure: one Bernoulli draw per ordered pair.
    std::vector<GenEdge> organic;
    std::unordered_set<std::uint64_t> present;
    std::uint64_t organic_cross = 0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (u == v) continue;
            const bool same = community_of(u) == community_of(v);
            if (rng.bernoulli(same ? spec.intra_p : spec.inter_p)) {
                organic.push_back({u, v, false, spec.records_per_edge});
                present.insert(pair_key(u, v));
                if (!same) ++organic_cross;
            }
        }
    }

    SyntheticData out;
    out.organic_edges = organic.size();
    std::vector<GenEdge> injected;

    // (a) Cross-community edges the SBM did not produce.
    const std::uint64_t total_cross_pairs =
        static_cast<std::uint64_t>(n) * (n - spec.nodes_per_community);
    if (static_cast<std::uint64_t>(spec.cross_edges) > total_cross_pairs - organic_cross) {
        throw ConfigError("cross_edges exceeds the number of absent cross-community pairs");
    }
    for (int i = 0; i < spec.cross_edges; ++i) {
        for (;;) {
            const int u = static_cast<int>(rng.uniform_int(n));
            const int v = static_cast<int>(rng.uniform_int(n));
            if (u == v || community_of(u) == community_of(v)) continue;
            if (!present.insert(pair_key(u, v)).second) continue;
            injected.push_back({u, v, false, spec.anomaly_records_per_edge});
            out.positives.push_back({codes[u], codes[v], LabeledEdge::Kind::cross});
            break;
        }
    }

    // (b) Hub conversions: a node abruptly gains cross-community edges.
    std::unordered_set<int> hubs;
    while (static_cast<int>(hubs.size()) < spec.hub_nodes) {
        hubs.insert(static_cast<int>(rng.uniform_int(n)));
    }
    for (int v = 0; v < n; ++v) {  // iterate ids, not set order: determinism
        if (hubs.count(v) == 0) continue;
        int added = 0;
        std::uint64_t attempts = 0;
        const std::uint64_t attempt_cap = 1000ULL * (spec.hub_extra_edges + 1);
        while (added < spec.hub_extra_edges) {
            if (++attempts > attempt_cap) {
                throw ConfigError("hub injection infeasible: no absent partners left");
            }
            const int other = static_cast<int>(rng.uniform_int(n));
            if (other == v || community_of(other) == community_of(v)) continue;
            const bool outgoing = rng.bernoulli(0.5);
            const int s = outgoing ? v : other;
            const int d = outgoing ? other : v;
            if (!present.insert(pair_key(s, d)).second) continue;
            injected.push_back({s, d, false, spec.anomaly_records_per_edge});
            out.positives.push_back({codes[s], codes[d], LabeledEdge::Kind::hub});
            ++added;
        }
    }

    // (c) Amount perturbations on existing organic edges.
    if (spec.perturbed_edges > static_cast<int>(organic.size())) {
        throw ConfigError("perturbed_edges exceeds the organic edge count");
    }
    std::unordered_set<std::size_t> perturbed_idx;
    while (static_cast<int>(perturbed_idx.size()) < spec.perturbed_edges) {
        perturbed_idx.insert(rng.uniform_int(organic.size()));
    }
    for (std::size_t i = 0; i < organic.size(); ++i) {
        if (perturbed_idx.count(i) == 0) continue;
        organic[i].perturbed = true;
        out.positives.push_back(
            {codes[organic[i].src], codes[organic[i].dst], LabeledEdge::Kind::perturb});
    }

    // Realize every edge as two-line debit/credit vouchers with log-normal
    // amounts, organic first (sampled order), then injections.
    std::uint64_t voucher_seq = 0;
    auto emit = [&](const GenEdge& e) {
        for (int k = 0; k < e.vouchers; ++k) {
            double amount = std::exp(rng.normal() * spec.amount_sigma + spec.amount_mu);
            if (e.perturbed) amount *= spec.perturb_factor;
            std::int64_t minor = std::llround(amount * 100.0);
            minor = std::max<std::int64_t>(minor, 1);

            char vid[16];
            std::snprintf(vid, sizeof vid, "V%08llu",
                          static_cast<unsigned long long>(++voucher_seq));
            ingest::LedgerRecord debit;
            debit.period = spec.period;
            debit.voucher_id = vid;
            debit.line_no = 1;
            debit.account_code = codes[e.src];
            debit.side = ingest::Side::debit;
            debit.amount_minor = minor;
            ingest::LedgerRecord credit = debit;
            credit.line_no = 2;
            credit.account_code = codes[e.dst];
            credit.side = ingest::Side::credit;
            out.records.push_back(std::move(debit));
            out.records.push_back(std::move(credit));
        }
    };
    for (const auto& e : organic) emit(e);
    for (const auto& e : injected) emit(e);
    return out;
}

void write_csv(std::ostream& out, const SyntheticData& data, unsigned precision) {
    ingest::IngestConfig cfg;
    cfg.precision = precision;
    ingest::write_normalized_csv(out, data.records, cfg);
}

}  // namespace ledgergraph::synthetic
