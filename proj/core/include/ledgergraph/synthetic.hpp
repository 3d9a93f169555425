#pragma once

// Labeled synthetic ledgers for benchmarking.
//
// A directed stochastic block model over account nodes provides the organic
// structure (dense within communities, sparse across), realized as two-line
// debit/credit vouchers with log-normal amounts.  Three anomaly families can
// be injected on top, each labeled positive at the edge level:
//   cross  — new edges between communities that the SBM did not produce
//   hub    — a quiet node suddenly acquires many cross-community edges
//   perturb— an existing edge's amounts scaled far out of distribution
// Everything is deterministic in the spec seed.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ledgergraph/ingest.hpp"

namespace ledgergraph::synthetic {

struct SyntheticSpec {
    int communities = 4;
    int nodes_per_community = 25;
    double intra_p = 0.15;  // ordered-pair edge probability within a community
    double inter_p = 0.01;  // across communities
    // Voucher synthesis: amounts ~ exp(Normal(amount_mu, amount_sigma)),
    // rounded to cents; one voucher = one debit line + one credit line.
    double amount_mu = 4.0;
    double amount_sigma = 1.0;
    int records_per_edge = 3;          // vouchers backing each organic edge
    int anomaly_records_per_edge = 1;  // vouchers backing each injected edge
    // Anomaly injections.
    int cross_edges = 0;
    int hub_nodes = 0;
    int hub_extra_edges = 8;  // injected edges per hub node
    int perturbed_edges = 0;
    double perturb_factor = 20.0;  // amount multiplier for perturbed edges
    std::uint64_t seed = 1;
    std::string period = "2024Q1";

    int node_count() const { return communities * nodes_per_community; }
    // Throws ConfigError on out-of-range probabilities or infeasible
    // injection counts.
    void validate() const;
};

// Ground truth for one directed account pair.
struct LabeledEdge {
    std::string src;  // account codes, not ids
    std::string dst;
    // positive = injected anomaly; organic edges are implicit negatives
    enum class Kind { cross, hub, perturb } kind = Kind::cross;
};

struct SyntheticData {
    std::vector<ingest::LedgerRecord> records;  // normalized, dedup-clean
    std::vector<LabeledEdge> positives;         // every injected edge, exactly once
    std::uint64_t organic_edges = 0;            // SBM edges realized
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Serializes records as raw ledger CSV (the normalized layout), e.g. to feed
// the full ingest path end to end.
void write_csv(std::ostream& out, const SyntheticData& data, unsigned precision = 2);

}  // namespace ledgergraph::synthetic
