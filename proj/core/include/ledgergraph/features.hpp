#pragma once

// Per-node statistical feature vectors: the model input h_v^(0).
//
// Seven features per account node, computed from the period's records and
// the pruned graph, then column-standardized (population moments) so every
// feature enters training on the same scale.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ledgergraph/graph.hpp"
#include "ledgergraph/ingest.hpp"

namespace ledgergraph::features {

struct NodeFeatureMatrix {
    // node_count x feature_count; row index = NodeId.
    Eigen::MatrixXd values;
    std::vector<std::string> names;
};

// The seven feature columns, in order:
//   in_degree, out_degree        — unique-edge degrees in the pruned graph
//   debit_credit_ratio           — debit records / all records; 0.5 with none
//   record_count                 — ledger lines naming the account
//   distinct_counterparties      — union of in- and out-neighbors
//   log_amount_mean, log_amount_std — moments of log1p(amount) over records
// followed by column standardization to mean 0 / std 1 (population std;
// constant columns become all zeros).
std::vector<std::string> feature_names();

NodeFeatureMatrix compute_node_features(const std::vector<ingest::LedgerRecord>& records,
                                        const graph::AccountGraph& g, unsigned precision = 2);

}  // namespace ledgergraph::features
