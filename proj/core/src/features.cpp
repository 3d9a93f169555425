#include "ledgergraph/features.hpp"

#include <cmath>
#include <unordered_set>

namespace ledgergraph::features {

std::vector<std::string> feature_names() {
    return {"in_degree",     "out_degree",       "debit_credit_ratio", "record_count",
            "distinct_counterparties", "log_amount_mean", "log_amount_std"};
}

NodeFeatureMatrix compute_node_features(const std::vector<ingest::LedgerRecord>& records,
                                        const graph::AccountGraph& g, unsigned precision) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    NodeFeatureMatrix out;
    out.names = feature_names();
    out.values.setZero(n, static_cast<Eigen::Index>(out.names.size()));
    if (n == 0) return out;

    double scale = 1.0;
    for (unsigned i = 0; i < precision; ++i) scale *= 10.0;

    // Record-based accumulators per node.
    struct Acc {
        double debit = 0, credit = 0, log_sum = 0, log_sq_sum = 0;
        std::uint64_t count = 0;
    };
    std::vector<Acc> acc(g.node_count());
    for (const auto& r : records) {
        const auto id = g.node_id(r.account_code);
        if (!id) continue;  // account never appears in a correspondence
        Acc& a = acc[*id];
        (r.side == ingest::Side::debit ? a.debit : a.credit) += 1.0;
        const double la = std::log1p(static_cast<double>(r.amount_minor) / scale);
        a.log_sum += la;
        a.log_sq_sum += la * la;
        ++a.count;
    }

    for (Eigen::Index v = 0; v < n; ++v) {
        const auto& a = acc[v];
        const auto& in = g.in_edges[v];
        const auto& outs = g.out_edges[v];
        std::unordered_set<graph::NodeId> counterparties;
        for (const auto ei : in) counterparties.insert(g.edges[ei].src);
        for (const auto ei : outs) counterparties.insert(g.edges[ei].dst);

        out.values(v, 0) = static_cast<double>(in.size());
        out.values(v, 1) = static_cast<double>(outs.size());
        // Neutral 0.5 when the node has no backing records.
        out.values(v, 2) = a.count ? a.debit / (a.debit + a.credit) : 0.5;
        out.values(v, 3) = static_cast<double>(a.count);
        out.values(v, 4) = static_cast<double>(counterparties.size());
        if (a.count) {
            const double mean = a.log_sum / static_cast<double>(a.count);
            const double var = a.log_sq_sum / static_cast<double>(a.count) - mean * mean;
            out.values(v, 5) = mean;
            out.values(v, 6) = std::sqrt(std::max(var, 0.0));
        }
    }

    // Column standardization with population moments; constant columns
    // carry no information and flatten to zero.
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
        auto col = out.values.col(c);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        if (sd < 1e-12) {
            col.setZero();
        } else {
            col = (col.array() - mean) / sd;
        }
    }
    return out;
}

}  // namespace ledgergraph::features
