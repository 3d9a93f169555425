#include "ledgergraph/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "ledgergraph/errors.hpp"

namespace ledgergraph::metrics {

std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return idx;
}

double auc_pair_counting(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw MetricError("scores/labels size mismatch");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] ? pos : neg).push_back(scores[i]);
    }
    if (pos.empty() || neg.empty()) {
        throw MetricError("AUC undefined for single-class labels");
    }
    // Direct Mann-Whitney count: concordant pairs score 1, ties 1/2.
    double wins = 0.0;
    for (const double p : pos) {
        for (const double n : neg) {
            if (p > n) wins += 1.0;
            else if (p == n) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw MetricError("scores/labels size mismatch");
    const auto order = rank_order(scores);
    std::size_t total_pos = 0;
    for (const int l : labels) total_pos += l ? 1 : 0;
    if (total_pos == 0 || total_pos == labels.size()) {
        throw MetricError("AUPRC undefined for single-class labels");
    }
    // Step summation: precision collected exactly where recall increments.
    double sum = 0.0;
    std::size_t pos_seen = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (labels[order[i]]) {
            ++pos_seen;
            sum += static_cast<double>(pos_seen) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total_pos);
}

MetricSet compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                          const std::vector<int>& ks) {
    if (scores.size() != labels.size()) throw MetricError("scores/labels size mismatch");
    const std::size_t n = scores.size();
    std::size_t total_pos = 0;
    for (const int l : labels) total_pos += l ? 1 : 0;
    const std::size_t total_neg = n - total_pos;
    if (total_pos == 0 || total_neg == 0) {
        throw MetricError("metrics undefined for single-class labels");
    }

    MetricSet m;
    const auto order = rank_order(scores);

    // Hard predictions via the top-m rule, m = positive count.  At that
    // operating point every false positive displaces exactly one true
    // positive, so precision and recall coincide.
    const std::size_t top_m = total_pos;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < top_m; ++i) tp += labels[order[i]] ? 1 : 0;
    const std::size_t fp = top_m - tp;
    const std::size_t tn = total_neg - fp;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
    m.precision = static_cast<double>(tp) / static_cast<double>(top_m);
    m.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.auc_roc = auc_pair_counting(scores, labels);
    m.auprc = average_precision(scores, labels);

    for (const int k : ks) {
        if (k <= 0) throw MetricError("@k cutoffs must be positive");
        const std::size_t take = std::min<std::size_t>(k, n);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < take; ++i) hits += labels[order[i]] ? 1 : 0;
        // Denominator stays k even when the list is shorter: a request for
        // ten candidates that can only produce six is judged on ten.
        m.precision_at[k] = static_cast<double>(hits) / static_cast<double>(k);
        m.recall_at[k] = static_cast<double>(hits) / static_cast<double>(total_pos);
    }
    return m;
}

}  // namespace ledgergraph::metrics
