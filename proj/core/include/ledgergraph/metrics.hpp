#pragma once

// Ranking-quality metrics for labeled score sets.
//
// Hard predictions use the documented top-m rule: the m highest-scoring
// items are predicted positive, where m = number of true positives (which
// makes precision = recall = f1 at that operating point).  AUC-ROC is
// computed by direct positive/negative pair counting with ties worth 1/2
// (the Mann-Whitney statistic); AUPRC by step-wise precision summation over
// recall increments (average precision, no interpolation).  Ranking ties
// break by ascending input index.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ledgergraph::metrics {

struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc_roc = 0.0;
    double auprc = 0.0;
    std::map<int, double> precision_at;  // k -> value
    std::map<int, double> recall_at;
    std::string threshold_rule = "top-m, m = positive count";
};

// labels are 0/1; scores.size() == labels.size().  Throws MetricError when
// either class is empty (AUC/AUPRC undefined) or inputs are inconsistent.
// ks: the @k cutoffs to report (k > n uses all n items).
MetricSet compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                          const std::vector<int>& ks = {10, 100});

// The ranking permutation the @k metrics use: indices sorted by score
// descending, index ascending.  Exposed so independent checkers can agree
// on tie handling.
std::vector<std::size_t> rank_order(const std::vector<double>& scores);

// Individual routes, exposed for cross-verification.
double auc_pair_counting(const std::vector<double>& scores, const std::vector<int>& labels);
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace ledgergraph::metrics
