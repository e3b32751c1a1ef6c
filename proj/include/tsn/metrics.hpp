#pragma once

#include <cstddef>
#include <vector>

namespace tsn::metrics {

struct EvalRecord {
    double accuracy = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels);

// Harmonic mean of precision and recall; 0 when P + R == 0.
double f1(const std::vector<int>& preds, const std::vector<int>& labels);

// Mann-Whitney AUC: fraction of (positive, negative) score pairs ordered
// correctly, ties counted 0.5. Throws on single-class input.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Classify scores at threshold 0.5 and fill the full record.
EvalRecord evaluate(const std::vector<double>& scores,
                    const std::vector<int>& labels);

// Ranking metrics over predicted codeword scores, one row per position.
// `ranks` are 1-based ranks of the true token within its row.
double hits_at_k(const std::vector<std::size_t>& ranks, std::size_t k);
double ndcg_at_10(const std::vector<std::size_t>& ranks);

// 1-based rank of label within a score row, counting ties pessimistically
// (equal scores ahead of the label rank before it).
std::size_t rank_of(const float* row, std::size_t k, std::size_t label);

} // namespace tsn::metrics
