#include "tsn/metrics.hpp"

#include "tsn/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace tsn::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* op) {
    if (a != b || a == 0)
        throw std::invalid_argument(std::string(op) + ": bad lengths " +
                                    std::to_string(a) + " vs " +
                                    std::to_string(b));
}

} // namespace

double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
    check_lengths(preds.size(), labels.size(), "accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / preds.size();
}

double f1(const std::vector<int>& preds, const std::vector<int>& labels) {
    check_lengths(preds.size(), labels.size(), "f1");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1 && labels[i] == 1) ++tp;
        else if (preds[i] == 1 && labels[i] == 0) ++fp;
        else if (preds[i] == 0 && labels[i] == 1) ++fn;
    }
    if (tp == 0) return 0.0; // covers P + R == 0
    const double p = static_cast<double>(tp) / (tp + fp);
    const double r = static_cast<double>(tp) / (tp + fn);
    return 2.0 * p * r / (p + r);
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_lengths(scores.size(), labels.size(), "auc");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("auc: need both classes, got " + std::to_string(n_pos) +
                        " positives and " + std::to_string(n_neg) +
                        " negatives");
    double wins = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalRecord evaluate(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
    check_lengths(scores.size(), labels.size(), "evaluate");
    EvalRecord rec;
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        preds[i] = scores[i] >= 0.5 ? 1 : 0;
        if (preds[i] == 1 && labels[i] == 1) ++rec.tp;
        else if (preds[i] == 1 && labels[i] == 0) ++rec.fp;
        else if (preds[i] == 0 && labels[i] == 0) ++rec.tn;
        else ++rec.fn;
    }
    rec.accuracy = accuracy(preds, labels);
    rec.f1 = f1(preds, labels);
    rec.auc = auc(scores, labels);
    return rec;
}

double hits_at_k(const std::vector<std::size_t>& ranks, std::size_t k) {
    if (k < 1) throw std::invalid_argument("hits_at_k: k must be >= 1");
    if (ranks.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t r : ranks)
        if (r <= k) ++hits;
    return static_cast<double>(hits) / ranks.size();
}

double ndcg_at_10(const std::vector<std::size_t>& ranks) {
    if (ranks.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t r : ranks)
        if (r <= 10) total += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    return total / ranks.size();
}

std::size_t rank_of(const float* row, std::size_t k, std::size_t label) {
    std::size_t rank = 1;
    for (std::size_t j = 0; j < k; ++j)
        if (j != label && row[j] >= row[label]) ++rank;
    return rank;
}

} // namespace tsn::metrics
