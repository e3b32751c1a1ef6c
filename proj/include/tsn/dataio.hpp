#pragma once

#include "tsn/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace tsn::dataio {

// One touch trajectory. Rows are (t_ms, x, y, pressure, area); timestamps
// are nondecreasing within a sample.
struct GestureSample {
    std::string user_id;
    std::string sample_id;
    struct Row {
        float t, x, y, p, a;
    };
    std::vector<Row> rows;
};

constexpr std::size_t kChannels = 5;

// Differenced, normalized, zero-padded features plus window validity flags.
struct ProcessedSample {
    Tensor features; // [T_pad x 5], rows (t', x', y', p', a')
    std::size_t raw_len = 0;
    std::size_t pad_len = 0;
    std::vector<bool> window_valid; // one flag per window of size sigma
    std::string user_id;
    std::string sample_id;
};

struct Pair {
    std::size_t a = 0; // indices into the sample list the pairs were built from
    std::size_t b = 0;
    int label = 0; // 1 iff same user
};

using PairBatch = std::vector<Pair>;

// CSV with header `user_id,sample_id,t,x,y,p,a`; rows grouped by
// (user_id, sample_id) in file order.
std::vector<GestureSample> load_gesture_csv(const std::string& path);
std::vector<GestureSample> load_gesture_csv(std::istream& in,
                                            const std::string& origin);
void write_gesture_csv(const std::string& path,
                       const std::vector<GestureSample>& samples);

// t' = t_i - t_{i-1} (first entry 0), same for x and y.
void first_order_difference(const GestureSample& in,
                            std::vector<float>& t_out, std::vector<float>& x_out,
                            std::vector<float>& y_out);

// In-sample z-score with population std; constant input maps to zeros.
std::vector<float> zscore_normalize(const std::vector<float>& values);

// Zero-pad a [T x 5] feature tensor to a multiple of sigma; a window is
// invalid iff more than half its positions are padding.
ProcessedSample pad_and_window_mask(const Tensor& features, std::size_t sigma);

// Full pipeline: difference (t, x, y), z-score (p, a), pad + window flags.
ProcessedSample preprocess(const GestureSample& sample, std::size_t sigma);

// Balanced positive/negative pairs, no self-pairing, deterministic per seed.
PairBatch make_pairs(const std::vector<GestureSample>& samples,
                     std::uint64_t rng_seed, std::size_t n_pairs);
PairBatch make_pairs_processed(const std::vector<ProcessedSample>& samples,
                               std::uint64_t rng_seed, std::size_t n_pairs);

// JSON-lines manifest: {"a": "<user>/<sample>", "b": ..., "y": 0|1}.
void write_pair_manifest(const std::string& path, const PairBatch& pairs,
                         const std::vector<GestureSample>& samples);

} // namespace tsn::dataio
