#pragma once

#include "tsn/adam.hpp"
#include "tsn/blocks.hpp"
#include "tsn/dataio.hpp"
#include "tsn/tokenizer.hpp"

#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

// Self-supervised pretraining: visible/masked window splitting, primary and
// momentum Transformer encoders, cross-attention regressor, tied-codebook
// codeword prediction, and the combined alignment + prediction loss.

namespace tsn::tmae {

struct TmaeConfig {
    tokenizer::WindowConfig win;   // sigma=8, m=64, C=5, K=192
    std::size_t enc_layers = 8;
    std::size_t heads = 4;
    std::size_t reg_layers = 4;    // decoupled cross-attention regressor
    std::size_t ff_hidden = 128;   // two-layer feed-forward width
    float dropout = 0.2f;
    float mask_ratio = 0.4f;
    float mu = 0.99f;              // EMA smoothing factor
    float alpha = 1.0f;            // alignment loss weight
    float beta = 1.0f;             // prediction loss weight
    float tau = 1.0f;              // Gumbel temperature
    float lr = 0.01f;
    std::size_t batch = 128;
    std::size_t epochs = 20;
};

struct MaskSplit {
    std::vector<std::size_t> v_index;
    std::vector<std::size_t> m_index;
};

// Fixed sinusoidal encoding: PE(pos, 2i) = sin(pos / 10000^(2i/m)),
// PE(pos, 2i+1) = cos(same).
Tensor positional_encoding(std::size_t d, std::size_t m);

// Masked indices are sampled uniformly from valid (non-padding) windows;
// d_m = max(1, round(ratio * n_valid)) and at least one window stays visible.
MaskSplit split_visible_masked(std::size_t d,
                               const std::vector<bool>& window_valid,
                               float ratio, std::mt19937& rng);

struct TmaeModel {
    TmaeConfig cfg;
    ParamSet params;   // tokenizer.*, encoder.*, regressor.*, mask_token
    ParamSet momentum; // encoder.* clone, never updated by gradients

    static TmaeModel init(const TmaeConfig& cfg, std::uint64_t seed);
};

Tensor encode_visible(const TmaeModel& model, const Tensor& z_v_pos,
                      const nn::RunCtx& ctx);
// Dropout disabled, no gradients recorded.
Tensor momentum_encode(const TmaeModel& model, const Tensor& z_m_pos);
Tensor regress_masked(const TmaeModel& model, const Tensor& r_v,
                      const Tensor& e_mask, const nn::RunCtx& ctx);
Tensor predict_codewords(const TmaeModel& model, const Tensor& r_hat);

// theta_m <- mu * theta_m + (1 - mu) * theta_e, elementwise over the shared
// encoder names.
void momentum_update(ParamSet& theta_m, const ParamSet& theta_e, float mu);

struct PretrainLoss {
    Tensor total;
    double l_align = 0.0;
    double l_pred = 0.0;
    double hits1 = 0.0;
    double ndcg10 = 0.0;
};

// Full forward pass + loss for one preprocessed sample.
PretrainLoss sample_loss(const TmaeModel& model,
                         const dataio::ProcessedSample& sample,
                         std::mt19937& rng, bool train);

struct EpochStats {
    double mean_total = 0.0;
    double mean_align = 0.0;
    double mean_pred = 0.0;
    double hits1 = 0.0;
    double ndcg10 = 0.0;
};

// Loss log rows are `epoch,step,L_align,L_pred,total,hits1,ndcg10`.
std::vector<EpochStats> run_pretraining(
    TmaeModel& model, const std::vector<dataio::ProcessedSample>& dataset,
    std::uint64_t seed, std::ostream* loss_log = nullptr);

} // namespace tsn::tmae
