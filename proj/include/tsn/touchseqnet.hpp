#pragma once

#include "tsn/adam.hpp"
#include "tsn/blocks.hpp"
#include "tsn/dataio.hpp"
#include "tsn/fingerca.hpp"
#include "tsn/metrics.hpp"
#include "tsn/tacn.hpp"
#include "tsn/tokenizer.hpp"

#include <iosfwd>
#include <optional>
#include <random>

// Siamese assembly: pretrained window projection + Transformer encoder,
// TACN, FingerCA, temporal pooling over valid windows, a pair classification
// head, and the hybrid contrastive + cross-entropy loss. Both branches share
// one parameter set.

namespace tsn::touchseqnet {

enum class Ablation {
    kFull,
    kNoAttention,    // TACN without multi-head attention fusion
    kPretrainedOnly, // pooled encoder features straight into the head
    kNoPretrain,     // full architecture, random initialization
};

struct NetConfig {
    tokenizer::WindowConfig win;
    std::size_t enc_layers = 8;
    std::size_t heads = 4;
    std::size_t ff_hidden = 128;
    float dropout = 0.2f;
    tacn::TacnConfig tacn;
    fingerca::FingerCAConfig ca;
    float margin = 1.0f;
    float lambda1 = 0.5f;
    float lambda2 = 1.0f;
    float lr = 0.01f;
    std::size_t batch = 128;
    std::size_t epochs = 30;
    Ablation ablation = Ablation::kFull;
    // Training pairs are order-swapped with this probability to soften the
    // head's (a, b) asymmetry; evaluation keeps manifest order.
    float swap_prob = 0.5f;
    // Stop once validation accuracy reaches this value (> 1 disables).
    float early_stop_acc = 2.0f;

    std::size_t embed_channels() const {
        return ablation == Ablation::kPretrainedOnly ? win.embed_dim
                                                     : tacn.num_channels.back();
    }
};

struct Model {
    NetConfig cfg;
    ParamSet params;

    // Fresh random initialization (the no-pretrain variant).
    static Model init(const NetConfig& cfg, std::uint64_t seed);
    // Copies window projection + encoder tensors from a TMAE checkpoint;
    // everything else is freshly initialized and all parameters train.
    static Model build_from_pretrained(const ParamSet& checkpoint,
                                       const NetConfig& cfg,
                                       std::uint64_t seed);
};

// One branch: projection -> positional encoding -> encoder -> TACN ->
// FingerCA -> mean pool over valid windows. Output [embed_channels()].
Tensor embed(const Model& model, const dataio::ProcessedSample& sample,
             const nn::RunCtx& ctx);

// Sigmoid head over [z1 || z2]; strictly in (0,1).
Tensor pair_logit(const Tensor& z1, const Tensor& z2, const ParamSet& p);

// y * ||z1-z2||^2 + (1-y) * max(0, margin - ||z1-z2||)^2.
Tensor contrastive_loss(const Tensor& z1, const Tensor& z2, int y,
                        float margin);
// Binary cross-entropy on a probability, clamped at 1e-7.
Tensor ce_loss(const Tensor& y_hat, int y);
Tensor total_loss(const Tensor& l_con, const Tensor& l_ce, float lambda1,
                  float lambda2);

struct EpochMetrics {
    metrics::EvalRecord val;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

// Metric log rows are `epoch,split,accuracy,f1,auc,loss`. Keeps the
// parameters of the best validation-accuracy epoch.
std::vector<EpochMetrics> train(Model& model,
                                const std::vector<dataio::ProcessedSample>& samples,
                                const dataio::PairBatch& train_pairs,
                                const dataio::PairBatch& val_pairs,
                                std::uint64_t seed,
                                std::ostream* metric_log = nullptr);

metrics::EvalRecord evaluate(const Model& model,
                             const std::vector<dataio::ProcessedSample>& samples,
                             const dataio::PairBatch& pairs,
                             double* mean_loss = nullptr);

} // namespace tsn::touchseqnet
