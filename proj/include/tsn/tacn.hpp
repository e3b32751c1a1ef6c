#pragma once

#include "tsn/adam.hpp"
#include "tsn/blocks.hpp"
#include "tsn/tensor.hpp"

#include <random>
#include <vector>

// Temporal-Attentive Convolutional Network: stacked dilated-causal residual
// blocks (dilation 2^l) followed by multi-head self-attention fusion.

namespace tsn::tacn {

struct TacnConfig {
    std::size_t num_inputs = 64;
    std::vector<std::size_t> num_channels = {64, 128};
    std::size_t kernel = 5; // candidate set {4, 5, 7}
    float dropout = 0.2f;
    std::size_t heads = 4;
    bool attention = true; // off for the no-attention ablation
};

// Per-block names under `prefix.blockN`: conv1.v/g/b, conv2.v/g/b and an
// optional 1x1 `skip.w` when channel counts differ. Attention params live
// under `prefix.fusion`.
void init_params(ParamSet& p, const std::string& prefix, const TacnConfig& cfg,
                 std::mt19937& rng);

// Two weight-normalized dilated-causal conv layers with ReLU + dropout,
// then the residual addition (1x1 projection when channels change). No
// activation after the addition. x is [C_in x L].
Tensor residual_block(const Tensor& x, const ParamSet& p,
                      const std::string& prefix, std::size_t dilation,
                      const nn::RunCtx& ctx);

// x is [L x num_inputs]; output [L x num_channels.back()]. Runs the causal
// blocks and, when enabled, bidirectional attention fusion (residual-added).
Tensor forward(const Tensor& x, const ParamSet& p, const std::string& prefix,
               const TacnConfig& cfg, const nn::RunCtx& ctx);

// Self-attention over the TCN output, residual-added to its input.
Tensor mha_fusion(const Tensor& h, const ParamSet& p, const std::string& prefix,
                  std::size_t heads,
                  std::vector<Tensor>* attn_out = nullptr);

} // namespace tsn::tacn
