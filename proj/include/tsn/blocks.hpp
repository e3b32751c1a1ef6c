#pragma once

#include "tsn/adam.hpp"
#include "tsn/ops.hpp"
#include "tsn/tensor.hpp"

#include <random>
#include <string>
#include <vector>

// Shared attention building blocks: multi-head attention, pre-norm
// Transformer encoder stacks, and the cross-attention stack used by the
// pretraining regressor.

namespace tsn::nn {

struct RunCtx {
    bool train = false;
    float dropout = 0.0f;
    std::mt19937* rng = nullptr;

    Tensor maybe_dropout(const Tensor& x) const {
        if (!train || dropout <= 0.0f) return x;
        return ops::dropout(x, dropout, *rng);
    }
};

// Xavier-uniform initialized linear weight.
Tensor xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937& rng);

void init_mha(ParamSet& p, const std::string& prefix, std::size_t m,
              std::size_t heads, std::mt19937& rng);

// q_in[Lq x m] attends over kv_in[Lk x m]. Optionally returns per-head
// attention matrices (rows sum to 1).
Tensor mha(const Tensor& q_in, const Tensor& kv_in, const ParamSet& p,
           const std::string& prefix, std::size_t heads,
           std::vector<Tensor>* attn_out = nullptr);

void init_encoder(ParamSet& p, const std::string& prefix, std::size_t layers,
                  std::size_t m, std::size_t heads, std::size_t ff_hidden,
                  std::mt19937& rng);

// Pre-norm self-attention stack with a final layer norm.
Tensor encoder_stack(const Tensor& x, const ParamSet& p,
                     const std::string& prefix, std::size_t layers,
                     std::size_t heads, const RunCtx& ctx);

void init_cross_stack(ParamSet& p, const std::string& prefix,
                      std::size_t layers, std::size_t m, std::size_t heads,
                      std::size_t ff_hidden, std::mt19937& rng);

// Pre-norm cross-attention stack: queries refine themselves against a fixed
// context (keys/values) layer by layer.
Tensor cross_stack(const Tensor& queries, const Tensor& context,
                   const ParamSet& p, const std::string& prefix,
                   std::size_t layers, std::size_t heads, const RunCtx& ctx);

} // namespace tsn::nn
