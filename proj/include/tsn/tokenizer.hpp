#pragma once

#include "tsn/adam.hpp"
#include "tsn/tensor.hpp"

#include <random>
#include <vector>

// Window-based convolutional projection into embeddings Z plus a tied
// codebook that discretizes embeddings into tokens. The codebook projection
// is shared with the pretraining prediction head.

namespace tsn::tokenizer {

struct WindowConfig {
    std::size_t sigma = 8;       // window length
    std::size_t embed_dim = 64;  // m
    std::size_t channels = 5;    // C
    std::size_t vocab = 192;     // K
};

struct EmbeddedSequence {
    Tensor z; // [d x m]
    std::vector<bool> window_valid;
};

// Parameter names under `prefix`: win_proj.w [sigma*C x m], win_proj.b [m],
// codebook.w [m x K], codebook.b [K].
void init_params(ParamSet& p, const std::string& prefix,
                 const WindowConfig& cfg, std::mt19937& rng);

// Stride-sigma convolution with kernel length sigma: one embedding per
// window. x must be [T_pad x C] with T_pad a multiple of sigma.
Tensor window_project(const Tensor& x, const WindowConfig& cfg,
                      const ParamSet& p, const std::string& prefix);

// Pre-softmax codebook scores W E + b, shape [d x K].
Tensor codebook_logits(const Tensor& z, const ParamSet& p,
                       const std::string& prefix);

// Rows of softmax(W E + b): probability distributions over the codebook.
Tensor token_logits(const Tensor& z, const ParamSet& p,
                    const std::string& prefix);

// Gumbel-Softmax sample of shape [d x K]. Soft rows sum to 1; with hard=true
// the forward value is one-hot at the perturbed argmax while gradients flow
// through the soft sample (straight-through). noise_scale=0 disables the
// Gumbel perturbation (used by tests).
Tensor gumbel_softmax_sample(const Tensor& logits, float tau, std::mt19937& rng,
                             bool hard, float noise_scale = 1.0f);

// Per-row argmax token ids; ties break to the lowest index.
std::vector<std::size_t> hard_tokens(const Tensor& logits);

} // namespace tsn::tokenizer
