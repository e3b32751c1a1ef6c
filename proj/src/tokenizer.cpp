#include "tsn/tokenizer.hpp"

#include "tsn/blocks.hpp"
#include "tsn/errors.hpp"
#include "tsn/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace tsn::tokenizer {

using namespace tsn::ops;

void init_params(ParamSet& p, const std::string& prefix,
                 const WindowConfig& cfg, std::mt19937& rng) {
    p.add(prefix + ".win_proj.w",
          nn::xavier(cfg.sigma * cfg.channels, cfg.embed_dim, rng));
    p.add(prefix + ".win_proj.b", Tensor::zeros({cfg.embed_dim}, true));
    p.add(prefix + ".codebook.w", nn::xavier(cfg.embed_dim, cfg.vocab, rng));
    p.add(prefix + ".codebook.b", Tensor::zeros({cfg.vocab}, true));
}

Tensor window_project(const Tensor& x, const WindowConfig& cfg,
                      const ParamSet& p, const std::string& prefix) {
    if (x.rank() != 2 || x.dim(1) != cfg.channels)
        throw std::invalid_argument("window_project: need [T_pad x " +
                                    std::to_string(cfg.channels) + "], got " +
                                    shape_str(x.shape()));
    if (x.dim(0) % cfg.sigma != 0)
        throw std::logic_error("window_project: length " +
                               std::to_string(x.dim(0)) +
                               " is not a multiple of sigma " +
                               std::to_string(cfg.sigma));
    const std::size_t d = x.dim(0) / cfg.sigma;
    // Non-overlapping kernel-length-sigma stride-sigma conv == row-blocked
    // matmul on the flattened windows.
    Tensor windows = reshape(x, {d, cfg.sigma * cfg.channels});
    return add_rowvec(matmul(windows, p.at(prefix + ".win_proj.w")),
                      p.at(prefix + ".win_proj.b"));
}

Tensor codebook_logits(const Tensor& z, const ParamSet& p,
                       const std::string& prefix) {
    return add_rowvec(matmul(z, p.at(prefix + ".codebook.w")),
                      p.at(prefix + ".codebook.b"));
}

Tensor token_logits(const Tensor& z, const ParamSet& p,
                    const std::string& prefix) {
    return softmax(codebook_logits(z, p, prefix), -1);
}

Tensor gumbel_softmax_sample(const Tensor& logits, float tau, std::mt19937& rng,
                             bool hard, float noise_scale) {
    if (tau <= 0.0f)
        throw std::invalid_argument("gumbel_softmax_sample: tau must be > 0");
    if (logits.rank() != 2)
        throw std::invalid_argument("gumbel_softmax_sample: need [d x K]");
    const std::size_t rows = logits.dim(0), k = logits.dim(1);

    std::vector<float> perturbed(logits.size());
    std::uniform_real_distribution<float> unit(1e-10f, 1.0f);
    for (std::size_t i = 0; i < perturbed.size(); ++i) {
        const float g = -std::log(-std::log(unit(rng)));
        perturbed[i] = (logits.data()[i] + noise_scale * g) / tau;
    }
    // Soft path: gradients flow into the original logits scaled by 1/tau.
    Tensor soft = softmax(
        make_op(logits.shape(), std::move(perturbed), {logits},
                [tau](TensorNode& n) {
                    auto& p = *n.parents[0];
                    p.ensure_grad();
                    const float inv_tau = 1.0f / tau;
                    for (std::size_t i = 0; i < n.grad.size(); ++i)
                        p.grad[i] += n.grad[i] * inv_tau;
                }),
        -1);
    if (!hard) return soft;

    // Straight-through: forward value is one-hot, backward is the identity
    // onto the soft sample.
    std::vector<float> onehot(soft.size(), 0.0f);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (soft.data()[r * k + j] > soft.data()[r * k + best]) best = j;
        onehot[r * k + best] = 1.0f;
    }
    return make_op(logits.shape(), std::move(onehot), {soft}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i];
    });
}

std::vector<std::size_t> hard_tokens(const Tensor& logits) {
    if (logits.rank() != 2)
        throw std::invalid_argument("hard_tokens: need [d x K]");
    const std::size_t rows = logits.dim(0), k = logits.dim(1);
    std::vector<std::size_t> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (logits.data()[r * k + j] > logits.data()[r * k + best]) best = j;
        out[r] = best;
    }
    return out;
}

} // namespace tsn::tokenizer
