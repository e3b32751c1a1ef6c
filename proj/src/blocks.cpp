#include "tsn/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace tsn::nn {

using namespace tsn::ops;

Tensor xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    return Tensor::uniform({fan_in, fan_out}, bound, rng, true);
}

void init_mha(ParamSet& p, const std::string& prefix, std::size_t m,
              std::size_t heads, std::mt19937& rng) {
    if (m % heads != 0)
        throw std::invalid_argument("init_mha: embed dim " + std::to_string(m) +
                                    " not divisible by " + std::to_string(heads) +
                                    " heads");
    const std::size_t dh = m / heads;
    for (std::size_t h = 0; h < heads; ++h) {
        const std::string hp = prefix + ".h" + std::to_string(h);
        p.add(hp + ".wq", xavier(m, dh, rng));
        p.add(hp + ".wk", xavier(m, dh, rng));
        p.add(hp + ".wv", xavier(m, dh, rng));
    }
    p.add(prefix + ".wo", xavier(m, m, rng));
    p.add(prefix + ".bo", Tensor::zeros({m}, true));
}

Tensor mha(const Tensor& q_in, const Tensor& kv_in, const ParamSet& p,
           const std::string& prefix, std::size_t heads,
           std::vector<Tensor>* attn_out) {
    const std::size_t m = q_in.dim(1);
    const std::size_t dh = m / heads;
    const float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));
    Tensor cat;
    for (std::size_t h = 0; h < heads; ++h) {
        const std::string hp = prefix + ".h" + std::to_string(h);
        Tensor q = matmul(q_in, p.at(hp + ".wq"));
        Tensor k = matmul(kv_in, p.at(hp + ".wk"));
        Tensor v = matmul(kv_in, p.at(hp + ".wv"));
        Tensor logits = scale(matmul(q, transpose(k)), inv_sqrt_dh);
        Tensor attn = softmax(logits, -1);
        if (attn_out != nullptr) attn_out->push_back(attn);
        Tensor head = matmul(attn, v);
        cat = h == 0 ? head : concat(cat, head, 1);
    }
    return add_rowvec(matmul(cat, p.at(prefix + ".wo")), p.at(prefix + ".bo"));
}

namespace {

void init_ffn(ParamSet& p, const std::string& prefix, std::size_t m,
              std::size_t hidden, std::mt19937& rng) {
    p.add(prefix + ".w1", xavier(m, hidden, rng));
    p.add(prefix + ".b1", Tensor::zeros({hidden}, true));
    p.add(prefix + ".w2", xavier(hidden, m, rng));
    p.add(prefix + ".b2", Tensor::zeros({m}, true));
}

Tensor ffn(const Tensor& x, const ParamSet& p, const std::string& prefix,
           const RunCtx& ctx) {
    Tensor h = relu(add_rowvec(matmul(x, p.at(prefix + ".w1")),
                               p.at(prefix + ".b1")));
    h = ctx.maybe_dropout(h);
    return add_rowvec(matmul(h, p.at(prefix + ".w2")), p.at(prefix + ".b2"));
}

void init_ln(ParamSet& p, const std::string& prefix, std::size_t m) {
    p.add(prefix + ".gamma", Tensor::full({m}, 1.0f, true));
    p.add(prefix + ".beta", Tensor::zeros({m}, true));
}

Tensor ln(const Tensor& x, const ParamSet& p, const std::string& prefix) {
    return layer_norm(x, p.at(prefix + ".gamma"), p.at(prefix + ".beta"));
}

} // namespace

void init_encoder(ParamSet& p, const std::string& prefix, std::size_t layers,
                  std::size_t m, std::size_t heads, std::size_t ff_hidden,
                  std::mt19937& rng) {
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string lp = prefix + ".l" + std::to_string(l);
        init_ln(p, lp + ".ln1", m);
        init_mha(p, lp + ".attn", m, heads, rng);
        init_ln(p, lp + ".ln2", m);
        init_ffn(p, lp + ".ffn", m, ff_hidden, rng);
    }
    init_ln(p, prefix + ".ln_final", m);
}

Tensor encoder_stack(const Tensor& x, const ParamSet& p,
                     const std::string& prefix, std::size_t layers,
                     std::size_t heads, const RunCtx& ctx) {
    Tensor h = x;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string lp = prefix + ".l" + std::to_string(l);
        Tensor normed = ln(h, p, lp + ".ln1");
        Tensor a = mha(normed, normed, p, lp + ".attn", heads);
        h = add(h, ctx.maybe_dropout(a));
        Tensor f = ffn(ln(h, p, lp + ".ln2"), p, lp + ".ffn", ctx);
        h = add(h, ctx.maybe_dropout(f));
    }
    return ln(h, p, prefix + ".ln_final");
}

void init_cross_stack(ParamSet& p, const std::string& prefix,
                      std::size_t layers, std::size_t m, std::size_t heads,
                      std::size_t ff_hidden, std::mt19937& rng) {
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string lp = prefix + ".l" + std::to_string(l);
        init_ln(p, lp + ".ln1", m);
        init_mha(p, lp + ".xattn", m, heads, rng);
        init_ln(p, lp + ".ln2", m);
        init_ffn(p, lp + ".ffn", m, ff_hidden, rng);
    }
    init_ln(p, prefix + ".ln_final", m);
}

Tensor cross_stack(const Tensor& queries, const Tensor& context,
                   const ParamSet& p, const std::string& prefix,
                   std::size_t layers, std::size_t heads, const RunCtx& ctx) {
    if (context.dim(0) == 0)
        throw std::logic_error("cross_stack: empty context");
    Tensor h = queries;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string lp = prefix + ".l" + std::to_string(l);
        Tensor a = mha(ln(h, p, lp + ".ln1"), context, p, lp + ".xattn", heads);
        h = add(h, ctx.maybe_dropout(a));
        Tensor f = ffn(ln(h, p, lp + ".ln2"), p, lp + ".ffn", ctx);
        h = add(h, ctx.maybe_dropout(f));
    }
    return ln(h, p, prefix + ".ln_final");
}

} // namespace tsn::nn
