#include "tsn/tacn.hpp"

#include "tsn/errors.hpp"
#include "tsn/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace tsn::tacn {

using namespace tsn::ops;

namespace {

void init_conv(ParamSet& p, const std::string& prefix, std::size_t cout,
               std::size_t cin, std::size_t k, std::mt19937& rng) {
    const float bound = std::sqrt(6.0f / static_cast<float>(cin * k + cout * k));
    p.add(prefix + ".v", Tensor::uniform({cout, cin, k}, bound, rng, true));
    p.add(prefix + ".g", Tensor::full({cout}, 1.0f, true));
    p.add(prefix + ".b", Tensor::zeros({cout}, true));
}

// Weight-normalized dilated causal conv + bias, as a [C_out x L] map.
Tensor conv_layer(const Tensor& x, const ParamSet& p, const std::string& prefix,
                  std::size_t dilation) {
    Tensor w = weight_norm(p.at(prefix + ".v"), p.at(prefix + ".g"));
    Tensor y = dilated_causal_conv1d(x, w, dilation);
    // bias broadcast over time: y is [C_out x L]
    Tensor yt = transpose(y);
    return transpose(add_rowvec(yt, p.at(prefix + ".b")));
}

} // namespace

void init_params(ParamSet& p, const std::string& prefix, const TacnConfig& cfg,
                 std::mt19937& rng) {
    std::size_t cin = cfg.num_inputs;
    for (std::size_t l = 0; l < cfg.num_channels.size(); ++l) {
        const std::size_t cout = cfg.num_channels[l];
        const std::string bp = prefix + ".block" + std::to_string(l);
        init_conv(p, bp + ".conv1", cout, cin, cfg.kernel, rng);
        init_conv(p, bp + ".conv2", cout, cout, cfg.kernel, rng);
        if (cin != cout) {
            const float bound = std::sqrt(6.0f / static_cast<float>(cin + cout));
            p.add(bp + ".skip.w", Tensor::uniform({cout, cin, 1}, bound, rng, true));
        }
        cin = cout;
    }
    if (cfg.attention)
        nn::init_mha(p, prefix + ".fusion", cfg.num_channels.back(), cfg.heads,
                     rng);
}

Tensor residual_block(const Tensor& x, const ParamSet& p,
                      const std::string& prefix, std::size_t dilation,
                      const nn::RunCtx& ctx) {
    Tensor h = relu(conv_layer(x, p, prefix + ".conv1", dilation));
    h = ctx.maybe_dropout(h);
    h = relu(conv_layer(h, p, prefix + ".conv2", dilation));
    h = ctx.maybe_dropout(h);
    Tensor skip = p.contains(prefix + ".skip.w")
                      ? dilated_causal_conv1d(x, p.at(prefix + ".skip.w"), 1)
                      : x;
    return add(h, skip);
}

Tensor mha_fusion(const Tensor& h, const ParamSet& p, const std::string& prefix,
                  std::size_t heads, std::vector<Tensor>* attn_out) {
    if (h.dim(1) % heads != 0)
        throw ConfigError("mha_fusion: channels " + std::to_string(h.dim(1)) +
                          " not divisible by " + std::to_string(heads) +
                          " heads");
    return add(h, nn::mha(h, h, p, prefix, heads, attn_out));
}

Tensor forward(const Tensor& x, const ParamSet& p, const std::string& prefix,
               const TacnConfig& cfg, const nn::RunCtx& ctx) {
    if (x.rank() != 2 || x.dim(1) != cfg.num_inputs)
        throw std::invalid_argument("tacn::forward: expected [L x " +
                                    std::to_string(cfg.num_inputs) + "], got " +
                                    shape_str(x.shape()));
    Tensor h = transpose(x); // [C x L] for the convolutional stage
    std::size_t dilation = 1;
    for (std::size_t l = 0; l < cfg.num_channels.size(); ++l) {
        h = residual_block(h, p, prefix + ".block" + std::to_string(l), dilation,
                           ctx);
        dilation *= 2; // d = 2^l
    }
    Tensor out = transpose(h); // back to [L x C]
    if (cfg.attention)
        out = mha_fusion(out, p, prefix + ".fusion", cfg.heads);
    return out;
}

} // namespace tsn::tacn
