#include "tsn/fingerca.hpp"

#include "tsn/blocks.hpp"
#include "tsn/ops.hpp"

#include <stdexcept>

namespace tsn::fingerca {

using namespace tsn::ops;

void init_params(ParamSet& p, const std::string& prefix,
                 const FingerCAConfig& cfg, std::mt19937& rng) {
    const std::size_t hidden = std::max<std::size_t>(1, cfg.channels / cfg.reduction);
    p.add(prefix + ".w1", nn::xavier(cfg.channels, hidden, rng));
    p.add(prefix + ".b1", Tensor::zeros({hidden}, true));
    p.add(prefix + ".w2", nn::xavier(hidden, cfg.channels, rng));
    p.add(prefix + ".b2", Tensor::zeros({cfg.channels}, true));
}

Tensor channel_descriptor(const Tensor& x) {
    if (x.rank() != 2 || x.dim(0) == 0)
        throw std::invalid_argument("channel_descriptor: need [T x C] with T >= 1");
    return mean_axis(x, 0);
}

Tensor gate(const Tensor& x, const ParamSet& p, const std::string& prefix) {
    Tensor z = reshape(channel_descriptor(x), {1, x.dim(1)});
    Tensor h = relu(add_rowvec(matmul(z, p.at(prefix + ".w1")),
                               p.at(prefix + ".b1")));
    Tensor alpha = sigmoid(add_rowvec(matmul(h, p.at(prefix + ".w2")),
                                      p.at(prefix + ".b2")));
    return reshape(alpha, {x.dim(1)});
}

Tensor recalibrate(const Tensor& x, const ParamSet& p,
                   const std::string& prefix) {
    Tensor alpha = gate(x, p, prefix);
    return mul(x, ops::repeat_rows(alpha, x.dim(0)));
}

} // namespace tsn::fingerca
