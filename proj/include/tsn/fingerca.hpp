#pragma once

#include "tsn/adam.hpp"
#include "tsn/tensor.hpp"

#include <random>
#include <string>

// Channel-attention recalibration: global average pool over time, two-layer
// bottleneck MLP, sigmoid gate, broadcast multiply over time.

namespace tsn::fingerca {

struct FingerCAConfig {
    std::size_t channels = 128;
    std::size_t reduction = 4; // bottleneck ratio r
};

void init_params(ParamSet& p, const std::string& prefix,
                 const FingerCAConfig& cfg, std::mt19937& rng);

// z_c = mean over time of X[t, c].
Tensor channel_descriptor(const Tensor& x);

// Gate values alpha = sigmoid(W2 relu(W1 z + b1) + b2), strictly in (0,1).
Tensor gate(const Tensor& x, const ParamSet& p, const std::string& prefix);

// X_tilde = alpha (broadcast over time) * X.
Tensor recalibrate(const Tensor& x, const ParamSet& p,
                   const std::string& prefix);

} // namespace tsn::fingerca
