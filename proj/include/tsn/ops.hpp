#pragma once

#include "tsn/tensor.hpp"

#include <cstdint>
#include <random>

namespace tsn::ops {

// ---- arithmetic -----------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);      // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);      // elementwise
Tensor scale(const Tensor& a, float c);
Tensor add_scalar(const Tensor& a, float c);
// a[R x C] + bias[C], broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& bias);
Tensor neg(const Tensor& a);

// ---- linear algebra -------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);   // [MxK]*[KxN]
Tensor transpose(const Tensor& a);                 // 2-D

// ---- nonlinearities -------------------------------------------------------
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor sqrt(const Tensor& a);                      // grad clamped near zero
Tensor log(const Tensor& a, float clamp = 1e-7f);  // input clamped below
Tensor softmax(const Tensor& a, int axis);
Tensor log_softmax(const Tensor& a, int axis);

// ---- normalization --------------------------------------------------------
// Last-axis layer norm. Zero-variance slices normalize to zeros.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps = 1e-5f);
// Direction/magnitude reparameterization of a conv kernel v[Cout x Cin x k]
// with per-output-channel magnitude g[Cout]: w = g * v / ||v||_row.
Tensor weight_norm(const Tensor& v, const Tensor& g, float eps = 1e-8f);

// ---- convolution ----------------------------------------------------------
// x[Cin x L], kernel[Cout x Cin x k]; left zero-padding of (k-1)*dilation
// keeps the length and makes the output at time s depend only on times <= s.
Tensor dilated_causal_conv1d(const Tensor& x, const Tensor& kernel,
                             std::size_t dilation);

// ---- reductions & shaping -------------------------------------------------
Tensor sum(const Tensor& a);                        // scalar
Tensor mean(const Tensor& a);                       // scalar
Tensor mean_axis(const Tensor& a, int axis);        // 2-D input
Tensor concat(const Tensor& a, const Tensor& b, int axis); // 1-D or 2-D
Tensor reshape(const Tensor& a, Shape shape);
// Select rows of a 2-D tensor; backward scatter-adds.
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows);
// table[V x m] indexed by ids.
Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids);
// Tile a vector v[m] into [rows x m].
Tensor repeat_rows(const Tensor& v, std::size_t rows);

// ---- stochastic -----------------------------------------------------------
// Train-mode inverted dropout; eval mode is handled by not calling it.
Tensor dropout(const Tensor& a, float rate, std::mt19937& rng);

// ---- losses ---------------------------------------------------------------
// logits[n x K] against integer labels; mean over rows, max-subtracted.
Tensor cross_entropy_from_logits(const Tensor& logits,
                                 const std::vector<std::size_t>& labels);
// Soft-target variant: -mean_i sum_j targets[i,j] * log_softmax(logits)[i,j].
Tensor cross_entropy_soft(const Tensor& logits, const Tensor& targets);
Tensor mse(const Tensor& a, const Tensor& b);

} // namespace tsn::ops
