#include "tsn/ops.hpp"

#include "tsn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsn::ops {

namespace {

using kernels::active;

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
}

// Resolve a possibly-negative axis and the (outer, axis, inner) stride split.
struct AxisSplit {
    std::size_t outer, len, inner;
};

AxisSplit split_axis(const Shape& shape, int axis, const char* op) {
    int rank = static_cast<int>(shape.size());
    if (rank == 0 && (axis == 0 || axis == -1)) return {1, 1, 1};
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank)
        throw std::invalid_argument(std::string(op) + ": axis out of range for " +
                                    shape_str(shape));
    AxisSplit s{1, shape[axis], 1};
    for (int i = 0; i < axis; ++i) s.outer *= shape[i];
    for (int i = axis + 1; i < rank; ++i) s.inner *= shape[i];
    return s;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<float> out(a.size());
    active().add(a.data().data(), b.data().data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
        for (int i = 0; i < 2; ++i) {
            auto& p = *n.parents[i];
            if (!p.requires_grad) continue;
            p.ensure_grad();
            active().axpy(1.0f, n.grad.data(), p.grad.data(), n.grad.size());
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a.data()[i] - b.data()[i];
    return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            active().axpy(1.0f, n.grad.data(), pa.grad.data(), n.grad.size());
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            active().axpy(-1.0f, n.grad.data(), pb.grad.data(), n.grad.size());
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<float> out(a.size());
    active().mul(a.data().data(), b.data().data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                pa.grad[i] += n.grad[i] * pb.data[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                pb.grad[i] += n.grad[i] * pa.data[i];
        }
    });
}

Tensor scale(const Tensor& a, float c) {
    std::vector<float> out(a.size());
    active().scale(c, a.data().data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a}, [c](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        active().axpy(c, n.grad.data(), p.grad.data(), n.grad.size());
    });
}

Tensor add_scalar(const Tensor& a, float c) {
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] + c;
    return make_op(a.shape(), std::move(out), {a}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        active().axpy(1.0f, n.grad.data(), p.grad.data(), n.grad.size());
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0f); }

Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
    if (a.rank() != 2 || bias.rank() != 1 || a.dim(1) != bias.dim(0))
        throw std::invalid_argument("add_rowvec: need [RxC] + [C], got " +
                                    shape_str(a.shape()) + " + " +
                                    shape_str(bias.shape()));
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<float> out(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        active().add(a.data().data() + r * cols, bias.data().data(),
                     out.data() + r * cols, cols);
    return make_op(a.shape(), std::move(out), {a, bias},
                   [rows, cols](TensorNode& n) {
                       auto& pa = *n.parents[0];
                       auto& pb = *n.parents[1];
                       if (pa.requires_grad) {
                           pa.ensure_grad();
                           active().axpy(1.0f, n.grad.data(), pa.grad.data(),
                                         n.grad.size());
                       }
                       if (pb.requires_grad) {
                           pb.ensure_grad();
                           for (std::size_t r = 0; r < rows; ++r)
                               active().axpy(1.0f, n.grad.data() + r * cols,
                                             pb.grad.data(), cols);
                       }
                   });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " +
                                    shape_str(a.shape()) + " * " +
                                    shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<float> out(m * n, 0.0f);
    active().gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& node) {
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad(); // dA = dC * B^T
            active().gemm_nt(node.grad.data(), pb.data.data(), pa.grad.data(),
                             m, n, k);
        }
        if (pb.requires_grad) {
            pb.ensure_grad(); // dB = A^T * dC
            active().gemm_tn(pa.data.data(), node.grad.data(), pb.grad.data(),
                             m, k, n);
        }
    });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2)
        throw std::invalid_argument("transpose: need 2-D, got " +
                                    shape_str(a.shape()));
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    std::vector<float> out(a.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out[c * rows + r] = a.data()[r * cols + c];
    return make_op({cols, rows}, std::move(out), {a},
                   [rows, cols](TensorNode& n) {
                       auto& p = *n.parents[0];
                       p.ensure_grad();
                       for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c)
                               p.grad[r * cols + c] += n.grad[c * rows + r];
                   });
}

Tensor relu(const Tensor& a) {
    std::vector<float> out(a.size());
    active().relu(a.data().data(), out.data(), a.size());
    return make_op(a.shape(), std::move(out), {a}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (p.data[i] > 0.0f) p.grad[i] += n.grad[i];
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = 1.0f / (1.0f + std::exp(-a.data()[i]));
    return make_op(a.shape(), std::move(out), {a}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const float s = n.data[i];
            p.grad[i] += n.grad[i] * s * (1.0f - s);
        }
    });
}

Tensor sqrt(const Tensor& a) {
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = std::sqrt(std::max(0.0f, a.data()[i]));
    return make_op(a.shape(), std::move(out), {a}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            p.grad[i] += n.grad[i] * 0.5f / std::max(n.data[i], 1e-6f);
    });
}

Tensor log(const Tensor& a, float clamp) {
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = std::log(std::max(a.data()[i], clamp));
    return make_op(a.shape(), std::move(out), {a}, [clamp](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            p.grad[i] += n.grad[i] / std::max(p.data[i], clamp);
    });
}

Tensor softmax(const Tensor& a, int axis) {
    for (float v : a.data())
        if (std::isnan(v))
            throw std::domain_error("softmax: NaN input");
    const AxisSplit s = split_axis(a.shape(), axis, "softmax");
    std::vector<float> out(a.size());
    const float* x = a.data().data();
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.len * s.inner + in;
            float mx = -std::numeric_limits<float>::infinity();
            for (std::size_t i = 0; i < s.len; ++i)
                mx = std::max(mx, x[base + i * s.inner]);
            double denom = 0.0;
            for (std::size_t i = 0; i < s.len; ++i) {
                const float e = std::exp(x[base + i * s.inner] - mx);
                out[base + i * s.inner] = e;
                denom += e;
            }
            const float inv = static_cast<float>(1.0 / denom);
            for (std::size_t i = 0; i < s.len; ++i)
                out[base + i * s.inner] *= inv;
        }
    return make_op(a.shape(), std::move(out), {a}, [s](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                double dot = 0.0;
                for (std::size_t i = 0; i < s.len; ++i) {
                    const std::size_t idx = base + i * s.inner;
                    dot += static_cast<double>(n.grad[idx]) * n.data[idx];
                }
                for (std::size_t i = 0; i < s.len; ++i) {
                    const std::size_t idx = base + i * s.inner;
                    p.grad[idx] += n.data[idx] *
                                   (n.grad[idx] - static_cast<float>(dot));
                }
            }
    });
}

Tensor log_softmax(const Tensor& a, int axis) {
    const AxisSplit s = split_axis(a.shape(), axis, "log_softmax");
    std::vector<float> out(a.size());
    const float* x = a.data().data();
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.len * s.inner + in;
            float mx = -std::numeric_limits<float>::infinity();
            for (std::size_t i = 0; i < s.len; ++i)
                mx = std::max(mx, x[base + i * s.inner]);
            double denom = 0.0;
            for (std::size_t i = 0; i < s.len; ++i)
                denom += std::exp(x[base + i * s.inner] - mx);
            const float lse = mx + static_cast<float>(std::log(denom));
            for (std::size_t i = 0; i < s.len; ++i)
                out[base + i * s.inner] = x[base + i * s.inner] - lse;
        }
    return make_op(a.shape(), std::move(out), {a}, [s](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t in = 0; in < s.inner; ++in) {
                const std::size_t base = o * s.len * s.inner + in;
                double gsum = 0.0;
                for (std::size_t i = 0; i < s.len; ++i)
                    gsum += n.grad[base + i * s.inner];
                for (std::size_t i = 0; i < s.len; ++i) {
                    const std::size_t idx = base + i * s.inner;
                    p.grad[idx] += n.grad[idx] -
                                   static_cast<float>(gsum) * std::exp(n.data[idx]);
                }
            }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  float eps) {
    if (x.rank() == 0)
        throw std::invalid_argument("layer_norm: scalar input");
    const std::size_t width = x.shape().back();
    if (gamma.size() != width || beta.size() != width)
        throw std::invalid_argument("layer_norm: affine params must match last axis");
    const std::size_t rows = x.size() / width;
    std::vector<float> out(x.size());
    std::vector<float> inv_std(rows), means(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = x.data().data() + r * width;
        const double mean = active().reduce_sum(row, width) / width;
        double var = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            const double d = row[i] - mean;
            var += d * d;
        }
        var /= width;
        // Zero-variance slices normalize to zeros.
        const double istd = var < 1e-12 ? 0.0 : 1.0 / std::sqrt(var + eps);
        means[r] = static_cast<float>(mean);
        inv_std[r] = static_cast<float>(istd);
        for (std::size_t i = 0; i < width; ++i) {
            const float xhat = (row[i] - means[r]) * inv_std[r];
            out[r * width + i] = xhat * gamma.data()[i] + beta.data()[i];
        }
    }
    return make_op(x.shape(), std::move(out), {x, gamma, beta},
                   [rows, width, means, inv_std](TensorNode& n) {
        auto& px = *n.parents[0];
        auto& pg = *n.parents[1];
        auto& pb = *n.parents[2];
        if (pg.requires_grad) pg.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        if (px.requires_grad) px.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const float* xrow = px.data.data() + r * width;
            const float* grow = n.grad.data() + r * width;
            const float istd = inv_std[r];
            if (pg.requires_grad || pb.requires_grad) {
                for (std::size_t i = 0; i < width; ++i) {
                    const float xhat = (xrow[i] - means[r]) * istd;
                    if (pg.requires_grad) pg.grad[i] += grow[i] * xhat;
                    if (pb.requires_grad) pb.grad[i] += grow[i];
                }
            }
            if (px.requires_grad && istd != 0.0f) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (std::size_t i = 0; i < width; ++i) {
                    const float dy = grow[i] * pg.data[i];
                    const float xhat = (xrow[i] - means[r]) * istd;
                    sum_dy += dy;
                    sum_dy_xhat += static_cast<double>(dy) * xhat;
                }
                const float mdy = static_cast<float>(sum_dy / width);
                const float mdyx = static_cast<float>(sum_dy_xhat / width);
                for (std::size_t i = 0; i < width; ++i) {
                    const float dy = grow[i] * pg.data[i];
                    const float xhat = (xrow[i] - means[r]) * istd;
                    px.grad[r * width + i] += istd * (dy - mdy - xhat * mdyx);
                }
            }
        }
    });
}

Tensor weight_norm(const Tensor& v, const Tensor& g, float eps) {
    if (v.rank() != 3 || g.rank() != 1 || v.dim(0) != g.dim(0))
        throw std::invalid_argument("weight_norm: need v[Cout x Cin x k], g[Cout]");
    const std::size_t cout = v.dim(0), row = v.dim(1) * v.dim(2);
    std::vector<float> out(v.size());
    std::vector<float> inv_norm(cout);
    for (std::size_t c = 0; c < cout; ++c) {
        const float* vrow = v.data().data() + c * row;
        const double nrm =
            std::sqrt(active().dot(vrow, vrow, row) + static_cast<double>(eps));
        inv_norm[c] = static_cast<float>(1.0 / nrm);
        active().scale(g.data()[c] * inv_norm[c], vrow, out.data() + c * row, row);
    }
    return make_op(v.shape(), std::move(out), {v, g},
                   [cout, row, inv_norm](TensorNode& n) {
        auto& pv = *n.parents[0];
        auto& pg = *n.parents[1];
        for (std::size_t c = 0; c < cout; ++c) {
            const float* vrow = pv.data.data() + c * row;
            const float* grow = n.grad.data() + c * row;
            const float inv = inv_norm[c];
            const double gdotv = active().dot(grow, vrow, row);
            if (pg.requires_grad) {
                pg.ensure_grad();
                pg.grad[c] += static_cast<float>(gdotv * inv);
            }
            if (pv.requires_grad) {
                pv.ensure_grad();
                const float gm = pg.data[c];
                const float coef = static_cast<float>(gdotv) * inv * inv;
                float* dst = pv.grad.data() + c * row;
                for (std::size_t i = 0; i < row; ++i)
                    dst[i] += gm * inv * (grow[i] - coef * vrow[i]);
            }
        }
    });
}

Tensor dilated_causal_conv1d(const Tensor& x, const Tensor& kernel,
                             std::size_t dilation) {
    if (dilation < 1)
        throw std::invalid_argument("dilated_causal_conv1d: dilation must be >= 1");
    if (x.rank() != 2 || kernel.rank() != 3 || kernel.dim(1) != x.dim(0))
        throw std::invalid_argument(
            "dilated_causal_conv1d: need x[Cin x L], kernel[Cout x Cin x k], got " +
            shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
    const std::size_t cin = x.dim(0), len = x.dim(1);
    const std::size_t cout = kernel.dim(0), k = kernel.dim(2);

    // im2col: rows indexed by (ci, tap), columns by time; shifted copies of x
    // with left zero padding. Then out = kernel_mat[Cout x Cin*k] * col.
    std::vector<float> col(cin * k * len, 0.0f);
    for (std::size_t ci = 0; ci < cin; ++ci)
        for (std::size_t tap = 0; tap < k; ++tap) {
            const std::size_t shift = tap * dilation;
            if (shift >= len) continue;
            float* dst = col.data() + (ci * k + tap) * len + shift;
            const float* src = x.data().data() + ci * len;
            std::copy(src, src + (len - shift), dst);
        }
    std::vector<float> out(cout * len, 0.0f);
    active().gemm_nn(kernel.data().data(), col.data(), out.data(),
                     cout, cin * k, len);
    return make_op({cout, len}, std::move(out), {x, kernel},
                   [cin, len, cout, k, dilation, col](TensorNode& n) {
        auto& px = *n.parents[0];
        auto& pk = *n.parents[1];
        if (pk.requires_grad) {
            pk.ensure_grad(); // dK = dOut * col^T
            active().gemm_nt(n.grad.data(), col.data(), pk.grad.data(),
                             cout, len, cin * k);
        }
        if (px.requires_grad) {
            px.ensure_grad(); // dcol = K^T * dOut, then fold shifts back
            std::vector<float> dcol(cin * k * len, 0.0f);
            active().gemm_tn(pk.data.data(), n.grad.data(), dcol.data(),
                             cout, cin * k, len);
            for (std::size_t ci = 0; ci < cin; ++ci)
                for (std::size_t tap = 0; tap < k; ++tap) {
                    const std::size_t shift = tap * dilation;
                    if (shift >= len) continue;
                    const float* src = dcol.data() + (ci * k + tap) * len + shift;
                    active().axpy(1.0f, src, px.grad.data() + ci * len,
                                  len - shift);
                }
        }
    });
}

Tensor sum(const Tensor& a) {
    const float total =
        static_cast<float>(active().reduce_sum(a.data().data(), a.size()));
    return make_op({}, {total}, {a}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        const float g = n.grad[0];
        for (float& v : p.grad) v += g;
    });
}

Tensor mean(const Tensor& a) {
    const std::size_t n = a.size();
    const float m =
        static_cast<float>(active().reduce_sum(a.data().data(), n) / n);
    return make_op({}, {m}, {a}, [n](TensorNode& node) {
        auto& p = *node.parents[0];
        p.ensure_grad();
        const float g = node.grad[0] / static_cast<float>(n);
        for (float& v : p.grad) v += g;
    });
}

Tensor mean_axis(const Tensor& a, int axis) {
    if (a.rank() != 2)
        throw std::invalid_argument("mean_axis: need 2-D, got " +
                                    shape_str(a.shape()));
    if (axis < 0) axis += 2;
    const std::size_t rows = a.dim(0), cols = a.dim(1);
    if (axis == 0) {
        std::vector<double> acc(cols, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                acc[c] += a.data()[r * cols + c];
        std::vector<float> out(cols);
        for (std::size_t c = 0; c < cols; ++c)
            out[c] = static_cast<float>(acc[c] / rows);
        return make_op({cols}, std::move(out), {a}, [rows, cols](TensorNode& n) {
            auto& p = *n.parents[0];
            p.ensure_grad();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    p.grad[r * cols + c] += n.grad[c] / static_cast<float>(rows);
        });
    }
    if (axis != 1)
        throw std::invalid_argument("mean_axis: axis out of range");
    std::vector<float> out(rows);
    for (std::size_t r = 0; r < rows; ++r)
        out[r] = static_cast<float>(
            active().reduce_sum(a.data().data() + r * cols, cols) / cols);
    return make_op({rows}, std::move(out), {a}, [rows, cols](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const float g = n.grad[r] / static_cast<float>(cols);
            for (std::size_t c = 0; c < cols; ++c) p.grad[r * cols + c] += g;
        }
    });
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    if (a.rank() != b.rank())
        throw std::invalid_argument("concat: rank mismatch");
    if (a.rank() == 1) {
        if (axis != 0 && axis != -1)
            throw std::invalid_argument("concat: axis out of range for 1-D");
        std::vector<float> out(a.size() + b.size());
        std::copy(a.data().begin(), a.data().end(), out.begin());
        std::copy(b.data().begin(), b.data().end(), out.begin() + a.size());
        const std::size_t na = a.size();
        return make_op({a.size() + b.size()}, std::move(out), {a, b},
                       [na](TensorNode& n) {
            auto& pa = *n.parents[0];
            auto& pb = *n.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                active().axpy(1.0f, n.grad.data(), pa.grad.data(), na);
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                active().axpy(1.0f, n.grad.data() + na, pb.grad.data(),
                              n.grad.size() - na);
            }
        });
    }
    if (a.rank() != 2)
        throw std::invalid_argument("concat: only 1-D/2-D supported");
    if (axis < 0) axis += 2;
    if (axis == 0) {
        if (a.dim(1) != b.dim(1))
            throw std::invalid_argument("concat: column mismatch");
        std::vector<float> out(a.size() + b.size());
        std::copy(a.data().begin(), a.data().end(), out.begin());
        std::copy(b.data().begin(), b.data().end(), out.begin() + a.size());
        const std::size_t na = a.size();
        return make_op({a.dim(0) + b.dim(0), a.dim(1)}, std::move(out), {a, b},
                       [na](TensorNode& n) {
            auto& pa = *n.parents[0];
            auto& pb = *n.parents[1];
            if (pa.requires_grad) {
                pa.ensure_grad();
                active().axpy(1.0f, n.grad.data(), pa.grad.data(), na);
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                active().axpy(1.0f, n.grad.data() + na, pb.grad.data(),
                              n.grad.size() - na);
            }
        });
    }
    if (a.dim(0) != b.dim(0))
        throw std::invalid_argument("concat: row mismatch");
    const std::size_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    std::vector<float> out(rows * (ca + cb));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy(a.data().begin() + r * ca, a.data().begin() + (r + 1) * ca,
                  out.begin() + r * (ca + cb));
        std::copy(b.data().begin() + r * cb, b.data().begin() + (r + 1) * cb,
                  out.begin() + r * (ca + cb) + ca);
    }
    return make_op({rows, ca + cb}, std::move(out), {a, b},
                   [rows, ca, cb](TensorNode& n) {
        auto& pa = *n.parents[0];
        auto& pb = *n.parents[1];
        if (pa.requires_grad) pa.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            if (pa.requires_grad)
                active().axpy(1.0f, n.grad.data() + r * (ca + cb),
                              pa.grad.data() + r * ca, ca);
            if (pb.requires_grad)
                active().axpy(1.0f, n.grad.data() + r * (ca + cb) + ca,
                              pb.grad.data() + r * cb, cb);
        }
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw std::invalid_argument("reshape: element count mismatch " +
                                    shape_str(a.shape()) + " -> " +
                                    shape_str(shape));
    std::vector<float> out = a.data();
    return make_op(std::move(shape), std::move(out), {a}, [](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        active().axpy(1.0f, n.grad.data(), p.grad.data(), n.grad.size());
    });
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& rows) {
    if (a.rank() != 2)
        throw std::invalid_argument("gather_rows: need 2-D");
    const std::size_t cols = a.dim(1);
    for (std::size_t r : rows)
        if (r >= a.dim(0))
            throw std::out_of_range("gather_rows: row index " +
                                    std::to_string(r) + " out of range");
    std::vector<float> out(rows.size() * cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(a.data().begin() + rows[i] * cols,
                  a.data().begin() + (rows[i] + 1) * cols,
                  out.begin() + i * cols);
    return make_op({rows.size(), cols}, std::move(out), {a},
                   [rows, cols](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < rows.size(); ++i)
            active().axpy(1.0f, n.grad.data() + i * cols,
                          p.grad.data() + rows[i] * cols, cols);
    });
}

Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids) {
    return gather_rows(table, ids);
}

Tensor repeat_rows(const Tensor& v, std::size_t rows) {
    if (v.rank() != 1)
        throw std::invalid_argument("repeat_rows: need 1-D");
    const std::size_t cols = v.dim(0);
    std::vector<float> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy(v.data().begin(), v.data().end(), out.begin() + r * cols);
    return make_op({rows, cols}, std::move(out), {v}, [rows, cols](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
            active().axpy(1.0f, n.grad.data() + r * cols, p.grad.data(), cols);
    });
}

Tensor dropout(const Tensor& a, float rate, std::mt19937& rng) {
    if (rate < 0.0f || rate >= 1.0f)
        throw std::invalid_argument("dropout: rate must be in [0,1)");
    if (rate == 0.0f) return a;
    std::bernoulli_distribution keep(1.0 - rate);
    const float inv_keep = 1.0f / (1.0f - rate);
    auto mask = std::make_shared<std::vector<float>>(a.size());
    std::vector<float> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        (*mask)[i] = keep(rng) ? inv_keep : 0.0f;
        out[i] = a.data()[i] * (*mask)[i];
    }
    return make_op(a.shape(), std::move(out), {a}, [mask](TensorNode& n) {
        auto& p = *n.parents[0];
        p.ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            p.grad[i] += n.grad[i] * (*mask)[i];
    });
}

Tensor cross_entropy_from_logits(const Tensor& logits,
                                 const std::vector<std::size_t>& labels) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size())
        throw std::invalid_argument("cross_entropy_from_logits: need [n x K] with n labels");
    const std::size_t k = logits.dim(1);
    for (std::size_t l : labels)
        if (l >= k) throw std::out_of_range("cross_entropy_from_logits: bad label");
    Tensor lsm = log_softmax(logits, -1);
    const std::size_t n = labels.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total -= lsm.data()[i * k + labels[i]];
    const float loss = static_cast<float>(total / n);
    return make_op({}, {loss}, {lsm}, [labels, n, k](TensorNode& node) {
        auto& p = *node.parents[0];
        p.ensure_grad();
        const float g = node.grad[0] / static_cast<float>(n);
        for (std::size_t i = 0; i < n; ++i)
            p.grad[i * k + labels[i]] -= g;
    });
}

Tensor cross_entropy_soft(const Tensor& logits, const Tensor& targets) {
    check_same_shape(logits, targets, "cross_entropy_soft");
    Tensor lsm = log_softmax(logits, -1);
    Tensor per_elem = mul(lsm, targets);
    const std::size_t rows = logits.dim(0);
    return scale(sum(per_elem), -1.0f / static_cast<float>(rows));
}

Tensor mse(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mse");
    Tensor d = sub(a, b);
    return mean(mul(d, d));
}

} // namespace tsn::ops
