// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; it must only be entered after the runtime CPUID check in
// kernels_dispatch.cpp.

#include "tsn/kernels.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

#include <algorithm>

namespace tsn::kernels {
namespace {

// Broadcast-FMA over the N dimension; rows of B and C are contiguous.
void gemm_nn_avx2(const float* a, const float* b, float* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n8 = n & ~std::size_t{7};
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[i * k + p];
            const __m256 va = _mm256_set1_ps(av);
            const float* brow = b + p * n;
            std::size_t j = 0;
            for (; j < n8; j += 8) {
                __m256 vc = _mm256_loadu_ps(crow + j);
                vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), vc);
                _mm256_storeu_ps(crow + j, vc);
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
}

// Dot products over the shared K dimension.
void gemm_nt_avx2(const float* a, const float* b, float* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t k8 = k & ~std::size_t{7};
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const float* brow = b + j * k;
            __m256 vacc = _mm256_setzero_ps();
            std::size_t p = 0;
            for (; p < k8; p += 8)
                vacc = _mm256_fmadd_ps(_mm256_loadu_ps(arow + p),
                                       _mm256_loadu_ps(brow + p), vacc);
            float acc = hsum(vacc);
            for (; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] += acc;
        }
    }
}

void gemm_tn_avx2(const float* a, const float* b, float* c,
                  std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t n8 = n & ~std::size_t{7};
    for (std::size_t i = 0; i < m; ++i) {
        const float* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[i * k + p];
            const __m256 va = _mm256_set1_ps(av);
            float* crow = c + p * n;
            std::size_t j = 0;
            for (; j < n8; j += 8) {
                __m256 vc = _mm256_loadu_ps(crow + j);
                vc = _mm256_fmadd_ps(va, _mm256_loadu_ps(brow + j), vc);
                _mm256_storeu_ps(crow + j, vc);
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void add_avx2(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_avx2(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(float alpha, const float* x, float* out, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

void relu_avx2(const float* x, float* out, std::size_t n) {
    const __m256 vz = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_max_ps(vz, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = std::max(0.0f, x[i]);
}

// Double accumulation matches the scalar reference bit-for-bit only in
// order-insensitive cases; tests compare with a tolerance.
double reduce_sum_avx2(const float* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double acc = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        __m256d lo = _mm256_mul_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                                   _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
        __m256d hi = _mm256_mul_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                                   _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
        acc0 = _mm256_add_pd(acc0, lo);
        acc1 = _mm256_add_pd(acc1, hi);
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc0);
    double acc = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

} // namespace

const KernelSet& avx2_kernels() {
    static const KernelSet set{
        gemm_nn_avx2, gemm_nt_avx2, gemm_tn_avx2,
        add_avx2,     mul_avx2,     axpy_avx2,
        scale_avx2,   relu_avx2,    reduce_sum_avx2,
        dot_avx2,     "avx2",
    };
    return set;
}

} // namespace tsn::kernels

#endif // __x86_64__
