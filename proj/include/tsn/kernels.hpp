#pragma once

#include <cstddef>
#include <string>

// Low-level float kernels behind all tensor arithmetic. Each kernel has a
// scalar reference implementation and, on x86-64 with AVX2+FMA, a vectorized
// variant. The active set is chosen once at startup from CPUID and can be
// forced with the TSQN_KERNELS environment variable ("scalar" or "avx2").
// SIMD variants are equivalence-tested against the scalar references.

namespace tsn::kernels {

struct KernelSet {
    // C[M x N] += A[M x K] * B[K x N], all row-major.
    void (*gemm_nn)(const float* a, const float* b, float* c,
                    std::size_t m, std::size_t k, std::size_t n);
    // C[M x N] += A[M x K] * B^T, B given as [N x K] row-major.
    void (*gemm_nt)(const float* a, const float* b, float* c,
                    std::size_t m, std::size_t k, std::size_t n);
    // C[K x N] += A^T * B, A given as [M x K] row-major, B is [M x N].
    void (*gemm_tn)(const float* a, const float* b, float* c,
                    std::size_t m, std::size_t k, std::size_t n);

    void (*add)(const float* a, const float* b, float* out, std::size_t n);
    void (*mul)(const float* a, const float* b, float* out, std::size_t n);
    void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
    void (*scale)(float alpha, const float* x, float* out, std::size_t n);
    void (*relu)(const float* x, float* out, std::size_t n);
    // Sum and dot accumulate in double.
    double (*reduce_sum)(const float* x, std::size_t n);
    double (*dot)(const float* a, const float* b, std::size_t n);

    const char* name;
};

const KernelSet& scalar_kernels();
#if defined(__x86_64__)
const KernelSet& avx2_kernels();
#endif

// Active set: AVX2 when the CPU supports it, else scalar. TSQN_KERNELS
// overrides.
const KernelSet& active();

} // namespace tsn::kernels
