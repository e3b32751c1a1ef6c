#include "tsn/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace tsn::kernels {
namespace {

const KernelSet& select() {
    const char* force = std::getenv("TSQN_KERNELS");
    if (force != nullptr) {
        if (std::strcmp(force, "scalar") == 0) return scalar_kernels();
#if defined(__x86_64__)
        if (std::strcmp(force, "avx2") == 0) return avx2_kernels();
#endif
    }
#if defined(__x86_64__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return avx2_kernels();
#endif
    return scalar_kernels();
}

} // namespace

const KernelSet& active() {
    static const KernelSet& set = select();
    return set;
}

} // namespace tsn::kernels
