#include <cstdlib>
#include <string_view>

#include "errdecode/simd.hpp"
#include "kernels_impl.hpp"

namespace errdecode::simd {

namespace {

const Kernels<float> kScalarF32{scalar::dot_f32, scalar::axpy_f32, scalar::sum_f32};
const Kernels<double> kScalarF64{scalar::dot_f64, scalar::axpy_f64, scalar::sum_f64};
const Kernels<float> kAvx2F32{avx2::dot_f32, avx2::axpy_f32, avx2::sum_f32};
const Kernels<double> kAvx2F64{avx2::dot_f64, avx2::axpy_f64, avx2::sum_f64};

bool cpu_has_avx2_fma() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa resolve_isa() {
    if (const char* env = std::getenv("ERRDECODE_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
        return Isa::Scalar;
    }
    return avx2_supported() ? Isa::Avx2 : Isa::Scalar;
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_supported() {
    static const bool supported = avx2::compiled() && cpu_has_avx2_fma();
    return supported;
}

Isa active_isa() {
    static const Isa isa = resolve_isa();
    return isa;
}

template <>
const Kernels<float>& kernels<float>(Isa isa) {
    return isa == Isa::Avx2 && avx2_supported() ? kAvx2F32 : kScalarF32;
}

template <>
const Kernels<double>& kernels<double>(Isa isa) {
    return isa == Isa::Avx2 && avx2_supported() ? kAvx2F64 : kScalarF64;
}

}  // namespace errdecode::simd
