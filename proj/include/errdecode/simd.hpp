#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace errdecode::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// True when the AVX2+FMA kernels were compiled in and the CPU reports both.
bool avx2_supported();

/// Resolved once per process. ERRDECODE_SIMD=scalar forces the reference path.
Isa active_isa();

/// Inner-loop kernels. The scalar versions are the reference; vector versions
/// differ only by floating-point reassociation in reductions.
template <typename T>
struct Kernels {
    T (*dot)(const T* a, const T* b, std::size_t n);
    void (*axpy)(T alpha, const T* x, T* y, std::size_t n);  // y += alpha * x
    T (*sum)(const T* x, std::size_t n);
};

template <typename T>
const Kernels<T>& kernels(Isa isa);

template <typename T>
const Kernels<T>& kernels() {
    return kernels<T>(active_isa());
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
    return kernels<T>().dot(a.data(), b.data(), a.size());
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
    kernels<T>().axpy(alpha, x.data(), y.data(), x.size());
}

template <typename T>
T sum(std::span<const T> x) {
    return kernels<T>().sum(x.data(), x.size());
}

}  // namespace errdecode::simd
