#include "kernels_impl.hpp"

namespace errdecode::simd::scalar {

namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T sum(const T* x, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

}  // namespace

float dot_f32(const float* a, const float* b, std::size_t n) { return dot(a, b, n); }
double dot_f64(const double* a, const double* b, std::size_t n) { return dot(a, b, n); }
void axpy_f32(float alpha, const float* x, float* y, std::size_t n) { axpy(alpha, x, y, n); }
void axpy_f64(double alpha, const double* x, double* y, std::size_t n) { axpy(alpha, x, y, n); }
float sum_f32(const float* x, std::size_t n) { return sum(x, n); }
double sum_f64(const double* x, std::size_t n) { return sum(x, n); }

}  // namespace errdecode::simd::scalar
