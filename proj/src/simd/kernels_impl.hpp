#pragma once

#include <cstddef>

namespace errdecode::simd {

namespace scalar {
float dot_f32(const float* a, const float* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
void axpy_f32(float alpha, const float* x, float* y, std::size_t n);
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
float sum_f32(const float* x, std::size_t n);
double sum_f64(const double* x, std::size_t n);
}  // namespace scalar

namespace avx2 {
bool compiled();
float dot_f32(const float* a, const float* b, std::size_t n);
double dot_f64(const double* a, const double* b, std::size_t n);
void axpy_f32(float alpha, const float* x, float* y, std::size_t n);
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
float sum_f32(const float* x, std::size_t n);
double sum_f64(const double* x, std::size_t n);
}  // namespace avx2

}  // namespace errdecode::simd
