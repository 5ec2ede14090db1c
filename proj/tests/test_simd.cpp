#include <doctest.h>

#include <cmath>
#include <vector>

#include "errdecode/rng.hpp"
#include "errdecode/simd.hpp"

using namespace errdecode;

namespace {

template <typename T>
void compare_kernels(double tol) {
    const auto& scalar = simd::kernels<T>(simd::Isa::Scalar);
    const auto& vec = simd::kernels<T>(simd::Isa::Avx2);
    Rng rng(123);
    for (std::size_t n : {0, 1, 3, 4, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 257, 1000, 4099}) {
        std::vector<T> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<T>(rng.normal());
            b[i] = static_cast<T>(rng.normal());
        }
        double abs_sum = 0.0, abs_dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_sum += std::abs(static_cast<double>(a[i]));
            abs_dot += std::abs(static_cast<double>(a[i]) * static_cast<double>(b[i]));
        }
        CAPTURE(n);
        CHECK(std::abs(static_cast<double>(scalar.dot(a.data(), b.data(), n) - vec.dot(a.data(), b.data(), n))) <=
              tol * (abs_dot + 1.0));
        CHECK(std::abs(static_cast<double>(scalar.sum(a.data(), n) - vec.sum(a.data(), n))) <= tol * (abs_sum + 1.0));

        auto y1 = b, y2 = b;
        scalar.axpy(T(0.75), a.data(), y1.data(), n);
        vec.axpy(T(0.75), a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(static_cast<double>(y1[i] - y2[i])) <= tol * (std::abs(static_cast<double>(y1[i])) + 1.0));
        }

        double ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) ref += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        CHECK(std::abs(static_cast<double>(scalar.dot(a.data(), b.data(), n)) - ref) <= tol * (abs_dot + 1.0));
    }
}

}  // namespace

TEST_SUITE("simd") {
    TEST_CASE("isa reporting") {
        const auto isa = simd::active_isa();
        CHECK((isa == simd::Isa::Scalar || isa == simd::Isa::Avx2));
        if (!simd::avx2_supported()) CHECK(isa == simd::Isa::Scalar);
        CHECK(simd::to_string(simd::Isa::Scalar) == "scalar");
    }

    TEST_CASE("vector kernels match scalar reference in double") {
        if (!simd::avx2_supported()) return;
        compare_kernels<double>(1e-12);
    }

    TEST_CASE("vector kernels match scalar reference in float") {
        if (!simd::avx2_supported()) return;
        compare_kernels<float>(1e-5);
    }

    TEST_CASE("span helpers use the active kernels") {
        std::vector<double> a{1, 2, 3, 4, 5}, b{5, 4, 3, 2, 1};
        CHECK(simd::dot<double>(a, b) == doctest::Approx(35.0));
        CHECK(simd::sum<double>(a) == doctest::Approx(15.0));
        simd::axpy<double>(2.0, a, b);
        CHECK(b == std::vector<double>{7, 8, 9, 10, 11});
    }
}
