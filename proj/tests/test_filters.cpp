#include <doctest.h>

#include <cmath>
#include <numbers>

#include "errdecode/error.hpp"
#include "errdecode/filters.hpp"
#include "errdecode/preprocess.hpp"
#include "support.hpp"

using namespace errdecode;
using filters::FilterKind;

namespace {

constexpr double kHalfPower = 0.70710678118654752;

/// Steady-state gain of a causal run over a long sinusoid.
double sinusoid_gain(const filters::IIRCascade& c, double f, double fs) {
    const auto n = static_cast<std::size_t>(fs * 120.0);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs);
    filters::filter_in_place(c, x);
    double peak_sq = 0.0;
    const std::size_t tail = n / 4;
    for (std::size_t t = n - tail; t < n; ++t) peak_sq += x[t] * x[t];
    return std::sqrt(2.0 * peak_sq / static_cast<double>(tail));
}

}  // namespace

TEST_SUITE("filters") {
    TEST_CASE("highpass edges at half power for every order") {
        for (const int order : {2, 4, 6, 8}) {
            for (const double cutoff : {0.5, 4.0, 30.0, 100.0}) {
                const auto c = filters::design_butterworth(FilterKind::Highpass, order, {cutoff}, 250.0);
                CAPTURE(order);
                CAPTURE(cutoff);
                CHECK(c.sections.size() == static_cast<std::size_t>(order / 2));
                CHECK(std::abs(support::cascade_magnitude(c.sections, cutoff, 250.0) - kHalfPower) <= 0.01);
                CHECK(support::cascade_magnitude(c.sections, 0.0, 250.0) < 1e-6);
                CHECK(std::abs(support::cascade_magnitude(c.sections, 124.9, 250.0) - 1.0) < 1e-3);
                CHECK(c.is_stable());
            }
        }
    }

    TEST_CASE("bank bandpass edges at half power and stable") {
        const auto bank = filters::default_filter_bank();
        const double fs = 250.0;
        std::size_t designed = 0;
        for (const auto& [lo, hi] : bank.bands) {
            if (hi >= fs / 2.0) continue;
            for (const int order : {2, 4, 6, 8}) {
                const auto c = filters::design_butterworth(FilterKind::Bandpass, order, {lo, hi}, fs);
                CAPTURE(lo);
                CAPTURE(order);
                CHECK(c.sections.size() == static_cast<std::size_t>(order));
                CHECK(std::abs(support::cascade_magnitude(c.sections, lo, fs) - kHalfPower) <= 0.01);
                CHECK(std::abs(support::cascade_magnitude(c.sections, hi, fs) - kHalfPower) <= 0.01);
                CHECK(c.is_stable());
                for (const auto& p : c.poles()) CHECK(std::abs(p) < 1.0 - 1e-9);
                ++designed;
            }
        }
        CHECK(designed == 30 * 4);
    }

    TEST_CASE("bank edges also hold at 500 Hz") {
        for (const auto& [lo, hi] : filters::default_filter_bank().bands) {
            const auto c = filters::design_butterworth(FilterKind::Bandpass, 4, {lo, hi}, 500.0);
            CHECK(std::abs(support::cascade_magnitude(c.sections, lo, 500.0) - kHalfPower) <= 0.01);
            CHECK(std::abs(support::cascade_magnitude(c.sections, hi, 500.0) - kHalfPower) <= 0.01);
            CHECK(c.is_stable());
        }
    }

    TEST_CASE("sinusoid gains agree with the transfer function") {
        const auto hp = filters::design_butterworth(FilterKind::Highpass, 4, {4.0}, 250.0);
        CHECK(sinusoid_gain(hp, 4.0, 250.0) == doctest::Approx(kHalfPower).epsilon(0.01));
        const auto bp = filters::design_butterworth(FilterKind::Bandpass, 4, {8.0, 12.0}, 250.0);
        CHECK(sinusoid_gain(bp, 8.0, 250.0) == doctest::Approx(kHalfPower).epsilon(0.01));
        CHECK(sinusoid_gain(bp, 12.0, 250.0) == doctest::Approx(kHalfPower).epsilon(0.01));
        CHECK(sinusoid_gain(bp, 10.0, 250.0) > 0.99);
        CHECK(bp.magnitude(10.0) > 0.99);
        CHECK(bp.magnitude(4.0) < 0.1);
        CHECK(bp.magnitude(20.0) < 0.1);
        const auto hp05 = filters::design_butterworth(FilterKind::Highpass, 4, {0.5}, 250.0);
        CHECK(std::abs(hp05.magnitude(0.5) - kHalfPower) < 0.01);
        CHECK(hp05.magnitude(0.0) < 1e-6);
    }

    TEST_CASE("band centres pass and non-adjacent bands reject") {
        const auto bank = filters::default_filter_bank();
        const double fs = 250.0;
        std::vector<filters::IIRCascade> cascades;
        for (const auto& [lo, hi] : bank.bands) {
            if (hi < fs / 2.0) cascades.push_back(filters::design_butterworth(FilterKind::Bandpass, 4, {lo, hi}, fs));
        }
        for (std::size_t i = 0; i < cascades.size(); ++i) {
            const double centre = 0.5 * (cascades[i].edges_hz[0] + cascades[i].edges_hz[1]);
            CHECK(cascades[i].magnitude(centre) > 0.9);
            for (std::size_t j = 0; j < cascades.size(); ++j) {
                if (j + 1 < i || j > i + 1) {
                    CAPTURE(i);
                    CAPTURE(j);
                    CHECK(cascades[j].magnitude(centre) < 0.05);
                }
            }
        }
    }

    TEST_CASE("design errors") {
        try {
            filters::design_butterworth(FilterKind::Highpass, 4, {130.0}, 250.0);
            FAIL("expected a Nyquist error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("edge at/above Nyquist") != std::string::npos);
        }
        CHECK_THROWS_AS(filters::design_butterworth(FilterKind::Highpass, 3, {1.0}, 250.0), Error);
        CHECK_THROWS_AS(filters::design_butterworth(FilterKind::Bandpass, 4, {12.0, 8.0}, 250.0), Error);
        CHECK_THROWS_AS(filters::design_butterworth(FilterKind::Bandpass, 4, {8.0}, 250.0), Error);
    }

    TEST_CASE("filtering is linear and rejects rate mismatch") {
        const auto c = filters::design_butterworth(FilterKind::Highpass, 4, {0.5}, 250.0);
        const auto x = support::random_recording(2, 2000, 250.0, 1);
        const auto y = support::random_recording(2, 2000, 250.0, 2);
        Recording combo = x;
        combo.data = 2.0 * x.data - 3.0 * y.data;
        const auto fx = filters::apply_iir(c, x);
        const auto fy = filters::apply_iir(c, y);
        const auto fc = filters::apply_iir(c, combo);
        CHECK((fc.data - (2.0 * fx.data - 3.0 * fy.data)).cwiseAbs().maxCoeff() < 1e-9);

        Recording zero = x;
        zero.data.setZero();
        CHECK(filters::apply_iir(c, zero).data.cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(filters::apply_iir(c, support::random_recording(2, 100, 500.0, 1)), Error);
    }

    TEST_CASE("highpass removes a DC step") {
        const auto c = filters::design_butterworth(FilterKind::Highpass, 4, {0.5}, 250.0);
        Recording rec = support::random_recording(1, 250 * 60, 250.0, 3);
        rec.data.setZero();
        rec.data.rightCols(250 * 40).setConstant(100.0);
        const auto out = filters::apply_iir(c, rec);
        CHECK(std::abs(out.data.rightCols(2500).mean()) < 1.0);
    }

    TEST_CASE("zero phase filtering has no lag") {
        const auto c = filters::design_butterworth(FilterKind::Bandpass, 2, {8.0, 12.0}, 250.0);
        Recording rec = support::random_recording(1, 5000, 250.0, 1);
        for (Eigen::Index t = 0; t < 5000; ++t) rec.data(0, t) = std::sin(2.0 * std::numbers::pi * 10.0 * t / 250.0);
        const auto out = filters::apply_iir(c, rec, filters::FilterMode::ZeroPhase);
        CHECK((out.data.middleCols(1000, 3000) - rec.data.middleCols(1000, 3000)).cwiseAbs().maxCoeff() < 0.02);
    }

    TEST_CASE("default bank tiles the range") {
        const auto bank = filters::default_filter_bank();
        CHECK_NOTHROW(bank.validate());
        REQUIRE(bank.bands.size() >= 34);
        CHECK(bank.bands[0] == std::pair{0.5, 2.5});
        CHECK(bank.bands[14] == std::pair{28.5, 30.5});
        CHECK(bank.bands[15] == std::pair{30.5, 36.5});
        CHECK(bank.bands.back() == std::pair{138.5, 144.0});
        for (std::size_t i = 1; i < bank.bands.size(); ++i) CHECK(bank.bands[i - 1].second == bank.bands[i].first);
        for (std::size_t i = 0; i < 15; ++i) CHECK(bank.bands[i].second - bank.bands[i].first == 2.0);
        for (std::size_t i = 15; i + 1 < bank.bands.size(); ++i) {
            CHECK(bank.bands[i].second - bank.bands[i].first == 6.0);
        }
        const auto back = filters::filter_bank_from_csv(filters::filter_bank_to_csv(bank));
        CHECK(back.bands == bank.bands);
    }

    TEST_CASE("default bank holds thirty-five bands" * doctest::should_fail()) {
        CHECK(filters::default_filter_bank().bands.size() == 35);
    }

    TEST_CASE("bank validation rejects gaps and range violations") {
        filters::FilterBankSpec gap{{{0.5, 2.5}, {3.0, 5.0}}};
        CHECK_THROWS_AS(gap.validate(), Error);
        filters::FilterBankSpec wide{{{0.5, 150.0}}};
        CHECK_THROWS_AS(wide.validate(), Error);
        filters::FilterBankSpec empty;
        CHECK_THROWS_AS(empty.validate(), Error);
        const auto custom = filters::make_filter_bank({1.0, 9.0, 21.0, 4.0, 6.0});
        CHECK(custom.bands.size() == 4);
        CHECK(custom.bands.back() == std::pair{15.0, 21.0});
    }

    TEST_CASE("automatic cleaning masks exactly the spike") {
        auto rec = support::random_recording(3, 1000, 250.0, 4);
        auto clean = filters::auto_clean(rec, 800.0);
        CHECK(clean.segments.empty());
        CHECK(std::count(clean.mask.begin(), clean.mask.end(), 1) == 0);

        rec.data.block(1, 400, 1, 5).setConstant(1000.0);
        clean = filters::auto_clean(rec, 800.0);
        REQUIRE(clean.segments.size() == 1);
        CHECK(clean.segments[0] == std::pair<std::size_t, std::size_t>{400, 405});
        CHECK(std::count(clean.mask.begin(), clean.mask.end(), 1) == 5);
        CHECK(clean.recording.data == rec.data);

        rec.events = {{100, {}}, {350, {}}, {500, {}}};
        const auto kept = preprocess::epoch_trials(rec, {0.0, 0.5}, clean.mask);
        CHECK(kept.size() == 2);
        CHECK_THROWS_AS(filters::auto_clean(rec, 0.0), Error);
    }
}
