#include "errdecode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "errdecode/error.hpp"
#include "errdecode/parallel.hpp"
#include "errdecode/rng.hpp"

namespace errdecode::stats {

namespace {

constexpr std::uint64_t kChunk = 1024;

}  // namespace

PermutationResult permutation_test(std::span<const int> true_labels, double observed_accuracy,
                                   std::uint64_t n_perm, std::uint64_t seed) {
    if (n_perm < 1) throw invalid_argument("n_perm must be at least 1");
    if (true_labels.empty()) throw invalid_argument("permutation test needs labels");
    if (!(observed_accuracy >= 0.0 && observed_accuracy <= 1.0)) {
        throw invalid_argument(fmt::format("observed accuracy {} outside [0, 1]", observed_accuracy));
    }
    std::map<int, std::size_t> classes;
    for (const auto y : true_labels) ++classes[y];
    if (classes.size() < 2) throw invalid_argument("permutation test needs two classes, got a single class");
    if (classes.size() > 2) throw invalid_argument("permutation test expects binary labels");

    const std::size_t n = true_labels.size();
    const std::uint64_t n_chunks = (n_perm + kChunk - 1) / kChunk;
    std::vector<std::vector<std::uint64_t>> histograms(n_chunks);
    parallel_for(n_chunks, [&](std::size_t c) {
        auto& hist = histograms[c];
        hist.assign(n + 1, 0);
        Rng rng(seed, c);
        std::vector<int> shuffled(true_labels.begin(), true_labels.end());
        const std::uint64_t count = std::min<std::uint64_t>(kChunk, n_perm - c * kChunk);
        for (std::uint64_t i = 0; i < count; ++i) {
            rng.shuffle(shuffled.begin(), shuffled.end());
            std::size_t agree = 0;
            for (std::size_t k = 0; k < n; ++k) agree += shuffled[k] == true_labels[k] ? 1 : 0;
            ++hist[agree];
        }
    });
    std::vector<std::uint64_t> hist(n + 1, 0);
    for (const auto& h : histograms) {
        for (std::size_t k = 0; k <= n; ++k) hist[k] += h[k];
    }

    PermutationResult r;
    r.observed_accuracy = observed_accuracy;
    r.n_permutations = n_perm;
    const double dn = static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) {
        if (static_cast<double>(k) / dn >= observed_accuracy - 1e-12) r.n_at_least += hist[k];
    }
    r.p_value = static_cast<double>(1 + r.n_at_least) / static_cast<double>(1 + n_perm);

    const std::array<double, 5> qs{0.0, 0.05, 0.5, 0.95, 1.0};
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
        const auto rank = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(qs[qi] * static_cast<double>(n_perm))));
        std::uint64_t cum = 0;
        for (std::size_t k = 0; k <= n; ++k) {
            cum += hist[k];
            if (cum >= rank) {
                r.null_quantiles[qi] = static_cast<double>(k) / dn;
                break;
            }
        }
    }
    return r;
}

double sign_test(std::size_t n_pos, std::size_t n_neg) {
    const std::size_t n = n_pos + n_neg;
    if (n == 0) throw invalid_argument("sign test needs at least one non-tie outcome");
    const std::size_t k = std::max(n_pos, n_neg);
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
    // P(X >= k)
    const double tail = k == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, static_cast<double>(k - 1)));
    return std::min(1.0, 2.0 * tail);
}

double sign_test(std::span<const Sign> outcomes) {
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (const auto s : outcomes) {
        if (s == Sign::Pos) ++pos;
        if (s == Sign::Neg) ++neg;
    }
    if (pos + neg == 0) throw invalid_argument("sign test: all outcomes are ties");
    return sign_test(pos, neg);
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw invalid_argument("pearson: length mismatch");
    if (n == 0) return 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Regression pearson_regression(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw invalid_argument(fmt::format("regression inputs differ in length ({} vs {})", n, y.size()));
    if (n < 3) throw invalid_argument(fmt::format("regression needs at least 3 points, got {}", n));
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw invalid_argument("regression: x is constant");
    if (syy <= 0.0) throw invalid_argument("regression: y is constant");

    Regression reg;
    reg.n = n;
    reg.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    reg.slope = sxy / sxx;
    reg.intercept = my - reg.slope * mx;
    const double df = static_cast<double>(n - 2);
    const double one_minus = 1.0 - reg.r * reg.r;
    if (one_minus <= 0.0) {
        reg.p_value = 0.0;
    } else {
        const double t = reg.r * std::sqrt(df / one_minus);
        const boost::math::students_t_distribution<double> dist(df);
        reg.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    return reg;
}

}  // namespace errdecode::stats
