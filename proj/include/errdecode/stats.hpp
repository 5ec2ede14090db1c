#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace errdecode::stats {

struct PermutationResult {
    double observed_accuracy = 0.0;
    double p_value = 1.0;
    std::uint64_t n_permutations = 0;
    std::uint64_t n_at_least = 0;  // permutations with agreement >= observed
    /// min, 5%, 50%, 95%, max of the null agreement fractions.
    std::array<double, 5> null_quantiles{};
};

/// Null distribution of agreement between shuffled labels (class counts kept)
/// and the genuine labels. p = (1 + #{null >= observed}) / (1 + n_perm).
/// The result does not depend on the worker count.
PermutationResult permutation_test(std::span<const int> true_labels, double observed_accuracy,
                                   std::uint64_t n_perm, std::uint64_t seed);

enum class Sign { Pos, Neg, Tie };

/// Two-sided exact sign test; ties are dropped.
double sign_test(std::span<const Sign> outcomes);
double sign_test(std::size_t n_pos, std::size_t n_neg);

struct Regression {
    double r = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

Regression pearson_regression(std::span<const double> x, std::span<const double> y);

/// Pearson correlation, 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace errdecode::stats
