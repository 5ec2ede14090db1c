#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"

namespace errdecode::classical {

std::vector<double> mutual_information(const Eigen::MatrixXd& features, std::span<const int> labels, int n_bins) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) throw invalid_argument("MI: label count mismatch");
    if (n_bins < 2) throw invalid_argument("MI: need at least 2 bins");
    const auto n = features.rows();
    const double nd = static_cast<double>(n);
    std::vector<double> mi(static_cast<std::size_t>(features.cols()), 0.0);
    if (n == 0) return mi;

    double p_label[2] = {0.0, 0.0};
    for (const int y : labels) p_label[y == 1] += 1.0 / nd;

    std::vector<double> joint(static_cast<std::size_t>(2 * n_bins));
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const auto col = features.col(j);
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        if (!(hi > lo)) continue;
        std::fill(joint.begin(), joint.end(), 0.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto bin = static_cast<int>(std::floor((col(i) - lo) / (hi - lo) * n_bins));
            bin = std::clamp(bin, 0, n_bins - 1);
            joint[static_cast<std::size_t>(2 * bin + (labels[static_cast<std::size_t>(i)] == 1))] += 1.0 / nd;
        }
        double total = 0.0;
        for (int b = 0; b < n_bins; ++b) {
            const double p_bin = joint[static_cast<std::size_t>(2 * b)] + joint[static_cast<std::size_t>(2 * b + 1)];
            for (int y = 0; y < 2; ++y) {
                const double p = joint[static_cast<std::size_t>(2 * b + y)];
                if (p > 0.0) total += p * std::log(p / (p_bin * p_label[y]));
            }
        }
        mi[static_cast<std::size_t>(j)] = std::max(0.0, total);
    }
    return mi;
}

std::vector<std::size_t> mibif_select(const Eigen::MatrixXd& features, std::span<const int> labels, std::size_t k,
                                      int n_bins) {
    if (k > static_cast<std::size_t>(features.cols())) {
        throw invalid_argument(fmt::format("cannot select {} of {} features", k, features.cols()));
    }
    const auto mi = mutual_information(features, labels, n_bins);
    std::vector<std::size_t> order(mi.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mi[a] > mi[b]; });
    order.resize(k);
    return order;
}

}  // namespace errdecode::classical
