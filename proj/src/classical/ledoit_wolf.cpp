#include <algorithm>

#include <fmt/format.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"

namespace errdecode::classical {

ShrinkageEstimate ledoit_wolf(const Eigen::MatrixXd& samples, bool assume_centered) {
    const auto n = samples.rows();
    const auto d = samples.cols();
    if (n < 2) throw invalid_argument(fmt::format("ledoit_wolf: need at least 2 samples, got {}", n));
    if (d < 1) throw invalid_argument("ledoit_wolf: need at least one dimension");
    if (!samples.allFinite()) throw data_error("ledoit_wolf: non-finite samples");

    Eigen::MatrixXd x = samples;
    if (!assume_centered) x.rowwise() -= samples.colwise().mean();

    const double nd = static_cast<double>(n);
    Eigen::MatrixXd s = (x.transpose() * x) / nd;
    const double mu = s.trace() / static_cast<double>(d);

    const double s_norm_sq = s.squaredNorm();
    const double d2 = s_norm_sq - 2.0 * mu * s.trace() + static_cast<double>(d) * mu * mu;

    // sum_k ||x_k x_k^T - S||^2 = sum_k ||x_k||^4 - n ||S||^2
    const double fourth = x.rowwise().squaredNorm().array().square().sum();
    const double b2_bar = std::max(0.0, (fourth / nd - s_norm_sq) / nd);

    ShrinkageEstimate est;
    est.gamma = d2 > 0.0 ? std::clamp(std::min(b2_bar, d2) / d2, 0.0, 1.0) : 0.0;
    est.covariance = (1.0 - est.gamma) * s;
    est.covariance.diagonal().array() += est.gamma * mu;
    return est;
}

}  // namespace errdecode::classical
