#include <cmath>

#include <fmt/format.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"

namespace errdecode::classical {

Eigen::MatrixXd time_domain_features(const TrialSet& ts, double window_s) {
    if (!(window_s > 0.0)) throw invalid_argument(fmt::format("window must be positive, got {}", window_s));
    const auto t = static_cast<Eigen::Index>(ts.n_timepoints());
    const auto window = static_cast<Eigen::Index>(std::llround(window_s * ts.sample_rate_hz));
    if (window < 1) throw invalid_argument("window shorter than one sample");
    if (window > t) throw invalid_argument(fmt::format("window of {} samples longer than trial ({})", window, t));
    const Eigen::Index n_windows = t / window;
    const auto c = static_cast<Eigen::Index>(ts.n_channels());

    Eigen::MatrixXd features(static_cast<Eigen::Index>(ts.size()), c * n_windows);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto& trial = ts.trials[k];
        for (Eigen::Index ch = 0; ch < c; ++ch) {
            for (Eigen::Index w = 0; w < n_windows; ++w) {
                features(static_cast<Eigen::Index>(k), ch * n_windows + w) =
                    trial.row(ch).segment(w * window, window).mean();
            }
        }
    }
    return features;
}

}  // namespace errdecode::classical
