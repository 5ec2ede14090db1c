#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "errdecode/core.hpp"

namespace errdecode::preprocess {

struct StandardizationConfig {
    double decay = 1e-3;
    double eps = 1e-4;
    double init_block_s = 4.0;

    void validate() const;
};

/// Subtracts the instantaneous mean over channels. Requires >= 2 channels.
Recording common_average_reference(const Recording& rec);

/// Rational polyphase resampler with a Kaiser-windowed sinc anti-alias filter.
struct ResamplerDesign {
    std::int64_t up = 1;
    std::int64_t down = 1;
    std::size_t half_length = 0;
    std::vector<double> taps;  // designed at up * source rate, sum(taps) == up
};

ResamplerDesign design_resampler(double source_hz, double target_hz);

/// Output length is round(n * target / source). Event indices are rescaled
/// with round-half-to-even.
Recording resample(const Recording& rec, double target_hz);

/// Exponential moving standardization per channel:
///   m_t = (1-a) m_{t-1} + a x_t
///   v_t = (1-a) v_{t-1} + a (x_t - m_t)^2
///   y_t = (x_t - m_t) / max(sqrt(v_t), eps)
/// seeded with the mean/variance of the first init_block_s seconds.
Recording ewm_standardize(const Recording& rec, const StandardizationConfig& cfg);

/// Cuts one trial per event over `interval`. Trials are labelled for the
/// robot-type task; use project_labels() for the other. When a rejection mask
/// (one flag per sample) is supplied, trials overlapping a flagged sample are
/// dropped.
TrialSet epoch_trials(const Recording& rec, const Interval& interval,
                      std::span<const std::uint8_t> reject_mask = {});

}  // namespace errdecode::preprocess
