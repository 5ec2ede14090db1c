#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errdecode/core.hpp"

namespace errdecode::filters {

enum class FilterKind { Highpass, Bandpass };

/// One second-order section, a0 normalized to 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

struct IIRCascade {
    std::vector<Biquad> sections;
    FilterKind kind = FilterKind::Highpass;
    std::vector<double> edges_hz;
    int order = 0;
    double sample_rate_hz = 0.0;

    std::complex<double> response(double freq_hz) const;
    double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }
    std::vector<std::complex<double>> poles() const;
    bool is_stable(double margin = 1e-9) const;
};

/// Butterworth design by bilinear transform with frequency pre-warping.
/// Highpass: `order` poles in order/2 sections. Bandpass: `order` is the
/// low-pass prototype order, giving `order` sections (2*order poles).
/// The magnitude at every edge is 1/sqrt(2) of the passband gain.
IIRCascade design_butterworth(FilterKind kind, int order, std::vector<double> edges_hz, double fs);

enum class FilterMode { Causal, ZeroPhase };

/// Per-channel filtering with zero initial conditions. ZeroPhase runs the
/// cascade forward then backward.
Recording apply_iir(const IIRCascade& cascade, const Recording& rec, FilterMode mode = FilterMode::Causal);

/// In-place filtering of one channel.
void filter_in_place(const IIRCascade& cascade, std::span<double> signal);

struct FilterBankSpec {
    std::vector<std::pair<double, double>> bands;

    /// Throws unless bands are contiguous, strictly increasing and inside [min_hz, max_hz].
    void validate(double min_hz = 0.5, double max_hz = 144.0) const;
};

/// Tiling rule: `narrow_width` bands from `low_hz` up to `split_hz`, then
/// `wide_width` bands up to `high_hz`, the last one clipped to end there.
struct FilterBankRule {
    double low_hz = 0.5;
    double split_hz = 30.5;
    double high_hz = 144.0;
    double narrow_width = 2.0;
    double wide_width = 6.0;
};

FilterBankSpec make_filter_bank(const FilterBankRule& rule);
FilterBankSpec default_filter_bank();

/// CSV with columns band_index,lo_hz,hi_hz.
std::string filter_bank_to_csv(const FilterBankSpec& bank);
FilterBankSpec filter_bank_from_csv(std::string_view text);

struct CleanResult {
    Recording recording;                // the input signal, unmodified
    std::vector<std::uint8_t> mask;     // 1 where any channel exceeds the threshold
    std::vector<std::pair<std::size_t, std::size_t>> segments;  // [begin, end) runs of the mask
};

/// Flags samples whose absolute amplitude exceeds max_abs_uv on any channel.
/// Pass `mask` to preprocess::epoch_trials to drop overlapping trials.
CleanResult auto_clean(const Recording& rec, double max_abs_uv = 800.0);

}  // namespace errdecode::filters
