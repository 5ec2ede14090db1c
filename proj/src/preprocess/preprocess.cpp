#include "errdecode/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "errdecode/error.hpp"
#include "errdecode/parallel.hpp"

namespace errdecode::preprocess {

namespace {

constexpr double kKaiserBeta = 8.0;
constexpr double kCutoffFraction = 0.45;  // of the lower sample rate
constexpr std::int64_t kMaxRateFactor = 4096;

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace

void StandardizationConfig::validate() const {
    if (!(decay > 0.0 && decay < 1.0)) throw invalid_argument(fmt::format("decay must lie in (0, 1), got {}", decay));
    if (!(eps > 0.0)) throw invalid_argument(fmt::format("eps must be positive, got {}", eps));
    if (!(init_block_s >= 0.0)) throw invalid_argument(fmt::format("init_block_s must be >= 0, got {}", init_block_s));
}

Recording common_average_reference(const Recording& rec) {
    if (rec.n_channels() < 2) throw data_error("common average reference needs at least 2 channels");
    Recording out = rec;
    const Eigen::RowVectorXd mean = rec.data.colwise().mean();
    out.data.rowwise() -= mean;
    return out;
}

ResamplerDesign design_resampler(double source_hz, double target_hz) {
    if (!(target_hz > 0.0)) throw invalid_argument(fmt::format("target rate must be positive, got {}", target_hz));
    if (!(source_hz > 0.0)) throw invalid_argument(fmt::format("source rate must be positive, got {}", source_hz));

    // Rates are matched on a millihertz grid.
    const auto src = std::llround(source_hz * 1000.0);
    const auto dst = std::llround(target_hz * 1000.0);
    const auto g = std::gcd(src, dst);
    ResamplerDesign design;
    design.up = dst / g;
    design.down = src / g;
    if (design.up > kMaxRateFactor || design.down > kMaxRateFactor) {
        throw invalid_argument(fmt::format("rate ratio {}/{} too complex ({}:{})", target_hz, source_hz, design.up,
                                           design.down));
    }

    const auto max_factor = std::max(design.up, design.down);
    design.half_length = static_cast<std::size_t>(10 * max_factor);
    const std::size_t n_taps = 2 * design.half_length + 1;
    const double upsampled_rate = static_cast<double>(design.up) * source_hz;
    const double cutoff = kCutoffFraction * std::min(source_hz, target_hz) / upsampled_rate;  // cycles/sample

    design.taps.resize(n_taps);
    const double i0_beta = bessel_i0(kKaiserBeta);
    for (std::size_t n = 0; n < n_taps; ++n) {
        const double m = static_cast<double>(n) - static_cast<double>(design.half_length);
        const double arg = 2.0 * cutoff * m;
        const double sinc = m == 0.0 ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
        const double r = m / static_cast<double>(design.half_length);
        const double window = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
        design.taps[n] = 2.0 * cutoff * sinc * window;
    }
    const double total = std::accumulate(design.taps.begin(), design.taps.end(), 0.0);
    for (auto& t : design.taps) t *= static_cast<double>(design.up) / total;
    return design;
}

Recording resample(const Recording& rec, double target_hz) {
    if (!(target_hz > 0.0)) throw invalid_argument(fmt::format("non-positive target rate {}", target_hz));
    if (target_hz == rec.sample_rate_hz) return rec;

    const auto design = design_resampler(rec.sample_rate_hz, target_hz);
    const double ratio = target_hz / rec.sample_rate_hz;
    const auto n_in = static_cast<std::int64_t>(rec.n_samples());
    const auto n_out = static_cast<std::int64_t>(std::llround(static_cast<double>(n_in) * ratio));
    if (n_out < 1) throw data_error("resampled recording would be empty");

    Recording out;
    out.sample_rate_hz = target_hz;
    out.channel_names = rec.channel_names;
    out.data.resize(rec.data.rows(), n_out);

    const auto up = design.up;
    const auto half = static_cast<std::int64_t>(design.half_length);
    const auto n_taps = static_cast<std::int64_t>(design.taps.size());
    parallel_for(rec.n_channels(), [&](std::size_t c) {
        const auto ci = static_cast<Eigen::Index>(c);
        for (std::int64_t j = 0; j < n_out; ++j) {
            const std::int64_t pos = j * design.down + half;  // upsampled-domain index aligned with tap 0
            double acc = 0.0;
            for (std::int64_t k = pos % up; k < n_taps; k += up) {
                const std::int64_t i = (pos - k) / up;
                if (i < 0) break;
                if (i < n_in) acc += design.taps[static_cast<std::size_t>(k)] * rec.data(ci, i);
            }
            out.data(ci, j) = acc;
        }
    });

    for (const auto& ev : rec.events) {
        EventMarker moved = ev;
        const double scaled = std::nearbyint(static_cast<double>(ev.sample_index) * ratio);
        moved.sample_index = std::clamp<std::int64_t>(static_cast<std::int64_t>(scaled), 0, n_out - 1);
        out.events.push_back(moved);
    }
    return out;
}

Recording ewm_standardize(const Recording& rec, const StandardizationConfig& cfg) {
    cfg.validate();
    Recording out = rec;
    const auto n = static_cast<Eigen::Index>(rec.n_samples());
    const auto n_init = std::clamp<Eigen::Index>(std::llround(cfg.init_block_s * rec.sample_rate_hz), 1, n);
    const double a = cfg.decay;

    parallel_for(rec.n_channels(), [&](std::size_t c) {
        const auto ci = static_cast<Eigen::Index>(c);
        const auto block = rec.data.row(ci).head(n_init);
        double mean = block.mean();
        double var = (block.array() - mean).square().mean();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double x = rec.data(ci, t);
            mean = (1.0 - a) * mean + a * x;
            const double dev = x - mean;
            var = (1.0 - a) * var + a * dev * dev;
            out.data(ci, t) = dev / std::max(std::sqrt(var), cfg.eps);
        }
    });
    return out;
}

TrialSet epoch_trials(const Recording& rec, const Interval& interval, std::span<const std::uint8_t> reject_mask) {
    if (!(interval.end_s > interval.start_s)) {
        throw invalid_argument(fmt::format("interval start {} must precede end {}", interval.start_s, interval.end_s));
    }
    if (!reject_mask.empty() && reject_mask.size() != rec.n_samples()) {
        throw invalid_argument("rejection mask length differs from recording length");
    }
    const double fs = rec.sample_rate_hz;
    const auto offset = interval.start_offset(fs);
    const auto length = static_cast<std::int64_t>(interval.n_timepoints(fs));
    if (length < 1) throw invalid_argument("interval shorter than one sample");

    TrialSet ts;
    ts.sample_rate_hz = fs;
    ts.interval = interval;
    const auto n_samples = static_cast<std::int64_t>(rec.n_samples());
    for (std::size_t e = 0; e < rec.events.size(); ++e) {
        const auto& ev = rec.events[e];
        const auto begin = ev.sample_index + offset;
        if (begin < 0 || begin + length > n_samples) {
            throw data_error(fmt::format("event {} (sample {}): window [{}, {}) outside recording of {} samples", e,
                                         ev.sample_index, begin, begin + length, n_samples));
        }
        if (!reject_mask.empty()) {
            const auto first = reject_mask.begin() + begin;
            if (std::any_of(first, first + length, [](std::uint8_t f) { return f != 0; })) continue;
        }
        ts.trials.emplace_back(rec.data.middleCols(begin, length));
        ts.conditions.push_back(ev.condition);
        ts.labels.push_back(label_for(Task::NaoVsNohu, ev.condition));
    }
    return ts;
}

}  // namespace errdecode::preprocess
