#include "errdecode/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"
#include "errdecode/rng.hpp"

namespace errdecode::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error field_error(const std::string& field, const std::string& why) {
    return invalid_argument(fmt::format("invalid field '{}': {}", field, why));
}

void check_keys(const json& j, const std::string& prefix, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw field_error(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw field_error(prefix + key, "unknown field");
    }
}

template <typename V>
void read_field(const json& j, const std::string& prefix, const char* key, V& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<V>();
    } catch (const json::exception&) {
        throw field_error(prefix + key, "wrong type");
    }
}

void check_channels(const std::vector<std::size_t>& channels, std::size_t n_channels, const std::string& field) {
    if (channels.empty()) throw field_error(field, "needs at least one channel");
    for (const auto c : channels) {
        if (c >= n_channels) throw field_error(field, fmt::format("channel {} outside the {}-channel montage", c, n_channels));
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

/// Gaussian spectrum with random phases shaped by gain(f), unit rms output.
template <typename Gain>
std::vector<double> shaped_noise(std::size_t n, double fs_hz, std::uint64_t seed, std::uint64_t stream, Gain gain) {
    const std::size_t m = next_pow2(std::max<std::size_t>(n, 2));
    Rng rng(seed, stream);
    std::vector<std::complex<double>> spectrum(m / 2 + 1);
    for (std::size_t k = 1; k < spectrum.size(); ++k) {
        const double f = static_cast<double>(k) * fs_hz / static_cast<double>(m);
        const double g = gain(f);
        const double re = rng.normal();
        const double im = k == m / 2 ? 0.0 : rng.normal();
        spectrum[k] = {re * g, im * g};
    }
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> full;
    fft.inv(full, spectrum, static_cast<Eigen::Index>(m));
    std::vector<double> out(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
    double mean = 0.0;
    for (const auto v : out) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (auto& v : out) {
        v -= mean;
        ss += v * v;
    }
    const double rms = std::sqrt(ss / static_cast<double>(n));
    if (rms > 0.0) {
        for (auto& v : out) v /= rms;
    }
    return out;
}

ConditionLabel condition_for(const SynthSpec& spec, std::size_t trial, int cls) {
    // Non-target factor alternates in pairs.
    const bool other = (trial / 2) % 2 == 1;
    ConditionLabel c;
    if (spec.target == Task::NaoVsNohu) {
        c.robot = cls == 1 ? Robot::NoHu : Robot::Nao;
        c.outcome = other ? Outcome::Error : Outcome::Correct;
    } else {
        c.outcome = cls == 1 ? Outcome::Error : Outcome::Correct;
        c.robot = other ? Robot::NoHu : Robot::Nao;
    }
    return c;
}

struct Layout {
    std::size_t trial_samples = 0;
    std::size_t fixation_samples = 0;
    std::size_t stride = 0;
    std::size_t total = 0;
};

Layout layout(const SynthSpec& spec) {
    Layout l;
    l.trial_samples = static_cast<std::size_t>(std::llround(spec.trial_length_s * spec.sample_rate_hz));
    l.fixation_samples = static_cast<std::size_t>(std::llround(spec.fixation_s * spec.sample_rate_hz));
    l.stride = l.trial_samples + l.fixation_samples;
    l.total = spec.n_trials * l.stride + l.fixation_samples;
    return l;
}

SynthResult background(const SynthSpec& spec, const Layout& lay) {
    SynthResult result;
    auto& rec = result.recording;
    rec.sample_rate_hz = spec.sample_rate_hz;
    rec.data.resize(static_cast<Eigen::Index>(spec.n_channels), static_cast<Eigen::Index>(lay.total));
    for (std::size_t c = 0; c < spec.n_channels; ++c) {
        rec.channel_names.push_back(fmt::format("ch{}", c));
        const auto pink = pink_noise(lay.total, spec.noise.alpha, spec.sample_rate_hz, spec.seed, 1000 + c);
        Rng white(spec.seed, 2000 + c);
        for (std::size_t t = 0; t < lay.total; ++t) {
            rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) =
                spec.noise.amplitude_uv * pink[t] + spec.noise.white_uv * white.normal();
        }
    }
    result.classes = class_pattern(spec.n_trials, spec.class_balance);
    for (std::size_t k = 0; k < spec.n_trials; ++k) {
        rec.events.push_back({static_cast<std::int64_t>(lay.fixation_samples + k * lay.stride),
                              condition_for(spec, k, result.classes[k])});
    }
    return result;
}

json base_manifest(const SynthSpec& spec, const SynthResult& r) {
    std::size_t ones = 0;
    for (const auto c : r.classes) ones += c == 1 ? 1 : 0;
    return {{"spec", spec.to_json()},
            {"n_class0", r.classes.size() - ones},
            {"n_class1", ones},
            {"classes", r.classes},
            {"target", to_string(spec.target)}};
}

}  // namespace

void SynthSpec::validate() const {
    if (n_channels < 2) throw field_error("n_channels", "must be at least 2");
    if (n_trials < 2) throw field_error("n_trials", "must be at least 2");
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) throw field_error("sample_rate_hz", "must be positive");
    if (!(trial_length_s > 0.0)) throw field_error("trial_length_s", "must be positive");
    if (!(fixation_s >= 0.0)) throw field_error("fixation_s", "must be non-negative");
    if (!(class_balance > 0.0 && class_balance < 1.0)) throw field_error("class_balance", "must lie in (0, 1)");
    if (!std::isfinite(noise.alpha)) throw field_error("noise.alpha", "must be finite");
    if (!(noise.amplitude_uv >= 0.0)) throw field_error("noise.amplitude_uv", "must be non-negative");
    if (!(noise.white_uv >= 0.0)) throw field_error("noise.white_uv", "must be non-negative");
    if (kind == EffectKind::Erp) {
        if (!std::isfinite(erp.amplitude_uv)) throw field_error("erp.amplitude_uv", "must be finite");
        if (!(erp.latency_s >= 0.0 && erp.latency_s <= trial_length_s)) {
            throw field_error("erp.latency_s", "must lie within the trial");
        }
        if (!(erp.width_s > 0.0)) throw field_error("erp.width_s", "must be positive");
        check_channels(erp.channels, n_channels, "erp.channels");
    } else {
        const auto [lo, hi] = bandpower.band_hz;
        if (!(lo > 0.0 && hi > lo && hi < sample_rate_hz / 2.0)) {
            throw field_error("bandpower.band_hz", "needs 0 < lo < hi < Nyquist");
        }
        if (!(bandpower.ratio > 0.0)) throw field_error("bandpower.ratio", "must be positive");
        if (!(bandpower.base_uv >= 0.0)) throw field_error("bandpower.base_uv", "must be non-negative");
        check_channels(bandpower.channels, n_channels, "bandpower.channels");
    }
}

json SynthSpec::to_json() const {
    json j = {{"kind", kind == EffectKind::Erp ? "erp" : "bandpower"},
              {"n_channels", n_channels},
              {"n_trials", n_trials},
              {"sample_rate_hz", sample_rate_hz},
              {"trial_length_s", trial_length_s},
              {"fixation_s", fixation_s},
              {"noise", {{"alpha", noise.alpha}, {"amplitude_uv", noise.amplitude_uv}, {"white_uv", noise.white_uv}}},
              {"class_balance", class_balance},
              {"target", target == Task::NaoVsNohu ? "robot" : "outcome"},
              {"seed", seed}};
    if (kind == EffectKind::Erp) {
        j["erp"] = {{"amplitude_uv", erp.amplitude_uv},
                    {"latency_s", erp.latency_s},
                    {"width_s", erp.width_s},
                    {"channels", erp.channels}};
    } else {
        j["bandpower"] = {{"band_hz", {bandpower.band_hz.first, bandpower.band_hz.second}},
                          {"ratio", bandpower.ratio},
                          {"base_uv", bandpower.base_uv},
                          {"channels", bandpower.channels}};
    }
    return j;
}

SynthSpec SynthSpec::from_json(const json& j) {
    SynthSpec s;
    check_keys(j, "", {"kind", "n_channels", "n_trials", "sample_rate_hz", "trial_length_s", "fixation_s", "noise",
                       "erp", "bandpower", "class_balance", "target", "seed"});
    std::string kind = "erp";
    read_field(j, "", "kind", kind);
    if (kind == "erp") {
        s.kind = EffectKind::Erp;
    } else if (kind == "bandpower") {
        s.kind = EffectKind::Bandpower;
    } else {
        throw field_error("kind", fmt::format("expected 'erp' or 'bandpower', got '{}'", kind));
    }
    read_field(j, "", "n_channels", s.n_channels);
    read_field(j, "", "n_trials", s.n_trials);
    read_field(j, "", "sample_rate_hz", s.sample_rate_hz);
    read_field(j, "", "trial_length_s", s.trial_length_s);
    read_field(j, "", "fixation_s", s.fixation_s);
    read_field(j, "", "class_balance", s.class_balance);
    read_field(j, "", "seed", s.seed);
    std::string target = "robot";
    read_field(j, "", "target", target);
    if (target == "robot") {
        s.target = Task::NaoVsNohu;
    } else if (target == "outcome") {
        s.target = Task::ErrorVsCorrect;
    } else {
        throw field_error("target", fmt::format("expected 'robot' or 'outcome', got '{}'", target));
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        check_keys(n, "noise.", {"alpha", "amplitude_uv", "white_uv"});
        read_field(n, "noise.", "alpha", s.noise.alpha);
        read_field(n, "noise.", "amplitude_uv", s.noise.amplitude_uv);
        read_field(n, "noise.", "white_uv", s.noise.white_uv);
    }
    if (j.contains("erp")) {
        const auto& e = j.at("erp");
        check_keys(e, "erp.", {"amplitude_uv", "latency_s", "width_s", "channels"});
        read_field(e, "erp.", "amplitude_uv", s.erp.amplitude_uv);
        read_field(e, "erp.", "latency_s", s.erp.latency_s);
        read_field(e, "erp.", "width_s", s.erp.width_s);
        read_field(e, "erp.", "channels", s.erp.channels);
    }
    if (j.contains("bandpower")) {
        const auto& b = j.at("bandpower");
        check_keys(b, "bandpower.", {"band_hz", "ratio", "base_uv", "channels"});
        std::vector<double> band{s.bandpower.band_hz.first, s.bandpower.band_hz.second};
        read_field(b, "bandpower.", "band_hz", band);
        if (band.size() != 2) throw field_error("bandpower.band_hz", "expected [lo, hi]");
        s.bandpower.band_hz = {band[0], band[1]};
        read_field(b, "bandpower.", "ratio", s.bandpower.ratio);
        read_field(b, "bandpower.", "base_uv", s.bandpower.base_uv);
        read_field(b, "bandpower.", "channels", s.bandpower.channels);
    }
    s.validate();
    return s;
}

std::vector<int> class_pattern(std::size_t n_trials, double balance) {
    std::vector<int> out(n_trials);
    for (std::size_t k = 0; k < n_trials; ++k) {
        const auto a = std::floor(static_cast<double>(k + 1) * balance);
        const auto b = std::floor(static_cast<double>(k) * balance);
        out[k] = static_cast<int>(a - b);
    }
    return out;
}

std::vector<double> pink_noise(std::size_t n, double alpha, double sample_rate_hz, std::uint64_t seed,
                               std::uint64_t stream) {
    return shaped_noise(n, sample_rate_hz, seed, stream, [alpha](double f) { return std::pow(f, -alpha / 2.0); });
}

SynthResult generate_erp(const SynthSpec& spec) {
    spec.validate();
    const auto lay = layout(spec);
    auto result = background(spec, lay);
    auto& data = result.recording.data;
    const double fs_hz = spec.sample_rate_hz;
    for (std::size_t k = 0; k < spec.n_trials; ++k) {
        if (result.classes[k] != 1) continue;
        const std::size_t onset = lay.fixation_samples + k * lay.stride;
        for (std::size_t t = 0; t < lay.trial_samples; ++t) {
            const double z = (static_cast<double>(t) / fs_hz - spec.erp.latency_s) / spec.erp.width_s;
            const double v = spec.erp.amplitude_uv * std::exp(-0.5 * z * z);
            for (const auto c : spec.erp.channels) {
                data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(onset + t)) += v;
            }
        }
    }
    result.manifest = base_manifest(spec, result);
    result.manifest["effect_channels"] = spec.erp.channels;
    return result;
}

SynthResult generate_bandpower(const SynthSpec& spec) {
    spec.validate();
    const auto lay = layout(spec);
    auto result = background(spec, lay);
    auto& data = result.recording.data;
    const auto [lo, hi] = spec.bandpower.band_hz;
    const double gain = std::sqrt(spec.bandpower.ratio);
    for (const auto c : spec.bandpower.channels) {
        const auto osc = shaped_noise(lay.total, spec.sample_rate_hz, spec.seed, 3000 + c,
                                      [lo = lo, hi = hi](double f) { return f >= lo && f <= hi ? 1.0 : 0.0; });
        std::vector<double> scale(lay.total, 1.0);
        for (std::size_t k = 0; k < spec.n_trials; ++k) {
            if (result.classes[k] != 1) continue;
            const std::size_t onset = lay.fixation_samples + k * lay.stride;
            std::fill(scale.begin() + static_cast<std::ptrdiff_t>(onset),
                      scale.begin() + static_cast<std::ptrdiff_t>(onset + lay.trial_samples), gain);
        }
        for (std::size_t t = 0; t < lay.total; ++t) {
            data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) += spec.bandpower.base_uv * scale[t] * osc[t];
        }
    }
    result.manifest = base_manifest(spec, result);
    result.manifest["effect_channels"] = spec.bandpower.channels;
    return result;
}

SynthResult generate(const SynthSpec& spec) {
    return spec.kind == EffectKind::Erp ? generate_erp(spec) : generate_bandpower(spec);
}

void write_synth(const SynthResult& result, const fs::path& dir) {
    save_recording(result.recording, dir);
    write_text(dir / "manifest.json", result.manifest.dump(2) + "\n");
}

}  // namespace errdecode::synth
