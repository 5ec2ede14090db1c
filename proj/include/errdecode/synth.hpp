#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errdecode/core.hpp"

namespace errdecode::synth {

enum class EffectKind { Erp, Bandpower };

struct NoiseSpec {
    double alpha = 1.0;         // power spectral density ~ 1 / f^alpha
    double amplitude_uv = 10.0; // rms of the 1/f component
    double white_uv = 2.0;      // rms of the white floor
};

struct ErpEffect {
    double amplitude_uv = 5.0;
    double latency_s = 5.0;
    double width_s = 0.2;
    std::vector<std::size_t> channels{3};
};

struct BandpowerEffect {
    std::pair<double, double> band_hz{8.0, 12.0};
    double ratio = 4.0;
    double base_uv = 4.0;  // rms of the band-limited component in class-0 trials
    std::vector<std::size_t> channels{3};
};

struct SynthSpec {
    EffectKind kind = EffectKind::Erp;
    std::size_t n_channels = 16;
    std::size_t n_trials = 200;
    double sample_rate_hz = 250.0;
    double trial_length_s = 7.0;
    double fixation_s = 2.0;
    NoiseSpec noise;
    ErpEffect erp;
    BandpowerEffect bandpower;
    double class_balance = 0.5;
    Task target = Task::NaoVsNohu;
    std::uint64_t seed = 0;

    /// Throws Error(InvalidArgument) naming the offending field.
    void validate() const;
    nlohmann::json to_json() const;
    static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthResult {
    Recording recording;
    std::vector<int> classes;  // ground-truth class per trial
    nlohmann::json manifest;
};

/// Class sequence with floor(n * balance) ones spread evenly:
/// class_k = floor((k+1) b) - floor(k b).
std::vector<int> class_pattern(std::size_t n_trials, double balance);

/// 1/f^alpha noise of the given length scaled to unit rms.
std::vector<double> pink_noise(std::size_t n, double alpha, double sample_rate_hz, std::uint64_t seed,
                               std::uint64_t stream);

SynthResult generate_erp(const SynthSpec& spec);
SynthResult generate_bandpower(const SynthSpec& spec);
SynthResult generate(const SynthSpec& spec);

/// Writes the container plus manifest.json.
void write_synth(const SynthResult& result, const std::filesystem::path& dir);

}  // namespace errdecode::synth
