#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "errdecode/convnet/train.hpp"
#include "errdecode/core.hpp"
#include "errdecode/csv.hpp"

namespace errdecode::interpret {

/// Correlation values laid out [class][channel][bin], all in [-1, 1].
struct CorrelationMap {
    std::size_t n_classes = 0;
    std::size_t n_channels = 0;
    std::size_t n_bins = 0;
    std::vector<double> values;
    double bin_width_s = 0.2;
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    std::size_t n_iterations = 0;
    std::uint64_t seed = 0;
    double noise_scale = 0.0;
    std::vector<std::string> channel_names;

    double at(std::size_t k, std::size_t c, std::size_t b) const { return values[(k * n_channels + c) * n_bins + b]; }
    double& at(std::size_t k, std::size_t c, std::size_t b) { return values[(k * n_channels + c) * n_bins + b]; }
    std::span<const double> class_map(std::size_t k) const {
        return {values.data() + k * n_channels * n_bins, n_channels * n_bins};
    }
};

/// Maps a batch of trials to pre-softmax scores [n_trials x n_classes].
using PreSoftmaxFn = std::function<Eigen::MatrixXd(const std::vector<Signal>&)>;

struct PerturbOptions {
    double noise_scale = 0.5;
    std::size_t n_iterations = 30;
    double bin_s = 0.2;
    double t_start_s = 2.0;
    double t_end_s = 6.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per iteration: Gaussian noise with std noise_scale times the per-channel
/// standard deviation of the trial set is added to every trial; the change in
/// pre-softmax output of each class is Pearson-correlated across trials with
/// the noise at each (channel, timepoint). Correlations are averaged over
/// iterations and then within bins. Time is relative to stimulus onset.
CorrelationMap perturbation_map(const PreSoftmaxFn& predict, const TrialSet& ts, const PerturbOptions& options);
CorrelationMap perturbation_map(const convnet::ConvNetModel& model, const TrialSet& ts, const PerturbOptions& options);

/// Non-overlapping means of `bin_samples` along time of a [K x C x T] tensor.
/// A trailing partial bin is dropped.
std::vector<double> bin_average(std::span<const double> full, std::size_t n_classes, std::size_t n_channels,
                                std::size_t n_timepoints, std::size_t bin_samples);

/// Elementwise mean of maps with identical layout.
CorrelationMap average_maps(std::span<const CorrelationMap> maps);

/// One CSV per class (rows = channels, columns = bins) plus map.json.
std::vector<std::filesystem::path> write_map(const std::filesystem::path& dir, const CorrelationMap& map);
CorrelationMap read_map(const std::filesystem::path& dir);

// --- frames -------------------------------------------------------------------

struct FrameSequence {
    std::vector<Eigen::MatrixXd> frames;  // intensities in [0, 1]
    double frame_rate_hz = 0.0;
};

/// Portable graymap/pixmap (P2, P3, P5, P6). Colour is converted to luminance.
Eigen::MatrixXd load_pnm(const std::filesystem::path& file);
void save_pgm(const std::filesystem::path& file, const Eigen::MatrixXd& frame);

/// All .pgm/.ppm/.pnm files in lexicographic order.
FrameSequence load_frames(const std::filesystem::path& dir, double frame_rate_hz);

/// Mean absolute per-pixel change between consecutive frames.
std::vector<double> l1_frame_distance(const FrameSequence& fs);

CsvTable l1_table(std::span<const double> distances, double frame_rate_hz);

}  // namespace errdecode::interpret
