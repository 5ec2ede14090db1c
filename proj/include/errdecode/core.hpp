#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace errdecode {

/// Channel-major multichannel signal: rows are channels, columns are samples.
using Signal = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Outcome { Error, Correct };
enum class Robot { Nao, NoHu };

struct ConditionLabel {
    Outcome outcome = Outcome::Correct;
    Robot robot = Robot::Nao;

    bool operator==(const ConditionLabel&) const = default;
};

std::string_view to_string(Outcome outcome);
std::string_view to_string(Robot robot);
Outcome parse_outcome(std::string_view text);
Robot parse_robot(std::string_view text);

struct EventMarker {
    std::int64_t sample_index = 0;
    ConditionLabel condition;

    bool operator==(const EventMarker&) const = default;
};

/// Continuous recording in microvolts with stimulus-onset markers.
struct Recording {
    Signal data;
    double sample_rate_hz = 0.0;
    std::vector<std::string> channel_names;
    std::vector<EventMarker> events;

    std::size_t n_channels() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t n_samples() const { return static_cast<std::size_t>(data.cols()); }

    /// Throws Error(Data) when any structural invariant is violated.
    void validate() const;
};

/// Decoding interval relative to stimulus onset, in seconds.
struct Interval {
    double start_s = 0.0;
    double end_s = 0.0;

    std::int64_t start_offset(double fs) const;
    std::size_t n_timepoints(double fs) const;
    bool operator==(const Interval&) const = default;
};

enum class Task { ErrorVsCorrect, NaoVsNohu };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

/// Epoched trials. Each trial is a [n_channels x n_timepoints] matrix.
struct TrialSet {
    std::vector<Signal> trials;
    std::vector<int> labels;
    std::vector<ConditionLabel> conditions;
    double sample_rate_hz = 0.0;
    Interval interval;

    std::size_t size() const { return trials.size(); }
    std::size_t n_channels() const { return trials.empty() ? 0 : static_cast<std::size_t>(trials.front().rows()); }
    std::size_t n_timepoints() const { return trials.empty() ? 0 : static_cast<std::size_t>(trials.front().cols()); }

    /// Class counts {n_label0, n_label1}.
    std::pair<std::size_t, std::size_t> class_counts() const;
    void require_both_classes(std::string_view context) const;
    TrialSet subset(std::span<const std::size_t> indices) const;
};

/// Relabels trials for one of the two binary decoding problems.
/// NAO_VS_NOHU: NAO = 0, NOHU = 1. ERROR_VS_CORRECT: CORRECT = 0, ERROR = 1.
/// A robot filter keeps only trials shown with that robot.
TrialSet project_labels(const TrialSet& ts, Task task, std::optional<Robot> robot_filter = std::nullopt);

int label_for(Task task, const ConditionLabel& condition);

/// Stratified split by class. Returns {first, second} index lists where
/// `first` receives round(fraction * n_class) trials of each class.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
Split stratified_split(std::span<const int> labels, double fraction, std::uint64_t seed);

}  // namespace errdecode
