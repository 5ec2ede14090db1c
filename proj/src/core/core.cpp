#include "errdecode/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "errdecode/error.hpp"
#include "errdecode/rng.hpp"

namespace errdecode {

std::string_view to_string(Outcome outcome) { return outcome == Outcome::Error ? "error" : "correct"; }

std::string_view to_string(Robot robot) { return robot == Robot::Nao ? "nao" : "nohu"; }

Outcome parse_outcome(std::string_view text) {
    if (text == "error") return Outcome::Error;
    if (text == "correct") return Outcome::Correct;
    throw format_error(fmt::format("unknown outcome '{}'", text));
}

Robot parse_robot(std::string_view text) {
    if (text == "nao") return Robot::Nao;
    if (text == "nohu") return Robot::NoHu;
    throw format_error(fmt::format("unknown robot '{}'", text));
}

std::string_view to_string(Task task) { return task == Task::ErrorVsCorrect ? "error-vs-correct" : "robot-type"; }

Task parse_task(std::string_view text) {
    if (text == "error-vs-correct" || text == "error") return Task::ErrorVsCorrect;
    if (text == "robot-type" || text == "robot") return Task::NaoVsNohu;
    throw invalid_argument(fmt::format("unknown task '{}'", text));
}

void Recording::validate() const {
    if (data.rows() < 1 || data.cols() < 1) {
        throw data_error(fmt::format("recording must have at least one channel and sample (got {}x{})",
                                     data.rows(), data.cols()));
    }
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
        throw data_error(fmt::format("invalid sample rate {}", sample_rate_hz));
    }
    if (channel_names.size() != n_channels()) {
        throw data_error(fmt::format("{} channel names for {} channels", channel_names.size(), n_channels()));
    }
    std::set<std::string> unique(channel_names.begin(), channel_names.end());
    if (unique.size() != channel_names.size()) throw data_error("channel names must be unique");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto idx = events[i].sample_index;
        if (idx < 0 || idx >= static_cast<std::int64_t>(n_samples())) {
            throw data_error(fmt::format("event {} sample index {} outside [0, {})", i, idx, n_samples()));
        }
    }
}

std::int64_t Interval::start_offset(double fs) const { return static_cast<std::int64_t>(std::llround(start_s * fs)); }

std::size_t Interval::n_timepoints(double fs) const {
    const auto n = std::llround((end_s - start_s) * fs);
    return n > 0 ? static_cast<std::size_t>(n) : 0;
}

std::pair<std::size_t, std::size_t> TrialSet::class_counts() const {
    const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    return {labels.size() - ones, ones};
}

void TrialSet::require_both_classes(std::string_view context) const {
    const auto [zeros, ones] = class_counts();
    if (zeros == 0 || ones == 0) throw data_error(fmt::format("{}: single class in trial set", context));
}

TrialSet TrialSet::subset(std::span<const std::size_t> indices) const {
    TrialSet out;
    out.sample_rate_hz = sample_rate_hz;
    out.interval = interval;
    out.trials.reserve(indices.size());
    for (const auto i : indices) {
        out.trials.push_back(trials.at(i));
        out.labels.push_back(labels.at(i));
        if (!conditions.empty()) out.conditions.push_back(conditions.at(i));
    }
    return out;
}

int label_for(Task task, const ConditionLabel& condition) {
    if (task == Task::NaoVsNohu) return condition.robot == Robot::NoHu ? 1 : 0;
    return condition.outcome == Outcome::Error ? 1 : 0;
}

TrialSet project_labels(const TrialSet& ts, Task task, std::optional<Robot> robot_filter) {
    if (ts.conditions.size() != ts.size()) throw data_error("project_labels: trial set has no condition metadata");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (robot_filter && ts.conditions[i].robot != *robot_filter) continue;
        keep.push_back(i);
    }
    TrialSet out = ts.subset(keep);
    for (std::size_t i = 0; i < out.size(); ++i) out.labels[i] = label_for(task, out.conditions[i]);
    out.require_both_classes("project_labels");
    return out;
}

Split stratified_split(std::span<const int> labels, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw invalid_argument("split fraction must lie in (0, 1)");
    Split split;
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        Rng rng(seed, static_cast<std::uint64_t>(cls));
        rng.shuffle(members.begin(), members.end());
        const auto n_first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_first));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_first), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace errdecode
