#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "errdecode/core.hpp"
#include "errdecode/filters.hpp"

namespace errdecode::classical {

// ---------------------------------------------------------------------------
// Shrinkage covariance and regularized LDA

struct ShrinkageEstimate {
    Eigen::MatrixXd covariance;
    double gamma = 0.0;
};

/// Ledoit-Wolf shrinkage toward (trace(S)/d) I, with S = Xc^T Xc / n.
/// gamma = min(b2, d2) / d2 where
///   d2 = ||S - mu I||_F^2,  b2 = (1/n^2) sum_k ||x_k x_k^T - S||_F^2.
/// With assume_centered the rows are used as given (no mean removal).
ShrinkageEstimate ledoit_wolf(const Eigen::MatrixXd& samples, bool assume_centered = false);

struct RLDAModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double shrinkage_gamma = 0.0;

    double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + bias; }
    std::vector<int> predict(const Eigen::MatrixXd& features) const;
};

/// Solves Sigma_shrunk w = mu1 - mu0 on class-centered samples; bias places
/// the boundary midway between the class means. `fixed_gamma` bypasses the
/// Ledoit-Wolf estimate.
RLDAModel fit_rlda(const Eigen::MatrixXd& features, std::span<const int> labels,
                   std::optional<double> fixed_gamma = std::nullopt);

/// Per-channel means of consecutive non-overlapping windows, channel-major.
Eigen::MatrixXd time_domain_features(const TrialSet& ts, double window_s);

// ---------------------------------------------------------------------------
// Common spatial patterns

struct CSPModel {
    Eigen::MatrixXd filters;      // columns are spatial filters, eigenvalue descending
    Eigen::VectorXd eigenvalues;  // in [0, 1]
    int n_pairs = 2;

    /// First and last n_pairs columns.
    Eigen::MatrixXd selected_filters() const;
};

/// Trace-normalized spatial covariance of one (mean-removed) trial.
Eigen::MatrixXd normalized_covariance(const Signal& trial);

/// Solves C1 w = lambda (C1 + C2) w by whitening the composite covariance.
/// C1 belongs to the class with label 1.
CSPModel csp_from_covariances(const Eigen::MatrixXd& c1, const Eigen::MatrixXd& c2, int n_pairs);

CSPModel fit_csp(const TrialSet& ts, int n_pairs);

/// Log relative variance of each selected filter output: [n_trials x 2m].
Eigen::MatrixXd csp_features(const CSPModel& model, const TrialSet& ts);

// ---------------------------------------------------------------------------
// Feature selection

/// Histogram estimate of I(feature; label) in nats, equal-width bins over
/// each feature's range. Constant features score 0.
std::vector<double> mutual_information(const Eigen::MatrixXd& features, std::span<const int> labels, int n_bins = 10);

/// Indices of the k highest-MI features, ties broken by lower index.
std::vector<std::size_t> mibif_select(const Eigen::MatrixXd& features, std::span<const int> labels, std::size_t k,
                                      int n_bins = 10);

// ---------------------------------------------------------------------------
// Filter-bank CSP

struct FbcspConfig {
    int n_pairs = 2;
    std::size_t n_selected = 8;
    int filter_order = 4;
    int mi_bins = 10;
};

/// Epoched band-passed copies of one recording, one TrialSet per usable band.
struct BandTrials {
    std::vector<std::size_t> band_indices;  // indices into the FilterBankSpec
    std::vector<std::pair<double, double>> bands;
    std::vector<TrialSet> sets;

    std::size_t n_trials() const { return sets.empty() ? 0 : sets.front().size(); }
    BandTrials subset(std::span<const std::size_t> trials) const;
    BandTrials project(Task task, std::optional<Robot> robot_filter) const;
};

/// Band-passes the recording for every bank band strictly below Nyquist
/// (others are skipped) and epochs each. Bands are processed in parallel.
BandTrials filter_bank_epochs(const Recording& rec, const filters::FilterBankSpec& bank, const Interval& interval,
                              int filter_order, std::span<const std::uint8_t> reject_mask = {});

struct SelectedFeature {
    std::size_t band = 0;    // position within BandTrials::sets
    std::size_t filter = 0;  // column of that band's csp_features
    bool operator==(const SelectedFeature&) const = default;
};

struct FBCSPModel {
    FbcspConfig config;
    double sample_rate_hz = 0.0;
    Interval interval;
    std::vector<std::size_t> band_indices;
    std::vector<std::pair<double, double>> bands;
    std::vector<CSPModel> csp;
    std::vector<SelectedFeature> selected;
    RLDAModel classifier;
};

FBCSPModel fit_fbcsp(const BandTrials& train, const FbcspConfig& config);

/// Convenience: band-pass, epoch and fit on every trial of the recording.
FBCSPModel fit_fbcsp(const Recording& rec, const filters::FilterBankSpec& bank, const Interval& interval,
                     const FbcspConfig& config, Task task = Task::NaoVsNohu);

/// All per-band CSP features concatenated band-major: [n_trials x bands*2m].
Eigen::MatrixXd fbcsp_all_features(const FBCSPModel& model, const BandTrials& data);
Eigen::MatrixXd fbcsp_selected_features(const FBCSPModel& model, const BandTrials& data);
std::vector<int> fbcsp_predict(const FBCSPModel& model, const BandTrials& data);

double accuracy(std::span<const int> predicted, std::span<const int> labels);

}  // namespace errdecode::classical
