#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errdecode/classical.hpp"
#include "errdecode/convnet/train.hpp"
#include "errdecode/core.hpp"
#include "errdecode/csv.hpp"
#include "errdecode/interpret.hpp"
#include "errdecode/preprocess.hpp"

namespace errdecode::pipeline {

enum class Method { ConvNet, Rlda, Fbcsp };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct ConvNetParams {
    std::array<std::size_t, 4> block_filters{8, 16, 32, 64};
    std::size_t temporal_kernel = 10;
    std::size_t pool_size = 3;
    std::size_t pool_stride = 3;
    double dropout_p = 0.5;
    bool batch_norm = true;
    convnet::TrainConfig train;
    preprocess::StandardizationConfig standardization;
};

struct RldaParams {
    double window_s = 0.1;
};

struct FbcspParams {
    classical::FbcspConfig config;
    double highpass_hz = 0.5;
    int highpass_order = 4;
    double clean_threshold_uv = 800.0;
};

/// One participant-equivalent decoding run.
struct RunConfig {
    std::vector<std::filesystem::path> inputs;
    Task task = Task::NaoVsNohu;
    std::optional<Robot> robot_filter;
    Interval interval{4.0, 7.0};
    Method method = Method::Rlda;
    std::string run_id = "run";
    std::uint64_t seed = 0;
    double test_fraction = 0.2;
    double resample_hz = 250.0;
    bool shuffle_labels = false;
    std::filesystem::path out_dir;
    ConvNetParams convnet;
    RldaParams rlda;
    FbcspParams fbcsp;

    void validate() const;
    nlohmann::json to_json() const;
    /// Overrides the fields present in `j`; unknown keys are rejected.
    void apply_json(const nlohmann::json& j);
};

struct FitResult {
    double accuracy = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_test_class0 = 0;
    std::size_t n_test_class1 = 0;
    std::vector<std::size_t> test_indices;
    std::vector<int> test_labels;
    std::vector<int> predictions;
    std::vector<convnet::EpochRecord> history;
};

/// Deletes files and directories it created unless commit() is called.
class OutputTransaction {
public:
    explicit OutputTransaction(std::filesystem::path root);
    ~OutputTransaction();
    OutputTransaction(const OutputTransaction&) = delete;
    OutputTransaction& operator=(const OutputTransaction&) = delete;

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path track(const std::filesystem::path& relative);
    void commit() { committed_ = true; }

private:
    std::filesystem::path root_;
    bool created_root_ = false;
    bool committed_ = false;
    std::vector<std::filesystem::path> paths_;
};

/// Method-specific preprocessing of one recording.
Recording convnet_preprocess(const Recording& rec, double resample_hz,
                             const preprocess::StandardizationConfig& standardization);
Recording classical_preprocess(const Recording& rec, double resample_hz);

/// Trials for the configured method, labelled for the configured task.
TrialSet load_trials(const RunConfig& config);

/// Loads inputs, preprocesses, splits, fits, evaluates and writes
/// model/, metrics.csv, predictions.csv, run.json (and history.csv).
FitResult run_fit(const RunConfig& config);

/// Fits in memory without touching the file system.
FitResult fit_in_memory(const RunConfig& config, const std::vector<Recording>& recordings,
                        convnet::ConvNetModel* convnet_out = nullptr);

CsvTable metrics_table(const RunConfig& config, const FitResult& result);

struct StatsOptions {
    std::uint64_t n_permutations = 100000;
    std::uint64_t seed = 0;
};

/// Permutation p per run, sign test and regression per method pair.
CsvTable run_stats(const std::vector<CsvTable>& accuracy_tables, const StatsOptions& options);

struct PerturbRequest {
    std::filesystem::path model_dir;
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path out_dir;
    interpret::PerturbOptions options;
};

interpret::CorrelationMap run_perturb(const PerturbRequest& request);

std::vector<double> run_l1dist(const std::filesystem::path& frames_dir, double frame_rate_hz,
                               const std::filesystem::path& out_csv);

}  // namespace errdecode::pipeline
