#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "errdecode/convnet/network.hpp"
#include "errdecode/core.hpp"
#include "errdecode/csv.hpp"

namespace errdecode::convnet {

struct TrainConfig {
    std::size_t max_epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    /// Fraction of the trials used for gradient steps; the rest is the
    /// validation set that picks the returned epoch.
    double split_fraction = 0.8;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
};

CsvTable history_table(std::span<const EpochRecord> history);

template <typename T>
Tensor3<T> to_batch(const TrialSet& ts, std::span<const std::size_t> indices);
template <typename T>
Tensor3<T> to_batch(const TrialSet& ts);

/// Adam over shuffled mini-batches; the network is left at the parameters of
/// the epoch with the lowest validation loss.
template <typename T>
TrainResult train(Network<T>& net, const TrialSet& ts, const TrainConfig& config);

struct Evaluation {
    double accuracy = 0.0;
    std::vector<int> predictions;
    ForwardResult outputs;
};

template <typename T>
Evaluation evaluate(const Network<T>& net, const TrialSet& ts);

/// Mean loss and accuracy of inference-mode outputs.
template <typename T>
std::pair<double, double> loss_and_accuracy(const Network<T>& net, const TrialSet& ts,
                                            std::span<const std::size_t> indices);

using ConvNetModel = Network<float>;

void save_convnet_model(const std::filesystem::path& dir, ConvNetModel& model, const nlohmann::json& meta);
ConvNetModel load_convnet_model(const std::filesystem::path& dir, nlohmann::json* meta = nullptr);

}  // namespace errdecode::convnet
