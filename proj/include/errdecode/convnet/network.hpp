#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "errdecode/convnet/layers.hpp"

namespace errdecode::convnet {

struct Deep4Config {
    std::size_t n_channels = 0;
    std::size_t n_timepoints = 0;
    std::size_t n_classes = 2;
    std::array<std::size_t, 4> block_filters{25, 50, 100, 200};
    std::size_t temporal_kernel = 10;
    std::size_t pool_size = 3;
    std::size_t pool_stride = 3;
    double dropout_p = 0.5;
    bool batch_norm = true;

    /// Reduced filter counts (8/16/32/64) for small machines.
    static Deep4Config desk(std::size_t n_channels, std::size_t n_timepoints);

    void validate() const;
    nlohmann::json to_json() const;
    static Deep4Config from_json(const nlohmann::json& j);
};

struct ForwardResult {
    std::size_t n = 0;
    std::size_t n_classes = 0;
    std::vector<double> pre_softmax;    // [n x n_classes]
    std::vector<double> probabilities;  // [n x n_classes]

    double logit(std::size_t i, std::size_t k) const { return pre_softmax[i * n_classes + k]; }
    double prob(std::size_t i, std::size_t k) const { return probabilities[i * n_classes + k]; }
    std::vector<int> argmax() const;
};

/// Deep4-style stack. Block 1 is temporal conv, spatial conv, batch norm,
/// ELU, max pool; blocks 2-4 are dropout, conv, batch norm, ELU, max pool;
/// the head is a dense layer to n_classes.
template <typename T>
class Network {
public:
    static Network build(const Deep4Config& config, std::uint64_t seed);

    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    const Deep4Config& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }

    std::size_t n_layers() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
    const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

    std::vector<Param<T>*> params();
    std::vector<Param<T>*> buffers();
    void zero_grad();

    /// Inference mode: frozen batch-norm statistics, no dropout.
    ForwardResult forward(const Tensor3<T>& batch) const;

    /// Training-mode forward and backward. Gradients of the mean
    /// cross-entropy are accumulated into the parameters; the dropout masks
    /// are a function of `dropout_seed` alone. When `update_statistics` is set
    /// the batch-norm running estimates absorb this batch.
    double accumulate_gradients(const Tensor3<T>& batch, std::span<const int> labels, std::uint64_t dropout_seed,
                                bool update_statistics, ForwardResult* result = nullptr);

    /// Loss of a training-mode forward with the given dropout masks; no side effects.
    double training_loss(const Tensor3<T>& batch, std::span<const int> labels, std::uint64_t dropout_seed) const;

private:
    Network() = default;
    void check_input(const Tensor3<T>& batch) const;

    Deep4Config config_;
    std::uint64_t seed_ = 0;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

extern template class Network<float>;
extern template class Network<double>;

/// Softmax cross-entropy averaged over the batch. Writes (p - onehot) / n into
/// `dlogits` when non-null.
template <typename T>
double softmax_cross_entropy(const Tensor3<T>& logits, std::span<const int> labels, Tensor3<T>* dlogits,
                             ForwardResult* result);

}  // namespace errdecode::convnet
