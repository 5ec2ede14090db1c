#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "errdecode/convnet/tensor.hpp"
#include "errdecode/rng.hpp"

namespace errdecode::convnet {

enum class Mode { Train, Infer };

template <typename T>
struct Param {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<T> value;
    std::vector<T> grad;

    Param() = default;
    Param(std::string n, std::vector<std::int64_t> s) : name(std::move(n)), shape(std::move(s)) {
        std::size_t count = 1;
        for (const auto d : shape) count *= static_cast<std::size_t>(d);
        value.assign(count, T(0));
        grad.assign(count, T(0));
    }
};

/// Per-call scratch a layer needs between forward and backward.
template <typename T>
struct LayerCache {
    Mode mode = Mode::Infer;
    std::vector<T> values;
    std::vector<std::uint32_t> indices;
};

struct Shape {
    std::size_t features = 0;
    std::size_t time = 0;
    bool operator==(const Shape&) const = default;
};

/// A differentiable stage. forward() is const so a frozen network can serve
/// concurrent callers; backward() accumulates into the parameter gradients.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Shape output_shape(Shape in) const = 0;
    virtual void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode mode, Rng* rng, LayerCache<T>& cache) const = 0;
    virtual void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                          const LayerCache<T>& cache) = 0;
    /// Called after a training-mode forward (batch-norm running statistics).
    virtual void commit(const LayerCache<T>&) {}

    virtual std::vector<Param<T>*> params() { return {}; }
    virtual std::vector<Param<T>*> buffers() { return {}; }
    virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Same temporal kernel applied to every input channel:
/// [C, T] -> [F*C, T-K+1], output feature f*C + c.
template <typename T>
class TemporalConv final : public Layer<T> {
public:
    TemporalConv(std::size_t n_filters, std::size_t kernel, bool bias);
    std::string kind() const override { return "temporal_conv"; }
    Shape output_shape(Shape in) const override;
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>&) override;
    std::vector<Param<T>*> params() override;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<TemporalConv>(*this); }

    Param<T> weight;  // [F, K]
    Param<T> bias;    // [F] (empty when disabled)

private:
    std::size_t n_filters_;
    std::size_t kernel_;
    bool has_bias_;
};

/// Full-width convolution over features with kernel K along time:
/// [Fin, T] -> [Fout, T-K+1]. With K = 1 this is the spatial convolution
/// that collapses the (filter, channel) axis.
template <typename T>
class Conv1d final : public Layer<T> {
public:
    Conv1d(std::string name, std::size_t in_features, std::size_t out_features, std::size_t kernel, bool bias);
    std::string kind() const override { return "conv1d"; }
    Shape output_shape(Shape in) const override;
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>&) override;
    std::vector<Param<T>*> params() override;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv1d>(*this); }

    Param<T> weight;  // [Fout, Fin, K]
    Param<T> bias;

private:
    std::size_t in_features_;
    std::size_t out_features_;
    std::size_t kernel_;
    bool has_bias_;
};

template <typename T>
class BatchNorm final : public Layer<T> {
public:
    BatchNorm(std::string name, std::size_t features, T eps = T(1e-5), T momentum = T(0.1));
    std::string kind() const override { return "batch_norm"; }
    Shape output_shape(Shape in) const override { return in; }
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode mode, Rng*, LayerCache<T>& cache) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>& cache) override;
    void commit(const LayerCache<T>& cache) override;
    std::vector<Param<T>*> params() override { return {&gamma, &beta}; }
    std::vector<Param<T>*> buffers() override { return {&running_mean, &running_var}; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm>(*this); }

    Param<T> gamma;
    Param<T> beta;
    Param<T> running_mean;
    Param<T> running_var;

private:
    std::size_t features_;
    T eps_;
    T momentum_;
};

template <typename T>
class Elu final : public Layer<T> {
public:
    std::string kind() const override { return "elu"; }
    Shape output_shape(Shape in) const override { return in; }
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>&) override;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Elu>(*this); }
};

template <typename T>
class MaxPool final : public Layer<T> {
public:
    MaxPool(std::size_t size, std::size_t stride) : size_(size), stride_(stride) {}
    std::string kind() const override { return "max_pool"; }
    Shape output_shape(Shape in) const override;
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>& cache) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>& cache) override;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool>(*this); }

private:
    std::size_t size_;
    std::size_t stride_;
};

/// Inverted dropout; identity in inference mode. The mask is drawn from the
/// generator handed to forward(), so a fixed seed fixes the mask.
template <typename T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(T p) : p_(p) {}
    std::string kind() const override { return "dropout"; }
    Shape output_shape(Shape in) const override { return in; }
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode mode, Rng* rng, LayerCache<T>& cache) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>& cache) override;
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

private:
    T p_;
};

/// Flattens [F, T] and maps to [classes, 1].
template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t in_size, std::size_t out_size);
    std::string kind() const override { return "dense"; }
    Shape output_shape(Shape in) const override;
    void forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const override;
    void backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                  const LayerCache<T>&) override;
    std::vector<Param<T>*> params() override { return {&weight, &bias}; }
    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

    Param<T> weight;  // [out, in]
    Param<T> bias;    // [out]

private:
    std::size_t in_size_;
    std::size_t out_size_;
};

}  // namespace errdecode::convnet
