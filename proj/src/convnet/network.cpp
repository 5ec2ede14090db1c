#include "errdecode/convnet/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "errdecode/error.hpp"

namespace errdecode::convnet {

using nlohmann::json;

Deep4Config Deep4Config::desk(std::size_t n_channels, std::size_t n_timepoints) {
    Deep4Config c;
    c.n_channels = n_channels;
    c.n_timepoints = n_timepoints;
    c.block_filters = {8, 16, 32, 64};
    return c;
}

void Deep4Config::validate() const {
    if (n_channels == 0) throw invalid_argument("n_channels must be positive");
    if (n_timepoints == 0) throw invalid_argument("n_timepoints must be positive");
    if (n_classes < 2) throw invalid_argument("n_classes must be at least 2");
    for (const auto f : block_filters) {
        if (f == 0) throw invalid_argument("block_filters must be positive");
    }
    if (temporal_kernel == 0) throw invalid_argument("temporal_kernel must be positive");
    if (pool_size == 0 || pool_stride == 0) throw invalid_argument("pool_size and pool_stride must be positive");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw invalid_argument("dropout_p must lie in [0, 1)");

    std::size_t t = n_timepoints;
    for (int block = 0; block < 4; ++block) {
        if (t < temporal_kernel) {
            throw invalid_argument(fmt::format("non-positive intermediate length in block {} (length {} < kernel {})",
                                               block + 1, t, temporal_kernel));
        }
        t = t - temporal_kernel + 1;
        if (t < pool_size) {
            throw invalid_argument(fmt::format("non-positive intermediate length after pooling in block {} (length {} < pool {})",
                                               block + 1, t, pool_size));
        }
        t = (t - pool_size) / pool_stride + 1;
    }
}

json Deep4Config::to_json() const {
    return {{"n_channels", n_channels},
            {"n_timepoints", n_timepoints},
            {"n_classes", n_classes},
            {"block_filters", block_filters},
            {"temporal_kernel", temporal_kernel},
            {"pool_size", pool_size},
            {"pool_stride", pool_stride},
            {"dropout_p", dropout_p},
            {"batch_norm", batch_norm}};
}

Deep4Config Deep4Config::from_json(const json& j) {
    Deep4Config c;
    c.n_channels = j.at("n_channels").get<std::size_t>();
    c.n_timepoints = j.at("n_timepoints").get<std::size_t>();
    c.n_classes = j.value("n_classes", c.n_classes);
    c.block_filters = j.value("block_filters", c.block_filters);
    c.temporal_kernel = j.value("temporal_kernel", c.temporal_kernel);
    c.pool_size = j.value("pool_size", c.pool_size);
    c.pool_stride = j.value("pool_stride", c.pool_stride);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    c.batch_norm = j.value("batch_norm", c.batch_norm);
    return c;
}

std::vector<int> ForwardResult::argmax() const {
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < n_classes; ++k) {
            if (pre_softmax[i * n_classes + k] > pre_softmax[i * n_classes + best]) best = k;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

template <typename T>
double softmax_cross_entropy(const Tensor3<T>& logits, std::span<const int> labels, Tensor3<T>* dlogits,
                             ForwardResult* result) {
    const std::size_t n = logits.batch;
    const std::size_t k = logits.features;
    if (!labels.empty() && labels.size() != n) {
        throw invalid_argument(fmt::format("{} labels for a batch of {}", labels.size(), n));
    }
    if (dlogits) dlogits->resize(n, k, 1);
    if (result) {
        result->n = n;
        result->n_classes = k;
        result->pre_softmax.resize(n * k);
        result->probabilities.resize(n * k);
    }
    double loss = 0.0;
    std::vector<double> p(k);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits.at(i, 0, 0);
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, static_cast<double>(logits.at(i, c, 0)));
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            p[c] = std::exp(static_cast<double>(logits.at(i, c, 0)) - mx);
            z += p[c];
        }
        for (std::size_t c = 0; c < k; ++c) p[c] /= z;
        if (result) {
            for (std::size_t c = 0; c < k; ++c) {
                result->pre_softmax[i * k + c] = logits.at(i, c, 0);
                result->probabilities[i * k + c] = p[c];
            }
        }
        if (labels.empty()) continue;
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k) throw invalid_argument(fmt::format("label {} out of range", y));
        loss -= static_cast<double>(logits.at(i, static_cast<std::size_t>(y), 0)) - mx - std::log(z);
        if (dlogits) {
            for (std::size_t c = 0; c < k; ++c) {
                const double target = static_cast<std::size_t>(y) == c ? 1.0 : 0.0;
                dlogits->at(i, c, 0) = static_cast<T>((p[c] - target) / static_cast<double>(n));
            }
        }
    }
    return n == 0 ? 0.0 : loss / static_cast<double>(n);
}

template <typename T>
Network<T> Network<T>::build(const Deep4Config& config, std::uint64_t seed) {
    config.validate();
    Network net;
    net.config_ = config;
    net.seed_ = seed;
    const auto& f = config.block_filters;
    const std::size_t k = config.temporal_kernel;
    const bool bn = config.batch_norm;
    const T p = static_cast<T>(config.dropout_p);

    auto add_tail = [&](std::size_t block, std::size_t features) {
        if (bn) net.layers_.push_back(std::make_unique<BatchNorm<T>>(fmt::format("bn_{}", block), features));
        net.layers_.push_back(std::make_unique<Elu<T>>());
        net.layers_.push_back(std::make_unique<MaxPool<T>>(config.pool_size, config.pool_stride));
    };

    net.layers_.push_back(std::make_unique<TemporalConv<T>>(f[0], k, true));
    net.layers_.push_back(std::make_unique<Conv1d<T>>("conv_spat", f[0] * config.n_channels, f[0], 1, !bn));
    add_tail(1, f[0]);
    for (std::size_t b = 1; b < 4; ++b) {
        net.layers_.push_back(std::make_unique<Dropout<T>>(p));
        net.layers_.push_back(std::make_unique<Conv1d<T>>(fmt::format("conv_{}", b + 1), f[b - 1], f[b], k, !bn));
        add_tail(b + 1, f[b]);
    }
    Shape shape{config.n_channels, config.n_timepoints};
    for (const auto& layer : net.layers_) shape = layer->output_shape(shape);
    net.layers_.push_back(std::make_unique<Dense<T>>(shape.features * shape.time, config.n_classes));

    Rng rng(seed, 1);
    for (auto& layer : net.layers_) {
        auto ps = layer->params();
        if (ps.empty() || layer->kind() == "batch_norm") continue;
        const auto& w = ps.front()->shape;
        std::size_t fan_in = 1;
        for (std::size_t d = 1; d < w.size(); ++d) fan_in *= static_cast<std::size_t>(w[d]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto* param : ps) {
            for (auto& v : param->value) v = static_cast<T>(rng.uniform(-bound, bound));
        }
    }
    return net;
}

template <typename T>
Network<T>::Network(const Network& other) : config_(other.config_), seed_(other.seed_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

template <typename T>
std::vector<Param<T>*> Network<T>::params() {
    std::vector<Param<T>*> out;
    for (auto& l : layers_) {
        for (auto* p : l->params()) out.push_back(p);
    }
    return out;
}

template <typename T>
std::vector<Param<T>*> Network<T>::buffers() {
    std::vector<Param<T>*> out;
    for (auto& l : layers_) {
        for (auto* p : l->buffers()) out.push_back(p);
    }
    return out;
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto* p : params()) std::fill(p->grad.begin(), p->grad.end(), T(0));
}

template <typename T>
void Network<T>::check_input(const Tensor3<T>& batch) const {
    if (batch.features != config_.n_channels || batch.time != config_.n_timepoints) {
        throw invalid_argument(fmt::format("input shape [{} x {}] does not match network [{} x {}]", batch.features,
                                           batch.time, config_.n_channels, config_.n_timepoints));
    }
}

template <typename T>
ForwardResult Network<T>::forward(const Tensor3<T>& batch) const {
    check_input(batch);
    Tensor3<T> a = batch;
    Tensor3<T> b;
    LayerCache<T> cache;
    for (const auto& layer : layers_) {
        layer->forward(a, b, Mode::Infer, nullptr, cache);
        std::swap(a, b);
    }
    ForwardResult result;
    softmax_cross_entropy<T>(a, {}, nullptr, &result);
    return result;
}

template <typename T>
double Network<T>::accumulate_gradients(const Tensor3<T>& batch, std::span<const int> labels,
                                        std::uint64_t dropout_seed, bool update_statistics, ForwardResult* result) {
    check_input(batch);
    const std::size_t n_layers = layers_.size();
    std::vector<Tensor3<T>> acts(n_layers + 1);
    std::vector<LayerCache<T>> caches(n_layers);
    acts[0] = batch;
    for (std::size_t i = 0; i < n_layers; ++i) {
        Rng rng(dropout_seed, i);
        layers_[i]->forward(acts[i], acts[i + 1], Mode::Train, &rng, caches[i]);
    }
    Tensor3<T> grad;
    const double loss = softmax_cross_entropy<T>(acts[n_layers], labels, &grad, result);
    if (!std::isfinite(loss)) throw numerical_error("non-finite loss");

    Tensor3<T> din;
    for (std::size_t i = n_layers; i-- > 0;) {
        din.resize(acts[i].batch, acts[i].features, acts[i].time);
        layers_[i]->backward(acts[i], acts[i + 1], grad, din, caches[i]);
        std::swap(grad, din);
    }
    if (update_statistics) {
        for (std::size_t i = 0; i < n_layers; ++i) layers_[i]->commit(caches[i]);
    }
    return loss;
}

template <typename T>
double Network<T>::training_loss(const Tensor3<T>& batch, std::span<const int> labels,
                                 std::uint64_t dropout_seed) const {
    check_input(batch);
    Tensor3<T> a = batch;
    Tensor3<T> b;
    LayerCache<T> cache;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Rng rng(dropout_seed, i);
        layers_[i]->forward(a, b, Mode::Train, &rng, cache);
        std::swap(a, b);
    }
    return softmax_cross_entropy<T>(a, labels, nullptr, nullptr);
}

template class Network<float>;
template class Network<double>;
template double softmax_cross_entropy<float>(const Tensor3<float>&, std::span<const int>, Tensor3<float>*,
                                             ForwardResult*);
template double softmax_cross_entropy<double>(const Tensor3<double>&, std::span<const int>, Tensor3<double>*,
                                              ForwardResult*);

}  // namespace errdecode::convnet
