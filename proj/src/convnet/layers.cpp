#include "errdecode/convnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "errdecode/error.hpp"
#include "errdecode/simd.hpp"

namespace errdecode::convnet {

namespace {

template <typename T>
std::size_t valid_length(std::size_t t, std::size_t kernel) {
    return t >= kernel ? t - kernel + 1 : 0;
}

}  // namespace

// --- TemporalConv -----------------------------------------------------------

template <typename T>
TemporalConv<T>::TemporalConv(std::size_t n_filters, std::size_t kernel, bool bias)
    : weight("conv_time.weight", {static_cast<std::int64_t>(n_filters), static_cast<std::int64_t>(kernel)}),
      n_filters_(n_filters),
      kernel_(kernel),
      has_bias_(bias) {
    if (bias) this->bias = Param<T>("conv_time.bias", {static_cast<std::int64_t>(n_filters)});
}

template <typename T>
Shape TemporalConv<T>::output_shape(Shape in) const {
    return {in.features * n_filters_, valid_length<T>(in.time, kernel_)};
}

template <typename T>
std::vector<Param<T>*> TemporalConv<T>::params() {
    if (has_bias_) return {&weight, &bias};
    return {&weight};
}

template <typename T>
void TemporalConv<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const {
    const auto& k = simd::kernels<T>();
    const std::size_t channels = in.features;
    const std::size_t t_out = valid_length<T>(in.time, kernel_);
    out.resize(in.batch, n_filters_ * channels, t_out);
    for (std::size_t n = 0; n < in.batch; ++n) {
        for (std::size_t f = 0; f < n_filters_; ++f) {
            const T b = has_bias_ ? bias.value[f] : T(0);
            for (std::size_t c = 0; c < channels; ++c) {
                T* o = out.row(n, f * channels + c);
                std::fill(o, o + t_out, b);
                const T* x = in.row(n, c);
                for (std::size_t j = 0; j < kernel_; ++j) k.axpy(weight.value[f * kernel_ + j], x + j, o, t_out);
            }
        }
    }
}

template <typename T>
void TemporalConv<T>::backward(const Tensor3<T>& in, const Tensor3<T>&, const Tensor3<T>& dout, Tensor3<T>& din,
                               const LayerCache<T>&) {
    const auto& k = simd::kernels<T>();
    const std::size_t channels = in.features;
    const std::size_t t_out = dout.time;
    for (std::size_t n = 0; n < in.batch; ++n) {
        for (std::size_t f = 0; f < n_filters_; ++f) {
            for (std::size_t c = 0; c < channels; ++c) {
                const T* g = dout.row(n, f * channels + c);
                const T* x = in.row(n, c);
                T* dx = din.row(n, c);
                if (has_bias_) bias.grad[f] += k.sum(g, t_out);
                for (std::size_t j = 0; j < kernel_; ++j) {
                    weight.grad[f * kernel_ + j] += k.dot(g, x + j, t_out);
                    k.axpy(weight.value[f * kernel_ + j], g, dx + j, t_out);
                }
            }
        }
    }
}

// --- Conv1d -----------------------------------------------------------------

template <typename T>
Conv1d<T>::Conv1d(std::string name, std::size_t in_features, std::size_t out_features, std::size_t kernel, bool bias)
    : weight(name + ".weight", {static_cast<std::int64_t>(out_features), static_cast<std::int64_t>(in_features),
                                static_cast<std::int64_t>(kernel)}),
      in_features_(in_features),
      out_features_(out_features),
      kernel_(kernel),
      has_bias_(bias) {
    if (bias) this->bias = Param<T>(name + ".bias", {static_cast<std::int64_t>(out_features)});
}

template <typename T>
Shape Conv1d<T>::output_shape(Shape in) const {
    if (in.features != in_features_) return {0, 0};
    return {out_features_, valid_length<T>(in.time, kernel_)};
}

template <typename T>
std::vector<Param<T>*> Conv1d<T>::params() {
    if (has_bias_) return {&weight, &bias};
    return {&weight};
}

template <typename T>
void Conv1d<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const {
    const auto& k = simd::kernels<T>();
    const std::size_t t_out = valid_length<T>(in.time, kernel_);
    out.resize(in.batch, out_features_, t_out);
    for (std::size_t n = 0; n < in.batch; ++n) {
        for (std::size_t g = 0; g < out_features_; ++g) {
            T* o = out.row(n, g);
            std::fill(o, o + t_out, has_bias_ ? bias.value[g] : T(0));
            const T* w = weight.value.data() + g * in_features_ * kernel_;
            for (std::size_t f = 0; f < in_features_; ++f) {
                const T* x = in.row(n, f);
                for (std::size_t j = 0; j < kernel_; ++j) k.axpy(w[f * kernel_ + j], x + j, o, t_out);
            }
        }
    }
}

template <typename T>
void Conv1d<T>::backward(const Tensor3<T>& in, const Tensor3<T>&, const Tensor3<T>& dout, Tensor3<T>& din,
                         const LayerCache<T>&) {
    const auto& k = simd::kernels<T>();
    const std::size_t t_out = dout.time;
    for (std::size_t n = 0; n < in.batch; ++n) {
        for (std::size_t g = 0; g < out_features_; ++g) {
            const T* grad = dout.row(n, g);
            if (has_bias_) bias.grad[g] += k.sum(grad, t_out);
            const T* w = weight.value.data() + g * in_features_ * kernel_;
            T* dw = weight.grad.data() + g * in_features_ * kernel_;
            for (std::size_t f = 0; f < in_features_; ++f) {
                const T* x = in.row(n, f);
                T* dx = din.row(n, f);
                for (std::size_t j = 0; j < kernel_; ++j) {
                    dw[f * kernel_ + j] += k.dot(grad, x + j, t_out);
                    k.axpy(w[f * kernel_ + j], grad, dx + j, t_out);
                }
            }
        }
    }
}

// --- BatchNorm --------------------------------------------------------------

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, std::size_t features, T eps, T momentum)
    : gamma(name + ".gamma", {static_cast<std::int64_t>(features)}),
      beta(name + ".beta", {static_cast<std::int64_t>(features)}),
      running_mean(name + ".running_mean", {static_cast<std::int64_t>(features)}),
      running_var(name + ".running_var", {static_cast<std::int64_t>(features)}),
      features_(features),
      eps_(eps),
      momentum_(momentum) {
    std::fill(gamma.value.begin(), gamma.value.end(), T(1));
    std::fill(running_var.value.begin(), running_var.value.end(), T(1));
}

// cache.values holds [mean, inv_std, var] per feature; indices[0] the element count.
template <typename T>
void BatchNorm<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode mode, Rng*, LayerCache<T>& cache) const {
    const std::size_t nf = features_;
    out.resize(in.batch, in.features, in.time);
    cache.mode = mode;
    cache.values.assign(3 * nf, T(0));
    cache.indices.assign(1, static_cast<std::uint32_t>(in.batch * in.time));
    T* mean = cache.values.data();
    T* inv_std = mean + nf;
    T* var = inv_std + nf;
    const auto& k = simd::kernels<T>();
    const T count = static_cast<T>(in.batch * in.time);

    for (std::size_t f = 0; f < nf; ++f) {
        if (mode == Mode::Train) {
            T s = 0;
            for (std::size_t n = 0; n < in.batch; ++n) s += k.sum(in.row(n, f), in.time);
            mean[f] = s / count;
            T ss = 0;
            for (std::size_t n = 0; n < in.batch; ++n) {
                const T* x = in.row(n, f);
                for (std::size_t t = 0; t < in.time; ++t) ss += (x[t] - mean[f]) * (x[t] - mean[f]);
            }
            var[f] = ss / count;
        } else {
            mean[f] = running_mean.value[f];
            var[f] = running_var.value[f];
        }
        inv_std[f] = T(1) / std::sqrt(var[f] + eps_);
        const T scale = gamma.value[f] * inv_std[f];
        const T shift = beta.value[f] - mean[f] * scale;
        for (std::size_t n = 0; n < in.batch; ++n) {
            const T* x = in.row(n, f);
            T* y = out.row(n, f);
            for (std::size_t t = 0; t < in.time; ++t) y[t] = x[t] * scale + shift;
        }
    }
}

template <typename T>
void BatchNorm<T>::commit(const LayerCache<T>& cache) {
    if (cache.mode != Mode::Train) return;
    const std::size_t nf = features_;
    const auto count = static_cast<T>(cache.indices.at(0));
    const T correction = count > T(1) ? count / (count - T(1)) : T(1);
    for (std::size_t f = 0; f < nf; ++f) {
        running_mean.value[f] = (T(1) - momentum_) * running_mean.value[f] + momentum_ * cache.values[f];
        running_var.value[f] = (T(1) - momentum_) * running_var.value[f] + momentum_ * cache.values[2 * nf + f] * correction;
    }
}

template <typename T>
void BatchNorm<T>::backward(const Tensor3<T>& in, const Tensor3<T>&, const Tensor3<T>& dout, Tensor3<T>& din,
                            const LayerCache<T>& cache) {
    const std::size_t nf = features_;
    const T* mean = cache.values.data();
    const T* inv_std = mean + nf;
    const T count = static_cast<T>(in.batch * in.time);
    for (std::size_t f = 0; f < nf; ++f) {
        T sum_dy = 0;
        T sum_dy_xhat = 0;
        for (std::size_t n = 0; n < in.batch; ++n) {
            const T* x = in.row(n, f);
            const T* dy = dout.row(n, f);
            for (std::size_t t = 0; t < in.time; ++t) {
                sum_dy += dy[t];
                sum_dy_xhat += dy[t] * (x[t] - mean[f]) * inv_std[f];
            }
        }
        gamma.grad[f] += sum_dy_xhat;
        beta.grad[f] += sum_dy;
        const T g = gamma.value[f] * inv_std[f];
        for (std::size_t n = 0; n < in.batch; ++n) {
            const T* x = in.row(n, f);
            const T* dy = dout.row(n, f);
            T* dx = din.row(n, f);
            if (cache.mode == Mode::Train) {
                for (std::size_t t = 0; t < in.time; ++t) {
                    const T xhat = (x[t] - mean[f]) * inv_std[f];
                    dx[t] += g * (dy[t] - sum_dy / count - xhat * sum_dy_xhat / count);
                }
            } else {
                for (std::size_t t = 0; t < in.time; ++t) dx[t] += g * dy[t];
            }
        }
    }
}

// --- Elu --------------------------------------------------------------------

template <typename T>
void Elu<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const {
    out.resize(in.batch, in.features, in.time);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const T x = in.data[i];
        out.data[i] = x > T(0) ? x : std::expm1(x);
    }
}

template <typename T>
void Elu<T>::backward(const Tensor3<T>& in, const Tensor3<T>& out, const Tensor3<T>& dout, Tensor3<T>& din,
                      const LayerCache<T>&) {
    for (std::size_t i = 0; i < in.size(); ++i) {
        din.data[i] += dout.data[i] * (in.data[i] > T(0) ? T(1) : out.data[i] + T(1));
    }
}

// --- MaxPool ----------------------------------------------------------------

template <typename T>
Shape MaxPool<T>::output_shape(Shape in) const {
    if (in.time < size_) return {in.features, 0};
    return {in.features, (in.time - size_) / stride_ + 1};
}

template <typename T>
void MaxPool<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>& cache) const {
    const auto shape = output_shape({in.features, in.time});
    out.resize(in.batch, in.features, shape.time);
    cache.indices.resize(out.size());
    for (std::size_t n = 0; n < in.batch; ++n) {
        for (std::size_t f = 0; f < in.features; ++f) {
            const T* x = in.row(n, f);
            T* y = out.row(n, f);
            std::uint32_t* arg = cache.indices.data() + (n * in.features + f) * shape.time;
            for (std::size_t i = 0; i < shape.time; ++i) {
                const std::size_t start = i * stride_;
                std::size_t best = start;
                for (std::size_t j = start + 1; j < start + size_; ++j) {
                    if (x[j] > x[best]) best = j;
                }
                y[i] = x[best];
                arg[i] = static_cast<std::uint32_t>(best);
            }
        }
    }
}

template <typename T>
void MaxPool<T>::backward(const Tensor3<T>& in, const Tensor3<T>&, const Tensor3<T>& dout, Tensor3<T>& din,
                          const LayerCache<T>& cache) {
    for (std::size_t n = 0; n < in.batch; ++n) {
        for (std::size_t f = 0; f < in.features; ++f) {
            const T* g = dout.row(n, f);
            T* dx = din.row(n, f);
            const std::uint32_t* arg = cache.indices.data() + (n * in.features + f) * dout.time;
            for (std::size_t i = 0; i < dout.time; ++i) dx[arg[i]] += g[i];
        }
    }
}

// --- Dropout ----------------------------------------------------------------

template <typename T>
void Dropout<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode mode, Rng* rng, LayerCache<T>& cache) const {
    out = in;
    cache.mode = mode;
    if (mode != Mode::Train || p_ <= T(0)) {
        cache.values.clear();
        return;
    }
    if (rng == nullptr) throw invalid_argument("dropout in training mode needs a generator");
    const T keep_scale = T(1) / (T(1) - p_);
    cache.values.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        cache.values[i] = rng->uniform() < static_cast<double>(p_) ? T(0) : keep_scale;
        out.data[i] *= cache.values[i];
    }
}

template <typename T>
void Dropout<T>::backward(const Tensor3<T>& in, const Tensor3<T>&, const Tensor3<T>& dout, Tensor3<T>& din,
                          const LayerCache<T>& cache) {
    if (cache.values.empty()) {
        for (std::size_t i = 0; i < in.size(); ++i) din.data[i] += dout.data[i];
        return;
    }
    for (std::size_t i = 0; i < in.size(); ++i) din.data[i] += dout.data[i] * cache.values[i];
}

// --- Dense ------------------------------------------------------------------

template <typename T>
Dense<T>::Dense(std::size_t in_size, std::size_t out_size)
    : weight("classifier.weight", {static_cast<std::int64_t>(out_size), static_cast<std::int64_t>(in_size)}),
      bias("classifier.bias", {static_cast<std::int64_t>(out_size)}),
      in_size_(in_size),
      out_size_(out_size) {}

template <typename T>
Shape Dense<T>::output_shape(Shape in) const {
    if (in.features * in.time != in_size_) return {0, 0};
    return {out_size_, 1};
}

template <typename T>
void Dense<T>::forward(const Tensor3<T>& in, Tensor3<T>& out, Mode, Rng*, LayerCache<T>&) const {
    const auto& k = simd::kernels<T>();
    out.resize(in.batch, out_size_, 1);
    for (std::size_t n = 0; n < in.batch; ++n) {
        const T* x = in.sample(n).data();
        for (std::size_t o = 0; o < out_size_; ++o) {
            out.at(n, o, 0) = bias.value[o] + k.dot(weight.value.data() + o * in_size_, x, in_size_);
        }
    }
}

template <typename T>
void Dense<T>::backward(const Tensor3<T>& in, const Tensor3<T>&, const Tensor3<T>& dout, Tensor3<T>& din,
                        const LayerCache<T>&) {
    const auto& k = simd::kernels<T>();
    for (std::size_t n = 0; n < in.batch; ++n) {
        const T* x = in.sample(n).data();
        T* dx = din.sample(n).data();
        for (std::size_t o = 0; o < out_size_; ++o) {
            const T g = dout.at(n, o, 0);
            bias.grad[o] += g;
            k.axpy(g, x, weight.grad.data() + o * in_size_, in_size_);
            k.axpy(g, weight.value.data() + o * in_size_, dx, in_size_);
        }
    }
}

#define ERRDECODE_INSTANTIATE_LAYERS(T) \
    template class TemporalConv<T>;     \
    template class Conv1d<T>;           \
    template class BatchNorm<T>;        \
    template class Elu<T>;              \
    template class MaxPool<T>;          \
    template class Dropout<T>;          \
    template class Dense<T>;

ERRDECODE_INSTANTIATE_LAYERS(float)
ERRDECODE_INSTANTIATE_LAYERS(double)

#undef ERRDECODE_INSTANTIATE_LAYERS

}  // namespace errdecode::convnet
