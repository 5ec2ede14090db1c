#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace errdecode::convnet {

/// Batch activations laid out [batch][feature][time], time contiguous.
template <typename T>
struct Tensor3 {
    std::size_t batch = 0;
    std::size_t features = 0;
    std::size_t time = 0;
    std::vector<T> data;

    Tensor3() = default;
    Tensor3(std::size_t n, std::size_t f, std::size_t t) : batch(n), features(f), time(t), data(n * f * t, T(0)) {}

    void resize(std::size_t n, std::size_t f, std::size_t t) {
        batch = n;
        features = f;
        time = t;
        data.assign(n * f * t, T(0));
    }

    std::size_t size() const { return data.size(); }
    std::size_t sample_size() const { return features * time; }

    T* row(std::size_t n, std::size_t f) { return data.data() + (n * features + f) * time; }
    const T* row(std::size_t n, std::size_t f) const { return data.data() + (n * features + f) * time; }
    std::span<T> sample(std::size_t n) { return {data.data() + n * sample_size(), sample_size()}; }
    std::span<const T> sample(std::size_t n) const { return {data.data() + n * sample_size(), sample_size()}; }

    T& at(std::size_t n, std::size_t f, std::size_t t) { return data[(n * features + f) * time + t]; }
    T at(std::size_t n, std::size_t f, std::size_t t) const { return data[(n * features + f) * time + t]; }
};

}  // namespace errdecode::convnet
