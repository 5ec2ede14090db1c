#include "errdecode/convnet/train.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"
#include "errdecode/parallel.hpp"

namespace errdecode::convnet {

using nlohmann::json;

void TrainConfig::validate() const {
    if (max_epochs == 0) throw invalid_argument("max_epochs must be positive");
    if (batch_size == 0) throw invalid_argument("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw invalid_argument("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw invalid_argument("moment decays must lie in [0, 1)");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw invalid_argument("split_fraction must lie in (0, 1)");
}

json TrainConfig::to_json() const {
    return {{"max_epochs", max_epochs},       {"batch_size", batch_size}, {"learning_rate", learning_rate},
            {"beta1", beta1},                 {"beta2", beta2},           {"adam_eps", adam_eps},
            {"seed", seed},                   {"split_fraction", split_fraction}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.seed = j.value("seed", c.seed);
    c.split_fraction = j.value("split_fraction", c.split_fraction);
    return c;
}

CsvTable history_table(std::span<const EpochRecord> history) {
    CsvTable t;
    t.header = {"epoch", "train_loss", "val_loss", "train_acc", "val_acc"};
    for (const auto& r : history) {
        t.rows.push_back({std::to_string(r.epoch), format_number(r.train_loss), format_number(r.val_loss),
                          format_number(r.train_acc), format_number(r.val_acc)});
    }
    return t;
}

template <typename T>
Tensor3<T> to_batch(const TrialSet& ts, std::span<const std::size_t> indices) {
    Tensor3<T> out(indices.size(), ts.n_channels(), ts.n_timepoints());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& trial = ts.trials.at(indices[i]);
        if (static_cast<std::size_t>(trial.rows()) != out.features ||
            static_cast<std::size_t>(trial.cols()) != out.time) {
            throw data_error(fmt::format("trial {} has shape [{} x {}], expected [{} x {}]", indices[i], trial.rows(),
                                         trial.cols(), out.features, out.time));
        }
        auto dst = out.sample(i);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(trial.data()[k]);
    }
    return out;
}

template <typename T>
Tensor3<T> to_batch(const TrialSet& ts) {
    std::vector<std::size_t> all(ts.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return to_batch<T>(ts, all);
}

namespace {

constexpr std::size_t kEvalChunk = 64;

template <typename T>
ForwardResult forward_all(const Network<T>& net, const TrialSet& ts, std::span<const std::size_t> indices) {
    const std::size_t n_chunks = (indices.size() + kEvalChunk - 1) / kEvalChunk;
    std::vector<ForwardResult> parts(n_chunks);
    parallel_for(n_chunks, [&](std::size_t c) {
        const auto lo = c * kEvalChunk;
        const auto hi = std::min(indices.size(), lo + kEvalChunk);
        parts[c] = net.forward(to_batch<T>(ts, indices.subspan(lo, hi - lo)));
    });
    ForwardResult out;
    out.n = indices.size();
    out.n_classes = net.config().n_classes;
    for (const auto& p : parts) {
        out.pre_softmax.insert(out.pre_softmax.end(), p.pre_softmax.begin(), p.pre_softmax.end());
        out.probabilities.insert(out.probabilities.end(), p.probabilities.begin(), p.probabilities.end());
    }
    return out;
}

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

template <typename T>
void adam_step(const std::vector<Param<T>*>& params, AdamState& state, const TrainConfig& c) {
    if (state.m.empty()) {
        for (const auto* p : params) {
            state.m.emplace_back(p->value.size(), 0.0);
            state.v.emplace_back(p->value.size(), 0.0);
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad[k];
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g;
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g * g;
            const double update = c.learning_rate * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.adam_eps);
            p.value[k] = static_cast<T>(static_cast<double>(p.value[k]) - update);
        }
    }
}

}  // namespace

template <typename T>
std::pair<double, double> loss_and_accuracy(const Network<T>& net, const TrialSet& ts,
                                            std::span<const std::size_t> indices) {
    if (indices.empty()) return {0.0, 0.0};
    const auto out = forward_all(net, ts, indices);
    double loss = 0.0;
    std::size_t correct = 0;
    const auto pred = out.argmax();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto y = static_cast<std::size_t>(ts.labels.at(indices[i]));
        loss -= std::log(std::max(out.prob(i, y), std::numeric_limits<double>::min()));
        if (pred[i] == ts.labels[indices[i]]) ++correct;
    }
    const auto n = static_cast<double>(indices.size());
    return {loss / n, static_cast<double>(correct) / n};
}

template <typename T>
TrainResult train(Network<T>& net, const TrialSet& ts, const TrainConfig& config) {
    config.validate();
    if (ts.size() != ts.labels.size()) throw invalid_argument("trial and label counts differ");
    const auto split = stratified_split(ts.labels, config.split_fraction, config.seed);
    ts.subset(split.train).require_both_classes("training split");

    TrainResult result;
    result.train_indices = split.train;
    result.val_indices = split.test;

    auto params = net.params();
    AdamState adam;
    Rng epoch_rng(config.seed, 2);
    std::vector<std::size_t> order = split.train;
    Network<T> best = net;
    double best_loss = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        epoch_rng.shuffle(order.begin(), order.end());
        for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
            const auto hi = std::min(order.size(), lo + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
            std::vector<int> labels;
            for (const auto i : idx) labels.push_back(ts.labels[i]);
            const auto batch = to_batch<T>(ts, idx);
            net.zero_grad();
            try {
                net.accumulate_gradients(batch, labels, epoch_rng.next_u64(), true);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Numerical) {
                    throw numerical_error(fmt::format("training diverged at epoch {}: {}", epoch, e.what()));
                }
                throw;
            }
            adam_step(params, adam, config);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        std::tie(rec.train_loss, rec.train_acc) = loss_and_accuracy(net, ts, split.train);
        if (split.test.empty()) {
            rec.val_loss = rec.train_loss;
            rec.val_acc = rec.train_acc;
        } else {
            std::tie(rec.val_loss, rec.val_acc) = loss_and_accuracy(net, ts, split.test);
        }
        if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
            throw numerical_error(fmt::format("training diverged at epoch {}: non-finite loss", epoch));
        }
        spdlog::debug("epoch {} train_loss {:.4f} val_loss {:.4f} train_acc {:.3f} val_acc {:.3f}", epoch,
                      rec.train_loss, rec.val_loss, rec.train_acc, rec.val_acc);
        result.history.push_back(rec);
        if (rec.val_loss < best_loss) {
            best_loss = rec.val_loss;
            result.best_epoch = epoch;
            best = net;
        }
    }
    net = std::move(best);
    net.zero_grad();
    return result;
}

template <typename T>
Evaluation evaluate(const Network<T>& net, const TrialSet& ts) {
    std::vector<std::size_t> all(ts.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Evaluation ev;
    ev.outputs = forward_all(net, ts, all);
    ev.predictions = ev.outputs.argmax();
    ev.accuracy = ts.labels.empty() ? 0.0 : classical::accuracy(ev.predictions, ts.labels);
    return ev;
}

#define ERRDECODE_INSTANTIATE_TRAIN(T)                                                                      \
    template Tensor3<T> to_batch<T>(const TrialSet&, std::span<const std::size_t>);                        \
    template Tensor3<T> to_batch<T>(const TrialSet&);                                                       \
    template TrainResult train<T>(Network<T>&, const TrialSet&, const TrainConfig&);                       \
    template Evaluation evaluate<T>(const Network<T>&, const TrialSet&);                                    \
    template std::pair<double, double> loss_and_accuracy<T>(const Network<T>&, const TrialSet&,             \
                                                            std::span<const std::size_t>);

ERRDECODE_INSTANTIATE_TRAIN(float)
ERRDECODE_INSTANTIATE_TRAIN(double)

#undef ERRDECODE_INSTANTIATE_TRAIN

}  // namespace errdecode::convnet
