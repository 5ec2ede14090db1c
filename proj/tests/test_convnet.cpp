#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>

#include "errdecode/convnet/train.hpp"
#include "errdecode/error.hpp"
#include "errdecode/model_io.hpp"
#include "errdecode/rng.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace errdecode;
using namespace errdecode::convnet;

namespace {

using support::kStep;
using support::kTolerance;
using support::layer_gradient_error;
using support::random_tensor;
using support::randomize;
using support::tiny_config;

TrialSet separable_set(std::size_t n, std::size_t channels, std::size_t time, std::uint64_t seed) {
    Rng rng(seed);
    TrialSet ts;
    ts.sample_rate_hz = 100.0;
    ts.interval = {0.0, static_cast<double>(time) / 100.0};
    for (std::size_t k = 0; k < n; ++k) {
        const int label = static_cast<int>(k % 2);
        Signal trial(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(time));
        for (Eigen::Index c = 0; c < trial.rows(); ++c) {
            for (Eigen::Index t = 0; t < trial.cols(); ++t) trial(c, t) = 0.5 * rng.normal();
        }
        const double sign = label == 1 ? 1.0 : -1.0;
        for (Eigen::Index t = 40; t < 80; ++t) trial(0, t) += sign;
        ts.trials.push_back(trial);
        ts.labels.push_back(label);
        ts.conditions.push_back({Outcome::Correct, label == 1 ? Robot::NoHu : Robot::Nao});
    }
    return ts;
}

std::vector<std::uint8_t> parameter_bytes(Network<float>& net) {
    std::vector<std::uint8_t> bytes;
    auto append = [&](const std::vector<Param<float>*>& ps) {
        for (auto* p : ps) {
            const auto* raw = reinterpret_cast<const std::uint8_t*>(p->value.data());
            bytes.insert(bytes.end(), raw, raw + p->value.size() * sizeof(float));
        }
    };
    append(net.params());
    append(net.buffers());
    return bytes;
}

}  // namespace

TEST_SUITE("convnet") {
    TEST_CASE("temporal convolution gradient") {
        TemporalConv<double> layer(3, 4, true);
        randomize(layer, 1);
        CHECK(layer_gradient_error(layer, random_tensor(2, 3, 12, 1), 10) < kTolerance);
    }

    TEST_CASE("spatial and temporal feature convolution gradients") {
        Conv1d<double> spat("conv_spat", 6, 4, 1, true);
        randomize(spat, 2);
        CHECK(layer_gradient_error(spat, random_tensor(3, 6, 9, 2), 20) < kTolerance);
        Conv1d<double> conv("conv_2", 4, 5, 3, false);
        randomize(conv, 3);
        CHECK(layer_gradient_error(conv, random_tensor(2, 4, 11, 3), 30) < kTolerance);
    }

    TEST_CASE("batch norm gradient in training mode") {
        BatchNorm<double> bn("bn_1", 4);
        randomize(bn, 4);
        CHECK(layer_gradient_error(bn, random_tensor(3, 4, 7, 4), 40) < kTolerance);
    }

    TEST_CASE("elu, max pool, dropout and dense gradients") {
        Elu<double> elu;
        CHECK(layer_gradient_error(elu, random_tensor(2, 3, 10, 5), 50) < kTolerance);
        MaxPool<double> pool(3, 2);
        CHECK(layer_gradient_error(pool, random_tensor(2, 3, 11, 6), 60) < kTolerance);
        Dropout<double> dropout(0.4);
        CHECK(layer_gradient_error(dropout, random_tensor(2, 3, 10, 7), 70) < kTolerance);
        Dense<double> dense(3 * 4, 2);
        randomize(dense, 8);
        CHECK(layer_gradient_error(dense, random_tensor(3, 3, 4, 8), 80) < kTolerance);
    }

    TEST_CASE("end-to-end gradient matches finite differences") {
        for (const bool bn : {true, false}) {
            auto cfg = tiny_config();
            cfg.batch_norm = bn;
            auto net = Network<double>::build(cfg, 3);
            const auto batch = random_tensor(6, 3, 40, 11);
            const std::vector<int> labels{0, 1, 1, 0, 1, 0};
            const std::uint64_t dropout_seed = 77;
            net.zero_grad();
            net.accumulate_gradients(batch, labels, dropout_seed, false);
            double worst = 0.0;
            std::size_t checked = 0;
            for (auto* p : net.params()) {
                for (std::size_t i = 0; i < p->value.size(); ++i) {
                    const double saved = p->value[i];
                    p->value[i] = saved + kStep;
                    const double up = net.training_loss(batch, labels, dropout_seed);
                    p->value[i] = saved - kStep;
                    const double down = net.training_loss(batch, labels, dropout_seed);
                    p->value[i] = saved;
                    const double err = support::relative_error(p->grad[i], (up - down) / (2.0 * kStep));
                    if (err >= kTolerance) {
                        CAPTURE(p->name);
                        CAPTURE(i);
                        CAPTURE(p->grad[i]);
                        CHECK(err < kTolerance);
                    }
                    worst = std::max(worst, err);
                    ++checked;
                }
            }
            CAPTURE(bn);
            CHECK(worst < kTolerance);
            std::size_t total = 0;
            for (auto* p : net.params()) total += p->value.size();
            CHECK(checked == total);
            CHECK(checked > 150);
        }
    }

    TEST_CASE("zero head gives the closed-form residual") {
        auto net = Network<double>::build(tiny_config(), 1);
        auto& head = dynamic_cast<Dense<double>&>(net.layer(net.n_layers() - 1));
        std::fill(head.weight.value.begin(), head.weight.value.end(), 0.0);
        std::fill(head.bias.value.begin(), head.bias.value.end(), 0.0);
        const auto batch = random_tensor(5, 3, 40, 2);
        const std::vector<int> labels{1, 1, 0, 1, 0};
        net.zero_grad();
        ForwardResult result;
        const double loss = net.accumulate_gradients(batch, labels, 1, false, &result);
        CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        CHECK(head.bias.grad[0] == doctest::Approx(0.5 - 2.0 / 5.0).epsilon(1e-12));
        CHECK(head.bias.grad[1] == doctest::Approx(0.5 - 3.0 / 5.0).epsilon(1e-12));
        for (std::size_t i = 0; i < result.n; ++i) CHECK(result.prob(i, 0) == doctest::Approx(0.5));
    }

    TEST_CASE("dropout masks are fixed by the seed") {
        auto net = Network<double>::build(tiny_config(), 2);
        const auto batch = random_tensor(4, 3, 40, 3);
        const std::vector<int> labels{0, 1, 0, 1};
        auto grads = [&](std::uint64_t seed) {
            net.zero_grad();
            net.accumulate_gradients(batch, labels, seed, false);
            std::vector<double> out;
            for (auto* p : net.params()) out.insert(out.end(), p->grad.begin(), p->grad.end());
            return out;
        };
        const auto a = grads(5);
        const auto b = grads(5);
        const auto c = grads(6);
        CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
        CHECK(a != c);
    }

    TEST_CASE("softmax outputs are normalized") {
        Deep4Config cfg = Deep4Config::desk(8, 750);
        cfg.block_filters = {25, 50, 100, 200};
        const auto net = Network<float>::build(cfg, 0);
        Tensor3<float> batch(4, 8, 750);
        Rng rng(1);
        for (auto& v : batch.data) v = static_cast<float>(rng.normal());
        const auto out = net.forward(batch);
        REQUIRE(out.n == 4);
        REQUIRE(out.n_classes == 2);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::abs(out.prob(i, 0) + out.prob(i, 1) - 1.0) < 1e-6);
            for (std::size_t k = 0; k < 2; ++k) {
                CHECK(out.prob(i, k) > 0.0);
                CHECK(out.prob(i, k) < 1.0);
            }
        }
    }

    TEST_CASE("same seed builds identical parameters") {
        const auto cfg = Deep4Config::desk(4, 750);
        auto a = Network<float>::build(cfg, 42);
        auto b = Network<float>::build(cfg, 42);
        auto c = Network<float>::build(cfg, 43);
        CHECK(parameter_bytes(a) == parameter_bytes(b));
        CHECK(parameter_bytes(a) != parameter_bytes(c));
    }

    TEST_CASE("collapsing shapes are rejected") {
        auto cfg = Deep4Config::desk(4, 10);
        try {
            Network<float>::build(cfg, 0);
            FAIL("expected a shape error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("non-positive intermediate length") != std::string::npos);
        }
        const auto net = Network<float>::build(Deep4Config::desk(4, 750), 0);
        CHECK_THROWS_AS(net.forward(Tensor3<float>(1, 4, 749)), Error);
    }

    TEST_CASE("inference is deterministic and batch independent") {
        auto net = Network<double>::build(tiny_config(), 4);
        const auto batch = random_tensor(5, 3, 40, 5);
        for (int i = 0; i < 3; ++i) net.accumulate_gradients(batch, std::vector<int>{0, 1, 0, 1, 1}, i, true);
        Tensor3<double> dup(2, 3, 40);
        std::copy(batch.sample(1).begin(), batch.sample(1).end(), dup.sample(0).begin());
        std::copy(batch.sample(1).begin(), batch.sample(1).end(), dup.sample(1).begin());
        const auto d = net.forward(dup);
        CHECK(d.pre_softmax[0] == d.pre_softmax[2]);
        CHECK(d.pre_softmax[1] == d.pre_softmax[3]);

        const auto all = net.forward(batch);
        const auto again = net.forward(batch);
        CHECK(all.pre_softmax == again.pre_softmax);
        for (std::size_t i = 0; i < 5; ++i) {
            Tensor3<double> one(1, 3, 40);
            std::copy(batch.sample(i).begin(), batch.sample(i).end(), one.sample(0).begin());
            const auto single = net.forward(one);
            CHECK(single.pre_softmax[0] == all.logit(i, 0));
            CHECK(single.pre_softmax[1] == all.logit(i, 1));
        }
    }

    TEST_CASE("batch norm running statistics use the unbiased variance") {
        BatchNorm<double> bn("bn", 1, 1e-5, 0.1);
        Tensor3<double> x(1, 1, 4);
        x.data = {1.0, 2.0, 3.0, 6.0};
        Tensor3<double> out;
        LayerCache<double> cache;
        bn.forward(x, out, Mode::Train, nullptr, cache);
        bn.commit(cache);
        CHECK(bn.running_mean.value[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 3.0));
        CHECK(bn.running_var.value[0] == doctest::Approx(0.9 * 1.0 + 0.1 * (14.0 / 3.0)));
    }

    TEST_CASE("accuracy counting") {
        auto net = Network<float>::build(Deep4Config::desk(2, 750), 0);
        auto& head = dynamic_cast<Dense<float>&>(net.layer(net.n_layers() - 1));
        std::fill(head.weight.value.begin(), head.weight.value.end(), 0.0f);
        head.bias.value = {0.0f, 1.0f};
        TrialSet ts;
        ts.sample_rate_hz = 100.0;
        for (int i = 0; i < 4; ++i) ts.trials.push_back(Signal::Random(2, 750));
        ts.labels = {1, 1, 1, 1};
        CHECK(evaluate(net, ts).accuracy == 1.0);
        ts.labels = {0, 0, 0, 0};
        CHECK(evaluate(net, ts).accuracy == 0.0);
        ts.labels = {1, 0, 1, 1};
        const auto e = evaluate(net, ts);
        CHECK(e.accuracy == 0.75);
        CHECK(e.predictions == std::vector<int>{1, 1, 1, 1});
    }

    TEST_CASE("overfits a separable set and trains reproducibly") {
        const auto ts = separable_set(60, 4, 120, 3);
        Deep4Config cfg = Deep4Config::desk(4, 120);
        cfg.temporal_kernel = 5;
        cfg.pool_size = 2;
        cfg.pool_stride = 2;
        TrainConfig tc;
        tc.max_epochs = 200;
        tc.batch_size = 16;
        tc.seed = 4;
        auto net = Network<float>::build(cfg, 4);
        const auto result = train(net, ts, tc);
        REQUIRE(result.history.size() == 200);
        bool perfect = false;
        for (const auto& rec : result.history) perfect = perfect || rec.train_acc == 1.0;
        CHECK(perfect);
        CHECK(result.train_indices.size() == 48);
        CHECK(result.val_indices.size() == 12);
        double best = result.history.front().val_loss;
        for (const auto& rec : result.history) best = std::min(best, rec.val_loss);
        CHECK(result.history[result.best_epoch - 1].val_loss == best);

        const auto [val_loss, val_acc] = loss_and_accuracy(net, ts, result.val_indices);
        CHECK(val_loss == doctest::Approx(best).epsilon(1e-6));
        (void)val_acc;

        tc.max_epochs = 20;
        auto a = Network<float>::build(cfg, 9);
        auto b = Network<float>::build(cfg, 9);
        const auto ha = train(a, ts, tc);
        const auto hb = train(b, ts, tc);
        CHECK(parameter_bytes(a) == parameter_bytes(b));
        CHECK(history_table(ha.history).to_string() == history_table(hb.history).to_string());
        CHECK(history_table(ha.history).header ==
              std::vector<std::string>{"epoch", "train_loss", "val_loss", "train_acc", "val_acc"});
    }

    TEST_CASE("model round trip") {
        support::TempDir dir("convnet_io");
        const auto ts = separable_set(20, 4, 120, 5);
        Deep4Config cfg = Deep4Config::desk(4, 120);
        cfg.temporal_kernel = 5;
        cfg.pool_size = 2;
        cfg.pool_stride = 2;
        TrainConfig tc;
        tc.max_epochs = 3;
        auto net = Network<float>::build(cfg, 1);
        train(net, ts, tc);
        save_convnet_model(dir / "m", net, {{"tag", 1}});
        nlohmann::json meta;
        auto back = load_convnet_model(dir / "m", &meta);
        CHECK(meta["tag"] == 1);
        CHECK(parameter_bytes(back) == parameter_bytes(net));
        const auto batch = to_batch<float>(ts);
        CHECK(back.forward(batch).pre_softmax == net.forward(batch).pre_softmax);
        CHECK(read_model_header(dir / "m").model_type == "convnet");
    }

    TEST_CASE("training configuration validation") {
        TrainConfig tc;
        tc.split_fraction = 1.0;
        CHECK_THROWS_AS(tc.validate(), Error);
        tc.split_fraction = 0.8;
        tc.batch_size = 0;
        CHECK_THROWS_AS(tc.validate(), Error);
        const auto j = TrainConfig{}.to_json();
        CHECK(TrainConfig::from_json(j).to_json() == j);
        const auto cfg = Deep4Config::desk(8, 750);
        CHECK(Deep4Config::from_json(cfg.to_json()).to_json() == cfg.to_json());
    }
}
