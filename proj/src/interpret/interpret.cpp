#include "errdecode/interpret.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"
#include "errdecode/parallel.hpp"
#include "errdecode/rng.hpp"

namespace errdecode::interpret {

namespace fs = std::filesystem;
using nlohmann::json;

void PerturbOptions::validate() const {
    if (!(noise_scale > 0.0)) throw invalid_argument("noise_scale must be positive");
    if (n_iterations < 1) throw invalid_argument("iterations must be at least 1");
    if (!(bin_s > 0.0)) throw invalid_argument("bin width must be positive");
    if (!(t_end_s > t_start_s)) throw invalid_argument("map time range must have start < end");
}

std::vector<double> bin_average(std::span<const double> full, std::size_t n_classes, std::size_t n_channels,
                                std::size_t n_timepoints, std::size_t bin_samples) {
    if (bin_samples < 1) throw invalid_argument("bin must span at least one sample");
    if (bin_samples > n_timepoints) {
        throw invalid_argument(fmt::format("bin of {} samples is longer than the {} available", bin_samples, n_timepoints));
    }
    if (full.size() != n_classes * n_channels * n_timepoints) throw invalid_argument("map size does not match its shape");
    const std::size_t n_bins = n_timepoints / bin_samples;
    std::vector<double> out(n_classes * n_channels * n_bins, 0.0);
    for (std::size_t row = 0; row < n_classes * n_channels; ++row) {
        const double* src = full.data() + row * n_timepoints;
        for (std::size_t b = 0; b < n_bins; ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < bin_samples; ++j) s += src[b * bin_samples + j];
            out[row * n_bins + b] = s / static_cast<double>(bin_samples);
        }
    }
    return out;
}

CorrelationMap perturbation_map(const PreSoftmaxFn& predict, const TrialSet& ts, const PerturbOptions& options) {
    options.validate();
    if (ts.size() < 3) throw invalid_argument("perturbation maps need at least 3 trials");
    const double fs_hz = ts.sample_rate_hz;
    const std::size_t n = ts.size();
    const std::size_t n_ch = ts.n_channels();
    const std::size_t n_tp = ts.n_timepoints();

    const auto offset = std::llround((options.t_start_s - ts.interval.start_s) * fs_hz);
    const auto n_win = std::llround((options.t_end_s - options.t_start_s) * fs_hz);
    if (offset < 0 || offset + n_win > static_cast<long long>(n_tp)) {
        throw invalid_argument(fmt::format("map range {}-{} s lies outside the trial interval {}-{} s", options.t_start_s,
                                           options.t_end_s, ts.interval.start_s, ts.interval.end_s));
    }
    const auto bin_samples = static_cast<std::size_t>(std::llround(options.bin_s * fs_hz));
    const auto win = static_cast<std::size_t>(n_win);
    const auto start = static_cast<std::size_t>(offset);

    Eigen::VectorXd channel_std = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_ch));
    for (std::size_t c = 0; c < n_ch; ++c) {
        double s = 0.0;
        double ss = 0.0;
        for (const auto& trial : ts.trials) {
            const auto row = trial.row(static_cast<Eigen::Index>(c));
            s += row.sum();
            ss += row.squaredNorm();
        }
        const double count = static_cast<double>(n * n_tp);
        const double mean = s / count;
        channel_std[static_cast<Eigen::Index>(c)] = std::sqrt(std::max(0.0, ss / count - mean * mean));
    }

    const Eigen::MatrixXd baseline = predict(ts.trials);
    if (static_cast<std::size_t>(baseline.rows()) != n) throw invalid_argument("predictor returned the wrong number of rows");
    const std::size_t n_classes = static_cast<std::size_t>(baseline.cols());

    std::vector<std::vector<double>> per_iter(options.n_iterations);
    parallel_for(options.n_iterations, [&](std::size_t it) {
        Rng rng(options.seed, it);
        std::vector<Signal> noise(n);
        std::vector<Signal> perturbed(n);
        for (std::size_t i = 0; i < n; ++i) {
            noise[i].resize(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(n_tp));
            for (Eigen::Index c = 0; c < noise[i].rows(); ++c) {
                for (Eigen::Index t = 0; t < noise[i].cols(); ++t) noise[i](c, t) = rng.normal() * options.noise_scale * channel_std[c];
            }
            perturbed[i] = ts.trials[i] + noise[i];
        }
        const Eigen::MatrixXd out = predict(perturbed);
        Eigen::MatrixXd delta = out - baseline;
        delta.rowwise() -= delta.colwise().mean();
        const Eigen::VectorXd delta_ss = delta.colwise().squaredNorm();

        auto& full = per_iter[it];
        full.assign(n_classes * n_ch * win, 0.0);
        std::vector<double> s1(win);
        std::vector<double> s2(win);
        std::vector<double> sd(n_classes * win);
        for (std::size_t c = 0; c < n_ch; ++c) {
            std::fill(s1.begin(), s1.end(), 0.0);
            std::fill(s2.begin(), s2.end(), 0.0);
            std::fill(sd.begin(), sd.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double* e = noise[i].row(static_cast<Eigen::Index>(c)).data() + start;
                for (std::size_t t = 0; t < win; ++t) {
                    s1[t] += e[t];
                    s2[t] += e[t] * e[t];
                }
                for (std::size_t k = 0; k < n_classes; ++k) {
                    const double d = delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                    double* acc = sd.data() + k * win;
                    for (std::size_t t = 0; t < win; ++t) acc[t] += e[t] * d;
                }
            }
            for (std::size_t k = 0; k < n_classes; ++k) {
                const double dss = delta_ss[static_cast<Eigen::Index>(k)];
                for (std::size_t t = 0; t < win; ++t) {
                    const double ess = s2[t] - s1[t] * s1[t] / static_cast<double>(n);
                    double r = 0.0;
                    if (ess > 0.0 && dss > 0.0) r = std::clamp(sd[k * win + t] / std::sqrt(ess * dss), -1.0, 1.0);
                    full[(k * n_ch + c) * win + t] = r;
                }
            }
        }
    });

    std::vector<double> mean_full(n_classes * n_ch * win, 0.0);
    for (const auto& full : per_iter) {
        for (std::size_t j = 0; j < full.size(); ++j) mean_full[j] += full[j];
    }
    for (auto& v : mean_full) v /= static_cast<double>(options.n_iterations);

    CorrelationMap map;
    map.n_classes = n_classes;
    map.n_channels = n_ch;
    map.values = bin_average(mean_full, n_classes, n_ch, win, bin_samples);
    map.n_bins = win / bin_samples;
    map.bin_width_s = options.bin_s;
    map.t_start_s = options.t_start_s;
    map.t_end_s = options.t_end_s;
    map.n_iterations = options.n_iterations;
    map.seed = options.seed;
    map.noise_scale = options.noise_scale;
    for (std::size_t c = 0; c < n_ch; ++c) map.channel_names.push_back(fmt::format("ch{}", c));
    return map;
}

CorrelationMap perturbation_map(const convnet::ConvNetModel& model, const TrialSet& ts, const PerturbOptions& options) {
    const PreSoftmaxFn predict = [&model, &ts](const std::vector<Signal>& trials) {
        TrialSet batch;
        batch.trials = trials;
        batch.sample_rate_hz = ts.sample_rate_hz;
        batch.interval = ts.interval;
        const auto ev = convnet::evaluate(model, batch);
        Eigen::MatrixXd out(static_cast<Eigen::Index>(ev.outputs.n), static_cast<Eigen::Index>(ev.outputs.n_classes));
        for (std::size_t i = 0; i < ev.outputs.n; ++i) {
            for (std::size_t k = 0; k < ev.outputs.n_classes; ++k) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = ev.outputs.logit(i, k);
            }
        }
        return out;
    };
    return perturbation_map(predict, ts, options);
}

CorrelationMap average_maps(std::span<const CorrelationMap> maps) {
    if (maps.empty()) throw invalid_argument("no maps to average");
    CorrelationMap out = maps.front();
    for (std::size_t m = 1; m < maps.size(); ++m) {
        const auto& other = maps[m];
        if (other.n_classes != out.n_classes || other.n_channels != out.n_channels || other.n_bins != out.n_bins) {
            throw invalid_argument(fmt::format("map {} has a different shape", m));
        }
        for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += other.values[j];
    }
    for (auto& v : out.values) v /= static_cast<double>(maps.size());
    return out;
}

std::vector<fs::path> write_map(const fs::path& dir, const CorrelationMap& map) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    std::vector<fs::path> written;
    json files = json::array();
    for (std::size_t k = 0; k < map.n_classes; ++k) {
        CsvTable t;
        t.header.push_back("channel");
        for (std::size_t b = 0; b < map.n_bins; ++b) t.header.push_back(fmt::format("bin_{}", b));
        for (std::size_t c = 0; c < map.n_channels; ++c) {
            std::vector<std::string> row{c < map.channel_names.size() ? map.channel_names[c] : fmt::format("ch{}", c)};
            for (std::size_t b = 0; b < map.n_bins; ++b) row.push_back(format_number(map.at(k, c, b)));
            t.rows.push_back(std::move(row));
        }
        const auto name = fmt::format("map_class{}.csv", k);
        write_csv(dir / name, t);
        written.push_back(dir / name);
        files.push_back(name);
    }
    json sidecar = {{"bin_width_s", map.bin_width_s},
                    {"t_range_s", {map.t_start_s, map.t_end_s}},
                    {"n_iterations", map.n_iterations},
                    {"seed", map.seed},
                    {"noise_scale", map.noise_scale},
                    {"n_classes", map.n_classes},
                    {"n_channels", map.n_channels},
                    {"n_bins", map.n_bins},
                    {"channel_names", map.channel_names},
                    {"files", files}};
    write_text(dir / "map.json", sidecar.dump(2) + "\n");
    written.push_back(dir / "map.json");
    return written;
}

CorrelationMap read_map(const fs::path& dir) {
    CorrelationMap map;
    try {
        const auto sidecar = json::parse(read_text(dir / "map.json"));
        map.bin_width_s = sidecar.at("bin_width_s").get<double>();
        const auto range = sidecar.at("t_range_s").get<std::vector<double>>();
        map.t_start_s = range.at(0);
        map.t_end_s = range.at(1);
        map.n_iterations = sidecar.at("n_iterations").get<std::size_t>();
        map.seed = sidecar.at("seed").get<std::uint64_t>();
        map.noise_scale = sidecar.value("noise_scale", 0.0);
        map.n_classes = sidecar.at("n_classes").get<std::size_t>();
        map.n_channels = sidecar.at("n_channels").get<std::size_t>();
        map.n_bins = sidecar.at("n_bins").get<std::size_t>();
        map.channel_names = sidecar.value("channel_names", std::vector<std::string>{});
        map.values.assign(map.n_classes * map.n_channels * map.n_bins, 0.0);
        const auto files = sidecar.at("files").get<std::vector<std::string>>();
        if (files.size() != map.n_classes) throw format_error("map sidecar lists the wrong number of files");
        for (std::size_t k = 0; k < map.n_classes; ++k) {
            const auto t = read_csv(dir / files[k]);
            if (t.rows.size() != map.n_channels || t.header.size() != map.n_bins + 1) {
                throw format_error(fmt::format("{} does not match the sidecar shape", files[k]));
            }
            for (std::size_t c = 0; c < map.n_channels; ++c) {
                for (std::size_t b = 0; b < map.n_bins; ++b) map.at(k, c, b) = parse_number(t.rows[c][b + 1]);
            }
        }
    } catch (const json::exception& e) {
        throw format_error(fmt::format("malformed map sidecar in {}: {}", dir.string(), e.what()));
    }
    return map;
}

}  // namespace errdecode::interpret
