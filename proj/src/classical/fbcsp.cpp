#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"
#include "errdecode/parallel.hpp"
#include "errdecode/preprocess.hpp"

namespace errdecode::classical {

BandTrials BandTrials::subset(std::span<const std::size_t> trials) const {
    BandTrials out;
    out.band_indices = band_indices;
    out.bands = bands;
    for (const auto& s : sets) out.sets.push_back(s.subset(trials));
    return out;
}

BandTrials BandTrials::project(Task task, std::optional<Robot> robot_filter) const {
    BandTrials out;
    out.band_indices = band_indices;
    out.bands = bands;
    for (const auto& s : sets) out.sets.push_back(project_labels(s, task, robot_filter));
    return out;
}

BandTrials filter_bank_epochs(const Recording& rec, const filters::FilterBankSpec& bank, const Interval& interval,
                              int filter_order, std::span<const std::uint8_t> reject_mask) {
    const double nyquist = rec.sample_rate_hz / 2.0;
    BandTrials out;
    for (std::size_t b = 0; b < bank.bands.size(); ++b) {
        if (bank.bands[b].second < nyquist) {
            out.band_indices.push_back(b);
            out.bands.push_back(bank.bands[b]);
        }
    }
    if (out.bands.empty()) throw invalid_argument("no filter-bank band lies below Nyquist");
    if (out.bands.size() < bank.bands.size()) {
        spdlog::info("filter bank: {} of {} bands lie below Nyquist ({} Hz) and are used", out.bands.size(),
                     bank.bands.size(), nyquist);
    }

    out.sets.resize(out.bands.size());
    parallel_for(out.bands.size(), [&](std::size_t i) {
        const auto cascade = filters::design_butterworth(filters::FilterKind::Bandpass, filter_order,
                                                         {out.bands[i].first, out.bands[i].second}, rec.sample_rate_hz);
        out.sets[i] = preprocess::epoch_trials(filters::apply_iir(cascade, rec), interval, reject_mask);
    });
    return out;
}

FBCSPModel fit_fbcsp(const BandTrials& train, const FbcspConfig& config) {
    if (train.sets.empty()) throw invalid_argument("fit_fbcsp: no bands");
    train.sets.front().require_both_classes("fit_fbcsp");

    FBCSPModel model;
    model.config = config;
    model.sample_rate_hz = train.sets.front().sample_rate_hz;
    model.interval = train.sets.front().interval;
    model.band_indices = train.band_indices;
    model.bands = train.bands;
    model.csp.resize(train.sets.size());
    parallel_for(train.sets.size(), [&](std::size_t b) { model.csp[b] = fit_csp(train.sets[b], config.n_pairs); });

    const Eigen::MatrixXd all = fbcsp_all_features(model, train);
    const auto& labels = train.sets.front().labels;
    const auto per_band = static_cast<std::size_t>(2 * config.n_pairs);
    const auto chosen = mibif_select(all, labels, config.n_selected, config.mi_bins);
    for (const auto idx : chosen) model.selected.push_back({idx / per_band, idx % per_band});

    model.classifier = fit_rlda(fbcsp_selected_features(model, train), labels);
    return model;
}

FBCSPModel fit_fbcsp(const Recording& rec, const filters::FilterBankSpec& bank, const Interval& interval,
                     const FbcspConfig& config, Task task) {
    const auto data = filter_bank_epochs(rec, bank, interval, config.filter_order).project(task, std::nullopt);
    return fit_fbcsp(data, config);
}

Eigen::MatrixXd fbcsp_all_features(const FBCSPModel& model, const BandTrials& data) {
    if (data.sets.size() != model.csp.size()) {
        throw invalid_argument(fmt::format("model has {} bands, data has {}", model.csp.size(), data.sets.size()));
    }
    const auto per_band = 2 * model.config.n_pairs;
    Eigen::MatrixXd all(static_cast<Eigen::Index>(data.n_trials()),
                        static_cast<Eigen::Index>(per_band * static_cast<int>(model.csp.size())));
    std::vector<Eigen::MatrixXd> blocks(model.csp.size());
    parallel_for(model.csp.size(), [&](std::size_t b) { blocks[b] = csp_features(model.csp[b], data.sets[b]); });
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        all.middleCols(static_cast<Eigen::Index>(b) * per_band, per_band) = blocks[b];
    }
    return all;
}

Eigen::MatrixXd fbcsp_selected_features(const FBCSPModel& model, const BandTrials& data) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(data.n_trials()), static_cast<Eigen::Index>(model.selected.size()));
    // Only the bands that contribute a selected feature are projected.
    std::vector<Eigen::MatrixXd> cache(model.csp.size());
    for (std::size_t j = 0; j < model.selected.size(); ++j) {
        const auto [band, filter] = model.selected[j];
        if (band >= data.sets.size()) throw invalid_argument("selected band missing from data");
        if (cache[band].size() == 0) cache[band] = csp_features(model.csp[band], data.sets[band]);
        out.col(static_cast<Eigen::Index>(j)) = cache[band].col(static_cast<Eigen::Index>(filter));
    }
    return out;
}

std::vector<int> fbcsp_predict(const FBCSPModel& model, const BandTrials& data) {
    return model.classifier.predict(fbcsp_selected_features(model, data));
}

}  // namespace errdecode::classical
