#include "errdecode/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"
#include "errdecode/filters.hpp"
#include "errdecode/model_io.hpp"
#include "errdecode/rng.hpp"
#include "errdecode/stats.hpp"

namespace errdecode::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Method m) {
    switch (m) {
        case Method::ConvNet: return "convnet";
        case Method::Rlda: return "rlda";
        case Method::Fbcsp: return "fbcsp";
    }
    return "unknown";
}

Method parse_method(std::string_view text) {
    if (text == "convnet") return Method::ConvNet;
    if (text == "rlda") return Method::Rlda;
    if (text == "fbcsp") return Method::Fbcsp;
    throw invalid_argument(fmt::format("unknown method '{}' (expected convnet, rlda or fbcsp)", text));
}

// --- RunConfig ------------------------------------------------------------------

void RunConfig::validate() const {
    if (inputs.empty()) throw invalid_argument("at least one input container is required");
    for (const auto& p : inputs) {
        if (!fs::exists(p)) throw io_error(fmt::format("input {} does not exist", p.string()));
    }
    if (!(interval.end_s > interval.start_s)) throw invalid_argument("interval start must be before its end");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw invalid_argument("test_fraction must lie in (0, 1)");
    if (!(resample_hz > 0.0)) throw invalid_argument("resample_hz must be positive");
    if (run_id.empty() || run_id.find(',') != std::string::npos) throw invalid_argument("run_id must be non-empty without commas");
    if (method == Method::ConvNet) {
        convnet.train.validate();
        convnet.standardization.validate();
    }
    if (method == Method::Rlda && !(rlda.window_s > 0.0)) throw invalid_argument("rlda window must be positive");
    if (method == Method::Fbcsp) {
        if (fbcsp.config.n_pairs < 1) throw invalid_argument("fbcsp n_pairs must be positive");
        if (fbcsp.config.n_selected < 1) throw invalid_argument("fbcsp n_selected must be positive");
        if (!(fbcsp.highpass_hz > 0.0)) throw invalid_argument("fbcsp highpass must be positive");
    }
}

json RunConfig::to_json() const {
    std::vector<std::string> in;
    for (const auto& p : inputs) in.push_back(p.string());
    json j = {{"inputs", in},
              {"task", to_string(task)},
              {"robot", robot_filter ? json(to_string(*robot_filter)) : json(nullptr)},
              {"interval", {interval.start_s, interval.end_s}},
              {"method", to_string(method)},
              {"run_id", run_id},
              {"seed", seed},
              {"test_fraction", test_fraction},
              {"resample_hz", resample_hz},
              {"shuffle_labels", shuffle_labels},
              {"out", out_dir.string()}};
    j["convnet"] = {{"block_filters", convnet.block_filters},
                    {"temporal_kernel", convnet.temporal_kernel},
                    {"pool_size", convnet.pool_size},
                    {"pool_stride", convnet.pool_stride},
                    {"dropout_p", convnet.dropout_p},
                    {"batch_norm", convnet.batch_norm},
                    {"max_epochs", convnet.train.max_epochs},
                    {"batch_size", convnet.train.batch_size},
                    {"learning_rate", convnet.train.learning_rate},
                    {"split_fraction", convnet.train.split_fraction},
                    {"standardize_decay", convnet.standardization.decay},
                    {"standardize_eps", convnet.standardization.eps},
                    {"standardize_init_s", convnet.standardization.init_block_s}};
    j["rlda"] = {{"window_s", rlda.window_s}};
    j["fbcsp"] = {{"n_pairs", fbcsp.config.n_pairs},
                  {"n_selected", fbcsp.config.n_selected},
                  {"filter_order", fbcsp.config.filter_order},
                  {"mi_bins", fbcsp.config.mi_bins},
                  {"highpass_hz", fbcsp.highpass_hz},
                  {"highpass_order", fbcsp.highpass_order},
                  {"clean_threshold_uv", fbcsp.clean_threshold_uv}};
    return j;
}

namespace {

void reject_unknown(const json& j, const std::string& prefix, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw invalid_argument(fmt::format("config block '{}' must be an object", prefix));
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw invalid_argument(fmt::format("unknown config key '{}{}'", prefix, key));
    }
}

template <typename V>
void take(const json& j, const char* key, V& out) {
    if (j.contains(key)) out = j.at(key).get<V>();
}

}  // namespace

void RunConfig::apply_json(const json& j) {
    try {
        reject_unknown(j, "", {"inputs", "task", "robot", "interval", "method", "run_id", "seed", "test_fraction",
                               "resample_hz", "shuffle_labels", "out", "convnet", "rlda", "fbcsp"});
        if (j.contains("inputs")) {
            inputs.clear();
            for (const auto& s : j.at("inputs")) inputs.emplace_back(s.get<std::string>());
        }
        if (j.contains("task")) task = parse_task(j.at("task").get<std::string>());
        if (j.contains("robot")) {
            if (j.at("robot").is_null()) {
                robot_filter.reset();
            } else {
                robot_filter = parse_robot(j.at("robot").get<std::string>());
            }
        }
        if (j.contains("interval")) {
            const auto iv = j.at("interval").get<std::vector<double>>();
            if (iv.size() != 2) throw invalid_argument("interval must be [start, end]");
            interval = {iv[0], iv[1]};
        }
        if (j.contains("method")) method = parse_method(j.at("method").get<std::string>());
        take(j, "run_id", run_id);
        take(j, "seed", seed);
        take(j, "test_fraction", test_fraction);
        take(j, "resample_hz", resample_hz);
        take(j, "shuffle_labels", shuffle_labels);
        if (j.contains("out")) out_dir = j.at("out").get<std::string>();
        if (j.contains("convnet")) {
            const auto& c = j.at("convnet");
            reject_unknown(c, "convnet.", {"block_filters", "temporal_kernel", "pool_size", "pool_stride", "dropout_p",
                                           "batch_norm", "max_epochs", "batch_size", "learning_rate", "split_fraction",
                                           "standardize_decay", "standardize_eps", "standardize_init_s"});
            take(c, "block_filters", convnet.block_filters);
            take(c, "temporal_kernel", convnet.temporal_kernel);
            take(c, "pool_size", convnet.pool_size);
            take(c, "pool_stride", convnet.pool_stride);
            take(c, "dropout_p", convnet.dropout_p);
            take(c, "batch_norm", convnet.batch_norm);
            take(c, "max_epochs", convnet.train.max_epochs);
            take(c, "batch_size", convnet.train.batch_size);
            take(c, "learning_rate", convnet.train.learning_rate);
            take(c, "split_fraction", convnet.train.split_fraction);
            take(c, "standardize_decay", convnet.standardization.decay);
            take(c, "standardize_eps", convnet.standardization.eps);
            take(c, "standardize_init_s", convnet.standardization.init_block_s);
        }
        if (j.contains("rlda")) {
            const auto& r = j.at("rlda");
            reject_unknown(r, "rlda.", {"window_s"});
            take(r, "window_s", rlda.window_s);
        }
        if (j.contains("fbcsp")) {
            const auto& f = j.at("fbcsp");
            reject_unknown(f, "fbcsp.", {"n_pairs", "n_selected", "filter_order", "mi_bins", "highpass_hz",
                                         "highpass_order", "clean_threshold_uv"});
            take(f, "n_pairs", fbcsp.config.n_pairs);
            take(f, "n_selected", fbcsp.config.n_selected);
            take(f, "filter_order", fbcsp.config.filter_order);
            take(f, "mi_bins", fbcsp.config.mi_bins);
            take(f, "highpass_hz", fbcsp.highpass_hz);
            take(f, "highpass_order", fbcsp.highpass_order);
            take(f, "clean_threshold_uv", fbcsp.clean_threshold_uv);
        }
    } catch (const json::exception& e) {
        throw invalid_argument(fmt::format("malformed run configuration: {}", e.what()));
    }
}

// --- OutputTransaction ----------------------------------------------------------

OutputTransaction::OutputTransaction(fs::path root) : root_(std::move(root)) {
    if (root_.empty()) throw invalid_argument("an output directory is required");
    std::error_code ec;
    if (!fs::exists(root_)) {
        fs::create_directories(root_, ec);
        if (ec) throw io_error(fmt::format("cannot create {}: {}", root_.string(), ec.message()));
        created_root_ = true;
    } else if (!fs::is_directory(root_)) {
        throw io_error(fmt::format("{} exists and is not a directory", root_.string()));
    }
}

OutputTransaction::~OutputTransaction() {
    if (committed_) return;
    std::error_code ec;
    if (created_root_) {
        fs::remove_all(root_, ec);
        return;
    }
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove_all(*it, ec);
}

fs::path OutputTransaction::track(const fs::path& relative) {
    auto p = root_ / relative;
    if (!fs::exists(p)) paths_.push_back(p);
    return p;
}

// --- preprocessing ----------------------------------------------------------------

Recording convnet_preprocess(const Recording& rec, double resample_hz,
                             const preprocess::StandardizationConfig& standardization) {
    auto r = preprocess::common_average_reference(rec);
    r = preprocess::resample(r, resample_hz);
    return preprocess::ewm_standardize(r, standardization);
}

Recording classical_preprocess(const Recording& rec, double resample_hz) {
    auto r = preprocess::common_average_reference(rec);
    return preprocess::resample(r, resample_hz);
}

namespace {

TrialSet concat(std::vector<TrialSet> parts) {
    TrialSet out = std::move(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        auto& p = parts[i];
        if (p.sample_rate_hz != out.sample_rate_hz || p.n_channels() != out.n_channels()) {
            throw data_error(fmt::format("input {} differs in sample rate or channel count", i));
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            out.trials.push_back(std::move(p.trials[k]));
            out.labels.push_back(p.labels[k]);
            out.conditions.push_back(p.conditions[k]);
        }
    }
    return out;
}

classical::BandTrials concat(std::vector<classical::BandTrials> parts) {
    classical::BandTrials out = std::move(parts.front());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i].band_indices != out.band_indices) throw data_error(fmt::format("input {} yields different bands", i));
        for (std::size_t b = 0; b < out.sets.size(); ++b) out.sets[b] = concat({std::move(out.sets[b]), std::move(parts[i].sets[b])});
    }
    return out;
}

std::vector<Recording> load_all(const std::vector<fs::path>& inputs) {
    std::vector<Recording> out;
    for (const auto& p : inputs) out.push_back(load_recording(p));
    return out;
}

void shuffle_labels(std::vector<int>& labels, std::uint64_t seed) {
    Rng rng(seed, 77);
    rng.shuffle(labels.begin(), labels.end());
}

TrialSet method_trials(const RunConfig& config, const std::vector<Recording>& recordings) {
    std::vector<TrialSet> parts;
    for (const auto& rec : recordings) {
        const auto r = config.method == Method::ConvNet
                           ? convnet_preprocess(rec, config.resample_hz, config.convnet.standardization)
                           : classical_preprocess(rec, config.resample_hz);
        parts.push_back(preprocess::epoch_trials(r, config.interval));
    }
    auto ts = project_labels(concat(std::move(parts)), config.task, config.robot_filter);
    if (config.shuffle_labels) shuffle_labels(ts.labels, config.seed);
    return ts;
}

classical::BandTrials band_trials(const RunConfig& config, const std::vector<Recording>& recordings) {
    const auto bank = filters::default_filter_bank();
    std::vector<classical::BandTrials> parts;
    for (const auto& rec : recordings) {
        auto r = classical_preprocess(rec, config.resample_hz);
        const auto hp = filters::design_butterworth(filters::FilterKind::Highpass, config.fbcsp.highpass_order,
                                                    {config.fbcsp.highpass_hz}, r.sample_rate_hz);
        r = filters::apply_iir(hp, r, filters::FilterMode::Causal);
        const auto cleaned = filters::auto_clean(r, config.fbcsp.clean_threshold_uv);
        parts.push_back(classical::filter_bank_epochs(cleaned.recording, bank, config.interval,
                                                      config.fbcsp.config.filter_order, cleaned.mask));
    }
    auto bt = concat(std::move(parts)).project(config.task, config.robot_filter);
    if (config.shuffle_labels) {
        auto labels = bt.sets.front().labels;
        shuffle_labels(labels, config.seed);
        for (auto& s : bt.sets) s.labels = labels;
    }
    return bt;
}

void fill_split_stats(FitResult& r, const std::vector<int>& labels, const Split& split) {
    r.n_train = split.train.size();
    r.n_test = split.test.size();
    r.test_indices = split.test;
    for (const auto i : split.test) {
        r.test_labels.push_back(labels[i]);
        (labels[i] == 1 ? r.n_test_class1 : r.n_test_class0) += 1;
    }
}

struct Fitted {
    FitResult result;
    std::optional<convnet::ConvNetModel> net;
    std::optional<classical::RLDAModel> rlda;
    std::optional<classical::FBCSPModel> fbcsp;
};

Fitted fit_impl(const RunConfig& config, const std::vector<Recording>& recordings) {
    Fitted out;
    auto& r = out.result;
    if (config.method == Method::Fbcsp) {
        const auto bt = band_trials(config, recordings);
        if (bt.sets.empty()) throw data_error("no filter-bank band lies below the Nyquist frequency");
        const auto& labels = bt.sets.front().labels;
        const auto split = stratified_split(labels, 1.0 - config.test_fraction, config.seed);
        fill_split_stats(r, labels, split);
        const auto train = bt.subset(split.train);
        train.sets.front().require_both_classes("training split");
        out.fbcsp = classical::fit_fbcsp(train, config.fbcsp.config);
        r.predictions = classical::fbcsp_predict(*out.fbcsp, bt.subset(split.test));
    } else {
        const auto ts = method_trials(config, recordings);
        ts.require_both_classes("trial set");
        const auto split = stratified_split(ts.labels, 1.0 - config.test_fraction, config.seed);
        fill_split_stats(r, ts.labels, split);
        const auto train = ts.subset(split.train);
        const auto test = ts.subset(split.test);
        train.require_both_classes("training split");
        if (config.method == Method::Rlda) {
            const auto x_train = classical::time_domain_features(train, config.rlda.window_s);
            out.rlda = classical::fit_rlda(x_train, train.labels);
            const auto x_test = classical::time_domain_features(test, config.rlda.window_s);
            r.predictions = out.rlda->predict(x_test);
        } else {
            convnet::Deep4Config dc;
            dc.n_channels = train.n_channels();
            dc.n_timepoints = train.n_timepoints();
            dc.n_classes = 2;
            dc.block_filters = config.convnet.block_filters;
            dc.temporal_kernel = config.convnet.temporal_kernel;
            dc.pool_size = config.convnet.pool_size;
            dc.pool_stride = config.convnet.pool_stride;
            dc.dropout_p = config.convnet.dropout_p;
            dc.batch_norm = config.convnet.batch_norm;
            auto net = convnet::ConvNetModel::build(dc, config.seed);
            auto tc = config.convnet.train;
            tc.seed = config.seed;
            r.history = convnet::train(net, train, tc).history;
            r.predictions = convnet::evaluate(net, test).predictions;
            out.net = std::move(net);
        }
    }
    r.accuracy = r.test_labels.empty() ? 0.0 : classical::accuracy(r.predictions, r.test_labels);
    return out;
}

}  // namespace

TrialSet load_trials(const RunConfig& config) {
    if (config.method == Method::Fbcsp) throw invalid_argument("filter-bank trials are per band; use the fbcsp path");
    return method_trials(config, load_all(config.inputs));
}

FitResult fit_in_memory(const RunConfig& config, const std::vector<Recording>& recordings,
                        convnet::ConvNetModel* convnet_out) {
    if (recordings.empty()) throw invalid_argument("no recordings");
    auto fitted = fit_impl(config, recordings);
    if (convnet_out && fitted.net) *convnet_out = std::move(*fitted.net);
    return fitted.result;
}

CsvTable metrics_table(const RunConfig& config, const FitResult& result) {
    CsvTable t;
    t.header = {"run_id", "method", "task", "interval", "accuracy", "n_test", "n_class0", "n_class1"};
    t.rows.push_back({config.run_id, std::string(to_string(config.method)), std::string(to_string(config.task)),
                      fmt::format("{}-{}", format_number(config.interval.start_s), format_number(config.interval.end_s)),
                      format_number(result.accuracy), std::to_string(result.n_test),
                      std::to_string(result.n_test_class0), std::to_string(result.n_test_class1)});
    return t;
}

FitResult run_fit(const RunConfig& config) {
    config.validate();
    OutputTransaction tx(config.out_dir);
    auto fitted = fit_impl(config, load_all(config.inputs));
    const auto& r = fitted.result;

    const json meta = {{"run", config.to_json()}};
    const auto model_dir = tx.track("model");
    switch (config.method) {
        case Method::ConvNet: convnet::save_convnet_model(model_dir, *fitted.net, meta); break;
        case Method::Rlda: classical::save_rlda_model(model_dir, *fitted.rlda, meta); break;
        case Method::Fbcsp: classical::save_fbcsp_model(model_dir, *fitted.fbcsp, meta); break;
    }
    write_csv(tx.track("metrics.csv"), metrics_table(config, r));

    CsvTable pred;
    pred.header = {"trial_index", "label", "prediction"};
    for (std::size_t i = 0; i < r.test_indices.size(); ++i) {
        pred.rows.push_back({std::to_string(r.test_indices[i]), std::to_string(r.test_labels[i]),
                             std::to_string(r.predictions[i])});
    }
    write_csv(tx.track("predictions.csv"), pred);
    if (config.method == Method::ConvNet) write_csv(tx.track("history.csv"), convnet::history_table(r.history));
    write_text(tx.track("run.json"), config.to_json().dump(2) + "\n");
    tx.commit();
    spdlog::info("{} {} accuracy {:.4f} on {} held-out trials", config.run_id, to_string(config.method), r.accuracy,
                 r.n_test);
    return r;
}

// --- stats --------------------------------------------------------------------

namespace {

struct AccuracyRow {
    std::string run_id;
    std::string method;
    std::string interval;
    double accuracy = 0.0;
    std::size_t n_class0 = 0;
    std::size_t n_class1 = 0;
    bool has_counts = false;
};

std::vector<AccuracyRow> parse_accuracy_rows(const CsvTable& t) {
    const auto c_run = t.has_column("run_id") ? t.column("run_id") : t.column("participant");
    const auto c_method = t.column("method");
    const auto c_interval = t.column("interval");
    const auto c_acc = t.column("accuracy");
    const bool counts = t.has_column("n_class0") && t.has_column("n_class1");
    std::vector<AccuracyRow> out;
    for (const auto& row : t.rows) {
        AccuracyRow a;
        a.run_id = row.at(c_run);
        a.method = row.at(c_method);
        a.interval = row.at(c_interval);
        a.accuracy = parse_number(row.at(c_acc));
        if (!(a.accuracy >= 0.0 && a.accuracy <= 1.0)) throw format_error(fmt::format("accuracy {} outside [0, 1]", a.accuracy));
        if (counts) {
            a.n_class0 = static_cast<std::size_t>(parse_number(row.at(t.column("n_class0"))));
            a.n_class1 = static_cast<std::size_t>(parse_number(row.at(t.column("n_class1"))));
            a.has_counts = true;
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<std::string> stat_row(const std::string& test, const std::string& target, const std::string& statistic,
                                  const std::string& p, const std::string& n, const std::string& slope = "",
                                  const std::string& intercept = "", const std::string& note = "") {
    return {test, target, statistic, p, n, slope, intercept, note};
}

}  // namespace

CsvTable run_stats(const std::vector<CsvTable>& accuracy_tables, const StatsOptions& options) {
    if (accuracy_tables.empty()) throw invalid_argument("at least one accuracy table is required");
    std::vector<AccuracyRow> rows;
    for (const auto& t : accuracy_tables) {
        auto r = parse_accuracy_rows(t);
        rows.insert(rows.end(), r.begin(), r.end());
    }

    CsvTable out;
    out.header = {"test", "target", "statistic", "p_value", "n", "slope", "intercept", "note"};

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto target = fmt::format("{}/{}/{}", a.run_id, a.method, a.interval);
        if (!a.has_counts || a.n_class0 == 0 || a.n_class1 == 0) {
            out.rows.push_back(stat_row("permutation", target, format_number(a.accuracy), "", "", "", "",
                                        "skipped: class counts unavailable"));
            continue;
        }
        std::vector<int> labels(a.n_class0, 0);
        labels.insert(labels.end(), a.n_class1, 1);
        const auto res = stats::permutation_test(labels, a.accuracy, options.n_permutations, options.seed + i);
        out.rows.push_back(stat_row("permutation", target, format_number(a.accuracy), format_number(res.p_value),
                                    std::to_string(res.n_permutations)));
    }

    std::set<std::string> intervals;
    std::set<std::string> methods;
    for (const auto& a : rows) {
        intervals.insert(a.interval);
        methods.insert(a.method);
    }
    for (const auto& interval : intervals) {
        std::map<std::string, std::map<std::string, double>> by_method;
        for (const auto& a : rows) {
            if (a.interval == interval) by_method[a.method][a.run_id] = a.accuracy;
        }
        for (auto ia = by_method.begin(); ia != by_method.end(); ++ia) {
            for (auto ib = std::next(ia); ib != by_method.end(); ++ib) {
                std::vector<double> xa;
                std::vector<double> xb;
                for (const auto& [run, acc] : ia->second) {
                    const auto it = ib->second.find(run);
                    if (it == ib->second.end()) continue;
                    xa.push_back(acc);
                    xb.push_back(it->second);
                }
                const auto target = fmt::format("{}>{}/{}", ia->first, ib->first, interval);
                const auto n = std::to_string(xa.size());
                std::size_t pos = 0;
                std::size_t neg = 0;
                for (std::size_t k = 0; k < xa.size(); ++k) {
                    if (xa[k] > xb[k]) ++pos;
                    if (xa[k] < xb[k]) ++neg;
                }
                if (xa.size() < 2) {
                    out.rows.push_back(stat_row("sign", target, "", "", n, "", "", "skipped: insufficient pairs"));
                } else if (pos + neg == 0) {
                    out.rows.push_back(stat_row("sign", target, "0", "", n, "", "", "skipped: all pairs tied"));
                } else {
                    out.rows.push_back(stat_row("sign", target, std::to_string(pos),
                                                format_number(stats::sign_test(pos, neg)), std::to_string(pos + neg)));
                }
                const auto rtarget = fmt::format("{}~{}/{}", ib->first, ia->first, interval);
                try {
                    const auto reg = stats::pearson_regression(xa, xb);
                    out.rows.push_back(stat_row("pearson", rtarget, format_number(reg.r), format_number(reg.p_value), n,
                                                format_number(reg.slope), format_number(reg.intercept)));
                } catch (const Error& e) {
                    out.rows.push_back(stat_row("pearson", rtarget, "", "", n, "", "", fmt::format("skipped: {}", e.what())));
                }
            }
        }
    }
    if (methods.size() < 2) spdlog::warn("only one method present; no pairwise tests");
    return out;
}

// --- perturb ------------------------------------------------------------------

interpret::CorrelationMap run_perturb(const PerturbRequest& request) {
    const auto header = read_model_header(request.model_dir);
    if (header.model_type != "convnet") throw invalid_argument("perturbation maps require a convnet model");
    request.options.validate();
    json meta;
    const auto model = convnet::load_convnet_model(request.model_dir, &meta);
    RunConfig config;
    try {
        config.apply_json(meta.at("run"));
    } catch (const json::exception& e) {
        throw format_error(fmt::format("model lacks its run configuration: {}", e.what()));
    }
    if (!request.inputs.empty()) config.inputs = request.inputs;
    for (const auto& p : config.inputs) {
        if (!fs::exists(p)) throw io_error(fmt::format("input {} does not exist", p.string()));
    }
    const auto recordings = load_all(config.inputs);
    auto ts = method_trials(config, recordings);
    const auto split = stratified_split(ts.labels, 1.0 - config.test_fraction, config.seed);
    auto train = ts.subset(split.train);

    OutputTransaction tx(request.out_dir);
    auto map = interpret::perturbation_map(model, train, request.options);
    map.channel_names = recordings.front().channel_names;
    for (std::size_t k = 0; k < map.n_classes; ++k) tx.track(fmt::format("map_class{}.csv", k));
    tx.track("map.json");
    interpret::write_map(request.out_dir, map);
    tx.commit();
    return map;
}

std::vector<double> run_l1dist(const fs::path& frames_dir, double frame_rate_hz, const fs::path& out_csv) {
    const auto seq = interpret::load_frames(frames_dir, frame_rate_hz);
    const auto d = interpret::l1_frame_distance(seq);
    const auto parent = out_csv.parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
        if (ec) throw io_error(fmt::format("cannot create {}: {}", parent.string(), ec.message()));
    }
    write_csv(out_csv, interpret::l1_table(d, frame_rate_hz));
    return d;
}

}  // namespace errdecode::pipeline
