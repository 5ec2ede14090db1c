#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"
#include "errdecode/pipeline.hpp"
#include "errdecode/simd.hpp"
#include "errdecode/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace errdecode;

namespace {

json load_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw format_error(fmt::format("{} is not valid JSON: {}", path, e.what()));
    }
}

std::string as_arg(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

/// Replaces the results of the options named by the JSON keys
/// ("noise_scale" and "noise-scale" both address --noise-scale).
void override_options(CLI::App& cmd, const json& config) {
    if (!config.is_object()) throw invalid_argument("config file must hold a JSON object");
    for (const auto& [key, value] : config.items()) {
        std::string name = key;
        for (auto& ch : name) {
            if (ch == '_') ch = '-';
        }
        CLI::Option* opt = cmd.get_option_no_throw("--" + name);
        if (opt == nullptr || name == "config") throw invalid_argument(fmt::format("unknown config key '{}'", key));
        opt->clear();
        if (value.is_array()) {
            for (const auto& v : value) opt->add_result(as_arg(v));
        } else {
            opt->add_result(as_arg(value));
        }
        opt->run_callback();
    }
}

struct SynthArgs {
    std::string spec;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a) {
    if (a.spec.empty()) throw invalid_argument("--spec is required");
    if (a.out.empty()) throw invalid_argument("--out is required");
    auto spec = synth::SynthSpec::from_json(load_json(a.spec));
    if (a.seed) spec.seed = *a.seed;
    const auto result = synth::generate(spec);
    pipeline::OutputTransaction tx(a.out);
    tx.track("header.json");
    tx.track("data.f32le");
    tx.track("manifest.json");
    synth::write_synth(result, a.out);
    tx.commit();
    spdlog::info("wrote {} trials to {}", spec.n_trials, a.out);
    return 0;
}

struct FitArgs {
    pipeline::RunConfig config;
    std::vector<std::string> inputs;
    std::string task = "robot-type";
    std::string robot;
    std::vector<double> interval{4.0, 7.0};
    std::string method = "rlda";
    std::string out;
    std::vector<std::size_t> filters;
    std::string config_file;
};

int cmd_fit(FitArgs& a) {
    auto& c = a.config;
    for (const auto& s : a.inputs) c.inputs.emplace_back(s);
    c.task = parse_task(a.task);
    if (!a.robot.empty()) c.robot_filter = parse_robot(a.robot);
    if (a.interval.size() != 2) throw invalid_argument("--interval takes two values: start end");
    c.interval = {a.interval[0], a.interval[1]};
    c.method = pipeline::parse_method(a.method);
    c.out_dir = a.out;
    if (!a.filters.empty()) {
        if (a.filters.size() != 4) throw invalid_argument("--filters takes four values");
        std::copy(a.filters.begin(), a.filters.end(), c.convnet.block_filters.begin());
    }
    if (!a.config_file.empty()) c.apply_json(load_json(a.config_file));
    const auto r = pipeline::run_fit(c);
    std::cout << fmt::format("{} {} accuracy {}\n", c.run_id, pipeline::to_string(c.method), format_number(r.accuracy));
    return 0;
}

struct StatsArgs {
    std::vector<std::string> inputs;
    std::string out;
    pipeline::StatsOptions options;
};

int cmd_stats(const StatsArgs& a) {
    if (a.inputs.empty()) throw invalid_argument("at least one --input accuracy table is required");
    if (a.out.empty()) throw invalid_argument("--out is required");
    std::vector<CsvTable> tables;
    for (const auto& p : a.inputs) tables.push_back(read_csv(p));
    const auto table = pipeline::run_stats(tables, a.options);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    try {
        write_csv(out, table);
    } catch (...) {
        std::error_code ec;
        fs::remove(out, ec);
        throw;
    }
    return 0;
}

struct PerturbArgs {
    std::string model;
    std::vector<std::string> inputs;
    std::string out;
    interpret::PerturbOptions options;
};

int cmd_perturb(const PerturbArgs& a) {
    if (a.model.empty()) throw invalid_argument("--model is required");
    if (a.out.empty()) throw invalid_argument("--out is required");
    pipeline::PerturbRequest req;
    req.model_dir = a.model;
    for (const auto& s : a.inputs) req.inputs.emplace_back(s);
    req.out_dir = a.out;
    req.options = a.options;
    const auto map = pipeline::run_perturb(req);
    spdlog::info("wrote {} classes x {} channels x {} bins to {}", map.n_classes, map.n_channels, map.n_bins, a.out);
    return 0;
}

struct L1Args {
    std::string frames;
    double fps = 25.0;
    std::string out;
};

int cmd_l1dist(const L1Args& a) {
    if (a.frames.empty()) throw invalid_argument("--frames is required");
    if (a.out.empty()) throw invalid_argument("--out is required");
    try {
        pipeline::run_l1dist(a.frames, a.fps, a.out);
    } catch (...) {
        std::error_code ec;
        fs::remove(a.out, ec);
        throw;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_st("errdecode");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%Y-%m-%d %H:%M:%S] [%l] %v");

    CLI::App app{"EEG error and robot-type decoding pipeline"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    SynthArgs synth_args;
    std::string synth_config;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic recording container");
    synth->add_option("--spec", synth_args.spec, "SynthSpec JSON file");
    synth->add_option("--out", synth_args.out, "Output container directory");
    synth->add_option("--seed", synth_args.seed, "Override the spec seed");
    synth->add_option("--config", synth_config, "JSON file overriding flags");

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Preprocess, fit and evaluate one decoding run");
    fit->add_option("--input", fit_args.inputs, "Recording container directory (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    fit->add_option("--task", fit_args.task, "robot-type or error-vs-correct");
    fit->add_option("--robot", fit_args.robot, "Keep only trials with this robot (nao or nohu)");
    fit->add_option("--interval", fit_args.interval, "Decoding interval start end in seconds")
        ->expected(2)
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    fit->add_option("--method", fit_args.method, "convnet, rlda or fbcsp");
    fit->add_option("--run-id", fit_args.config.run_id, "Run identifier written to the metrics");
    fit->add_option("--seed", fit_args.config.seed, "Seed for splits, initialization and shuffling");
    fit->add_option("--out", fit_args.out, "Output directory");
    fit->add_option("--test-fraction", fit_args.config.test_fraction, "Held-out fraction");
    fit->add_option("--resample-hz", fit_args.config.resample_hz, "Target sample rate");
    fit->add_flag("--shuffle-labels", fit_args.config.shuffle_labels, "Permute labels before splitting");
    fit->add_option("--epochs", fit_args.config.convnet.train.max_epochs, "ConvNet epochs");
    fit->add_option("--batch-size", fit_args.config.convnet.train.batch_size, "ConvNet mini-batch size");
    fit->add_option("--lr", fit_args.config.convnet.train.learning_rate, "ConvNet learning rate");
    fit->add_option("--filters", fit_args.filters, "ConvNet filters per block (4 values)")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    fit->add_option("--kernel", fit_args.config.convnet.temporal_kernel, "ConvNet temporal kernel length");
    fit->add_option("--dropout", fit_args.config.convnet.dropout_p, "ConvNet dropout probability");
    fit->add_option("--window-s", fit_args.config.rlda.window_s, "rLDA feature window");
    fit->add_option("--n-pairs", fit_args.config.fbcsp.config.n_pairs, "CSP filter pairs per band");
    fit->add_option("--n-selected", fit_args.config.fbcsp.config.n_selected, "MIBIF features kept");
    fit->add_option("--config", fit_args.config_file, "Run configuration JSON overriding flags");

    StatsArgs stats_args;
    std::string stats_config;
    auto* stats = app.add_subcommand("stats", "Permutation, sign and regression statistics over accuracy tables");
    stats->add_option("--input", stats_args.inputs, "Accuracy CSV (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    stats->add_option("--out", stats_args.out, "Statistics CSV");
    stats->add_option("--n-perm", stats_args.options.n_permutations, "Permutations per run");
    stats->add_option("--seed", stats_args.options.seed, "Permutation seed");
    stats->add_option("--config", stats_config, "JSON file overriding flags");

    PerturbArgs perturb_args;
    std::string perturb_config;
    auto* perturb = app.add_subcommand("perturb", "Input-perturbation correlation maps of a ConvNet model");
    perturb->add_option("--model", perturb_args.model, "Model directory written by fit");
    perturb->add_option("--input", perturb_args.inputs, "Recording containers (default: those used for fitting)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    perturb->add_option("--out", perturb_args.out, "Output directory");
    perturb->add_option("--noise-scale", perturb_args.options.noise_scale, "Noise std relative to channel std");
    perturb->add_option("--iterations", perturb_args.options.n_iterations, "Perturbation iterations");
    perturb->add_option("--bin-s", perturb_args.options.bin_s, "Time bin width");
    perturb->add_option("--t-start", perturb_args.options.t_start_s, "Map start relative to onset");
    perturb->add_option("--t-end", perturb_args.options.t_end_s, "Map end relative to onset");
    perturb->add_option("--seed", perturb_args.options.seed, "Noise seed");
    perturb->add_option("--config", perturb_config, "JSON file overriding flags");

    L1Args l1_args;
    std::string l1_config;
    auto* l1 = app.add_subcommand("l1dist", "Normalized L1 distance between consecutive video frames");
    l1->add_option("--frames", l1_args.frames, "Directory of PGM/PPM frames");
    l1->add_option("--fps", l1_args.fps, "Frame rate");
    l1->add_option("--out", l1_args.out, "Output CSV");
    l1->add_option("--config", l1_config, "JSON file overriding flags");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::InvalidArgument);
    }

    try {
        logger->set_level(spdlog::level::from_str(log_level));
        spdlog::debug("kernels: {}", simd::to_string(simd::active_isa()));
        if (synth->parsed()) {
            if (!synth_config.empty()) override_options(*synth, load_json(synth_config));
            return cmd_synth(synth_args);
        }
        if (fit->parsed()) return cmd_fit(fit_args);
        if (stats->parsed()) {
            if (!stats_config.empty()) override_options(*stats, load_json(stats_config));
            return cmd_stats(stats_args);
        }
        if (perturb->parsed()) {
            if (!perturb_config.empty()) override_options(*perturb, load_json(perturb_config));
            return cmd_perturb(perturb_args);
        }
        if (l1->parsed()) {
            if (!l1_config.empty()) override_options(*l1, load_json(l1_config));
            return cmd_l1dist(l1_args);
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(e.kind());
    } catch (const CLI::Error& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(ErrorKind::InvalidArgument);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
