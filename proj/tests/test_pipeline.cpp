#include <doctest.h>

#include <cmath>

#include "errdecode/container.hpp"
#include "errdecode/csv.hpp"
#include "errdecode/error.hpp"
#include "errdecode/pipeline.hpp"
#include "errdecode/synth.hpp"
#include "support.hpp"

using namespace errdecode;
using namespace errdecode::pipeline;

namespace {

CsvTable accuracy_table(const std::string& method, const std::vector<double>& acc, const std::string& interval = "4-7") {
    CsvTable t;
    t.header = {"run_id", "method", "task", "interval", "accuracy", "n_test", "n_class0", "n_class1"};
    for (std::size_t i = 0; i < acc.size(); ++i) {
        t.rows.push_back({"p" + std::to_string(i), method, "robot", interval, format_number(acc[i]), "40", "20", "20"});
    }
    return t;
}

const std::vector<std::string>* find_row(const CsvTable& t, const std::string& test, const std::string& target) {
    for (const auto& row : t.rows) {
        if (row[0] == test && row[1] == target) return &row;
    }
    return nullptr;
}

std::filesystem::path write_fixture(const support::TempDir& dir, synth::SynthSpec spec, const std::string& name) {
    const auto path = dir / name;
    synth::write_synth(synth::generate(spec), path);
    return path;
}

}  // namespace

TEST_SUITE("pipeline") {
    TEST_CASE("run configuration from json") {
        RunConfig c;
        c.apply_json({{"method", "fbcsp"},
                      {"interval", {0, 7}},
                      {"task", "error-vs-correct"},
                      {"robot", "nao"},
                      {"seed", 9},
                      {"fbcsp", {{"n_selected", 4}}},
                      {"convnet", {{"max_epochs", 3}}}});
        CHECK(c.method == Method::Fbcsp);
        CHECK(c.interval == Interval{0.0, 7.0});
        CHECK(c.task == Task::ErrorVsCorrect);
        CHECK(c.robot_filter == Robot::Nao);
        CHECK(c.seed == 9);
        CHECK(c.fbcsp.config.n_selected == 4);
        CHECK(c.convnet.train.max_epochs == 3);

        RunConfig back;
        back.apply_json(c.to_json());
        CHECK(back.to_json() == c.to_json());

        CHECK_THROWS_AS(c.apply_json({{"metod", "rlda"}}), Error);
        CHECK_THROWS_AS(c.apply_json({{"rlda", {{"window", 1}}}}), Error);
        CHECK_THROWS_AS(c.apply_json({{"seed", "x"}}), Error);
        CHECK_THROWS_AS(c.apply_json({{"method", "svm"}}), Error);
        CHECK_THROWS_AS(c.apply_json({{"interval", {1, 2, 3}}}), Error);

        RunConfig bad;
        CHECK_THROWS_AS(bad.validate(), Error);
        bad.inputs = {"/nonexistent/input"};
        try {
            bad.validate();
            FAIL("missing input accepted");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Io);
        }
    }

    TEST_CASE("output transaction removes partial outputs") {
        support::TempDir dir("tx");
        {
            OutputTransaction tx(dir / "fresh");
            write_text(tx.track("a.csv"), "x\n");
        }
        CHECK_FALSE(std::filesystem::exists(dir / "fresh"));

        std::filesystem::create_directories(dir / "kept");
        write_text(dir / "kept" / "old.txt", "keep\n");
        {
            OutputTransaction tx(dir / "kept");
            write_text(tx.track("new.txt"), "drop\n");
        }
        CHECK(std::filesystem::exists(dir / "kept" / "old.txt"));
        CHECK_FALSE(std::filesystem::exists(dir / "kept" / "new.txt"));
        {
            OutputTransaction tx(dir / "kept");
            write_text(tx.track("new.txt"), "stay\n");
            tx.commit();
        }
        CHECK(std::filesystem::exists(dir / "kept" / "new.txt"));

        RunConfig c;
        auto spec = support::erp_fixture(1);
        spec.n_channels = 4;
        spec.n_trials = 6;
        spec.class_balance = 0.2;
        spec.erp.channels = {1};
        c.inputs = {write_fixture(dir, spec, "tiny")};
        c.out_dir = dir / "failed_run";
        c.interval = {0.0, 9.0};
        CHECK_THROWS_AS(run_fit(c), Error);
        CHECK_FALSE(std::filesystem::exists(dir / "failed_run"));
    }

    TEST_CASE("stats over accuracy tables") {
        std::vector<double> a, b;
        for (int i = 0; i < 12; ++i) {
            a.push_back(0.70 + 0.01 * i);
            b.push_back(0.55 + 0.005 * i);
        }
        const auto out = run_stats({accuracy_table("convnet", a), accuracy_table("rlda", b)}, {2000, 1});
        const auto* sign = find_row(out, "sign", "convnet>rlda/4-7");
        REQUIRE(sign != nullptr);
        CHECK(parse_number((*sign)[3]) == doctest::Approx(2.0 / 4096.0).epsilon(1e-9));
        CHECK((*sign)[2] == "12");
        std::size_t perms = 0;
        for (const auto& row : out.rows) perms += row[0] == "permutation";
        CHECK(perms == 24);

        const auto same = run_stats({accuracy_table("convnet", a), accuracy_table("fbcsp", a)}, {100, 1});
        const auto* reg = find_row(same, "pearson", "fbcsp~convnet/4-7");
        REQUIRE(reg != nullptr);
        CHECK(parse_number((*reg)[2]) == doctest::Approx(1.0));
        CHECK(parse_number((*reg)[5]) == doctest::Approx(1.0));
        CHECK(parse_number((*reg)[6]) == doctest::Approx(0.0).epsilon(1e-9));
        const auto* tied = find_row(same, "sign", "convnet>fbcsp/4-7");
        REQUIRE(tied != nullptr);
        CHECK((*tied)[7].find("skipped") != std::string::npos);

        const auto single = run_stats({accuracy_table("convnet", {0.8}), accuracy_table("rlda", {0.6})}, {100, 1});
        const auto* skipped = find_row(single, "sign", "convnet>rlda/4-7");
        REQUIRE(skipped != nullptr);
        CHECK((*skipped)[7] == "skipped: insufficient pairs");
        CHECK((*skipped)[3].empty());

        CsvTable malformed;
        malformed.header = {"run_id", "method"};
        malformed.rows = {{"p0", "rlda"}};
        CHECK_THROWS_AS(run_stats({malformed}, {}), Error);
        CHECK_THROWS_AS(run_stats({}, {}), Error);
        CHECK_THROWS_AS(run_stats({accuracy_table("rlda", {1.5})}, {}), Error);
    }

    TEST_CASE("rlda fit writes its artifacts") {
        support::TempDir dir("fit");
        auto spec = support::erp_fixture(3);
        spec.n_channels = 8;
        spec.n_trials = 80;
        RunConfig c;
        c.inputs = {write_fixture(dir, spec, "erp")};
        c.method = Method::Rlda;
        c.out_dir = dir / "out";
        c.run_id = "p01";
        const auto r = run_fit(c);
        CHECK(r.n_test == 16);
        CHECK(r.n_test_class0 == 8);
        CHECK(r.accuracy > 0.9);
        for (const char* f : {"metrics.csv", "predictions.csv", "run.json", "model/header.json"}) {
            CAPTURE(f);
            CHECK(std::filesystem::exists(c.out_dir / f));
        }
        const auto metrics = read_csv(c.out_dir / "metrics.csv");
        CHECK(metrics.rows.at(0).at(metrics.column("run_id")) == "p01");
        CHECK(metrics.rows.at(0).at(metrics.column("interval")) == "4-7");
        CHECK(parse_number(metrics.rows.at(0).at(metrics.column("accuracy"))) == doctest::Approx(r.accuracy));
        CHECK(read_csv(c.out_dir / "predictions.csv").rows.size() == 16);

        const auto again = fit_in_memory(c, {load_recording(c.inputs[0])});
        CHECK(again.predictions == r.predictions);

        PerturbRequest req;
        req.model_dir = c.out_dir / "model";
        req.out_dir = dir / "map";
        try {
            run_perturb(req);
            FAIL("rlda model accepted");
        } catch (const Error& e) {
            CHECK(std::string(e.what()) == "perturbation maps require a convnet model");
        }
        CHECK_FALSE(std::filesystem::exists(dir / "map"));
    }

    TEST_CASE("label shuffles remove the signal") {
        support::TempDir dir("shuffle");
        auto spec = support::erp_fixture(4);
        spec.n_channels = 8;
        spec.n_trials = 200;
        RunConfig c;
        c.inputs = {write_fixture(dir, spec, "erp")};
        c.method = Method::Rlda;
        c.shuffle_labels = true;
        const auto recs = std::vector<Recording>{load_recording(c.inputs[0])};
        const double acc = fit_in_memory(c, recs).accuracy;
        CHECK(acc >= 0.4);
        CHECK(acc <= 0.6);
    }

    TEST_CASE("frame distances are written as a table") {
        support::TempDir dir("l1");
        std::filesystem::create_directories(dir / "frames");
        interpret::save_pgm(dir / "frames" / "0.pgm", Eigen::MatrixXd::Zero(2, 2));
        interpret::save_pgm(dir / "frames" / "1.pgm", Eigen::MatrixXd::Ones(2, 2));
        interpret::save_pgm(dir / "frames" / "2.pgm", Eigen::MatrixXd::Ones(2, 2));
        const auto d = run_l1dist(dir / "frames", 2.0, dir / "out" / "l1.csv");
        CHECK(d == std::vector<double>{1.0, 0.0});
        const auto t = read_csv(dir / "out" / "l1.csv");
        REQUIRE(t.rows.size() == 2);
        CHECK(t.rows[0] == std::vector<std::string>{"0", "0.5", "1"});
        CHECK(t.rows[1] == std::vector<std::string>{"1", "1", "0"});
    }
}
