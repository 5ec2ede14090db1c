#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include "errdecode/container.hpp"
#include "errdecode/csv.hpp"
#include "errdecode/error.hpp"
#include "errdecode/parallel.hpp"
#include "errdecode/rng.hpp"
#include "support.hpp"

using namespace errdecode;

namespace {

TrialSet labelled_set(const std::vector<ConditionLabel>& conditions) {
    TrialSet ts;
    ts.sample_rate_hz = 100.0;
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        ts.trials.push_back(Signal::Constant(2, 3, static_cast<double>(i)));
        ts.labels.push_back(label_for(Task::NaoVsNohu, conditions[i]));
        ts.conditions.push_back(conditions[i]);
    }
    return ts;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an errdecode::Error");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_SUITE("core") {
    TEST_CASE("interval timepoints at 250 Hz") {
        CHECK(Interval{0.0, 7.0}.n_timepoints(250.0) == 1750);
        CHECK(Interval{4.0, 7.0}.n_timepoints(250.0) == 750);
        CHECK(Interval{4.0, 7.0}.start_offset(250.0) == 1000);
        CHECK(Interval{-0.5, 0.5}.start_offset(250.0) == -125);
        CHECK(Interval{3.0, 2.0}.n_timepoints(250.0) == 0);
    }

    TEST_CASE("enum text round trips") {
        CHECK(parse_outcome(to_string(Outcome::Error)) == Outcome::Error);
        CHECK(parse_outcome(to_string(Outcome::Correct)) == Outcome::Correct);
        CHECK(parse_robot(to_string(Robot::Nao)) == Robot::Nao);
        CHECK(parse_robot(to_string(Robot::NoHu)) == Robot::NoHu);
        CHECK(parse_task(to_string(Task::ErrorVsCorrect)) == Task::ErrorVsCorrect);
        CHECK(parse_task(to_string(Task::NaoVsNohu)) == Task::NaoVsNohu);
        CHECK_THROWS_AS(parse_robot("pepper"), Error);
        CHECK_THROWS_AS(parse_task("unknown"), Error);
    }

    TEST_CASE("recording validation") {
        auto rec = support::random_recording(3, 50, 100.0, 1);
        CHECK_NOTHROW(rec.validate());
        rec.events.push_back({50, {}});
        CHECK(kind_of([&] { rec.validate(); }) == ErrorKind::Data);
        rec.events.clear();
        rec.channel_names[1] = rec.channel_names[0];
        CHECK(kind_of([&] { rec.validate(); }) == ErrorKind::Data);
        rec.channel_names.pop_back();
        CHECK(kind_of([&] { rec.validate(); }) == ErrorKind::Data);
    }

    TEST_CASE("container round trip") {
        support::TempDir dir("container");
        auto rec = support::random_recording(4, 300, 250.0, 7);
        rec.data = rec.data.cast<float>().cast<double>();
        rec.events = {{10, {Outcome::Error, Robot::NoHu}}, {120, {Outcome::Correct, Robot::Nao}}};
        save_recording(rec, dir / "rec");
        const auto back = load_recording(dir / "rec");
        CHECK(back.data == rec.data);
        CHECK(back.sample_rate_hz == rec.sample_rate_hz);
        CHECK(back.channel_names == rec.channel_names);
        CHECK(back.events == rec.events);
    }

    TEST_CASE("container errors") {
        support::TempDir dir("container_err");
        CHECK(kind_of([&] { load_recording(dir / "absent"); }) == ErrorKind::Format);

        auto rec = support::random_recording(2, 20, 100.0, 3);
        save_recording(rec, dir / "rec");
        {
            std::ofstream trunc(dir / "rec" / "data.f32le", std::ios::binary | std::ios::trunc);
            trunc << "abcd";
        }
        CHECK(kind_of([&] { load_recording(dir / "rec"); }) == ErrorKind::Format);

        save_recording(rec, dir / "rec2");
        support::write_json(dir / "rec2" / "header.json", "{ not json");
        CHECK(kind_of([&] { load_recording(dir / "rec2"); }) == ErrorKind::Format);
    }

    TEST_CASE("stratified split keeps class proportions") {
        std::vector<int> labels;
        for (int i = 0; i < 100; ++i) labels.push_back(i % 4 == 0 ? 1 : 0);
        const auto split = stratified_split(labels, 0.8, 5);
        CHECK(split.train.size() + split.test.size() == 100);
        std::set<std::size_t> all(split.train.begin(), split.train.end());
        all.insert(split.test.begin(), split.test.end());
        CHECK(all.size() == 100);
        const auto ones_in = [&](const std::vector<std::size_t>& idx) {
            return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return labels[i] == 1; });
        };
        CHECK(ones_in(split.train) == 20);
        CHECK(ones_in(split.test) == 5);

        const auto again = stratified_split(labels, 0.8, 5);
        CHECK(again.train == split.train);
        const auto other = stratified_split(labels, 0.8, 6);
        CHECK(other.train != split.train);
        CHECK_THROWS_AS(stratified_split(labels, 1.0, 0), Error);
    }

    TEST_CASE("project labels for both tasks") {
        const auto ts = labelled_set({{Outcome::Error, Robot::Nao},
                                      {Outcome::Correct, Robot::Nao},
                                      {Outcome::Error, Robot::NoHu},
                                      {Outcome::Correct, Robot::NoHu}});
        const auto robot = project_labels(ts, Task::NaoVsNohu);
        CHECK(robot.labels == std::vector<int>{0, 0, 1, 1});
        const auto outcome = project_labels(ts, Task::ErrorVsCorrect);
        CHECK(outcome.labels == std::vector<int>{1, 0, 1, 0});
        const auto nohu = project_labels(ts, Task::ErrorVsCorrect, Robot::NoHu);
        REQUIRE(nohu.size() == 2);
        CHECK(nohu.labels == std::vector<int>{1, 0});
        CHECK(nohu.trials[0](0, 0) == 2.0);
        CHECK_THROWS_AS(project_labels(ts, Task::NaoVsNohu, Robot::Nao), Error);
    }

    TEST_CASE("csv parse and format") {
        CsvTable t;
        t.header = {"a", "b"};
        t.rows = {{"1", "x"}, {"2.5", "y"}};
        const auto back = parse_csv(t.to_string());
        CHECK(back.header == t.header);
        CHECK(back.rows == t.rows);
        CHECK(back.column("b") == 1);
        CHECK_THROWS_AS(back.column("c"), Error);
        CHECK_THROWS_AS(parse_csv("a,b\n1\n"), Error);
        CHECK_THROWS_AS(parse_number("abc"), Error);
        for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 0.0}) {
            CHECK(parse_number(format_number(v)) == v);
        }
    }

    TEST_CASE("rng determinism and ranges") {
        Rng a(11, 3), b(11, 3), c(11, 4);
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.next_u64() != c.next_u64());
        Rng r(1);
        double sum = 0.0, sum_sq = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double u = r.uniform();
            CHECK_UNARY(u >= 0.0);
            CHECK_UNARY(u < 1.0);
            const double z = r.normal();
            sum += z;
            sum_sq += z * z;
            CHECK(r.below(7) < 7);
        }
        CHECK(std::abs(sum / n) < 0.01);
        CHECK(std::abs(sum_sq / n - 1.0) < 0.02);

        std::vector<int> v(50);
        std::iota(v.begin(), v.end(), 0);
        auto w = v;
        Rng(9).shuffle(w.begin(), w.end());
        CHECK(w != v);
        std::sort(w.begin(), w.end());
        CHECK(w == v);
    }

    TEST_CASE("parallel_for covers every task and rethrows") {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
        CHECK_THROWS_AS(parallel_for(100, [](std::size_t i) {
                            if (i == 37) throw data_error("boom");
                        }),
                        Error);

        ::setenv("ERRDECODE_THREADS", "3", 1);
        CHECK(worker_count() == 3);
        ::unsetenv("ERRDECODE_THREADS");
        CHECK(worker_count() >= 1);
    }
}
