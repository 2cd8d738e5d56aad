#include "dfal/al_loop.hpp"

#include <doctest.h>

#include <algorithm>

using namespace dfal;

namespace {

ExperimentConfig small_config(Method method)
{
    ExperimentConfig cfg;
    cfg.method = method;
    cfg.arch.hidden_widths = {8};
    cfg.train.learning_rate = 0.01;
    cfg.train.epochs = 5;
    cfg.batch_size = 5;
    cfg.rounds = 3;
    cfg.initial_size = 6;
    cfg.seeds = {0, 1};
    return cfg;
}

const Dataset& blobs()
{
    static const Dataset ds = make_blobs(100, 3, 4, 2.0, 1);
    return ds;
}

} // namespace

TEST_CASE("each round retrains, evaluates and grows the labeled set")
{
    const auto cfg = small_config(Method::grad);
    const auto prepared = prepare_data(blobs(), cfg);
    const SeedRun run = run_seed(prepared, cfg, 0.01, 4);
    REQUIRE(run.rounds.size() == 4);
    CHECK_FALSE(run.error.has_value());
    CHECK_FALSE(run.truncated);
    IndexList labeled = run.initial_labeled;
    for (int t = 0; t <= 3; ++t) {
        const auto& r = run.rounds[static_cast<std::size_t>(t)];
        CHECK(r.round == t);
        CHECK(r.labeled_size == 6 + 5 * t);
        CHECK(r.test_accuracy >= 0.0);
        CHECK(r.test_accuracy <= 1.0);
        for (Index i : r.batch.indices) {
            CHECK(std::find(labeled.begin(), labeled.end(), i) == labeled.end());
            CHECK(std::binary_search(prepared.split.train.begin(), prepared.split.train.end(), i));
            labeled.push_back(i);
        }
    }
    CHECK(run.rounds.back().batch.indices.empty());
    const SeedRun again = run_seed(prepared, cfg, 0.01, 4);
    for (std::size_t t = 0; t < run.rounds.size(); ++t) {
        CHECK(again.rounds[t].batch.indices == run.rounds[t].batch.indices);
        CHECK(again.rounds[t].test_accuracy == run.rounds[t].test_accuracy);
    }
}

TEST_CASE("all methods share the initial labeled set for a seed")
{
    const auto prepared = prepare_data(blobs(), small_config(Method::grad));
    std::vector<IndexList> initial;
    for (Method m : all_methods()) {
        const auto cfg = small_config(m);
        initial.push_back(run_seed(prepared, cfg, 0.01, 7).initial_labeled);
    }
    for (const auto& s : initial)
        CHECK(s == initial.front());
    CHECK(run_seed(prepared, small_config(Method::random), 0.01, 8).initial_labeled != initial.front());
}

TEST_CASE("the acquisition timer brackets only the selector")
{
    const auto cfg = small_config(Method::entropy);
    const auto prepared = prepare_data(blobs(), cfg);
    std::vector<std::pair<LoopEvent, int>> events;
    bool inside_acquire = false;
    int ticks = 0;
    LoopHooks hooks;
    hooks.observer = [&](LoopEvent e, int round) {
        events.emplace_back(e, round);
        if (e == LoopEvent::acquire_begin)
            inside_acquire = true;
        if (e == LoopEvent::acquire_end)
            inside_acquire = false;
    };
    // The fake clock advances one second per reading and must only be read
    // between acquire_begin and acquire_end.
    hooks.clock = [&] {
        CHECK(inside_acquire);
        return static_cast<double>(++ticks);
    };
    const SeedRun run = run_seed(prepared, cfg, 0.01, 0, hooks);
    for (int t = 0; t < cfg.rounds; ++t)
        CHECK(run.rounds[static_cast<std::size_t>(t)].acquisition_seconds == 1.0);
    CHECK(run.rounds.back().acquisition_seconds == 0.0);
    CHECK(ticks == 2 * cfg.rounds);

    std::vector<std::pair<LoopEvent, int>> expected;
    for (int t = 0; t <= cfg.rounds; ++t) {
        expected.emplace_back(LoopEvent::train_begin, t);
        expected.emplace_back(LoopEvent::train_end, t);
        expected.emplace_back(LoopEvent::evaluate, t);
        if (t < cfg.rounds) {
            expected.emplace_back(LoopEvent::acquire_begin, t);
            expected.emplace_back(LoopEvent::acquire_end, t);
        }
    }
    CHECK(events == expected);
}

TEST_CASE("an exhausted pool truncates the schedule")
{
    auto cfg = small_config(Method::random);
    cfg.batch_size = 40;
    cfg.rounds = 5;
    const auto prepared = prepare_data(blobs(), cfg);
    const SeedRun run = run_seed(prepared, cfg, 0.01, 0);
    CHECK(run.truncated);
    CHECK(run.rounds.back().labeled_size == static_cast<Index>(prepared.split.train.size()));
    CHECK(run.rounds.size() < 6);
}

TEST_CASE("divergence is recorded with seed and round context")
{
    const auto cfg = small_config(Method::random);
    const auto prepared = prepare_data(blobs(), cfg);
    const SeedRun run = run_seed(prepared, cfg, 1e300, 3);
    REQUIRE(run.error.has_value());
    CHECK(run.error->find("seed 3, round 0") != std::string::npos);
}

TEST_CASE("learning-rate sweep picks the best validation rate")
{
    auto cfg = small_config(Method::grad);
    cfg.train.learning_rate = 0.0;
    cfg.lr_grid = {1e-6, 0.01};
    const auto prepared = prepare_data(blobs(), cfg);
    CHECK(select_learning_rate(prepared, cfg) == 0.01);
    cfg.lr_grid = {0.01, 0.01};
    CHECK(select_learning_rate(prepared, cfg) == 0.01);
    cfg.train.learning_rate = 0.3;
    CHECK(select_learning_rate(prepared, cfg) == 0.3);
    cfg.train.learning_rate = 0.0;
    cfg.split.validation_fraction = 0.0;
    CHECK_THROWS_AS(select_learning_rate(prepare_data(blobs(), cfg), cfg), std::invalid_argument);
}

TEST_CASE("prepared data standardizes on train and validation rows")
{
    const auto cfg = small_config(Method::grad);
    const auto prepared = prepare_data(blobs(), cfg);
    REQUIRE(prepared.scaler.has_value());
    IndexList rows = prepared.split.train;
    rows.insert(rows.end(), prepared.split.validation.begin(), prepared.split.validation.end());
    const Matrix fit = prepared.data.features(rows, Eigen::all);
    CHECK(fit.colwise().mean().norm() < 1e-10);
    auto big = cfg;
    big.initial_size = 1000;
    CHECK_THROWS_AS(prepare_data(blobs(), big), std::invalid_argument);
}
