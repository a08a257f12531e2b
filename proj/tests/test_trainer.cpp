#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "xprec/error.hpp"
#include "xprec/trainer.hpp"

using namespace xprec;
using testing::rating;

namespace {

TrainConfig small_config(ModelKind kind) {
    TrainConfig cfg;
    cfg.kind = kind;
    cfg.levels = 3;
    cfg.factors = 2;
    cfg.lambda_grid = {0.1};
    cfg.max_outer_iterations = 8;
    cfg.inner_max_iterations = 200;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("initialization") {
    const Dataset d = testing::random_dataset(12, 10, 6, 1);
    const TrainConfig cfg = small_config(ModelKind::UserLearned);
    const Initialization init = initialize(d, cfg);
    for (int e = 1; e <= 3; ++e) {
        CHECK(init.params.alpha(e) == d.mean_value());
        CHECK(init.params.user_bias(e, 0) == 0.0);
        CHECK(std::abs(init.params.item_factors(e, 2)[1]) <= 0.01);
    }
    CHECK(smoothness_penalty(init.params) == 0.0);
    CHECK(init.assignment == uniform_user_schedule(d, 3));

    const Initialization again = initialize(d, cfg);
    CHECK(std::equal(init.params.theta().begin(), init.params.theta().end(), again.params.theta().begin()));

    TrainConfig flat = cfg;
    flat.kind = ModelKind::Flat;
    CHECK(initialize(d, flat).params.levels() == 1);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.levels = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = TrainConfig{};
    cfg.lambda_grid = {};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = TrainConfig{};
    cfg.lambda_grid = {-1.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = TrainConfig{};
    cfg.threads = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("theta step never raises the objective") {
    const Dataset d = testing::random_dataset(15, 12, 7, 2);
    const TrainConfig cfg = small_config(ModelKind::UserUniform);
    const Initialization init = initialize(d, cfg);
    const double before = objective(init.params, init.assignment, d, 0.1);
    const auto step = theta_step(init.params, init.assignment, d, 0.1, cfg);
    CHECK(objective(step.params, init.assignment, d, 0.1) <= before);
}

TEST_CASE("objective history is non-increasing for every kind") {
    const Dataset d = testing::random_dataset(25, 15, 10, 5);
    for (auto kind : {ModelKind::Flat, ModelKind::CommunityUniform, ModelKind::UserUniform,
                      ModelKind::CommunityLearned, ModelKind::UserLearned}) {
        CAPTURE(to_string(kind));
        const FittedModel m = fit_lambda(d, small_config(kind), 0.1);
        REQUIRE(m.history.size() >= 3);
        CHECK(m.history.front().step == StepKind::Init);
        for (std::size_t k = 1; k < m.history.size(); ++k) CHECK(m.history[k].objective <= m.history[k - 1].objective);
        CHECK_FALSE(check_monotone(kind, m.assignment, d, kind == ModelKind::Flat ? 1 : 3));
        if (!is_learned(kind)) CHECK(m.history.back().changed == 0);
        const HistoryEntry& last = m.history.back();
        CHECK(last.objective == doctest::Approx(objective(m.params, m.assignment, d, 0.1)).epsilon(1e-12));
    }
}

TEST_CASE("single level models match the flat model") {
    const Dataset d = testing::random_dataset(20, 15, 8, 6);
    TrainConfig flat = small_config(ModelKind::Flat);
    TrainConfig one = small_config(ModelKind::UserLearned);
    one.levels = 1;
    const FittedModel a = fit_lambda(d, flat, 0.1);
    const FittedModel b = fit_lambda(d, one, 0.1);
    CHECK(a.history.back().objective == b.history.back().objective);
    CHECK(std::equal(a.params.theta().begin(), a.params.theta().end(), b.params.theta().begin()));
}

TEST_CASE("training is thread-count independent") {
    const Dataset d = testing::random_dataset(60, 30, 12, 8);
    TrainConfig cfg = small_config(ModelKind::UserLearned);
    const FittedModel one = fit_lambda(d, cfg, 0.1);
    cfg.threads = 4;
    const FittedModel four = fit_lambda(d, cfg, 0.1);
    CHECK(std::equal(one.params.theta().begin(), one.params.theta().end(), four.params.theta().begin()));
    CHECK(one.assignment == four.assignment);
    CHECK(one.history.size() == four.history.size());
}

TEST_CASE("fit selects lambda on validation") {
    const Dataset d = testing::random_dataset(30, 20, 10, 9);
    const Split s = split(d, SplitSpec{SplitScheme::Final, 0.1, 0.1, 0});
    TrainConfig cfg = small_config(ModelKind::CommunityLearned);
    cfg.lambda_grid = {0.01, 1.0, 100.0};
    std::vector<std::string> lines;
    cfg.log = [&](const std::string& l) { lines.push_back(l); };
    const FittedModel m = fit(s.train, s.validation, cfg);
    REQUIRE(m.grid.size() == 3);
    double best = INFINITY;
    for (const auto& g : m.grid) {
        CHECK(g.ok);
        best = std::min(best, g.validation_mse);
    }
    for (const auto& g : m.grid) {
        if (g.lambda == m.lambda) CHECK(g.validation_mse == best);
    }
    CHECK_FALSE(lines.empty());
    CHECK_THROWS_AS(fit(s.train, Dataset{}, cfg), DataError);
}

TEST_CASE("divergence names the parameter block") {
    const Dataset d = testing::random_dataset(10, 8, 5, 1);
    const TrainConfig cfg = small_config(ModelKind::UserUniform);
    Initialization init = initialize(d, cfg);
    init.params.alpha(2) = 1e300;
    try {
        fit_lambda(d, cfg, 0.1, &init);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.what()).find("non-finite objective") != std::string::npos);
    }
}

TEST_CASE("step names") {
    CHECK(to_string(StepKind::Theta) == "theta");
    CHECK(to_string(StepKind::Experience) == "experience");
    CHECK(to_string(StepKind::Init) == "init");
}
