#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "xprec/error.hpp"
#include "xprec/evaluator.hpp"

using namespace xprec;
using testing::rating;

namespace {

FittedModel constant_model(const Dataset& train, std::vector<int> levels, int E, ModelKind kind) {
    FittedModel m;
    m.kind = kind;
    m.params = ModelParams(train.users(), train.items(), E, 1);
    for (int e = 1; e <= E; ++e) m.params.alpha(e) = 3.0;
    m.assignment = ExperienceAssignment(train, std::move(levels));
    return m;
}

}  // namespace

TEST_CASE("test levels come from the nearest training rating") {
    const Dataset train = testing::dataset({rating("u", "a", 3, 0), rating("u", "b", 3, 100)});
    const FittedModel m = constant_model(train, {1, 3}, 3, ModelKind::UserLearned);
    const Dataset test = testing::dataset({rating("u", "c", 3, 90), rating("u", "d", 3, 50), rating("u", "e", 3, 500),
                                           rating("stranger", "a", 3, 90)});
    const auto lv = assign_test_levels(m, test, train);
    // test order: stranger first, then u by time
    CHECK(lv == std::vector<int>{1, 1, 3, 3});
}

TEST_CASE("unseen users borrow the background user's level") {
    const Dataset train = testing::dataset({rating("u", "a", 3, 0), rating(std::string(kBackgroundUser), "b", 3, 0),
                                            rating(std::string(kBackgroundUser), "c", 3, 100)});
    std::vector<int> levels(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) levels[k] = train.ratings()[k].timestamp == 100 ? 2 : 1;
    const FittedModel m = constant_model(train, levels, 2, ModelKind::UserLearned);
    const Dataset test = testing::dataset({rating("new", "a", 3, 95)});
    CHECK(assign_test_levels(m, test, train) == std::vector<int>{2});
}

TEST_CASE("flat models use level 1") {
    const Dataset train = testing::dataset({rating("u", "a", 3, 0)});
    const FittedModel m = constant_model(train, {1}, 1, ModelKind::Flat);
    CHECK(assign_test_levels(m, testing::dataset({rating("u", "b", 3, 9)}), train) == std::vector<int>{1});
}

TEST_CASE("mse example") {
    const Dataset train = testing::dataset({rating("u", "a", 3, 0)});
    const FittedModel m = constant_model(train, {1}, 1, ModelKind::Flat);
    const Dataset test = testing::dataset({rating("u", "b", 3, 5), rating("u", "c", 4, 6)});
    const EvalReport r = mse(m, test, train, SplitScheme::Final);
    CHECK(r.mse == 0.5);
    CHECK(r.n_test == 2);
    CHECK(r.std_error == doctest::Approx(0.5));
    CHECK(r.scheme == SplitScheme::Final);
    CHECK_THROWS_AS(mse(m, Dataset{}, train), DataError);
}

TEST_CASE("clamped predictions") {
    const Dataset train = testing::dataset({rating("u", "a", 5, 0)});
    FittedModel m = constant_model(train, {1}, 1, ModelKind::Flat);
    m.params.alpha(1) = 6.0;
    const EvalReport r = mse(m, testing::dataset({rating("u", "b", 5, 1)}), train);
    CHECK(r.mse == 1.0);
    CHECK(r.clamped_mse == 0.0);
}

TEST_CASE("per-level errors recombine to the total") {
    const Dataset train = testing::random_dataset(20, 15, 10, 3);
    const Dataset test = testing::random_dataset(20, 15, 4, 4);
    FittedModel m;
    m.kind = ModelKind::UserUniform;
    m.params = ModelParams(train.users(), train.items(), 3, 2);
    testing::randomize(m.params, 5);
    m.assignment = uniform_user_schedule(train, 3);
    const EvalReport r = mse(m, test, train);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& le : r.per_level) {
        sum += le.mse * static_cast<double>(le.count);
        n += le.count;
    }
    CHECK(n == r.n_test);
    CHECK(std::abs(sum / static_cast<double>(n) - r.mse) < 1e-12);
    std::size_t train_n = 0;
    for (const auto& le : r.per_level_train) train_n += le.count;
    CHECK(train_n == train.size());
}

TEST_CASE("benefit") {
    CHECK(benefit_percent(0.452, 0.400) == doctest::Approx(11.504424778761).epsilon(1e-10));
    CHECK(benefit_percent(1.0, 1.0) == 0.0);
    CHECK(benefit_percent(1.0, 1.5) == -50.0);
    CHECK_THROWS_AS(benefit_percent(0.0, 1.0), InvalidArgument);
}

TEST_CASE("compare") {
    const Dataset train = testing::dataset({rating("u", "a", 3, 0), rating("u", "b", 4, 10)});
    const Dataset test = testing::dataset({rating("u", "c", 4, 20)});
    FittedModel lf = constant_model(train, {1, 1}, 1, ModelKind::Flat);
    FittedModel c = constant_model(train, {1, 1}, 2, ModelKind::CommunityLearned);
    c.params.alpha(1) = 3.2;
    c.params.alpha(2) = 3.2;
    FittedModel d = constant_model(train, {1, 2}, 2, ModelKind::UserLearned);
    d.params.alpha(2) = 3.5;
    const Comparison cmp = compare({{"lf", &lf}, {"c", &c}, {"d", &d}}, test, train);
    REQUIRE(cmp.rows.size() == 3);
    CHECK(cmp.rows[0].report.mse == 1.0);
    REQUIRE(cmp.benefit_d_over_lf);
    CHECK(*cmp.benefit_d_over_lf == doctest::Approx(75.0));
    REQUIRE(cmp.benefit_d_over_c);
    CHECK(*cmp.benefit_d_over_c == doctest::Approx(100.0 * (0.64 - 0.25) / 0.64));

    const Comparison only = compare({{"lf", &lf}}, test, train);
    CHECK_FALSE(only.benefit_d_over_lf);

    const Dataset other = testing::dataset({rating("v", "a", 3, 0)});
    const FittedModel foreign = constant_model(other, {1}, 1, ModelKind::Flat);
    CHECK_THROWS_AS(compare({{"lf", &lf}, {"x", &foreign}}, test, train), DataError);
}
