#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "xprec/assign.hpp"
#include "xprec/error.hpp"
#include "xprec/synth.hpp"

using namespace xprec;
using testing::rating;

namespace {

CostMatrix matrix(const std::vector<std::vector<double>>& rows) {
    CostMatrix c(static_cast<int>(rows.size()), rows.front().size());
    for (std::size_t e = 0; e < rows.size(); ++e) {
        for (std::size_t t = 0; t < rows[e].size(); ++t) c.at(static_cast<int>(e + 1), t) = rows[e][t];
    }
    return c;
}

CostMatrix random_matrix(std::mt19937_64& rng, int levels, std::size_t n, bool quantized) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CostMatrix c(levels, n);
    for (int e = 1; e <= levels; ++e) {
        for (std::size_t t = 0; t < n; ++t) c.at(e, t) = quantized ? std::floor(u(rng) * 3.0) : u(rng);
    }
    return c;
}

}  // namespace

TEST_CASE("uniform_level") {
    std::vector<int> lv;
    for (std::int64_t t : {0, 25, 50, 75, 100}) lv.push_back(uniform_level(t, 0, 100, 2));
    CHECK(lv == std::vector<int>{1, 1, 2, 2, 2});
    CHECK(uniform_level(10, 10, 10, 3) == 1);
    CHECK(uniform_level(100, 0, 100, 5) == 5);
    CHECK(uniform_level(99, 0, 100, 5) == 5);
    CHECK(uniform_level(20, 0, 100, 5) == 2);
    CHECK(uniform_level(42, 0, 100, 1) == 1);
}

TEST_CASE("uniform schedules") {
    const Dataset d = testing::dataset({rating("a", "x", 3, 0), rating("a", "y", 3, 50), rating("a", "z", 3, 100),
                                        rating("b", "x", 3, 0), rating("b", "y", 3, 100), rating("c", "x", 3, 7)});
    const auto user = uniform_user_schedule(d, 2);
    CHECK(user.by_user().at("a") == std::vector<int>{1, 2, 2});
    CHECK(uniform_user_schedule(d, 5).by_user().at("b") == std::vector<int>{1, 5});
    CHECK(user.by_user().at("c") == std::vector<int>{1});

    const auto community = uniform_community_schedule(d, 2);
    CHECK(community.by_user().at("c") == std::vector<int>{1});
    CHECK(community.by_user().at("b") == std::vector<int>{1, 2});
    CHECK(uniform_community_schedule(d, 2) == community);

    const Dataset flat = testing::dataset({rating("a", "x", 3, 10), rating("a", "y", 3, 10), rating("b", "z", 3, 10)});
    const auto flat_levels = uniform_community_schedule(flat, 3);
    for (int v : flat_levels.levels()) CHECK(v == 1);
}

TEST_CASE("count-based user schedule") {
    const Dataset d = testing::dataset({rating("a", "w", 3, 0), rating("a", "x", 3, 1), rating("a", "y", 3, 2),
                                        rating("a", "z", 3, 1000)});
    CHECK(uniform_user_schedule(d, 2, ScheduleBasis::Time).by_user().at("a") == std::vector<int>{1, 1, 1, 2});
    CHECK(uniform_user_schedule(d, 2, ScheduleBasis::Count).by_user().at("a") == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("DP examples") {
    CHECK(assign_user_dp(matrix({{0, 1, 1}, {1, 0, 0}})) == std::vector<int>{1, 2, 2});
    CHECK(assign_user_dp(matrix({{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}})) == std::vector<int>{1, 1, 1, 1});
    CHECK(assign_user_dp(matrix({{4, 2, 9}})) == std::vector<int>{1, 1, 1});
    CHECK(assign_community_dp(matrix({{0, 0, 9, 9}, {9, 9, 0, 0}})) == std::vector<int>{1, 1, 2, 2});
    CHECK(assign_user_dp(matrix({{5, 5}, {5, 5}, {5, 5}, {5, 5}, {0, 0}})) == std::vector<int>{5, 5});
    CHECK(assign_user_dp(CostMatrix(3, 0)).empty());
    CHECK_THROWS_AS(assign_user_dp(matrix({{0, NAN}})), InvalidArgument);
    CHECK_THROWS_AS(assign_user_dp(matrix({{0, 1}, {INFINITY, 0}})), InvalidArgument);
}

TEST_CASE("DP agrees with exhaustive search") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 400; ++trial) {
        const int levels = 1 + trial % 4;
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
        const CostMatrix c = random_matrix(rng, levels, n, trial % 2 == 0);
        const auto dp = assign_user_dp(c);
        const auto bf = brute_force_assign(c);
        CHECK(dp == bf);
        CHECK(sequence_cost(c, dp) == sequence_cost(c, bf));
    }
}

TEST_CASE("optimal cost does not grow with E") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const CostMatrix big = random_matrix(rng, 4, 7, false);
        CostMatrix small(3, 7);
        for (int e = 1; e <= 3; ++e) {
            for (std::size_t t = 0; t < 7; ++t) small.at(e, t) = big.at(e, t);
        }
        CHECK(sequence_cost(big, assign_user_dp(big)) <= sequence_cost(small, assign_user_dp(small)));
    }
}

TEST_CASE("assign_all dispatch and validation") {
    const Dataset d = testing::random_dataset(30, 20, 9, 4);
    ModelParams p(d.users(), d.items(), 4, 2);
    testing::randomize(p, 9);
    for (auto kind : {ModelKind::Flat, ModelKind::CommunityUniform, ModelKind::UserUniform,
                      ModelKind::CommunityLearned, ModelKind::UserLearned}) {
        const int levels = kind == ModelKind::Flat ? 1 : 4;
        const auto a = assign_all(kind, p, d, 2);
        CHECK_FALSE(check_monotone(kind, a, d, levels));
        CHECK(assign_all(kind, p, d, 1) == a);
    }
    const auto flat = assign_all(ModelKind::Flat, p, d);
    for (int v : flat.levels()) CHECK(v == 1);
}

TEST_CASE("learned assignment is optimal for each user") {
    const Dataset d = testing::random_dataset(10, 12, 8, 2);
    ModelParams p(d.users(), d.items(), 3, 2);
    testing::randomize(p, 3);
    const auto a = assign_all(ModelKind::UserLearned, p, d);
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        CostMatrix c(3, d.user_count(u));
        for (std::size_t j = 0; j < d.user_count(u); ++j) {
            const Rating& r = d.ratings()[d.user_begin(u) + j];
            for (int e = 1; e <= 3; ++e) {
                const double res = predict(p, e, r.user, r.item) - r.value;
                c.at(e, j) = res * res;
            }
        }
        const auto lv = a.user_levels(u);
        CHECK(std::vector<int>(lv.begin(), lv.end()) == brute_force_assign(c));
    }
}

TEST_CASE("equal timestamps share a level") {
    std::vector<Rating> rs;
    for (int j = 0; j < 8; ++j) rs.push_back(rating("u", "i" + std::to_string(j), j < 4 ? 1.0 : 5.0, j / 2));
    const Dataset d = testing::dataset(rs);
    ModelParams p(d.users(), d.items(), 2, 1);
    p.alpha(1) = 1.0;
    p.alpha(2) = 5.0;
    const auto a = assign_all(ModelKind::UserLearned, p, d);
    CHECK(a.by_user().at("u") == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2});
    CHECK_FALSE(check_monotone(ModelKind::UserLearned, a, d, 2));
    const ExperienceAssignment split_tie(d, {1, 1, 1, 2, 2, 2, 2, 2});
    CHECK(check_monotone(ModelKind::UserLearned, split_tie, d, 2));
}

TEST_CASE("monotonicity violations are reported") {
    const Dataset d = testing::dataset({rating("a", "x", 3, 1), rating("a", "y", 3, 2), rating("b", "x", 3, 3)});
    const ExperienceAssignment bad(d, {2, 1, 1});
    const auto v = check_monotone(ModelKind::UserLearned, bad, d, 2);
    REQUIRE(v);
    CHECK(v->user == "a");
    CHECK(v->index == 1);
    CHECK(v->message == "monotonicity violated at user=a, index=1");

    const ExperienceAssignment per_user_ok(d, {1, 2, 1});
    CHECK_FALSE(check_monotone(ModelKind::UserLearned, per_user_ok, d, 2));
    CHECK(check_monotone(ModelKind::CommunityLearned, per_user_ok, d, 2));
    CHECK(check_monotone(ModelKind::Flat, per_user_ok, d, 1));
    CHECK(check_monotone(ModelKind::UserLearned, ExperienceAssignment(d, {1, 3, 3}), d, 2));
}

TEST_CASE("model kind names") {
    for (auto kind : {ModelKind::Flat, ModelKind::CommunityUniform, ModelKind::UserUniform,
                      ModelKind::CommunityLearned, ModelKind::UserLearned}) {
        CHECK(model_kind_from_string(to_string(kind)) == kind);
    }
    CHECK(to_string(ModelKind::Flat) == "lf");
    CHECK_THROWS_AS(model_kind_from_string("z"), InvalidArgument);
    CHECK(is_learned(ModelKind::CommunityLearned));
    CHECK_FALSE(is_learned(ModelKind::UserUniform));
    CHECK(is_community(ModelKind::CommunityUniform));
}
