#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "xprec/analysis.hpp"
#include "xprec/error.hpp"

using namespace xprec;
using testing::rating;

namespace {

FittedModel with_levels(const Dataset& train, std::vector<int> levels, int E,
                        ModelKind kind = ModelKind::UserLearned) {
    FittedModel m;
    m.kind = kind;
    m.params = ModelParams(train.users(), train.items(), E, 1);
    m.assignment = ExperienceAssignment(train, std::move(levels));
    return m;
}

}  // namespace

TEST_CASE("taste scores") {
    std::vector<Rating> rs;
    for (int u = 0; u < 4; ++u) {
        rs.push_back(rating("u" + std::to_string(u), "popular", 4, u));
        if (u < 2) rs.push_back(rating("u" + std::to_string(u), "rare", 2, 10 + u));
    }
    const Dataset d = testing::dataset(rs);
    FittedModel m = with_levels(d, std::vector<int>(d.size(), 1), 3);
    const std::size_t pop = m.params.find_item("popular");
    m.params.item_bias(1, pop) = -0.5;
    m.params.item_bias(3, pop) = 0.25;
    const auto scores = acquired_taste_scores(m, d, 3);
    REQUIRE(scores.size() == 1);
    CHECK(scores[0].item == "popular");
    CHECK(scores[0].d == 0.75);
    CHECK(scores[0].beginner_bias == -0.5);
    CHECK(scores[0].expert_bias == 0.25);
    CHECK(scores[0].mean_rating == 4.0);
    CHECK(scores[0].n_ratings == 4);
    CHECK(acquired_taste_scores(m, d, 1).size() == 2);

    const FittedModel flat = with_levels(d, std::vector<int>(d.size(), 1), 1, ModelKind::Flat);
    CHECK_THROWS_AS(acquired_taste_scores(flat, d), InvalidArgument);
}

TEST_CASE("genre summary") {
    std::vector<TasteScore> scores(4);
    scores[0].item = "a", scores[0].d = 1.0, scores[0].expert_bias = 1.0;
    scores[1].item = "b", scores[1].d = 3.0, scores[1].expert_bias = 2.0;
    scores[2].item = "c", scores[2].d = -1.0;
    scores[3].item = "untagged", scores[3].d = 9.0;
    const std::map<std::string, std::string> genres{{"a", "stout"}, {"b", "stout"}, {"c", "lager"}, {"z", "ipa"}};
    const auto rows = genre_bias_summary(scores, genres);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].genre == "lager");
    CHECK(rows[1].genre == "stout");
    CHECK(rows[1].mean_d == 2.0);
    CHECK(rows[1].mean_expert_bias == 1.5);
    CHECK(rows[1].n_items == 2);
    CHECK_THROWS_AS(genre_bias_summary(scores, {{"q", "x"}}), DataError);
}

TEST_CASE("read_genres") {
    std::istringstream with_header("item\tgenre\nx\tstout\r\ny\tipa\n\n");
    const auto g = read_genres(with_header);
    CHECK(g.size() == 2);
    CHECK(g.at("x") == "stout");
    std::istringstream plain("x\tstout\n");
    CHECK(read_genres(plain).size() == 1);
    std::istringstream bad("x\tstout\ty\n");
    CHECK_THROWS_AS(read_genres(bad), RowError);
    CHECK_THROWS_AS(read_genres_file("/nonexistent/genres.tsv"), DataError);
}

TEST_CASE("interpolated experience") {
    const Dataset d = testing::dataset({rating("u", "a", 3, 0), rating("u", "b", 3, 10), rating("u", "c", 3, 20),
                                        rating("u", "d", 3, 30), rating("v", "a", 3, 5)});
    const FittedModel m = with_levels(d, {1, 1, 3, 3, 2}, 3);
    const auto x = interpolated_experience(m, d);
    // knots at (5, 1) and (25, 3)
    CHECK(x[0] == 1.0);
    CHECK(x[1] == doctest::Approx(1.5));
    CHECK(x[2] == doctest::Approx(2.5));
    CHECK(x[3] == 3.0);
    CHECK(x[4] == 2.0);
}

TEST_CASE("agreement variance") {
    std::vector<Rating> rs;
    for (int u = 0; u < 6; ++u) rs.push_back(rating("u" + std::to_string(u), "x", u % 2 ? 5.0 : 3.0, u));
    rs.push_back(rating(std::string(kBackgroundUser), "x", 0.0, 99));
    const Dataset d = testing::dataset(rs);
    const FittedModel m = with_levels(d, std::vector<int>(d.size(), 1), 2);
    AgreementOptions opts;
    opts.min_cohort = 5;
    const auto curve = agreement_variance(m, d, opts);
    // centres 1.0, 1.1 and 1.2 all reach experience 1
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].experience == 1.0);
    CHECK(curve[2].mean_variance == 1.0);
    CHECK(curve[0].mean_variance == 1.0);
    CHECK(curve[0].cohorts == 1);
    CHECK(curve[0].ratings == 6);

    opts.threads = 3;
    CHECK(agreement_variance(m, d, opts).size() == 3);
    opts.min_cohort = 7;
    CHECK(agreement_variance(m, d, opts).empty());
    opts.min_cohort = 1;
    CHECK_THROWS_AS(agreement_variance(m, d, opts), InvalidArgument);
}

TEST_CASE("progression example") {
    std::vector<Rating> rs;
    for (int j = 0; j < 5; ++j) rs.push_back(rating("u", "i" + std::to_string(j), 3, 10 * j));
    const Dataset d = testing::dataset(rs);
    const FittedModel m = with_levels(d, {1, 1, 2, 2, 2}, 2);
    const auto stats = progression_stats(m, d);
    REQUIRE(stats.users.size() == 1);
    CHECK(*stats.users[0].count_to_level[0] == 2);
    CHECK(*stats.users[0].time_to_level[0] == 20);
    CHECK(stats.users[0].lifetime == 40);
    REQUIRE(stats.rows.size() == 2);
    CHECK(stats.rows[0].cohort == Cohort::Expert);
    CHECK(stats.rows[0].level == "2");
    CHECK(stats.rows[0].median_cum_time == 20.0);
    CHECK(stats.rows[0].median_cum_count == 2.0);
    CHECK(stats.rows[1].level == "lifetime");
    CHECK(stats.rows[1].median_cum_count == 5.0);

    const FittedModel fixed = with_levels(d, {1, 1, 2, 2, 2}, 2, ModelKind::UserUniform);
    CHECK_THROWS_AS(progression_stats(fixed, d), InvalidArgument);
}

TEST_CASE("progression cohorts") {
    const Dataset d = testing::dataset({rating("exp", "a", 3, 0), rating("exp", "b", 3, 10), rating("exp", "c", 3, 20),
                                        rating("almost", "a", 3, 0), rating("almost", "b", 3, 5),
                                        rating("born", "a", 3, 0), rating("born", "b", 3, 8),
                                        rating("novice", "a", 3, 0)});
    // users sort as: almost, born, exp, novice
    const FittedModel m = with_levels(d, {1, 2, 3, 3, 1, 2, 3, 1}, 3);
    const auto stats = progression_stats(m, d);
    std::map<std::string, int> rows_per;
    for (const auto& row : stats.rows) ++rows_per[to_string(row.cohort)];
    CHECK(rows_per["expert"] == 3);
    CHECK(rows_per["almost_expert"] == 2);
    CHECK(rows_per["already_expert"] == 1);
    CHECK(stats.users.size() == 4);
}

TEST_CASE("retention") {
    CHECK(has_left(850, 1000, 100));
    CHECK_FALSE(has_left(950, 1000, 100));
    CHECK_FALSE(has_left(900, 1000, 100));

    const Dataset d = testing::dataset({rating("gone", "a", 3, 800), rating("gone", "b", 3, 850),
                                        rating("here", "a", 3, 900), rating("here", "b", 3, 1000),
                                        rating("short", "a", 3, 990)});
    const FittedModel m = with_levels(d, {1, 1, 1, 2, 2}, 2);
    RetentionOptions opts;
    opts.gap = 100;
    opts.prefix = 2;
    const auto r = retention_curves(m, d, opts);
    CHECK(r.left.at("gone"));
    CHECK_FALSE(r.left.at("here"));
    REQUIRE(r.curves.size() == 2);
    CHECK(r.curves[0].cohort == "left");
    CHECK(r.curves[0].mean_level == std::vector<double>{1.0, 1.0});
    CHECK(r.curves[1].mean_level == std::vector<double>{1.0, 2.0});
    CHECK(r.curves[1].n_users == 1);

    opts.gap = 1000;
    const auto none_left = retention_curves(m, d, opts);
    CHECK(none_left.curves.size() == 1);
    REQUIRE(none_left.warnings.size() == 1);
    CHECK(none_left.warnings[0].find("no left users") != std::string::npos);
}

TEST_CASE("level means and csv output") {
    const Dataset d = testing::dataset({rating("u", "a", 2, 0), rating("u", "b", 4, 1), rating("u", "c", 5, 2)});
    const FittedModel m = with_levels(d, {1, 1, 2}, 3);
    const auto means = level_rating_means(m, d);
    REQUIRE(means.size() == 3);
    CHECK(means[0].mean_rating == 3.0);
    CHECK(means[1].count == 1);
    CHECK(means[2].count == 0);

    std::ostringstream out;
    write_level_means_csv(out, means);
    CHECK(out.str() == "level,count,mean_rating\n1,2,3\n2,1,5\n3,0,0\n");

    std::ostringstream agree;
    write_agreement_csv(agree, {AgreementPoint{1.5, 0.25, 2, 12}});
    CHECK(agree.str() == "experience,mean_variance,cohorts,ratings\n1.5,0.25,2,12\n");

    std::ostringstream prog;
    write_progression_csv(prog, progression_stats(m, d));
    CHECK(prog.str().rfind("cohort,level,median_cum_time,median_cum_count,n_users\n", 0) == 0);
}
