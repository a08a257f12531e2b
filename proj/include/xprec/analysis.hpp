#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xprec/dataset.hpp"
#include "xprec/trainer.hpp"

namespace xprec {

struct TasteScore {
    std::string item;
    double d = 0.0;  ///< item bias at level E minus item bias at level 1
    double beginner_bias = 0.0;
    double expert_bias = 0.0;
    double mean_rating = 0.0;
    std::size_t n_ratings = 0;
};

/// Items with at least `min_ratings` training ratings, in item id order.
/// Throws InvalidArgument when the model has a single level.
std::vector<TasteScore> acquired_taste_scores(const FittedModel& m, const Dataset& train,
                                              std::size_t min_ratings = 50);

struct GenreSummary {
    std::string genre;
    double mean_beginner_bias = 0.0;
    double mean_expert_bias = 0.0;
    double mean_d = 0.0;
    std::size_t n_items = 0;
};

/// Per-genre means, ascending by mean_d (ties by genre name). Items without a
/// genre are skipped. Throws DataError when no scored item has a genre.
std::vector<GenreSummary> genre_bias_summary(const std::vector<TasteScore>& scores,
                                             const std::map<std::string, std::string>& genres);

/// Reads "item<TAB>genre" lines. A first line of exactly "item<TAB>genre" is
/// treated as a header.
std::map<std::string, std::string> read_genres(std::istream& in);
std::map<std::string, std::string> read_genres_file(const std::string& path);

/// Real-valued experience of every training rating: each user's constant-level
/// runs become knots at the run's time midpoint, joined linearly, held
/// constant before the first and after the last knot.
std::vector<double> interpolated_experience(const FittedModel& m, const Dataset& train);

struct AgreementOptions {
    std::size_t min_cohort = 5;
    double window = 0.5;
    double step = 0.1;
    int threads = 1;
};

struct AgreementPoint {
    double experience = 0.0;     ///< window centre
    double mean_variance = 0.0;  ///< mean over qualifying items
    std::size_t cohorts = 0;     ///< items with a qualifying cohort
    std::size_t ratings = 0;     ///< ratings inside those cohorts
};

/// Mean per-item population variance of ratings whose experience falls in a
/// sliding window. Window centres run 1, 1+step, ..., E; positions without a
/// qualifying cohort are omitted. The background user is excluded.
std::vector<AgreementPoint> agreement_variance(const FittedModel& m, const Dataset& train,
                                               const AgreementOptions& opts = {});

enum class Cohort { Expert, AlmostExpert, AlreadyExpert };

std::string to_string(Cohort c);

struct UserProgress {
    std::string user;
    int final_level = 1;
    /// For levels 2..E: time since the first rating and number of earlier
    /// ratings when the level (or a higher one) was first assigned.
    std::vector<std::optional<std::int64_t>> time_to_level;
    std::vector<std::optional<std::size_t>> count_to_level;
    std::int64_t lifetime = 0;
    std::size_t n_ratings = 0;
};

struct ProgressionRow {
    Cohort cohort = Cohort::Expert;
    std::string level;  ///< "2".."E", or "lifetime"
    double median_cum_time = 0.0;
    double median_cum_count = 0.0;
    std::size_t n_users = 0;
};

struct ProgressionStats {
    std::vector<UserProgress> users;
    std::vector<ProgressionRow> rows;
};

/// Throws InvalidArgument for models whose levels are fixed by schedule.
/// The background user is excluded.
ProgressionStats progression_stats(const FittedModel& m, const Dataset& train);

struct RetentionOptions {
    std::int64_t gap = 182LL * 86400;
    std::size_t prefix = 10;
};

struct RetentionCurve {
    std::string cohort;  ///< "left" or "stayed"
    std::vector<double> mean_level;  ///< rating index 1..prefix
    std::size_t n_users = 0;
};

struct RetentionResult {
    std::vector<RetentionCurve> curves;
    std::map<std::string, bool> left;
    std::vector<std::string> warnings;
};

/// True when the last rating precedes the corpus end by more than `gap`.
inline bool has_left(std::int64_t last_rating, std::int64_t corpus_end, std::int64_t gap) {
    return corpus_end - last_rating > gap;
}

RetentionResult retention_curves(const FittedModel& m, const Dataset& train,
                                 const RetentionOptions& opts = {});

struct LevelRatingMean {
    int level = 0;
    std::size_t count = 0;
    double mean_rating = 0.0;
};

/// Mean training rating by fitted level.
std::vector<LevelRatingMean> level_rating_means(const FittedModel& m, const Dataset& train);

void write_taste_scores_csv(std::ostream& out, const std::vector<TasteScore>& scores);
void write_genre_summary_csv(std::ostream& out, const std::vector<GenreSummary>& rows);
void write_agreement_csv(std::ostream& out, const std::vector<AgreementPoint>& curve);
void write_progression_csv(std::ostream& out, const ProgressionStats& stats);
void write_retention_csv(std::ostream& out, const RetentionResult& r);
void write_level_means_csv(std::ostream& out, const std::vector<LevelRatingMean>& rows);

}  // namespace xprec
