#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xprec/dataset.hpp"
#include "xprec/trainer.hpp"

namespace xprec {

struct LevelError {
    int level = 0;
    std::size_t count = 0;
    double mse = 0.0;  ///< 0 when count == 0
};

struct EvalReport {
    double mse = 0.0;
    double std_error = 0.0;   ///< standard error of the mean squared error
    double clamped_mse = 0.0; ///< predictions clamped to [0, 5]
    std::size_t n_test = 0;
    std::optional<SplitScheme> scheme;
    std::vector<LevelError> per_level;        ///< test ratings, by assigned level
    std::vector<LevelError> per_level_train;  ///< training ratings, by fitted level
};

/// Level of each test rating: the fitted level of the same user's
/// chronologically nearest training rating (ties go to the earlier one).
/// Users unseen in training borrow the background user's nearest rating, or
/// get level 1. Aligned to `test.ratings()`.
std::vector<int> assign_test_levels(const FittedModel& m, const Dataset& test, const Dataset& train);

/// Throws DataError on an empty test set.
EvalReport mse(const FittedModel& m, const Dataset& test, const Dataset& train,
               std::optional<SplitScheme> scheme = std::nullopt);

/// 100 * (base - model) / base.
double benefit_percent(double base_mse, double model_mse);

struct ComparisonRow {
    std::string name;
    ModelKind kind;
    EvalReport report;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::optional<double> benefit_d_over_lf;
    std::optional<double> benefit_d_over_c;
};

/// Evaluates several models on one corpus. Throws DataError when the models
/// were not trained on the same users and items.
Comparison compare(const std::vector<std::pair<std::string, const FittedModel*>>& models,
                   const Dataset& test, const Dataset& train,
                   std::optional<SplitScheme> scheme = std::nullopt);

}  // namespace xprec
