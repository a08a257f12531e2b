#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xprec/dataset.hpp"

namespace xprec {

/// One experience level's recommender, materialized with id keys.
struct LevelParams {
    double alpha = 0.0;
    std::map<std::string, double> user_bias;
    std::map<std::string, double> item_bias;
    std::map<std::string, std::vector<double>> user_factors;
    std::map<std::string, std::vector<double>> item_factors;
};

enum class Block { Alpha, UserBias, ItemBias, UserFactors, ItemFactors };

std::string to_string(Block b);

/// Parameters of E latent-factor recommenders over a fixed user/item key set.
///
/// All scalars live in one flat vector, level-major. Within a level the order
/// is: alpha, user biases (sorted user order), item biases (sorted item order),
/// user factors (user-major, K entries each), item factors (item-major). Levels
/// are addressed 1..E everywhere in the public API.
class ModelParams {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    ModelParams() = default;
    /// `users` and `items` must be sorted and distinct.
    ModelParams(std::vector<std::string> users, std::vector<std::string> items, int levels,
                int factors);

    int levels() const noexcept { return levels_; }
    int factors() const noexcept { return factors_; }
    const std::vector<std::string>& users() const noexcept { return users_; }
    const std::vector<std::string>& items() const noexcept { return items_; }
    std::size_t num_users() const noexcept { return users_.size(); }
    std::size_t num_items() const noexcept { return items_.size(); }

    /// Number of scalars in one level: 1 + U + I + U*K + I*K.
    std::size_t level_size() const noexcept { return level_size_; }

    std::span<double> theta() noexcept { return theta_; }
    std::span<const double> theta() const noexcept { return theta_; }
    std::span<double> level(int e) { return theta().subspan(level_offset(e), level_size_); }
    std::span<const double> level(int e) const { return theta().subspan(level_offset(e), level_size_); }

    std::size_t level_offset(int e) const;
    std::size_t user_bias_offset() const noexcept { return 1; }
    std::size_t item_bias_offset() const noexcept { return 1 + users_.size(); }
    std::size_t user_factor_offset() const noexcept { return 1 + users_.size() + items_.size(); }
    std::size_t item_factor_offset() const noexcept {
        return user_factor_offset() + users_.size() * static_cast<std::size_t>(factors_);
    }

    double& alpha(int e) { return theta_[level_offset(e)]; }
    double alpha(int e) const { return theta_[level_offset(e)]; }
    double& user_bias(int e, std::size_t u) { return theta_[level_offset(e) + user_bias_offset() + u]; }
    double user_bias(int e, std::size_t u) const { return theta_[level_offset(e) + user_bias_offset() + u]; }
    double& item_bias(int e, std::size_t i) { return theta_[level_offset(e) + item_bias_offset() + i]; }
    double item_bias(int e, std::size_t i) const { return theta_[level_offset(e) + item_bias_offset() + i]; }
    std::span<double> user_factors(int e, std::size_t u) {
        return {theta_.data() + level_offset(e) + user_factor_offset() + u * factors_,
                static_cast<std::size_t>(factors_)};
    }
    std::span<const double> user_factors(int e, std::size_t u) const {
        return {theta_.data() + level_offset(e) + user_factor_offset() + u * factors_,
                static_cast<std::size_t>(factors_)};
    }
    std::span<double> item_factors(int e, std::size_t i) {
        return {theta_.data() + level_offset(e) + item_factor_offset() + i * factors_,
                static_cast<std::size_t>(factors_)};
    }
    std::span<const double> item_factors(int e, std::size_t i) const {
        return {theta_.data() + level_offset(e) + item_factor_offset() + i * factors_,
                static_cast<std::size_t>(factors_)};
    }

    /// Dense index, or npos for an unknown id.
    std::size_t find_user(std::string_view user) const;
    std::size_t find_item(std::string_view item) const;

    /// Which block (and level) a flat index falls in.
    Block block_of(std::size_t flat_index, int* level = nullptr) const;

    LevelParams level_params(int e) const;
    void set_level_params(int e, const LevelParams& lp);

private:
    int levels_ = 0;
    int factors_ = 0;
    std::vector<std::string> users_;
    std::vector<std::string> items_;
    std::unordered_map<std::string, std::size_t> user_lookup_;
    std::unordered_map<std::string, std::size_t> item_lookup_;
    std::size_t level_size_ = 0;
    std::vector<double> theta_;
};

/// Latent level (1..E) of every rating of a dataset, stored in the dataset's
/// canonical rating order, which groups each user's ratings chronologically.
class ExperienceAssignment {
public:
    ExperienceAssignment() = default;
    /// `levels` is aligned to `d.ratings()`.
    ExperienceAssignment(const Dataset& d, std::vector<int> levels);
    /// Builds from per-user chronological level lists; every user of `d` must
    /// be present with exactly `d.user_count(u)` levels.
    static ExperienceAssignment from_user_lists(const Dataset& d,
                                                const std::map<std::string, std::vector<int>>& by_user);

    std::span<const int> levels() const noexcept { return levels_; }
    std::span<int> levels() noexcept { return levels_; }
    int operator[](std::size_t pos) const { return levels_[pos]; }
    std::size_t size() const noexcept { return levels_.size(); }

    const std::vector<std::string>& users() const noexcept { return users_; }
    std::span<const int> user_levels(std::size_t u) const {
        return std::span<const int>(levels_).subspan(offsets_[u], offsets_[u + 1] - offsets_[u]);
    }
    std::map<std::string, std::vector<int>> by_user() const;

    /// True when users and per-user counts line up with `d`.
    bool matches(const Dataset& d) const;

    /// Number of positions whose level differs.
    std::size_t count_changes(const ExperienceAssignment& other) const;

    friend bool operator==(const ExperienceAssignment& a, const ExperienceAssignment& b) {
        return a.users_ == b.users_ && a.offsets_ == b.offsets_ && a.levels_ == b.levels_;
    }

private:
    std::vector<std::string> users_;
    std::vector<std::size_t> offsets_;
    std::vector<int> levels_;
};

/// alpha(e) + beta_u(e) + beta_i(e) + <gamma_u(e), gamma_i(e)>; unknown users
/// or items contribute zero. No clamping.
double predict(const ModelParams& p, int level, std::string_view user, std::string_view item);
/// Same, by dense index (ModelParams::npos for a cold key).
double predict_index(const ModelParams& p, int level, std::size_t user, std::size_t item);

/// Sum over adjacent levels of the squared l2 distance between their parameters.
double smoothness_penalty(const ModelParams& p);

/// Mean squared training error under assignment `a`.
double error_term(const ModelParams& p, const ExperienceAssignment& a, const Dataset& train);

/// error_term + lambda * smoothness_penalty (+ magnitude * ||theta||^2, off by default).
double objective(const ModelParams& p, const ExperienceAssignment& a, const Dataset& train,
                 double lambda, double magnitude = 0.0);

/// Gradient of `objective` in the flat parameter order of ModelParams.
std::vector<double> gradient(const ModelParams& p, const ExperienceAssignment& a,
                             const Dataset& train, double lambda, double magnitude = 0.0);

/// The training objective compiled against one dataset and assignment, for
/// repeated evaluation on flat parameter vectors of the same shape.
///
/// Gradient accumulation may run on several threads; every output slot is
/// reduced in a fixed order, so results do not depend on the thread count.
class TrainingObjective {
public:
    TrainingObjective(const ModelParams& shape, const Dataset& train,
                      const ExperienceAssignment& a, double lambda, double magnitude = 0.0,
                      int threads = 1);

    void set_assignment(const ExperienceAssignment& a);

    double error_term(std::span<const double> theta) const;
    double smoothness(std::span<const double> theta) const;
    double value(std::span<const double> theta) const;
    double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;

    double lambda() const noexcept { return lambda_; }

private:
    double residuals(std::span<const double> theta, std::vector<double>& out) const;

    int levels_;
    int factors_;
    std::size_t num_users_;
    std::size_t num_items_;
    std::size_t level_size_;
    double lambda_;
    double magnitude_;
    int threads_;

    std::vector<std::size_t> user_;  // model index per rating
    std::vector<std::size_t> item_;
    std::vector<double> value_;
    std::vector<int> level_;
    // rating ranges of each dataset user, and that user's model index
    std::vector<std::size_t> user_offsets_;
    std::vector<std::size_t> user_model_;
    // rating positions of each dataset item, and that item's model index
    std::vector<std::size_t> item_offsets_;
    std::vector<std::size_t> item_pos_;
    std::vector<std::size_t> item_model_;
};

}  // namespace xprec
