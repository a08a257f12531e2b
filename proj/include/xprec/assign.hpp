#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xprec/dataset.hpp"
#include "xprec/model.hpp"

namespace xprec {

/// How users (or the community) progress through experience levels.
///   Flat             - one level, a standard latent-factor model ("lf")
///   CommunityUniform - global timeline cut into E equal spans ("a")
///   UserUniform      - each user's timeline cut into E equal spans ("b")
///   CommunityLearned - global monotone levels fitted by DP ("c")
///   UserLearned      - per-user monotone levels fitted by DP ("d")
enum class ModelKind { Flat, CommunityUniform, UserUniform, CommunityLearned, UserLearned };

/// Short CLI name: lf, a, b, c, d.
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view s);

bool is_learned(ModelKind kind);
bool is_community(ModelKind kind);

/// E x n matrix of per-level costs for one ordered rating sequence.
class CostMatrix {
public:
    CostMatrix(int levels, std::size_t n) : levels_(levels), n_(n), cost_(static_cast<std::size_t>(levels) * n, 0.0) {}

    int levels() const noexcept { return levels_; }
    std::size_t columns() const noexcept { return n_; }
    /// Level is 1-based, column 0-based.
    double& at(int level, std::size_t t) { return cost_[static_cast<std::size_t>(level - 1) * n_ + t]; }
    double at(int level, std::size_t t) const { return cost_[static_cast<std::size_t>(level - 1) * n_ + t]; }

private:
    int levels_;
    std::size_t n_;
    std::vector<double> cost_;
};

/// Schedules bin either on timestamps (the default) or on rating rank.
enum class ScheduleBasis { Time, Count };

/// Level of a point on [lo, hi] cut into E equal half-open spans, the last one
/// closed. A degenerate span maps to level 1.
int uniform_level(std::int64_t t, std::int64_t lo, std::int64_t hi, int levels);

ExperienceAssignment uniform_community_schedule(const Dataset& d, int levels);
ExperienceAssignment uniform_user_schedule(const Dataset& d, int levels,
                                           ScheduleBasis basis = ScheduleBasis::Time);

/// Optimal non-decreasing level sequence for one cost matrix in O(n*E).
/// Among optimal sequences the lexicographically smallest is returned.
/// Throws InvalidArgument on a non-finite cost.
std::vector<int> assign_user_dp(const CostMatrix& costs);

/// Same DP; `costs` covers every rating ordered by (timestamp, user, item).
std::vector<int> assign_community_dp(const CostMatrix& costs);

/// Sum of costs along a level sequence, accumulated in column order.
double sequence_cost(const CostMatrix& costs, std::span<const int> levels);

/// Positions of all ratings of `d` ordered by (timestamp, user, item).
std::vector<std::size_t> global_time_order(const Dataset& d);

/// Assignment for `kind` given fixed parameters.
ExperienceAssignment assign_all(ModelKind kind, const ModelParams& p, const Dataset& d,
                                int threads = 1, ScheduleBasis basis = ScheduleBasis::Time);

struct MonotonicityViolation {
    std::string user;   ///< offending user (community scope: user of the later rating)
    std::size_t index;  ///< 0-based position in the user's history (or in global time order)
    std::string message;
};

/// Linear-scan check of the monotonicity constraint: per user for user-scoped
/// kinds, across the global time order for community kinds. Flat requires all 1s.
std::optional<MonotonicityViolation> check_monotone(ModelKind kind, const ExperienceAssignment& a,
                                                    const Dataset& d, int levels);

}  // namespace xprec
