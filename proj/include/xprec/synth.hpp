#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xprec/assign.hpp"
#include "xprec/dataset.hpp"
#include "xprec/model.hpp"
#include "xprec/trainer.hpp"

namespace xprec {

/// Shape of a planted experience trajectory.
///   UniformTime   - levels advance at equal fractions of the user's history
///   Staircase     - E-1 random change points along the history
///   AlreadyExpert - constant at level E
///   NeverExpert   - staircase that stops at level E-1
///   Mixed         - each user draws one of the above
enum class Trajectory { UniformTime, Staircase, AlreadyExpert, NeverExpert, Mixed };

std::string to_string(Trajectory t);
Trajectory trajectory_from_string(std::string_view s);

/// Standard deviation of the per-level random walk, per parameter block.
struct BlockDrift {
    double alpha = 0.0;
    double user_bias = 0.0;
    double item_bias = 0.0;
    double user_factors = 0.0;
    double item_factors = 0.0;
};

struct SynthConfig {
    int n_users = 200;
    int n_items = 100;
    int levels = 5;
    int factors = 5;
    int min_ratings_per_user = 20;
    int max_ratings_per_user = 60;
    double noise_sigma = 0.3;
    /// Per-level noise (length E); overrides noise_sigma when non-empty.
    std::vector<double> noise_by_level;
    double level_drift = 0.05;
    /// Per-block drift; overrides level_drift when set.
    std::optional<BlockDrift> block_drift;
    /// Spread of level-1 biases and (before the 1/sqrt(K) scaling) factors.
    double bias_sigma = 0.3;
    double factor_sigma = 0.3;
    Trajectory trajectory = Trajectory::Mixed;
    double leaver_fraction = 0.2;
    std::int64_t start_time = 1'000'000'000;
    std::int64_t time_span = 10LL * 365 * 86400;
    /// Leavers stop rating at least this long before the corpus ends.
    std::int64_t leaver_gap = 365LL * 86400;
    std::uint64_t seed = 0;

    void validate() const;
    double sigma(int level) const;
    BlockDrift drift() const;
};

struct GroundTruth {
    ModelParams params;
    /// Planted chronological levels and the matching items, per user.
    std::map<std::string, std::vector<int>> levels;
    std::map<std::string, std::vector<std::string>> items;
    std::map<std::string, bool> leavers;
    std::map<std::string, Trajectory> trajectories;
    std::size_t clamped = 0;
    std::size_t n_ratings = 0;

    double clamp_rate() const {
        return n_ratings ? static_cast<double>(clamped) / static_cast<double>(n_ratings) : 0.0;
    }
};

struct SynthCorpus {
    Dataset dataset;
    GroundTruth truth;
};

/// Draws a corpus from the experience-level model. Deterministic in cfg.seed.
SynthCorpus generate(const SynthConfig& cfg);

/// Planted levels of the ratings of `d` (any subset of the generated corpus).
ExperienceAssignment planted_assignment(const GroundTruth& truth, const Dataset& d);

/// The generating parameters and planted levels packaged as a model over `d`.
FittedModel planted_model(const GroundTruth& truth, const Dataset& d, ModelKind kind);

/// Exhaustive search over every non-decreasing level sequence; returns the
/// cheapest, lexicographically smallest on ties. Requires n <= 12 and E <= 5.
std::vector<int> brute_force_assign(const CostMatrix& costs);

struct RecoveryScore {
    double score = 0.0;
    bool defined = false;  ///< false when either level vector is constant
};

/// Spearman correlation between planted and fitted levels over the training
/// ratings of `train` (average ranks for ties).
RecoveryScore recovery_score(const GroundTruth& truth, const FittedModel& fitted, const Dataset& train);

/// Spearman rank correlation with average ranks. Undefined (nullopt) if either
/// input is constant.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace xprec
