#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xprec/assign.hpp"
#include "xprec/dataset.hpp"
#include "xprec/lbfgs.hpp"
#include "xprec/model.hpp"

namespace xprec {

struct TrainConfig {
    ModelKind kind = ModelKind::UserLearned;
    int levels = 5;
    int factors = 5;
    std::vector<double> lambda_grid = {1e0, 1e1, 1e2, 1e3, 1e4, 1e5};
    int max_outer_iterations = 50;
    double inner_tolerance = 1e-6;
    int inner_max_iterations = 1000;
    int lbfgs_memory = 10;
    /// Coefficient of an optional ||theta||^2 penalty. Zero by default.
    double magnitude = 0.0;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Start each grid point from the previous point's solution.
    bool warm_start = false;
    ScheduleBasis schedule_basis = ScheduleBasis::Time;
    /// Receives progress lines such as "iter=3 obj=0.41 changed=12".
    std::function<void(const std::string&)> log;

    /// Levels actually fitted: 1 for Flat, `levels` otherwise.
    int effective_levels() const { return kind == ModelKind::Flat ? 1 : levels; }
    void validate() const;
};

enum class StepKind { Init, Theta, Experience };

std::string to_string(StepKind s);

struct HistoryEntry {
    int iteration = 0;
    StepKind step = StepKind::Init;
    double objective = 0.0;  ///< error term + lambda * smoothness (+ magnitude penalty)
    double error = 0.0;      ///< mean squared training error
    std::size_t changed = 0; ///< assignments changed by an experience step
};

/// Outcome of training at one grid point.
struct LambdaDiagnostics {
    double lambda = 0.0;
    bool ok = false;
    double validation_mse = 0.0;
    double train_error = 0.0;
    int outer_iterations = 0;
    bool converged = false;  ///< an experience step changed nothing
    std::string failure;
};

struct FittedModel {
    ModelParams params;
    ExperienceAssignment assignment;
    ModelKind kind = ModelKind::Flat;
    double lambda = 0.0;
    double magnitude = 0.0;
    std::vector<HistoryEntry> history;
    std::vector<LambdaDiagnostics> grid;
};

struct Initialization {
    ModelParams params;
    ExperienceAssignment assignment;
};

/// alpha = training mean at every level, biases 0, factors uniform on
/// [-0.01, 0.01] drawn once and copied to every level (smoothness starts at 0).
Initialization initialize(const Dataset& train, const TrainConfig& cfg);

struct ThetaStepResult {
    ModelParams params;
    LbfgsResult optimizer;
};

/// Minimizes the objective over parameters with the assignment held fixed.
/// The returned objective never exceeds the input objective.
/// Throws DivergenceError naming the offending block on a non-finite objective.
ThetaStepResult theta_step(const ModelParams& p, const ExperienceAssignment& a, const Dataset& train,
                           double lambda, const TrainConfig& cfg);

/// Refits the assignment with parameters held fixed.
ExperienceAssignment e_step(const ModelParams& p, const Dataset& train, const TrainConfig& cfg);

/// Coordinate descent at a single regularization strength.
FittedModel fit_lambda(const Dataset& train, const TrainConfig& cfg, double lambda,
                       const Initialization* start = nullptr);

/// Trains one model per grid value and keeps the one with the lowest
/// validation MSE. Throws TrainingFailure if every grid value fails.
FittedModel fit(const Dataset& train, const Dataset& validation, const TrainConfig& cfg);

}  // namespace xprec
