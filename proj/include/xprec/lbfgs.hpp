#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace xprec {

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 1000;
    /// Stop once (f_prev - f) / max(|f_prev|, 1e-300) drops below this.
    double relative_tolerance = 1e-6;
    /// Stop once ||g||_inf drops below this.
    double gradient_tolerance = 1e-12;
    int max_line_search = 60;
    double armijo = 1e-4;
};

enum class LbfgsStatus { Converged, GradientSmall, MaxIterations, LineSearchFailed };

std::string to_string(LbfgsStatus s);

struct LbfgsResult {
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    /// Objective after every accepted step, starting with the initial value.
    std::vector<double> trace;
};

/// f(x, grad) writes the gradient into grad and returns the objective value.
using ValueAndGradient = std::function<double(std::span<const double>, std::span<double>)>;

/// Limited-memory BFGS with a backtracking Armijo line search. Every accepted
/// step strictly decreases the objective, so `trace` is non-increasing and the
/// returned point is never worse than the starting point.
/// Throws DivergenceError if the objective at the starting point is not finite.
LbfgsResult lbfgs_minimize(const ValueAndGradient& f, std::vector<double>& x,
                           const LbfgsOptions& options = {});

}  // namespace xprec
