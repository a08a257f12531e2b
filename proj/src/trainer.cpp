#include "xprec/trainer.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "xprec/error.hpp"
#include "xprec/evaluator.hpp"
#include "xprec/format.hpp"

namespace xprec {

std::string to_string(StepKind s) {
    switch (s) {
        case StepKind::Init: return "init";
        case StepKind::Theta: return "theta";
        case StepKind::Experience: return "experience";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (levels < 1) throw InvalidArgument("E must be >= 1");
    if (factors < 1) throw InvalidArgument("K must be >= 1");
    if (lambda_grid.empty()) throw InvalidArgument("lambda grid must not be empty");
    for (double l : lambda_grid) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda values must be finite and >= 0");
    }
    if (max_outer_iterations < 1) throw InvalidArgument("max_outer_iterations must be >= 1");
    if (!(inner_tolerance > 0.0)) throw InvalidArgument("inner_tolerance must be > 0");
    if (inner_max_iterations < 1) throw InvalidArgument("inner_max_iterations must be >= 1");
    if (lbfgs_memory < 1) throw InvalidArgument("lbfgs memory must be >= 1");
    if (!(magnitude >= 0.0)) throw InvalidArgument("magnitude penalty must be >= 0");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

Initialization initialize(const Dataset& train, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw DataError("empty training set");
    const int levels = cfg.effective_levels();
    ModelParams p(train.users(), train.items(), levels, cfg.factors);

    const double mean = train.mean_value();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> init(-0.01, 0.01);
    // draw once into level 1, then copy
    auto first = p.level(1);
    first[0] = mean;
    for (std::size_t j = p.user_factor_offset(); j < p.level_size(); ++j) first[j] = init(rng);
    for (int e = 2; e <= levels; ++e) {
        auto lv = p.level(e);
        std::copy(first.begin(), first.end(), lv.begin());
    }

    ExperienceAssignment a;
    switch (cfg.kind) {
        case ModelKind::Flat:
            a = ExperienceAssignment(train, std::vector<int>(train.size(), 1));
            break;
        case ModelKind::CommunityUniform:
        case ModelKind::CommunityLearned:
            a = uniform_community_schedule(train, levels);
            break;
        case ModelKind::UserUniform:
            a = uniform_user_schedule(train, levels, cfg.schedule_basis);
            break;
        case ModelKind::UserLearned:
            a = uniform_user_schedule(train, levels, ScheduleBasis::Time);
            break;
    }
    return {std::move(p), std::move(a)};
}

namespace {

[[noreturn]] void report_divergence(const ModelParams& p, std::span<const double> theta,
                                    std::span<const double> grad) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
        if (!std::isfinite(theta[j]) || !std::isfinite(grad[j])) {
            int level = 0;
            const Block b = p.block_of(j, &level);
            throw DivergenceError("non-finite objective: parameter block " + to_string(b) +
                                  " at level " + std::to_string(level));
        }
    }
    throw DivergenceError("non-finite objective: error term overflowed");
}

}  // namespace

ThetaStepResult theta_step(const ModelParams& p, const ExperienceAssignment& a, const Dataset& train,
                           double lambda, const TrainConfig& cfg) {
    TrainingObjective obj(p, train, a, lambda, cfg.magnitude, cfg.threads);
    ThetaStepResult out{p, {}};
    std::vector<double> x(p.theta().begin(), p.theta().end());

    std::vector<double> probe(x.size());
    if (!std::isfinite(obj.value_and_gradient(x, probe))) report_divergence(p, x, probe);

    LbfgsOptions opts;
    opts.memory = cfg.lbfgs_memory;
    opts.max_iterations = cfg.inner_max_iterations;
    opts.relative_tolerance = cfg.inner_tolerance;
    out.optimizer = lbfgs_minimize(
        [&obj](std::span<const double> theta, std::span<double> g) {
            return obj.value_and_gradient(theta, g);
        },
        x, opts);
    std::copy(x.begin(), x.end(), out.params.theta().begin());
    return out;
}

ExperienceAssignment e_step(const ModelParams& p, const Dataset& train, const TrainConfig& cfg) {
    return assign_all(cfg.kind, p, train, cfg.threads, cfg.schedule_basis);
}

FittedModel fit_lambda(const Dataset& train, const TrainConfig& cfg, double lambda,
                       const Initialization* start) {
    cfg.validate();
    Initialization init = start ? *start : initialize(train, cfg);

    FittedModel m;
    m.kind = cfg.kind;
    m.lambda = lambda;
    m.magnitude = cfg.magnitude;
    m.params = std::move(init.params);
    m.assignment = std::move(init.assignment);

    TrainingObjective obj(m.params, train, m.assignment, lambda, cfg.magnitude, cfg.threads);
    auto record = [&](int iter, StepKind step, std::size_t changed) {
        HistoryEntry h;
        h.iteration = iter;
        h.step = step;
        h.error = obj.error_term(m.params.theta());
        h.objective = obj.value(m.params.theta());
        h.changed = changed;
        m.history.push_back(h);
        return h;
    };
    record(0, StepKind::Init, 0);

    for (int iter = 1; iter <= cfg.max_outer_iterations; ++iter) {
        m.params = theta_step(m.params, m.assignment, train, lambda, cfg).params;
        const double before = record(iter, StepKind::Theta, 0).objective;

        ExperienceAssignment next = e_step(m.params, train, cfg);
        std::size_t changed = next.count_changes(m.assignment);
        if (changed > 0) {
            obj.set_assignment(next);
            // the optimum can lose a rounding step when summed in another order
            if (obj.value(m.params.theta()) > before) {
                obj.set_assignment(m.assignment);
                changed = 0;
            } else {
                m.assignment = std::move(next);
            }
        }
        const HistoryEntry h = record(iter, StepKind::Experience, changed);
        if (cfg.log) {
            cfg.log("iter=" + std::to_string(iter) + " obj=" + format_double(h.objective) +
                    " changed=" + std::to_string(changed) + " lambda=" + format_double(lambda));
        }
        if (changed == 0) break;
    }
    return m;
}

FittedModel fit(const Dataset& train, const Dataset& validation, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw DataError("empty training set");
    if (validation.empty()) throw DataError("empty validation set");

    std::vector<LambdaDiagnostics> grid;
    std::optional<FittedModel> best;
    std::optional<Initialization> warm;
    for (double lambda : cfg.lambda_grid) {
        LambdaDiagnostics diag;
        diag.lambda = lambda;
        try {
            FittedModel m = fit_lambda(train, cfg, lambda, cfg.warm_start && warm ? &*warm : nullptr);
            diag.validation_mse = mse(m, validation, train).mse;
            diag.train_error = m.history.back().error;
            diag.outer_iterations = m.history.back().iteration;
            diag.converged = m.history.back().changed == 0;
            diag.ok = std::isfinite(diag.validation_mse);
            if (!diag.ok) diag.failure = "non-finite validation error";
            if (cfg.warm_start) warm = Initialization{m.params, m.assignment};
            if (diag.ok && (!best || diag.validation_mse < best->grid.front().validation_mse)) {
                m.grid = {diag};  // stash the score; replaced by the full grid below
                best = std::move(m);
            }
        } catch (const DivergenceError& e) {
            diag.failure = e.what();
        }
        if (cfg.log) {
            cfg.log("lambda=" + format_double(lambda) +
                    (diag.ok ? " valid_mse=" + format_double(diag.validation_mse)
                             : " failed: " + diag.failure));
        }
        grid.push_back(std::move(diag));
    }
    if (!best) {
        std::ostringstream msg;
        msg << "training failed for every lambda:";
        for (const auto& d : grid) msg << " [lambda=" << format_double(d.lambda) << ": " << d.failure << "]";
        throw TrainingFailure(msg.str());
    }
    best->grid = std::move(grid);
    return std::move(*best);
}

}  // namespace xprec
