#include "xprec/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "xprec/error.hpp"

namespace xprec {

std::string to_string(LbfgsStatus s) {
    switch (s) {
        case LbfgsStatus::Converged: return "converged";
        case LbfgsStatus::GradientSmall: return "gradient-small";
        case LbfgsStatus::MaxIterations: return "max-iterations";
        case LbfgsStatus::LineSearchFailed: return "line-search-failed";
    }
    return "unknown";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

double inf_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const ValueAndGradient& f, std::vector<double>& x,
                           const LbfgsOptions& options) {
    const std::size_t n = x.size();
    LbfgsResult result;
    std::vector<double> g(n), d(n), x_new(n), g_new(n);

    double fx = f(x, g);
    ++result.evaluations;
    if (!std::isfinite(fx)) throw DivergenceError("non-finite objective at the starting point");
    result.trace.push_back(fx);
    result.value = fx;

    std::deque<Pair> history;
    std::vector<double> alpha_buf;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (inf_norm(g) <= options.gradient_tolerance) {
            result.status = LbfgsStatus::GradientSmall;
            return result;
        }

        // two-loop recursion: d = -H g
        for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
        alpha_buf.assign(history.size(), 0.0);
        for (std::size_t h = history.size(); h-- > 0;) {
            alpha_buf[h] = history[h].rho * dot(history[h].s, d);
            for (std::size_t j = 0; j < n; ++j) d[j] -= alpha_buf[h] * history[h].y[j];
        }
        if (!history.empty()) {
            const auto& last = history.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& v : d) v *= gamma;
        }
        for (std::size_t h = 0; h < history.size(); ++h) {
            const double beta = history[h].rho * dot(history[h].y, d);
            for (std::size_t j = 0; j < n; ++j) d[j] += (alpha_buf[h] - beta) * history[h].s[j];
        }

        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            // not a descent direction; restart from steepest descent
            history.clear();
            for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
            slope = dot(g, d);
        }

        double step = history.empty() ? std::min(1.0, 1.0 / std::sqrt(-slope)) : 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < options.max_line_search; ++ls) {
            for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + step * d[j];
            f_new = f(x_new, g_new);
            ++result.evaluations;
            if (std::isfinite(f_new) && f_new <= fx + options.armijo * step * slope && f_new < fx) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.status = LbfgsStatus::LineSearchFailed;
            return result;
        }

        Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            pair.s[j] = x_new[j] - x[j];
            pair.y[j] = g_new[j] - g[j];
        }
        const double sy = dot(pair.s, pair.y);
        if (sy > 1e-12 * dot(pair.y, pair.y)) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (history.size() > static_cast<std::size_t>(options.memory)) history.pop_front();
        }

        const double f_prev = fx;
        x.swap(x_new);
        g.swap(g_new);
        fx = f_new;
        result.value = fx;
        result.iterations = iter + 1;
        result.trace.push_back(fx);

        if ((f_prev - fx) / std::max(std::abs(f_prev), 1e-300) < options.relative_tolerance) {
            result.status = LbfgsStatus::Converged;
            return result;
        }
    }
    result.status = LbfgsStatus::MaxIterations;
    return result;
}

}  // namespace xprec
