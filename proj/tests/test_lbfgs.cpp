#include <cmath>

#include "doctest.h"
#include "xprec/error.hpp"
#include "xprec/lbfgs.hpp"

using namespace xprec;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        f += 100 * a * a + b * b;
        g[i] += -400 * x[i] * a - 2 * b;
        g[i + 1] += 200 * a;
    }
    return f;
}

}  // namespace

TEST_CASE("minimizes a quadratic") {
    std::vector<double> x{3.0, -2.0, 7.0};
    const auto res = lbfgs_minimize(
        [](std::span<const double> v, std::span<double> g) {
            double f = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double w = static_cast<double>(i + 1);
                f += w * (v[i] - 1.0) * (v[i] - 1.0);
                g[i] = 2 * w * (v[i] - 1.0);
            }
            return f;
        },
        x, LbfgsOptions{.relative_tolerance = 1e-14});
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.value < 1e-10);
}

TEST_CASE("Rosenbrock with a strictly decreasing trace") {
    std::vector<double> x{-1.2, 1.0, -1.2, 1.0};
    LbfgsOptions opts;
    opts.relative_tolerance = 1e-15;
    opts.max_iterations = 5000;
    const auto res = lbfgs_minimize(rosenbrock, x, opts);
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
    REQUIRE(res.trace.size() >= 2);
    for (std::size_t k = 1; k < res.trace.size(); ++k) CHECK(res.trace[k] < res.trace[k - 1]);
    CHECK(res.value == res.trace.back());
}

TEST_CASE("stationary start stays put") {
    std::vector<double> x{1.0, 1.0};
    const auto res = lbfgs_minimize(rosenbrock, x);
    CHECK(res.value == 0.0);
    CHECK(x == std::vector<double>{1.0, 1.0});
}

TEST_CASE("non-finite start") {
    std::vector<double> x{1.0};
    CHECK_THROWS_AS(lbfgs_minimize([](std::span<const double>, std::span<double> g) {
                        g[0] = 0.0;
                        return NAN;
                    },
                                   x),
                    DivergenceError);
}

TEST_CASE("status names") {
    CHECK(to_string(LbfgsStatus::Converged) == "converged");
}
