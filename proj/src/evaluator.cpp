#include "xprec/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "xprec/error.hpp"

namespace xprec {

namespace {

// Level of the training rating of train-user `u` nearest to time `t`.
int nearest_level(const FittedModel& m, const Dataset& train, std::size_t u, std::int64_t t) {
    const std::size_t begin = train.user_begin(u);
    const std::size_t n = train.user_count(u);
    if (n == 0) return 1;
    const auto& r = train.ratings();
    // first position with timestamp > t
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (r[begin + mid].timestamp <= t) lo = mid + 1;
        else hi = mid;
    }
    std::size_t pick;
    if (lo == 0) {
        pick = 0;
    } else if (lo == n) {
        pick = n - 1;
    } else {
        const std::int64_t before = t - r[begin + lo - 1].timestamp;
        const std::int64_t after = r[begin + lo].timestamp - t;
        pick = before <= after ? lo - 1 : lo;
    }
    return m.assignment[begin + pick];
}

std::vector<LevelError> finish_levels(int levels, const std::vector<double>& sum,
                                      const std::vector<std::size_t>& count) {
    std::vector<LevelError> out;
    for (int e = 1; e <= levels; ++e) {
        LevelError le;
        le.level = e;
        le.count = count[e - 1];
        le.mse = le.count ? sum[e - 1] / static_cast<double>(le.count) : 0.0;
        out.push_back(le);
    }
    return out;
}

}  // namespace

std::vector<int> assign_test_levels(const FittedModel& m, const Dataset& test, const Dataset& train) {
    if (!m.assignment.matches(train)) {
        throw DataError("model assignment does not match the training set");
    }
    std::vector<int> out(test.size(), 1);
    if (m.kind == ModelKind::Flat) return out;
    const auto background = train.background_user();
    for (std::size_t k = 0; k < test.size(); ++k) {
        const Rating& r = test.ratings()[k];
        if (auto u = train.find_user(r.user)) {
            out[k] = nearest_level(m, train, *u, r.timestamp);
        } else if (background) {
            out[k] = nearest_level(m, train, *background, r.timestamp);
        }
    }
    return out;
}

EvalReport mse(const FittedModel& m, const Dataset& test, const Dataset& train,
               std::optional<SplitScheme> scheme) {
    if (test.empty()) throw DataError("empty test set");
    const auto levels = assign_test_levels(m, test, train);
    const int E = m.params.levels();

    EvalReport rep;
    rep.n_test = test.size();
    rep.scheme = scheme;
    std::vector<double> sq(test.size());
    std::vector<double> level_sum(E, 0.0);
    std::vector<std::size_t> level_count(E, 0);
    double total = 0.0, clamped = 0.0;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const Rating& r = test.ratings()[k];
        const double pred = predict(m.params, levels[k], r.user, r.item);
        const double err = pred - r.value;
        sq[k] = err * err;
        total += sq[k];
        const double cerr = std::clamp(pred, 0.0, 5.0) - r.value;
        clamped += cerr * cerr;
        level_sum[levels[k] - 1] += sq[k];
        ++level_count[levels[k] - 1];
    }
    const auto n = static_cast<double>(test.size());
    rep.mse = total / n;
    rep.clamped_mse = clamped / n;
    if (test.size() > 1) {
        double var = 0.0;
        for (double s : sq) var += (s - rep.mse) * (s - rep.mse);
        var /= (n - 1.0);
        rep.std_error = std::sqrt(var / n);
    }
    rep.per_level = finish_levels(E, level_sum, level_count);

    std::vector<double> train_sum(E, 0.0);
    std::vector<std::size_t> train_count(E, 0);
    for (std::size_t k = 0; k < train.size(); ++k) {
        const Rating& r = train.ratings()[k];
        const int e = m.assignment[k];
        const double err = predict(m.params, e, r.user, r.item) - r.value;
        train_sum[e - 1] += err * err;
        ++train_count[e - 1];
    }
    rep.per_level_train = finish_levels(E, train_sum, train_count);
    return rep;
}

double benefit_percent(double base_mse, double model_mse) {
    if (!(base_mse > 0.0)) throw InvalidArgument("baseline MSE must be positive");
    return 100.0 * (base_mse - model_mse) / base_mse;
}

Comparison compare(const std::vector<std::pair<std::string, const FittedModel*>>& models,
                   const Dataset& test, const Dataset& train, std::optional<SplitScheme> scheme) {
    if (models.empty()) throw InvalidArgument("nothing to compare");
    const FittedModel& ref = *models.front().second;
    for (const auto& [name, m] : models) {
        if (m->params.users() != ref.params.users() || m->params.items() != ref.params.items()) {
            throw DataError("model " + name + " was trained on a different corpus");
        }
    }
    Comparison out;
    const ComparisonRow* lf = nullptr;
    const ComparisonRow* c = nullptr;
    const ComparisonRow* d = nullptr;
    out.rows.reserve(models.size());
    for (const auto& [name, m] : models) {
        out.rows.push_back({name, m->kind, mse(*m, test, train, scheme)});
    }
    for (const auto& row : out.rows) {
        if (row.kind == ModelKind::Flat && !lf) lf = &row;
        if (row.kind == ModelKind::CommunityLearned && !c) c = &row;
        if (row.kind == ModelKind::UserLearned && !d) d = &row;
    }
    if (d && lf) out.benefit_d_over_lf = benefit_percent(lf->report.mse, d->report.mse);
    if (d && c) out.benefit_d_over_c = benefit_percent(c->report.mse, d->report.mse);
    return out;
}

}  // namespace xprec
