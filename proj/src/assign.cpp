#include "xprec/assign.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xprec/error.hpp"
#include "xprec/parallel.hpp"

namespace xprec {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Flat: return "lf";
        case ModelKind::CommunityUniform: return "a";
        case ModelKind::UserUniform: return "b";
        case ModelKind::CommunityLearned: return "c";
        case ModelKind::UserLearned: return "d";
    }
    return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "lf" || s == "flat") return ModelKind::Flat;
    if (s == "a") return ModelKind::CommunityUniform;
    if (s == "b") return ModelKind::UserUniform;
    if (s == "c") return ModelKind::CommunityLearned;
    if (s == "d") return ModelKind::UserLearned;
    throw InvalidArgument("unknown model kind '" + std::string(s) + "' (expected lf, a, b, c or d)");
}

bool is_learned(ModelKind kind) {
    return kind == ModelKind::CommunityLearned || kind == ModelKind::UserLearned;
}

bool is_community(ModelKind kind) {
    return kind == ModelKind::CommunityUniform || kind == ModelKind::CommunityLearned;
}

int uniform_level(std::int64_t t, std::int64_t lo, std::int64_t hi, int levels) {
    if (levels < 1) throw InvalidArgument("number of levels must be >= 1");
    if (hi <= lo) return 1;
    // floor(E * (t - lo) / (hi - lo)) in exact integer arithmetic
    const __int128 num = static_cast<__int128>(levels) * (t - lo);
    const auto bin = static_cast<int>(num / (hi - lo));
    return std::clamp(bin + 1, 1, levels);
}

ExperienceAssignment uniform_community_schedule(const Dataset& d, int levels) {
    if (d.empty()) throw DataError("empty dataset");
    const std::int64_t lo = d.min_timestamp();
    const std::int64_t hi = d.max_timestamp();
    std::vector<int> out(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
        out[k] = uniform_level(d.ratings()[k].timestamp, lo, hi, levels);
    }
    return ExperienceAssignment(d, std::move(out));
}

ExperienceAssignment uniform_user_schedule(const Dataset& d, int levels, ScheduleBasis basis) {
    if (d.empty()) throw DataError("empty dataset");
    std::vector<int> out(d.size());
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        const std::size_t begin = d.user_begin(u);
        const std::size_t n = d.user_count(u);
        for (std::size_t j = 0; j < n; ++j) {
            if (basis == ScheduleBasis::Time) {
                out[begin + j] = uniform_level(d.ratings()[begin + j].timestamp,
                                               d.ratings()[begin].timestamp,
                                               d.ratings()[begin + n - 1].timestamp, levels);
            } else {
                out[begin + j] = uniform_level(static_cast<std::int64_t>(j), 0,
                                               static_cast<std::int64_t>(n) - 1, levels);
            }
        }
    }
    return ExperienceAssignment(d, std::move(out));
}

std::vector<int> assign_user_dp(const CostMatrix& costs) {
    const int levels = costs.levels();
    const std::size_t n = costs.columns();
    if (levels < 1) throw InvalidArgument("number of levels must be >= 1");
    if (n == 0) return {};
    const auto e_count = static_cast<std::size_t>(levels);
    for (int e = 1; e <= levels; ++e) {
        for (std::size_t t = 0; t < n; ++t) {
            if (!std::isfinite(costs.at(e, t))) {
                throw InvalidArgument("non-finite cost at level " + std::to_string(e) +
                                      ", column " + std::to_string(t));
            }
        }
    }

    // best[t][k]: cheapest suffix t..n-1 whose level at t is k+1.
    // tail[t][k]: min over j >= k of best[t][j].
    std::vector<double> best(n * e_count), tail(n * e_count);
    for (std::size_t t = n; t-- > 0;) {
        for (std::size_t k = 0; k < e_count; ++k) {
            const double rest = (t + 1 < n) ? tail[(t + 1) * e_count + k] : 0.0;
            best[t * e_count + k] = costs.at(static_cast<int>(k) + 1, t) + rest;
        }
        double running = best[t * e_count + e_count - 1];
        tail[t * e_count + e_count - 1] = running;
        for (std::size_t k = e_count - 1; k-- > 0;) {
            running = std::min(running, best[t * e_count + k]);
            tail[t * e_count + k] = running;
        }
    }

    // Greedy forward pass: at each column take the lowest level that still
    // achieves the optimal suffix cost. This yields the lexicographically
    // smallest optimal sequence.
    std::vector<int> out(n);
    std::size_t floor_level = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double target = tail[t * e_count + floor_level];
        std::size_t k = floor_level;
        while (best[t * e_count + k] != target) ++k;
        out[t] = static_cast<int>(k) + 1;
        floor_level = k;
    }
    return out;
}

std::vector<int> assign_community_dp(const CostMatrix& costs) { return assign_user_dp(costs); }

double sequence_cost(const CostMatrix& costs, std::span<const int> levels) {
    if (levels.size() != costs.columns()) throw InvalidArgument("sequence length mismatch");
    double sum = 0.0;
    for (std::size_t t = 0; t < levels.size(); ++t) sum += costs.at(levels[t], t);
    return sum;
}

std::vector<std::size_t> global_time_order(const Dataset& d) {
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    const auto& r = d.ratings();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (r[a].timestamp != r[b].timestamp) return r[a].timestamp < r[b].timestamp;
        if (r[a].user != r[b].user) return r[a].user < r[b].user;
        return r[a].item < r[b].item;
    });
    return order;
}

namespace {

double squared_error(const ModelParams& p, int level, std::size_t user, std::size_t item, double value) {
    const double e = predict_index(p, level, user, item) - value;
    return e * e;
}

// Solves the DP over groups of equal timestamps so tied ratings share a level.
// `positions` are rating positions in time order.
void assign_sequence(const ModelParams& p, const Dataset& d, std::span<const std::size_t> positions,
                     const std::vector<std::size_t>& user_model,
                     const std::vector<std::size_t>& item_model, std::vector<int>& out) {
    const int levels = p.levels();
    std::vector<std::size_t> group_start;
    for (std::size_t q = 0; q < positions.size(); ++q) {
        if (q == 0 || d.ratings()[positions[q]].timestamp != d.ratings()[positions[q - 1]].timestamp) {
            group_start.push_back(q);
        }
    }
    group_start.push_back(positions.size());
    CostMatrix costs(levels, group_start.size() - 1);
    for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
        for (std::size_t q = group_start[g]; q < group_start[g + 1]; ++q) {
            const std::size_t k = positions[q];
            for (int e = 1; e <= levels; ++e) {
                costs.at(e, g) += squared_error(p, e, user_model[d.user_of(k)],
                                                item_model[d.item_of(k)], d.ratings()[k].value);
            }
        }
    }
    const auto path = assign_user_dp(costs);
    for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
        for (std::size_t q = group_start[g]; q < group_start[g + 1]; ++q) out[positions[q]] = path[g];
    }
}

}  // namespace

ExperienceAssignment assign_all(ModelKind kind, const ModelParams& p, const Dataset& d, int threads,
                                ScheduleBasis basis) {
    if (d.empty()) throw DataError("empty dataset");
    switch (kind) {
        case ModelKind::Flat:
            return ExperienceAssignment(d, std::vector<int>(d.size(), 1));
        case ModelKind::CommunityUniform:
            return uniform_community_schedule(d, p.levels());
        case ModelKind::UserUniform:
            return uniform_user_schedule(d, p.levels(), basis);
        default:
            break;
    }

    std::vector<std::size_t> user_model(d.users().size()), item_model(d.items().size());
    for (std::size_t u = 0; u < user_model.size(); ++u) user_model[u] = p.find_user(d.users()[u]);
    for (std::size_t i = 0; i < item_model.size(); ++i) item_model[i] = p.find_item(d.items()[i]);

    std::vector<int> out(d.size(), 1);
    if (kind == ModelKind::CommunityLearned) {
        const auto order = global_time_order(d);
        assign_sequence(p, d, order, user_model, item_model, out);
    } else {
        parallel_for(d.users().size(), threads, [&](std::size_t begin, std::size_t end) {
            std::vector<std::size_t> positions;
            for (std::size_t u = begin; u < end; ++u) {
                positions.resize(d.user_count(u));
                std::iota(positions.begin(), positions.end(), d.user_begin(u));
                assign_sequence(p, d, positions, user_model, item_model, out);
            }
        });
    }
    return ExperienceAssignment(d, std::move(out));
}

std::optional<MonotonicityViolation> check_monotone(ModelKind kind, const ExperienceAssignment& a,
                                                    const Dataset& d, int levels) {
    if (!a.matches(d)) {
        return MonotonicityViolation{"", 0, "assignment does not match the dataset"};
    }
    const auto& r = d.ratings();
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < 1 || a[k] > levels || (kind == ModelKind::Flat && a[k] != 1)) {
            const std::size_t u = d.user_of(k);
            return MonotonicityViolation{d.users()[u], k - d.user_begin(u),
                                         "level " + std::to_string(a[k]) + " out of range"};
        }
    }
    if (is_community(kind)) {
        const auto order = global_time_order(d);
        for (std::size_t q = 1; q < order.size(); ++q) {
            const std::size_t prev = order[q - 1], cur = order[q];
            const bool tie = r[prev].timestamp == r[cur].timestamp;
            if (a[cur] < a[prev] || (tie && a[cur] != a[prev])) {
                return MonotonicityViolation{
                    d.users()[d.user_of(cur)], q,
                    "monotonicity violated at user=" + d.users()[d.user_of(cur)] +
                        ", index=" + std::to_string(q) + " (global time order)"};
            }
        }
        return std::nullopt;
    }
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        const std::size_t begin = d.user_begin(u);
        for (std::size_t j = 1; j < d.user_count(u); ++j) {
            const std::size_t prev = begin + j - 1, cur = begin + j;
            const bool tie = r[prev].timestamp == r[cur].timestamp;
            if (a[cur] < a[prev] || (tie && a[cur] != a[prev])) {
                return MonotonicityViolation{d.users()[u], j,
                                             "monotonicity violated at user=" + d.users()[u] +
                                                 ", index=" + std::to_string(j)};
            }
        }
    }
    return std::nullopt;
}

}  // namespace xprec
