#include "xprec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "xprec/error.hpp"

namespace xprec {

std::string to_string(Trajectory t) {
    switch (t) {
        case Trajectory::UniformTime: return "uniform_time";
        case Trajectory::Staircase: return "staircase";
        case Trajectory::AlreadyExpert: return "already_expert";
        case Trajectory::NeverExpert: return "never_expert";
        case Trajectory::Mixed: return "mixed";
    }
    return "?";
}

Trajectory trajectory_from_string(std::string_view s) {
    if (s == "uniform_time") return Trajectory::UniformTime;
    if (s == "staircase") return Trajectory::Staircase;
    if (s == "already_expert") return Trajectory::AlreadyExpert;
    if (s == "never_expert") return Trajectory::NeverExpert;
    if (s == "mixed") return Trajectory::Mixed;
    throw InvalidArgument("unknown trajectory kind '" + std::string(s) + "'");
}

void SynthConfig::validate() const {
    if (n_users < 1 || n_items < 1 || levels < 1 || factors < 1) {
        throw InvalidArgument("synth counts must be >= 1");
    }
    if (min_ratings_per_user < 1 || max_ratings_per_user < min_ratings_per_user) {
        throw InvalidArgument("ratings_per_user range is empty");
    }
    if (max_ratings_per_user > n_items) {
        throw InvalidArgument("ratings_per_user exceeds n_items (each item is rated once per user)");
    }
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
    if (!noise_by_level.empty()) {
        if (noise_by_level.size() != static_cast<std::size_t>(levels)) {
            throw InvalidArgument("noise_by_level must have one entry per level");
        }
        for (double s : noise_by_level) {
            if (!(s >= 0.0)) throw InvalidArgument("noise_by_level entries must be >= 0");
        }
    }
    if (!(level_drift >= 0.0)) throw InvalidArgument("level_drift must be >= 0");
    if (!(leaver_fraction >= 0.0 && leaver_fraction <= 1.0)) {
        throw InvalidArgument("leaver_fraction must lie in [0,1]");
    }
    if (time_span <= 4 * leaver_gap) throw InvalidArgument("time_span must exceed 4 * leaver_gap");
}

double SynthConfig::sigma(int level) const {
    return noise_by_level.empty() ? noise_sigma : noise_by_level[static_cast<std::size_t>(level - 1)];
}

BlockDrift SynthConfig::drift() const {
    if (block_drift) return *block_drift;
    return {level_drift, level_drift, level_drift, level_drift, level_drift};
}

namespace {

std::string make_id(char prefix, int k, int count) {
    const int width = static_cast<int>(std::to_string(count).size());
    std::string digits = std::to_string(k);
    return std::string(1, prefix) + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

// Level at history fraction f in [0,1] for a staircase with sorted cut points.
int staircase_level(const std::vector<double>& cuts, double f) {
    return 1 + static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), f) - cuts.begin());
}

}  // namespace

SynthCorpus generate(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<std::string> users, items;
    for (int u = 1; u <= cfg.n_users; ++u) users.push_back(make_id('u', u, cfg.n_users));
    for (int i = 1; i <= cfg.n_items; ++i) items.push_back(make_id('i', i, cfg.n_items));

    const int E = cfg.levels;
    ModelParams p(users, items, E, cfg.factors);
    {
        const double factor_sd = cfg.factor_sigma / std::sqrt(static_cast<double>(cfg.factors));
        auto first = p.level(1);
        first[0] = 3.5;
        for (std::size_t j = p.user_bias_offset(); j < p.user_factor_offset(); ++j) {
            first[j] = cfg.bias_sigma * unit(rng);
        }
        for (std::size_t j = p.user_factor_offset(); j < p.level_size(); ++j) first[j] = factor_sd * unit(rng);

        const BlockDrift drift = cfg.drift();
        for (int e = 2; e <= E; ++e) {
            auto prev = p.level(e - 1);
            auto cur = p.level(e);
            for (std::size_t j = 0; j < p.level_size(); ++j) {
                double sd = 0.0;
                switch (p.block_of(j)) {
                    case Block::Alpha: sd = drift.alpha; break;
                    case Block::UserBias: sd = drift.user_bias; break;
                    case Block::ItemBias: sd = drift.item_bias; break;
                    case Block::UserFactors: sd = drift.user_factors; break;
                    case Block::ItemFactors: sd = drift.item_factors; break;
                }
                cur[j] = prev[j] + sd * unit(rng);
            }
        }
    }

    GroundTruth truth;
    std::vector<Rating> ratings;
    const std::int64_t end_time = cfg.start_time + cfg.time_span;
    std::vector<int> order(static_cast<std::size_t>(cfg.n_items));
    std::uniform_int_distribution<int> count_dist(cfg.min_ratings_per_user, cfg.max_ratings_per_user);
    static constexpr Trajectory kMixture[] = {Trajectory::UniformTime, Trajectory::Staircase,
                                              Trajectory::Staircase, Trajectory::AlreadyExpert,
                                              Trajectory::NeverExpert};

    for (int u = 0; u < cfg.n_users; ++u) {
        const std::string& user = users[static_cast<std::size_t>(u)];
        const int n = count_dist(rng);
        const bool leaver = uni(rng) < cfg.leaver_fraction;

        Trajectory kind = cfg.trajectory;
        if (kind == Trajectory::Mixed) {
            kind = kMixture[std::uniform_int_distribution<int>(0, 4)(rng)];
        }
        std::vector<double> cuts;
        if (kind == Trajectory::Staircase || kind == Trajectory::NeverExpert) {
            const int steps = kind == Trajectory::Staircase ? E - 1 : std::max(E - 2, 0);
            for (int s = 0; s < steps; ++s) cuts.push_back(uni(rng));
            std::sort(cuts.begin(), cuts.end());
        }

        // timeline: stayers run until the last month, leavers stop well before the end
        std::int64_t first, last;
        if (leaver) {
            first = cfg.start_time + static_cast<std::int64_t>(uni(rng) * cfg.time_span / 4);
            const std::int64_t latest = end_time - 2 * cfg.leaver_gap;
            last = first + static_cast<std::int64_t>(uni(rng) * static_cast<double>(latest - first));
            last = std::max(last, first + cfg.time_span / 8);
            last = std::min(last, latest);
        } else {
            first = cfg.start_time + static_cast<std::int64_t>(uni(rng) * cfg.time_span / 2);
            last = end_time - static_cast<std::int64_t>(uni(rng) * 30 * 86400);
        }

        std::iota(order.begin(), order.end(), 0);
        for (int j = 0; j < n; ++j) {
            std::uniform_int_distribution<int> pick(j, cfg.n_items - 1);
            std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick(rng))]);
        }

        auto& lv = truth.levels[user];
        auto& it = truth.items[user];
        for (int j = 0; j < n; ++j) {
            double f = n > 1 ? static_cast<double>(j) / (n - 1) : 0.0;
            if (leaver) f *= 0.5;  // leavers progress at half speed
            int level = 1;
            switch (kind) {
                case Trajectory::UniformTime:
                    level = std::min(E, 1 + static_cast<int>(std::floor(f * E)));
                    break;
                case Trajectory::Staircase:
                case Trajectory::NeverExpert:
                    level = staircase_level(cuts, f);
                    break;
                case Trajectory::AlreadyExpert:
                    level = E;
                    break;
                case Trajectory::Mixed:
                    break;
            }
            const std::int64_t t =
                n > 1 ? first + static_cast<std::int64_t>(
                                    std::llround(static_cast<double>(last - first) * j / (n - 1)))
                      : first;
            const auto item_idx = static_cast<std::size_t>(order[static_cast<std::size_t>(j)]);
            double value = predict_index(p, level, static_cast<std::size_t>(u), item_idx) +
                           cfg.sigma(level) * unit(rng);
            if (value < 0.0 || value > 5.0) ++truth.clamped;
            value = std::clamp(value, 0.0, 5.0);

            Rating r;
            r.user = user;
            r.item = items[item_idx];
            r.value = value;
            r.raw_value = value;
            r.timestamp = t;
            ratings.push_back(std::move(r));
            lv.push_back(level);
            it.push_back(items[item_idx]);
        }
        truth.leavers[user] = leaver;
        truth.trajectories[user] = kind;
    }
    truth.n_ratings = ratings.size();
    truth.params = std::move(p);
    return {Dataset::from_ratings(std::move(ratings), 5.0), std::move(truth)};
}

ExperienceAssignment planted_assignment(const GroundTruth& truth, const Dataset& d) {
    std::vector<int> out(d.size());
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        const std::string& user = d.users()[u];
        auto lv = truth.levels.find(user);
        auto it = truth.items.find(user);
        if (lv == truth.levels.end() || it == truth.items.end()) {
            throw DataError("user " + user + " is not part of the generated corpus");
        }
        std::unordered_map<std::string, int> by_item;
        for (std::size_t j = 0; j < it->second.size(); ++j) by_item.emplace(it->second[j], lv->second[j]);
        for (std::size_t k = d.user_begin(u); k < d.user_begin(u) + d.user_count(u); ++k) {
            auto hit = by_item.find(d.ratings()[k].item);
            if (hit == by_item.end()) {
                throw DataError("rating (" + user + ", " + d.ratings()[k].item + ") is not part of the generated corpus");
            }
            out[k] = hit->second;
        }
    }
    return ExperienceAssignment(d, std::move(out));
}

FittedModel planted_model(const GroundTruth& truth, const Dataset& d, ModelKind kind) {
    FittedModel m;
    m.kind = kind;
    m.params = truth.params;
    m.assignment = planted_assignment(truth, d);
    return m;
}

std::vector<int> brute_force_assign(const CostMatrix& costs) {
    const int E = costs.levels();
    const std::size_t n = costs.columns();
    if (n > 12 || E > 5) throw InvalidArgument("brute force limited to n <= 12 and E <= 5");
    if (E < 1) throw InvalidArgument("number of levels must be >= 1");
    if (n == 0) return {};

    std::vector<int> current(n, 1), best;
    double best_cost = 0.0;
    // odometer over non-decreasing sequences, in lexicographic order
    while (true) {
        const double c = sequence_cost(costs, current);
        if (best.empty() || c < best_cost) {
            best = current;
            best_cost = c;
        }
        std::size_t pos = n;
        while (pos > 0 && current[pos - 1] == E) --pos;
        if (pos == 0) break;
        const int next = current[pos - 1] + 1;
        for (std::size_t j = pos - 1; j < n; ++j) current[j] = next;
    }
    return best;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    std::size_t j = 0;
    while (j < idx.size()) {
        std::size_t k = j;
        while (k + 1 < idx.size() && v[idx[k + 1]] == v[idx[j]]) ++k;
        const double r = 0.5 * static_cast<double>(j + k) + 1.0;
        for (std::size_t q = j; q <= k; ++q) rank[idx[q]] = r;
        j = k + 1;
    }
    return rank;
}

}  // namespace

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgument("correlation inputs differ in length");
    if (a.size() < 2) return std::nullopt;
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgument("correlation inputs differ in length");
    return pearson(average_ranks(a), average_ranks(b));
}

RecoveryScore recovery_score(const GroundTruth& truth, const FittedModel& fitted, const Dataset& train) {
    if (!fitted.assignment.matches(train)) {
        throw DataError("fitted assignment does not match the training set");
    }
    const auto planted = planted_assignment(truth, train);
    std::vector<double> a(train.size()), b(train.size());
    for (std::size_t k = 0; k < train.size(); ++k) {
        a[k] = planted[k];
        b[k] = fitted.assignment[k];
    }
    RecoveryScore out;
    if (auto s = spearman(a, b)) {
        out.score = *s;
        out.defined = true;
    }
    return out;
}

}  // namespace xprec
