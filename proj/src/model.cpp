#include "xprec/model.hpp"

#include <algorithm>
#include <cmath>

#include "xprec/error.hpp"
#include "xprec/parallel.hpp"

namespace xprec {

std::string to_string(Block b) {
    switch (b) {
        case Block::Alpha: return "alpha";
        case Block::UserBias: return "user_bias";
        case Block::ItemBias: return "item_bias";
        case Block::UserFactors: return "user_factors";
        case Block::ItemFactors: return "item_factors";
    }
    return "unknown";
}

ModelParams::ModelParams(std::vector<std::string> users, std::vector<std::string> items,
                         int levels, int factors)
    : levels_(levels), factors_(factors), users_(std::move(users)), items_(std::move(items)) {
    if (levels < 1) throw InvalidArgument("number of levels must be >= 1");
    if (factors < 1) throw InvalidArgument("number of factors must be >= 1");
    if (!std::is_sorted(users_.begin(), users_.end()) ||
        std::adjacent_find(users_.begin(), users_.end()) != users_.end() ||
        !std::is_sorted(items_.begin(), items_.end()) ||
        std::adjacent_find(items_.begin(), items_.end()) != items_.end()) {
        throw InvalidArgument("user and item keys must be sorted and distinct");
    }
    for (std::size_t u = 0; u < users_.size(); ++u) user_lookup_.emplace(users_[u], u);
    for (std::size_t i = 0; i < items_.size(); ++i) item_lookup_.emplace(items_[i], i);
    const auto k = static_cast<std::size_t>(factors_);
    level_size_ = 1 + users_.size() + items_.size() + (users_.size() + items_.size()) * k;
    theta_.assign(level_size_ * static_cast<std::size_t>(levels_), 0.0);
}

std::size_t ModelParams::level_offset(int e) const {
    if (e < 1 || e > levels_) {
        throw InvalidArgument("level " + std::to_string(e) + " outside 1.." + std::to_string(levels_));
    }
    return static_cast<std::size_t>(e - 1) * level_size_;
}

std::size_t ModelParams::find_user(std::string_view user) const {
    auto it = user_lookup_.find(std::string(user));
    return it == user_lookup_.end() ? npos : it->second;
}

std::size_t ModelParams::find_item(std::string_view item) const {
    auto it = item_lookup_.find(std::string(item));
    return it == item_lookup_.end() ? npos : it->second;
}

Block ModelParams::block_of(std::size_t flat_index, int* level) const {
    const std::size_t within = flat_index % level_size_;
    if (level) *level = static_cast<int>(flat_index / level_size_) + 1;
    if (within < user_bias_offset()) return Block::Alpha;
    if (within < item_bias_offset()) return Block::UserBias;
    if (within < user_factor_offset()) return Block::ItemBias;
    if (within < item_factor_offset()) return Block::UserFactors;
    return Block::ItemFactors;
}

LevelParams ModelParams::level_params(int e) const {
    LevelParams lp;
    lp.alpha = alpha(e);
    for (std::size_t u = 0; u < users_.size(); ++u) {
        lp.user_bias.emplace(users_[u], user_bias(e, u));
        auto f = user_factors(e, u);
        lp.user_factors.emplace(users_[u], std::vector<double>(f.begin(), f.end()));
    }
    for (std::size_t i = 0; i < items_.size(); ++i) {
        lp.item_bias.emplace(items_[i], item_bias(e, i));
        auto f = item_factors(e, i);
        lp.item_factors.emplace(items_[i], std::vector<double>(f.begin(), f.end()));
    }
    return lp;
}

void ModelParams::set_level_params(int e, const LevelParams& lp) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw DataError("level parameters do not match model keys: " + what);
    };
    require(lp.user_bias.size() == users_.size() && lp.user_factors.size() == users_.size(),
            "user count");
    require(lp.item_bias.size() == items_.size() && lp.item_factors.size() == items_.size(),
            "item count");
    alpha(e) = lp.alpha;
    for (std::size_t u = 0; u < users_.size(); ++u) {
        auto b = lp.user_bias.find(users_[u]);
        auto f = lp.user_factors.find(users_[u]);
        require(b != lp.user_bias.end() && f != lp.user_factors.end(), "user " + users_[u]);
        require(f->second.size() == static_cast<std::size_t>(factors_), "factor length");
        user_bias(e, u) = b->second;
        std::copy(f->second.begin(), f->second.end(), user_factors(e, u).begin());
    }
    for (std::size_t i = 0; i < items_.size(); ++i) {
        auto b = lp.item_bias.find(items_[i]);
        auto f = lp.item_factors.find(items_[i]);
        require(b != lp.item_bias.end() && f != lp.item_factors.end(), "item " + items_[i]);
        require(f->second.size() == static_cast<std::size_t>(factors_), "factor length");
        item_bias(e, i) = b->second;
        std::copy(f->second.begin(), f->second.end(), item_factors(e, i).begin());
    }
}

// ---------------------------------------------------------------------------

ExperienceAssignment::ExperienceAssignment(const Dataset& d, std::vector<int> levels)
    : users_(d.users()), levels_(std::move(levels)) {
    if (levels_.size() != d.size()) {
        throw DataError("assignment has " + std::to_string(levels_.size()) + " levels for " +
                        std::to_string(d.size()) + " ratings");
    }
    offsets_.reserve(users_.size() + 1);
    for (std::size_t u = 0; u < users_.size(); ++u) offsets_.push_back(d.user_begin(u));
    offsets_.push_back(d.size());
}

ExperienceAssignment ExperienceAssignment::from_user_lists(
    const Dataset& d, const std::map<std::string, std::vector<int>>& by_user) {
    std::vector<int> levels;
    levels.reserve(d.size());
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        auto it = by_user.find(d.users()[u]);
        if (it == by_user.end()) throw DataError("assignment has no levels for user " + d.users()[u]);
        if (it->second.size() != d.user_count(u)) {
            throw DataError("assignment for user " + d.users()[u] + " has " +
                            std::to_string(it->second.size()) + " levels, dataset has " +
                            std::to_string(d.user_count(u)) + " ratings");
        }
        levels.insert(levels.end(), it->second.begin(), it->second.end());
    }
    if (by_user.size() != d.users().size()) {
        throw DataError("assignment names users absent from the dataset");
    }
    return ExperienceAssignment(d, std::move(levels));
}

std::map<std::string, std::vector<int>> ExperienceAssignment::by_user() const {
    std::map<std::string, std::vector<int>> out;
    for (std::size_t u = 0; u < users_.size(); ++u) {
        auto l = user_levels(u);
        out.emplace(users_[u], std::vector<int>(l.begin(), l.end()));
    }
    return out;
}

bool ExperienceAssignment::matches(const Dataset& d) const {
    if (users_ != d.users() || levels_.size() != d.size()) return false;
    for (std::size_t u = 0; u < users_.size(); ++u) {
        if (offsets_[u] != d.user_begin(u)) return false;
    }
    return true;
}

std::size_t ExperienceAssignment::count_changes(const ExperienceAssignment& other) const {
    if (other.levels_.size() != levels_.size()) {
        throw InvalidArgument("cannot compare assignments of different sizes");
    }
    std::size_t n = 0;
    for (std::size_t k = 0; k < levels_.size(); ++k) n += levels_[k] != other.levels_[k];
    return n;
}

// ---------------------------------------------------------------------------

double predict_index(const ModelParams& p, int level, std::size_t user, std::size_t item) {
    double r = p.alpha(level);
    if (user != ModelParams::npos) r += p.user_bias(level, user);
    if (item != ModelParams::npos) r += p.item_bias(level, item);
    if (user != ModelParams::npos && item != ModelParams::npos) {
        auto gu = p.user_factors(level, user);
        auto gi = p.item_factors(level, item);
        for (std::size_t k = 0; k < gu.size(); ++k) r += gu[k] * gi[k];
    }
    return r;
}

double predict(const ModelParams& p, int level, std::string_view user, std::string_view item) {
    return predict_index(p, level, p.find_user(user), p.find_item(item));
}

namespace {

double smoothness_of(std::span<const double> theta, std::size_t level_size, int levels) {
    double sum = 0.0;
    for (int e = 0; e + 1 < levels; ++e) {
        const double* a = theta.data() + static_cast<std::size_t>(e) * level_size;
        const double* b = a + level_size;
        for (std::size_t j = 0; j < level_size; ++j) {
            const double diff = a[j] - b[j];
            sum += diff * diff;
        }
    }
    return sum;
}

}  // namespace

double smoothness_penalty(const ModelParams& p) {
    return smoothness_of(p.theta(), p.level_size(), p.levels());
}

double error_term(const ModelParams& p, const ExperienceAssignment& a, const Dataset& train) {
    return TrainingObjective(p, train, a, 0.0).error_term(p.theta());
}

double objective(const ModelParams& p, const ExperienceAssignment& a, const Dataset& train,
                 double lambda, double magnitude) {
    return TrainingObjective(p, train, a, lambda, magnitude).value(p.theta());
}

std::vector<double> gradient(const ModelParams& p, const ExperienceAssignment& a,
                             const Dataset& train, double lambda, double magnitude) {
    std::vector<double> g(p.theta().size());
    TrainingObjective(p, train, a, lambda, magnitude).value_and_gradient(p.theta(), g);
    return g;
}

// ---------------------------------------------------------------------------

TrainingObjective::TrainingObjective(const ModelParams& shape, const Dataset& train,
                                     const ExperienceAssignment& a, double lambda,
                                     double magnitude, int threads)
    : levels_(shape.levels()),
      factors_(shape.factors()),
      num_users_(shape.num_users()),
      num_items_(shape.num_items()),
      level_size_(shape.level_size()),
      lambda_(lambda),
      magnitude_(magnitude),
      threads_(threads) {
    if (train.empty()) throw DataError("empty training set");
    if (!(lambda >= 0.0) || !(magnitude >= 0.0)) {
        throw InvalidArgument("regularization coefficients must be >= 0");
    }

    user_model_.resize(train.users().size());
    for (std::size_t u = 0; u < train.users().size(); ++u) {
        user_model_[u] = shape.find_user(train.users()[u]);
        if (user_model_[u] == ModelParams::npos) {
            throw DataError("training user " + train.users()[u] + " missing from model");
        }
    }
    item_model_.resize(train.items().size());
    for (std::size_t i = 0; i < train.items().size(); ++i) {
        item_model_[i] = shape.find_item(train.items()[i]);
        if (item_model_[i] == ModelParams::npos) {
            throw DataError("training item " + train.items()[i] + " missing from model");
        }
    }

    const std::size_t n = train.size();
    user_.resize(n);
    item_.resize(n);
    value_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        user_[k] = user_model_[train.user_of(k)];
        item_[k] = item_model_[train.item_of(k)];
        value_[k] = train.ratings()[k].value;
    }
    user_offsets_.resize(train.users().size() + 1);
    for (std::size_t u = 0; u < train.users().size(); ++u) user_offsets_[u] = train.user_begin(u);
    user_offsets_.back() = n;

    item_offsets_.resize(train.items().size() + 1, 0);
    item_pos_.reserve(n);
    for (std::size_t i = 0; i < train.items().size(); ++i) {
        auto pos = train.item_ratings(i);
        item_pos_.insert(item_pos_.end(), pos.begin(), pos.end());
        item_offsets_[i + 1] = item_pos_.size();
    }

    if (!a.matches(train)) throw DataError("missing assignment: assignment does not cover the training set");
    set_assignment(a);
}

void TrainingObjective::set_assignment(const ExperienceAssignment& a) {
    if (a.size() != value_.size()) {
        throw DataError("missing assignment: assignment does not cover the training set");
    }
    level_.assign(a.levels().begin(), a.levels().end());
    for (int e : level_) {
        if (e < 1 || e > levels_) {
            throw DataError("assigned level " + std::to_string(e) + " outside 1.." +
                            std::to_string(levels_));
        }
    }
}

double TrainingObjective::residuals(std::span<const double> theta, std::vector<double>& out) const {
    const std::size_t n = value_.size();
    out.resize(n);
    const auto k_count = static_cast<std::size_t>(factors_);
    const std::size_t ub = 1, ib = 1 + num_users_, uf = ib + num_items_,
                      jf = uf + num_users_ * k_count;
    parallel_for(n, threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const double* lv = theta.data() + static_cast<std::size_t>(level_[k] - 1) * level_size_;
            double pred = lv[0] + lv[ub + user_[k]] + lv[ib + item_[k]];
            const double* gu = lv + uf + user_[k] * k_count;
            const double* gi = lv + jf + item_[k] * k_count;
            for (std::size_t f = 0; f < k_count; ++f) pred += gu[f] * gi[f];
            out[k] = pred - value_[k];
        }
    });
    double sq = 0.0;
    for (double r : out) sq += r * r;
    return sq / static_cast<double>(n);
}

double TrainingObjective::error_term(std::span<const double> theta) const {
    std::vector<double> r;
    return residuals(theta, r);
}

double TrainingObjective::smoothness(std::span<const double> theta) const {
    return smoothness_of(theta, level_size_, levels_);
}

double TrainingObjective::value(std::span<const double> theta) const {
    double v = error_term(theta) + lambda_ * smoothness(theta);
    if (magnitude_ > 0.0) {
        double sq = 0.0;
        for (double x : theta) sq += x * x;
        v += magnitude_ * sq;
    }
    return v;
}

double TrainingObjective::value_and_gradient(std::span<const double> theta,
                                             std::span<double> grad) const {
    if (grad.size() != theta.size() || theta.size() != level_size_ * static_cast<std::size_t>(levels_)) {
        throw InvalidArgument("parameter vector has the wrong size");
    }
    std::vector<double> r;
    const double err = residuals(theta, r);
    std::fill(grad.begin(), grad.end(), 0.0);

    const double scale = 2.0 / static_cast<double>(value_.size());
    const auto k_count = static_cast<std::size_t>(factors_);
    const std::size_t ub = 1, ib = 1 + num_users_, uf = ib + num_items_,
                      jf = uf + num_users_ * k_count;

    // alpha: one accumulator per level, in rating order
    for (std::size_t k = 0; k < r.size(); ++k) {
        grad[static_cast<std::size_t>(level_[k] - 1) * level_size_] += scale * r[k];
    }

    // user blocks: each user's slots are touched only by that user's ratings
    parallel_for(user_model_.size(), threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t u = begin; u < end; ++u) {
            const std::size_t mu = user_model_[u];
            for (std::size_t k = user_offsets_[u]; k < user_offsets_[u + 1]; ++k) {
                const std::size_t lo = static_cast<std::size_t>(level_[k] - 1) * level_size_;
                const double c = scale * r[k];
                grad[lo + ub + mu] += c;
                const double* gi = theta.data() + lo + jf + item_[k] * k_count;
                double* du = grad.data() + lo + uf + mu * k_count;
                for (std::size_t f = 0; f < k_count; ++f) du[f] += c * gi[f];
            }
        }
    });

    parallel_for(item_model_.size(), threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t mi = item_model_[i];
            for (std::size_t q = item_offsets_[i]; q < item_offsets_[i + 1]; ++q) {
                const std::size_t k = item_pos_[q];
                const std::size_t lo = static_cast<std::size_t>(level_[k] - 1) * level_size_;
                const double c = scale * r[k];
                grad[lo + ib + mi] += c;
                const double* gu = theta.data() + lo + uf + user_[k] * k_count;
                double* di = grad.data() + lo + jf + mi * k_count;
                for (std::size_t f = 0; f < k_count; ++f) di[f] += c * gu[f];
            }
        }
    });

    double omega = 0.0;
    for (int e = 0; e + 1 < levels_; ++e) {
        const std::size_t a = static_cast<std::size_t>(e) * level_size_;
        const std::size_t b = a + level_size_;
        for (std::size_t j = 0; j < level_size_; ++j) {
            const double diff = theta[a + j] - theta[b + j];
            omega += diff * diff;
            grad[a + j] += 2.0 * lambda_ * diff;
            grad[b + j] -= 2.0 * lambda_ * diff;
        }
    }
    double value = err + lambda_ * omega;
    if (magnitude_ > 0.0) {
        double sq = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            sq += theta[j] * theta[j];
            grad[j] += 2.0 * magnitude_ * theta[j];
        }
        value += magnitude_ * sq;
    }
    return value;
}

}  // namespace xprec
