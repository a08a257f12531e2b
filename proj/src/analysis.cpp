#include "xprec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "xprec/error.hpp"
#include "xprec/format.hpp"
#include "xprec/parallel.hpp"

namespace xprec {

namespace {

void require_matching(const FittedModel& m, const Dataset& train) {
    if (!m.assignment.matches(train)) {
        throw DataError("model assignment does not match the training set");
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

bool is_background(const Dataset& d, std::size_t u) {
    return d.users()[u] == kBackgroundUser;
}

}  // namespace

std::vector<TasteScore> acquired_taste_scores(const FittedModel& m, const Dataset& train,
                                              std::size_t min_ratings) {
    const int E = m.params.levels();
    if (E < 2) throw InvalidArgument("taste scores need at least two experience levels");
    std::vector<TasteScore> out;
    for (std::size_t i = 0; i < train.items().size(); ++i) {
        const auto pos = train.item_ratings(i);
        if (pos.size() < min_ratings) continue;
        const std::size_t mi = m.params.find_item(train.items()[i]);
        if (mi == ModelParams::npos) continue;
        TasteScore s;
        s.item = train.items()[i];
        s.beginner_bias = m.params.item_bias(1, mi);
        s.expert_bias = m.params.item_bias(E, mi);
        s.d = s.expert_bias - s.beginner_bias;
        double sum = 0.0;
        for (std::size_t k : pos) sum += train.ratings()[k].value;
        s.n_ratings = pos.size();
        s.mean_rating = sum / static_cast<double>(pos.size());
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<GenreSummary> genre_bias_summary(const std::vector<TasteScore>& scores,
                                             const std::map<std::string, std::string>& genres) {
    std::map<std::string, GenreSummary> acc;
    for (const auto& s : scores) {
        auto g = genres.find(s.item);
        if (g == genres.end()) continue;
        auto& row = acc[g->second];
        row.genre = g->second;
        row.mean_beginner_bias += s.beginner_bias;
        row.mean_expert_bias += s.expert_bias;
        row.mean_d += s.d;
        ++row.n_items;
    }
    if (acc.empty()) throw DataError("no scored item has a genre label");
    std::vector<GenreSummary> out;
    for (auto& [name, row] : acc) {
        const auto n = static_cast<double>(row.n_items);
        row.mean_beginner_bias /= n;
        row.mean_expert_bias /= n;
        row.mean_d /= n;
        out.push_back(row);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const GenreSummary& a, const GenreSummary& b) { return a.mean_d < b.mean_d; });
    return out;
}

std::map<std::string, std::string> read_genres(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line == "item\tgenre") continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw RowError(lineno, "expected 2 columns");
        }
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

std::map<std::string, std::string> read_genres_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_genres(in);
}

std::vector<double> interpolated_experience(const FittedModel& m, const Dataset& train) {
    require_matching(m, train);
    std::vector<double> out(train.size());
    const auto& r = train.ratings();
    for (std::size_t u = 0; u < train.users().size(); ++u) {
        const std::size_t begin = train.user_begin(u);
        const std::size_t n = train.user_count(u);
        std::vector<double> knot_t, knot_v;
        for (std::size_t j = 0; j < n;) {
            std::size_t k = j;
            while (k + 1 < n && m.assignment[begin + k + 1] == m.assignment[begin + j]) ++k;
            knot_t.push_back(0.5 * (static_cast<double>(r[begin + j].timestamp) +
                                    static_cast<double>(r[begin + k].timestamp)));
            knot_v.push_back(m.assignment[begin + j]);
            j = k + 1;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const auto t = static_cast<double>(r[begin + j].timestamp);
            const auto hi = static_cast<std::size_t>(
                std::upper_bound(knot_t.begin(), knot_t.end(), t) - knot_t.begin());
            double v;
            if (hi == 0) {
                v = knot_v.front();
            } else if (hi == knot_t.size()) {
                v = knot_v.back();
            } else {
                const double w = (t - knot_t[hi - 1]) / (knot_t[hi] - knot_t[hi - 1]);
                v = knot_v[hi - 1] + w * (knot_v[hi] - knot_v[hi - 1]);
            }
            out[begin + j] = v;
        }
    }
    return out;
}

std::vector<AgreementPoint> agreement_variance(const FittedModel& m, const Dataset& train,
                                               const AgreementOptions& opts) {
    if (opts.min_cohort < 2) throw InvalidArgument("min_cohort must be >= 2");
    if (!(opts.window > 0.0)) throw InvalidArgument("window must be > 0");
    if (!(opts.step > 0.0)) throw InvalidArgument("step must be > 0");
    const std::vector<double> x = interpolated_experience(m, train);
    const int E = m.params.levels();
    const std::size_t positions =
        static_cast<std::size_t>(std::floor((E - 1) / opts.step + 1e-9)) + 1;
    const auto background = train.background_user();

    // per item: ratings sorted by experience, then a sliding window per centre
    const std::size_t n_items = train.items().size();
    std::vector<double> var_sum(n_items * positions, 0.0);
    std::vector<std::size_t> cohort_size(n_items * positions, 0);
    parallel_for(n_items, opts.threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = lo; i < hi; ++i) {
            pts.clear();
            for (std::size_t k : train.item_ratings(i)) {
                if (background && train.user_of(k) == *background) continue;
                pts.emplace_back(x[k], train.ratings()[k].value);
            }
            std::sort(pts.begin(), pts.end());
            for (std::size_t p = 0; p < positions; ++p) {
                const double centre = 1.0 + static_cast<double>(p) * opts.step;
                const double a = centre - opts.window / 2, b = centre + opts.window / 2;
                auto first = std::lower_bound(pts.begin(), pts.end(), std::pair{a, -1.0});
                auto last = std::upper_bound(first, pts.end(), b,
                                             [](double v, const auto& q) { return v < q.first; });
                const auto n = static_cast<std::size_t>(last - first);
                if (n < opts.min_cohort) continue;
                double mean = 0.0;
                for (auto it = first; it != last; ++it) mean += it->second;
                mean /= static_cast<double>(n);
                double ss = 0.0;
                for (auto it = first; it != last; ++it) ss += (it->second - mean) * (it->second - mean);
                var_sum[i * positions + p] = ss / static_cast<double>(n);
                cohort_size[i * positions + p] = n;
            }
        }
    });

    std::vector<AgreementPoint> out;
    for (std::size_t p = 0; p < positions; ++p) {
        AgreementPoint pt;
        pt.experience = 1.0 + static_cast<double>(p) * opts.step;
        double sum = 0.0;
        for (std::size_t i = 0; i < n_items; ++i) {
            if (cohort_size[i * positions + p] == 0) continue;
            sum += var_sum[i * positions + p];
            ++pt.cohorts;
            pt.ratings += cohort_size[i * positions + p];
        }
        if (pt.cohorts == 0) continue;
        pt.mean_variance = sum / static_cast<double>(pt.cohorts);
        out.push_back(pt);
    }
    return out;
}

std::string to_string(Cohort c) {
    switch (c) {
        case Cohort::Expert: return "expert";
        case Cohort::AlmostExpert: return "almost_expert";
        case Cohort::AlreadyExpert: return "already_expert";
    }
    return "?";
}

ProgressionStats progression_stats(const FittedModel& m, const Dataset& train) {
    if (!is_learned(m.kind)) {
        throw InvalidArgument("progression is fixed by schedule for model " + to_string(m.kind));
    }
    require_matching(m, train);
    const int E = m.params.levels();
    const auto& r = train.ratings();
    ProgressionStats out;
    for (std::size_t u = 0; u < train.users().size(); ++u) {
        if (is_background(train, u)) continue;
        const std::size_t begin = train.user_begin(u);
        const std::size_t n = train.user_count(u);
        if (n == 0) continue;
        UserProgress up;
        up.user = train.users()[u];
        up.n_ratings = n;
        up.lifetime = r[begin + n - 1].timestamp - r[begin].timestamp;
        up.final_level = m.assignment[begin + n - 1];
        for (int level = 2; level <= E; ++level) {
            std::optional<std::int64_t> t;
            std::optional<std::size_t> c;
            for (std::size_t j = 0; j < n; ++j) {
                if (m.assignment[begin + j] >= level) {
                    t = r[begin + j].timestamp - r[begin].timestamp;
                    c = j;
                    break;
                }
            }
            up.time_to_level.push_back(t);
            up.count_to_level.push_back(c);
        }
        out.users.push_back(std::move(up));
    }

    auto cohort_of = [&](const UserProgress& up) -> std::optional<Cohort> {
        if (E >= 2 && up.final_level == E) {
            const bool constant = up.count_to_level.back() && *up.count_to_level.back() == 0 &&
                                  up.count_to_level.front() && *up.count_to_level.front() == 0;
            return constant ? Cohort::AlreadyExpert : Cohort::Expert;
        }
        if (E >= 2 && up.final_level == E - 1) return Cohort::AlmostExpert;
        return std::nullopt;
    };

    for (Cohort c : {Cohort::Expert, Cohort::AlmostExpert, Cohort::AlreadyExpert}) {
        std::vector<const UserProgress*> members;
        for (const auto& up : out.users) {
            if (cohort_of(up) == c) members.push_back(&up);
        }
        if (members.empty()) continue;
        const int top = c == Cohort::Expert ? E : c == Cohort::AlmostExpert ? E - 1 : 1;
        for (int level = 2; level <= top; ++level) {
            std::vector<double> times, counts;
            for (const auto* up : members) {
                times.push_back(static_cast<double>(*up->time_to_level[level - 2]));
                counts.push_back(static_cast<double>(*up->count_to_level[level - 2]));
            }
            out.rows.push_back({c, std::to_string(level), median(times), median(counts), members.size()});
        }
        std::vector<double> times, counts;
        for (const auto* up : members) {
            times.push_back(static_cast<double>(up->lifetime));
            counts.push_back(static_cast<double>(up->n_ratings));
        }
        out.rows.push_back({c, "lifetime", median(times), median(counts), members.size()});
    }
    return out;
}

RetentionResult retention_curves(const FittedModel& m, const Dataset& train,
                                 const RetentionOptions& opts) {
    if (opts.prefix < 1) throw InvalidArgument("prefix must be >= 1");
    if (opts.gap < 0) throw InvalidArgument("gap must be >= 0");
    require_matching(m, train);
    RetentionResult out;
    if (train.empty()) return out;
    const std::int64_t end = train.max_timestamp();
    RetentionCurve left{"left", std::vector<double>(opts.prefix, 0.0), 0};
    RetentionCurve stayed{"stayed", std::vector<double>(opts.prefix, 0.0), 0};
    for (std::size_t u = 0; u < train.users().size(); ++u) {
        if (is_background(train, u)) continue;
        const std::size_t begin = train.user_begin(u);
        const std::size_t n = train.user_count(u);
        const bool gone = has_left(train.ratings()[begin + n - 1].timestamp, end, opts.gap);
        out.left[train.users()[u]] = gone;
        if (n < opts.prefix) continue;
        RetentionCurve& c = gone ? left : stayed;
        for (std::size_t j = 0; j < opts.prefix; ++j) c.mean_level[j] += m.assignment[begin + j];
        ++c.n_users;
    }
    for (RetentionCurve* c : {&left, &stayed}) {
        if (c->n_users == 0) {
            out.warnings.push_back("no " + c->cohort + " users with at least " +
                                   std::to_string(opts.prefix) + " ratings; curve omitted");
            continue;
        }
        for (double& v : c->mean_level) v /= static_cast<double>(c->n_users);
        out.curves.push_back(std::move(*c));
    }
    return out;
}

std::vector<LevelRatingMean> level_rating_means(const FittedModel& m, const Dataset& train) {
    require_matching(m, train);
    const int E = m.params.levels();
    std::vector<LevelRatingMean> out(static_cast<std::size_t>(E));
    std::vector<double> sum(static_cast<std::size_t>(E), 0.0);
    for (std::size_t k = 0; k < train.size(); ++k) {
        const auto e = static_cast<std::size_t>(m.assignment[k] - 1);
        sum[e] += train.ratings()[k].value;
        ++out[e].count;
    }
    for (int e = 1; e <= E; ++e) {
        auto& row = out[static_cast<std::size_t>(e - 1)];
        row.level = e;
        row.mean_rating = row.count ? sum[static_cast<std::size_t>(e - 1)] / static_cast<double>(row.count) : 0.0;
    }
    return out;
}

void write_taste_scores_csv(std::ostream& out, const std::vector<TasteScore>& scores) {
    out << "item,d,beginner_bias,expert_bias,mean_rating,n_ratings\n";
    for (const auto& s : scores) {
        out << s.item << ',' << format_double(s.d) << ',' << format_double(s.beginner_bias) << ','
            << format_double(s.expert_bias) << ',' << format_double(s.mean_rating) << ',' << s.n_ratings
            << '\n';
    }
}

void write_genre_summary_csv(std::ostream& out, const std::vector<GenreSummary>& rows) {
    out << "genre,mean_beginner_bias,mean_expert_bias,mean_d,n_items\n";
    for (const auto& g : rows) {
        out << g.genre << ',' << format_double(g.mean_beginner_bias) << ','
            << format_double(g.mean_expert_bias) << ',' << format_double(g.mean_d) << ',' << g.n_items
            << '\n';
    }
}

void write_agreement_csv(std::ostream& out, const std::vector<AgreementPoint>& curve) {
    out << "experience,mean_variance,cohorts,ratings\n";
    for (const auto& p : curve) {
        out << format_double(p.experience) << ',' << format_double(p.mean_variance) << ',' << p.cohorts
            << ',' << p.ratings << '\n';
    }
}

void write_progression_csv(std::ostream& out, const ProgressionStats& stats) {
    out << "cohort,level,median_cum_time,median_cum_count,n_users\n";
    for (const auto& row : stats.rows) {
        out << to_string(row.cohort) << ',' << row.level << ',' << format_double(row.median_cum_time)
            << ',' << format_double(row.median_cum_count) << ',' << row.n_users << '\n';
    }
}

void write_retention_csv(std::ostream& out, const RetentionResult& r) {
    out << "cohort,index,mean_level,n_users\n";
    for (const auto& c : r.curves) {
        for (std::size_t j = 0; j < c.mean_level.size(); ++j) {
            out << c.cohort << ',' << j + 1 << ',' << format_double(c.mean_level[j]) << ',' << c.n_users
                << '\n';
        }
    }
}

void write_level_means_csv(std::ostream& out, const std::vector<LevelRatingMean>& rows) {
    out << "level,count,mean_rating\n";
    for (const auto& row : rows) {
        out << row.level << ',' << row.count << ',' << format_double(row.mean_rating) << '\n';
    }
}

}  // namespace xprec
