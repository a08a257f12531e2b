#include "xprec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "xprec/error.hpp"
#include "xprec/format.hpp"

namespace xprec {

double normalize_rating(double raw, double scale_max) {
    if (!(scale_max > 0.0) || !std::isfinite(scale_max)) {
        throw InvalidArgument("invalid scale: scale_max must be positive, got " +
                              format_double(scale_max));
    }
    return 5.0 * raw / scale_max;
}

namespace {

bool chronological_less(const Rating& a, const Rating& b) {
    return std::tie(a.user, a.timestamp, a.item, a.source_user, a.raw_value) <
           std::tie(b.user, b.timestamp, b.item, b.source_user, b.raw_value);
}

}  // namespace

Dataset Dataset::from_ratings(std::vector<Rating> ratings, double scale_max) {
    if (!(scale_max > 0.0)) {
        throw InvalidArgument("invalid scale: scale_max must be positive");
    }
    Dataset d;
    d.scale_max_ = scale_max;
    std::sort(ratings.begin(), ratings.end(), chronological_less);

    for (std::size_t k = 0; k < ratings.size(); ++k) {
        const Rating& r = ratings[k];
        if (r.timestamp < 0) {
            throw DataError("negative timestamp for user " + r.user + ", item " + r.item);
        }
        if (!(r.value >= 0.0 && r.value <= 5.0)) {
            throw DataError("rating value out of [0,5] for user " + r.user + ", item " + r.item);
        }
    }

    // users are already grouped, in ascending order
    d.user_offsets_.push_back(0);
    for (std::size_t k = 0; k < ratings.size(); ++k) {
        if (k == 0 || ratings[k].user != ratings[k - 1].user) {
            if (k != 0) d.user_offsets_.push_back(k);
            d.users_.push_back(ratings[k].user);
        }
    }
    if (!ratings.empty()) d.user_offsets_.push_back(ratings.size());

    std::vector<std::string> items;
    items.reserve(ratings.size());
    for (const auto& r : ratings) items.push_back(r.item);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    d.items_ = std::move(items);

    for (std::size_t u = 0; u < d.users_.size(); ++u) d.user_lookup_.emplace(d.users_[u], u);
    for (std::size_t i = 0; i < d.items_.size(); ++i) d.item_lookup_.emplace(d.items_[i], i);

    d.rating_user_.resize(ratings.size());
    d.rating_item_.resize(ratings.size());
    for (std::size_t u = 0; u < d.users_.size(); ++u) {
        for (std::size_t k = d.user_offsets_[u]; k < d.user_offsets_[u + 1]; ++k) {
            d.rating_user_[k] = u;
        }
    }
    std::vector<std::size_t> item_counts(d.items_.size(), 0);
    for (std::size_t k = 0; k < ratings.size(); ++k) {
        d.rating_item_[k] = d.item_lookup_.at(ratings[k].item);
        ++item_counts[d.rating_item_[k]];
    }
    d.item_offsets_.assign(d.items_.size() + 1, 0);
    for (std::size_t i = 0; i < d.items_.size(); ++i) {
        d.item_offsets_[i + 1] = d.item_offsets_[i] + item_counts[i];
    }
    d.item_positions_.resize(ratings.size());
    std::vector<std::size_t> cursor(d.item_offsets_.begin(), d.item_offsets_.end() - 1);
    for (std::size_t k = 0; k < ratings.size(); ++k) {
        d.item_positions_[cursor[d.rating_item_[k]]++] = k;
    }

    // (user, item) uniqueness, except for the pooled pseudo-user
    for (std::size_t u = 0; u < d.users_.size(); ++u) {
        if (d.users_[u] == kBackgroundUser) continue;
        std::vector<std::size_t> seen;
        for (std::size_t k = d.user_offsets_[u]; k < d.user_offsets_[u + 1]; ++k) {
            seen.push_back(d.rating_item_[k]);
        }
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
            throw DataError("user " + d.users_[u] + " rates the same item more than once");
        }
    }

    d.ratings_ = std::move(ratings);
    return d;
}

std::optional<std::size_t> Dataset::find_user(std::string_view user) const {
    auto it = user_lookup_.find(std::string(user));
    if (it == user_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Dataset::find_item(std::string_view item) const {
    auto it = item_lookup_.find(std::string(item));
    if (it == item_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Dataset::background_user() const { return find_user(kBackgroundUser); }

double Dataset::mean_value() const {
    if (ratings_.empty()) throw DataError("empty dataset");
    double sum = 0.0;
    for (const auto& r : ratings_) sum += r.value;
    return sum / static_cast<double>(ratings_.size());
}

std::int64_t Dataset::min_timestamp() const {
    if (ratings_.empty()) throw DataError("empty dataset");
    return std::min_element(ratings_.begin(), ratings_.end(),
                            [](const Rating& a, const Rating& b) { return a.timestamp < b.timestamp; })
        ->timestamp;
}

std::int64_t Dataset::max_timestamp() const {
    if (ratings_.empty()) throw DataError("empty dataset");
    return std::max_element(ratings_.begin(), ratings_.end(),
                            [](const Rating& a, const Rating& b) { return a.timestamp < b.timestamp; })
        ->timestamp;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::size_t column_index(const std::vector<std::string_view>& header, const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) return c;
    }
    throw DataError("header has no column named '" + name + "'");
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

ParseResult parse_reviews(std::istream& in, const FormatConfig& config) {
    normalize_rating(0.0, config.scale_max);  // validates the scale

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        header_line = line;
        header = split_fields(header_line, config.delimiter);
        break;
    }
    if (header.empty()) throw DataError("empty dataset: input has no header");

    const std::size_t ucol = column_index(header, config.user_column);
    const std::size_t icol = column_index(header, config.item_column);
    const std::size_t rcol = column_index(header, config.rating_column);
    const std::size_t tcol = column_index(header, config.timestamp_column);

    ParseResult result;
    std::vector<Rating> rows;
    // (user, item) -> index into rows
    std::map<std::pair<std::string, std::string>, std::size_t> seen;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line, config.delimiter);
        if (fields.size() != header.size()) {
            throw RowError(line_no, "expected " + std::to_string(header.size()) + " columns, got " +
                                        std::to_string(fields.size()));
        }
        Rating r;
        r.user = std::string(fields[ucol]);
        r.item = std::string(fields[icol]);
        if (r.user.empty() || r.item.empty()) throw RowError(line_no, "empty user or item id");
        if (!parse_number(fields[rcol], r.raw_value) || !std::isfinite(r.raw_value)) {
            throw RowError(line_no, "non-numeric rating '" + std::string(fields[rcol]) + "'");
        }
        if (!parse_number(fields[tcol], r.timestamp)) {
            throw RowError(line_no, "non-numeric timestamp '" + std::string(fields[tcol]) + "'");
        }
        if (r.timestamp < 0) throw RowError(line_no, "negative timestamp");
        if (r.raw_value < 0.0 || r.raw_value > config.scale_max) {
            throw RowError(line_no, "rating out of range");
        }
        r.value = normalize_rating(r.raw_value, config.scale_max);

        if (r.user == kBackgroundUser) {
            rows.push_back(std::move(r));
            continue;
        }
        auto key = std::make_pair(r.user, r.item);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(std::move(key), rows.size());
            rows.push_back(std::move(r));
        } else {
            ++result.duplicates;
            if (r.timestamp < rows[it->second].timestamp) rows[it->second] = std::move(r);
        }
    }
    if (rows.empty()) throw DataError("empty dataset: no rating rows");

    result.dataset = Dataset::from_ratings(std::move(rows), config.scale_max);
    return result;
}

ParseResult parse_reviews_file(const std::string& path, const FormatConfig& config) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_reviews(in, config);
}

void write_reviews(std::ostream& out, const Dataset& d, char delimiter) {
    out << "user" << delimiter << "item" << delimiter << "rating" << delimiter << "timestamp\n";
    for (const auto& r : d.ratings()) {
        out << r.user << delimiter << r.item << delimiter << format_double(r.raw_value) << delimiter
            << r.timestamp << '\n';
    }
}

void write_reviews_file(const std::string& path, const Dataset& d, char delimiter) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    write_reviews(out, d, delimiter);
}

// ---------------------------------------------------------------------------
// Pooling and splitting

Dataset pool_infrequent_users(const Dataset& d, std::size_t min_ratings) {
    if (min_ratings < 1) throw InvalidArgument("min_ratings must be >= 1");
    bool any = false;
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        if (d.users()[u] != kBackgroundUser && d.user_count(u) < min_ratings) any = true;
    }
    if (!any) return d;

    std::vector<Rating> ratings;
    ratings.reserve(d.size());
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        const bool pool = d.users()[u] == kBackgroundUser || d.user_count(u) < min_ratings;
        for (std::size_t k = d.user_begin(u); k < d.user_begin(u) + d.user_count(u); ++k) {
            Rating r = d.ratings()[k];
            if (pool && r.user != kBackgroundUser) {
                r.source_user = r.user;
                r.user = std::string(kBackgroundUser);
            }
            ratings.push_back(std::move(r));
        }
    }
    return Dataset::from_ratings(std::move(ratings), d.scale_max());
}

namespace {

std::size_t quota(double fraction, std::size_t n) {
    // guard against 0.1 * 30 = 3.0000000000000004
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

}  // namespace

Split split(const Dataset& d, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
        !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
        throw InvalidArgument("split fractions must lie in (0,1)");
    }
    if (spec.test_fraction + spec.validation_fraction >= 1.0) {
        throw InvalidArgument("test_fraction + validation_fraction must be < 1");
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<Rating> train, valid, test;
    for (std::size_t u = 0; u < d.users().size(); ++u) {
        const std::size_t n = d.user_count(u);
        const std::size_t begin = d.user_begin(u);
        std::size_t n_test = quota(spec.test_fraction, n);
        std::size_t n_valid = quota(spec.validation_fraction, n);
        while (n_test + n_valid >= n && n_test > 0) --n_test;
        while (n_test + n_valid >= n && n_valid > 0) --n_valid;

        // role per chronological offset: 0 train, 1 validation, 2 test
        std::vector<int> role(n, 0);
        if (spec.scheme == SplitScheme::Final) {
            for (std::size_t j = n - n_test; j < n; ++j) role[j] = 2;
            for (std::size_t j = n - n_test - n_valid; j < n - n_test; ++j) role[j] = 1;
        } else {
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            // Fisher-Yates with an explicit draw so the sequence is fixed by the seed
            for (std::size_t j = n; j > 1; --j) {
                std::uniform_int_distribution<std::size_t> pick(0, j - 1);
                std::swap(order[j - 1], order[pick(rng)]);
            }
            for (std::size_t j = 0; j < n_test; ++j) role[order[j]] = 2;
            for (std::size_t j = n_test; j < n_test + n_valid; ++j) role[order[j]] = 1;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const Rating& r = d.ratings()[begin + j];
            (role[j] == 0 ? train : role[j] == 1 ? valid : test).push_back(r);
        }
    }
    return Split{Dataset::from_ratings(std::move(train), d.scale_max()),
                 Dataset::from_ratings(std::move(valid), d.scale_max()),
                 Dataset::from_ratings(std::move(test), d.scale_max())};
}

std::string to_string(SplitScheme s) { return s == SplitScheme::Random ? "random" : "final"; }

SplitScheme split_scheme_from_string(std::string_view s) {
    if (s == "random" || s == "Random") return SplitScheme::Random;
    if (s == "final" || s == "Final") return SplitScheme::Final;
    throw InvalidArgument("unknown split scheme '" + std::string(s) + "'");
}

}  // namespace xprec
