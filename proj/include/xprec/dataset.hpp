#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace xprec {

/// Reserved id of the pseudo-user that pools all infrequent users.
inline constexpr std::string_view kBackgroundUser = "__background__";

struct Rating {
    std::string user;
    std::string item;
    double value = 0.0;          ///< normalized to [0, 5]
    std::int64_t timestamp = 0;  ///< seconds since epoch
    double raw_value = 0.0;      ///< original scale
    std::string source_user;     ///< original user id when pooled into the background user
};

/// Maps `raw` on [0, scale_max] linearly onto [0, 5].
double normalize_rating(double raw, double scale_max);

/// An immutable rating corpus.
///
/// Ratings are stored grouped by user (users in ascending id order) and, within
/// a user, in chronological order with ties broken by ascending item id. Each
/// user's ratings therefore occupy one contiguous range of `ratings()`.
class Dataset {
public:
    Dataset() = default;

    /// Builds a dataset, sorting the ratings into canonical order.
    /// Throws DataError on a negative timestamp, an out-of-range value, or a
    /// repeated (user, item) pair for any user other than the background user.
    static Dataset from_ratings(std::vector<Rating> ratings, double scale_max);

    const std::vector<Rating>& ratings() const noexcept { return ratings_; }
    std::size_t size() const noexcept { return ratings_.size(); }
    bool empty() const noexcept { return ratings_.empty(); }
    double scale_max() const noexcept { return scale_max_; }

    /// Sorted distinct user / item ids.
    const std::vector<std::string>& users() const noexcept { return users_; }
    const std::vector<std::string>& items() const noexcept { return items_; }

    /// Dense user / item index of the rating at position `pos`.
    std::size_t user_of(std::size_t pos) const { return rating_user_[pos]; }
    std::size_t item_of(std::size_t pos) const { return rating_item_[pos]; }

    /// First position and count of user `u`'s (chronological) ratings.
    std::size_t user_begin(std::size_t u) const { return user_offsets_[u]; }
    std::size_t user_count(std::size_t u) const {
        return user_offsets_[u + 1] - user_offsets_[u];
    }

    /// Positions of item `i`'s ratings, ascending.
    std::span<const std::size_t> item_ratings(std::size_t i) const {
        return {item_positions_.data() + item_offsets_[i],
                item_offsets_[i + 1] - item_offsets_[i]};
    }

    std::optional<std::size_t> find_user(std::string_view user) const;
    std::optional<std::size_t> find_item(std::string_view item) const;

    /// Dense index of the background pseudo-user, if present.
    std::optional<std::size_t> background_user() const;

    double mean_value() const;
    std::int64_t min_timestamp() const;
    std::int64_t max_timestamp() const;

private:
    std::vector<Rating> ratings_;
    double scale_max_ = 5.0;
    std::vector<std::string> users_;
    std::vector<std::string> items_;
    std::vector<std::size_t> rating_user_;
    std::vector<std::size_t> rating_item_;
    std::vector<std::size_t> user_offsets_;
    std::vector<std::size_t> item_offsets_;
    std::vector<std::size_t> item_positions_;
    std::unordered_map<std::string, std::size_t> user_lookup_;
    std::unordered_map<std::string, std::size_t> item_lookup_;
};

/// Column layout of a delimited review file. The first line is a header that
/// names the columns; the names below select which ones to read.
struct FormatConfig {
    char delimiter = '\t';
    std::string user_column = "user";
    std::string item_column = "item";
    std::string rating_column = "rating";
    std::string timestamp_column = "timestamp";
    double scale_max = 5.0;
};

struct ParseResult {
    Dataset dataset;
    std::size_t duplicates = 0;  ///< (user, item) rows dropped by the keep-earliest rule
};

/// Parses a delimited review stream. Throws RowError on a malformed row,
/// DataError on an empty input, InvalidArgument on a bad format descriptor.
ParseResult parse_reviews(std::istream& in, const FormatConfig& config);
ParseResult parse_reviews_file(const std::string& path, const FormatConfig& config);

/// Writes `d` in the default four-column layout (raw rating values), header first.
void write_reviews(std::ostream& out, const Dataset& d, char delimiter = '\t');
void write_reviews_file(const std::string& path, const Dataset& d, char delimiter = '\t');

/// Reassigns every rating of a user with fewer than `min_ratings` ratings to
/// the background pseudo-user.
Dataset pool_infrequent_users(const Dataset& d, std::size_t min_ratings = 50);

enum class SplitScheme { Random, Final };

struct SplitSpec {
    SplitScheme scheme = SplitScheme::Final;
    double test_fraction = 0.1;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct Split {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Per-user train/validation/test split. Every user keeps at least one
/// training rating; a user too small for the requested fractions loses test
/// ratings first, then validation ratings.
Split split(const Dataset& d, const SplitSpec& spec);

std::string to_string(SplitScheme s);
SplitScheme split_scheme_from_string(std::string_view s);

}  // namespace xprec
