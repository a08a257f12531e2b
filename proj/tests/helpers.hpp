#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "xprec/dataset.hpp"
#include "xprec/model.hpp"

namespace testing {

inline xprec::Rating rating(std::string user, std::string item, double value, std::int64_t t) {
    xprec::Rating r;
    r.user = std::move(user);
    r.item = std::move(item);
    r.value = value;
    r.raw_value = value;
    r.timestamp = t;
    return r;
}

inline xprec::Dataset dataset(std::vector<xprec::Rating> rs) {
    return xprec::Dataset::from_ratings(std::move(rs), 5.0);
}

/// Random corpus: every user rates `per_user` distinct items at distinct times.
inline xprec::Dataset random_dataset(int users, int items, int per_user, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(0.0, 5.0);
    std::vector<xprec::Rating> rs;
    std::vector<int> order(static_cast<std::size_t>(items));
    for (int u = 0; u < users; ++u) {
        for (int i = 0; i < items; ++i) order[static_cast<std::size_t>(i)] = i;
        std::shuffle(order.begin(), order.end(), rng);
        for (int j = 0; j < per_user; ++j) {
            rs.push_back(rating("u" + std::to_string(u), "i" + std::to_string(order[static_cast<std::size_t>(j)]),
                                value(rng), 1000 + 10 * j + u));
        }
    }
    return dataset(std::move(rs));
}

/// Fills every parameter with Normal(0, sd).
inline void randomize(xprec::ModelParams& p, std::uint64_t seed, double sd = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sd);
    for (double& v : p.theta()) v = n(rng);
}

/// A fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("xprec_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
