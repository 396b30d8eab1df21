#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "aura/error.hpp"

namespace aura::stats {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw ValueError("mean of empty set");
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

// Nearest-rank quantile, q in [0,1].
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ValueError("quantile of empty set");
    if (q < 0.0 || q > 1.0) throw ValueError("quantile q out of [0,1]");
    std::sort(v.begin(), v.end());
    const std::size_t rank = q <= 0.0 ? 0
                                      : std::min(v.size() - 1,
                                                 static_cast<std::size_t>(
                                                     std::ceil(q * static_cast<double>(v.size()))) -
                                                     1);
    return v[rank];
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

inline double std_dev(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

struct RankSumResult {
    double u_statistic = 0.0;
    double z = 0.0;
    double p_one_sided = 1.0;  // H1: a stochastically greater than b
};

// Mann-Whitney U with normal approximation, tie correction and continuity
// correction. One-sided alternative: samples in `a` tend to be larger.
inline RankSumResult rank_sum_greater(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na == 0 || nb == 0) throw ValueError("rank_sum_greater: empty sample");
    struct Entry {
        double value;
        bool from_a;
    };
    std::vector<Entry> pool;
    pool.reserve(na + nb);
    for (double x : a) pool.push_back({x, true});
    for (double x : b) pool.push_back({x, false});
    std::sort(pool.begin(), pool.end(),
              [](const Entry& l, const Entry& r) { return l.value < r.value; });

    const double n = static_cast<double>(na + nb);
    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].value == pool[i].value) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        const double t = static_cast<double>(j - i);
        if (t > 1) tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k)
            if (pool[k].from_a) rank_sum_a += avg_rank;
        i = j;
    }

    RankSumResult r;
    r.u_statistic = rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
    const double mu = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                 ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) {
        r.z = 0.0;
        r.p_one_sided = 1.0;
        return r;
    }
    r.z = (r.u_statistic - mu - 0.5) / std::sqrt(var);
    r.p_one_sided = 1.0 - normal_cdf(r.z);
    return r;
}

}  // namespace aura::stats
