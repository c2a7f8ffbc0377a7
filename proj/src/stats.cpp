#include "strainiq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "strainiq/error.hpp"
#include "strainiq/rng.hpp"
#include "strainiq/util.hpp"

namespace strainiq::stats {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

namespace {

void check_series(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ShapeError("series lengths differ: " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    for (double v : x)
        if (!std::isfinite(v)) throw ShapeError("non-finite value in series");
    for (double v : y)
        if (!std::isfinite(v)) throw ShapeError("non-finite value in series");
}

}  // namespace

std::optional<double> try_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    check_series(x, y);
    std::size_t n = x.size();
    if (n < 3) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    auto r = try_pearson(x, y);
    if (!r) throw DegeneracyError("pearson correlation undefined (constant series or fewer than 3 points)");
    return *r;
}

std::optional<double> try_spearman(const std::vector<double>& x, const std::vector<double>& y) {
    check_series(x, y);
    if (x.size() < 3) return std::nullopt;
    return try_pearson(average_ranks(x), average_ranks(y));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto r = try_spearman(x, y);
    if (!r) throw DegeneracyError("spearman correlation undefined (constant series or fewer than 3 points)");
    return *r;
}

double fisher_rz_two_sample(double r1, long long n1, double r2, long long n2) {
    if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0))
        throw DegeneracyError("fisher r-to-z requires |r| < 1, got " + format_full(r1) + " and " +
                              format_full(r2));
    if (n1 <= 3 || n2 <= 3)
        throw DegeneracyError("fisher r-to-z requires more than 3 samples per series");
    double z1 = std::atanh(r1), z2 = std::atanh(r2);
    double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    double statistic = (z1 - z2) / se;
    double p = std::erfc(std::abs(statistic) / std::sqrt(2.0));
    return std::clamp(p, 0.0, 1.0);
}

double permutation_test_corr(const std::vector<double>& x, const std::vector<double>& y,
                             const PermutationOptions& opt) {
    auto stat = opt.statistic == CorrStatistic::spearman ? try_spearman : try_pearson;
    auto observed = stat(x, y);
    if (!observed)
        throw DegeneracyError("permutation test undefined: observed correlation is degenerate");
    double observed_abs = std::abs(*observed);

    if (opt.exhaustive) {
        if (x.size() > 10)
            throw ParseError("exhaustive permutation test supports at most 10 points, got " +
                             std::to_string(x.size()));
        std::vector<std::size_t> order(y.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<double> permuted(y.size());
        long long count = 0, total = 0;
        do {
            for (std::size_t i = 0; i < order.size(); ++i) permuted[i] = y[order[i]];
            auto s = stat(x, permuted);
            if (s && std::abs(*s) >= observed_abs) ++count;
            ++total;
        } while (std::next_permutation(order.begin(), order.end()));
        return (1.0 + static_cast<double>(count)) / (static_cast<double>(total) + 1.0);
    }

    if (opt.n_perm < 1) throw ParseError("permutation count must be at least 1");
    long long count = 0;
#pragma omp parallel for reduction(+ : count) schedule(static)
    for (int i = 0; i < opt.n_perm; ++i) {
        Rng rng(mix_seed(opt.seed, static_cast<std::uint64_t>(i)));
        std::vector<double> permuted = y;
        rng.shuffle(permuted);
        auto s = stat(x, permuted);
        if (s && std::abs(*s) >= observed_abs) ++count;
    }
    return (1.0 + static_cast<double>(count)) / (static_cast<double>(opt.n_perm) + 1.0);
}

}  // namespace strainiq::stats
