#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace strainiq::stats {

// 1-based ranks; ties share the mean of the rank range they occupy.
std::vector<double> average_ranks(const std::vector<double>& v);

// Sample Pearson correlation, two-pass. nullopt when n < 3 or either series
// is constant (the coefficient is undefined there, never a crash).
std::optional<double> try_pearson(const std::vector<double>& x, const std::vector<double>& y);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Pearson correlation of average ranks.
std::optional<double> try_spearman(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Two-tailed p for H0: the two correlations are equal, via z = atanh(r) and
// statistic (z1 - z2) / sqrt(1/(n1-3) + 1/(n2-3)). Requires |r| < 1, n > 3.
double fisher_rz_two_sample(double r1, long long n1, double r2, long long n2);

enum class CorrStatistic { spearman, pearson };

struct PermutationOptions {
    int n_perm = 999;
    std::uint64_t seed = 0;
    CorrStatistic statistic = CorrStatistic::spearman;
    // Enumerate every index permutation instead of sampling (series length
    // <= 10). n_perm and seed are ignored in that mode.
    bool exhaustive = false;
};

// Tests correlation(x, y) != 0 by shuffling y. Add-one rule:
// p = (1 + #{perm: |stat| >= |observed|}) / (count + 1), so p is never 0.
// Permutation i draws from its own seed stream, making the result
// independent of evaluation order.
double permutation_test_corr(const std::vector<double>& x, const std::vector<double>& y,
                             const PermutationOptions& opt);

}  // namespace strainiq::stats
