#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strainiq/corpus.hpp"
#include "strainiq/geometry.hpp"

namespace strainiq::connectivity {

struct GaussianProfile {
    double sigma = 1.0;  // pixels, > 0
};

struct DogProfile {
    double sigma_center = 1.0;    // pixels, > 0
    double sigma_surround = 1.0;  // pixels, > 0
    double alpha = 1.0;           // surround/center height ratio, > 0
};

// exp(-d^2 / (2 sigma^2)). Throws ParseError unless d >= 0 and sigma > 0.
double gauss_profile(double d, double sigma);

// Center-surround difference: (1/(1+a)) exp(-d^2/2sc^2) - (a/(1+a)) exp(-d^2/2ss^2).
// May be negative. Throws ParseError on an invalid profile.
double dog_profile(double d, const DogProfile& p);

// Square stencil of lateral-interaction weights. weights[(dy+radius)*side + (dx+radius)]
// depends only on sqrt(dx^2 + dy^2), so the stencil is 8-fold symmetric. The
// center is exactly 1: a pixel always carries its own difference at unit gain.
struct ConnectivityKernel {
    int radius = 0;
    std::vector<double> weights;  // (2*radius+1)^2, row-major

    int side() const { return 2 * radius + 1; }
    double at(int dx, int dy) const {
        return weights[static_cast<std::size_t>(dy + radius) * side() + (dx + radius)];
    }
};

// Radius is the smaller of the first integer where the profile magnitude stays
// below truncation_threshold and a hard cap of ceil(4*sigma) (widest sigma for
// the two-component profile). Off-center weights sample the profile at the
// Euclidean pixel distance; the center is forced to exactly 1.
ConnectivityKernel build_kernel(const GaussianProfile& p, double truncation_threshold = 1e-4);
ConnectivityKernel build_kernel(const DogProfile& p, double truncation_threshold = 1e-4);

// ||J Delta||^2 without materializing J: each pixel's strained value is its own
// difference plus kernel-weighted neighbor differences (zero outside the
// image), then squared values are summed in raster order. Row computation is
// parallel; the reduction is serial, so results do not depend on thread count.
double score_pair(const GrayImage& ref, const GrayImage& deg, const ConnectivityKernel& kernel);

// Sensitivity variant: partitions the image into tile_side x tile_side blocks
// (remainder rows/columns cropped) and sums per-tile scores, so interactions
// stop at tile borders.
double score_pair_tiled(const GrayImage& ref, const GrayImage& deg, const ConnectivityKernel& kernel,
                        int tile_side = 8);

struct SweepOptions {
    double truncation_threshold = 1e-4;
    bool tiled = false;
    int tile_side = 8;
};

// Cross-validated error surfaces. grid holds one tuple per evaluated point in
// lexicographic axis order; fold_errors[f][g] = 1 - pearson(scores, dmos) over
// fold f's pairs at grid point g. Undefined correlations score 1 and set the
// degenerate flag. best_index_per_fold is the first argmin of each fold curve.
struct SweepResult {
    std::vector<std::string> param_names;
    std::vector<std::vector<double>> grid;
    int fold_count = 0;
    corpus::FoldAssignment folds;
    std::vector<std::vector<double>> fold_errors;
    std::vector<std::vector<char>> degenerate;
    std::vector<std::size_t> best_index_per_fold;
};

// Evaluates every sigma on every fold. Folds partition reference images via
// the seeded stratified assignment; scores are computed once per grid point.
SweepResult sweep_gaussian(const std::vector<corpus::LoadedPair>& pairs, const std::vector<double>& sigma_grid,
                           int fold_count, std::uint64_t seed, const SweepOptions& options = {});

// Same over the (sigma_center, sigma_surround, alpha) product grid, alpha
// varying fastest.
SweepResult sweep_dog(const std::vector<corpus::LoadedPair>& pairs, const std::vector<double>& center_grid,
                      const std::vector<double>& surround_grid, const std::vector<double>& alpha_grid,
                      int fold_count, std::uint64_t seed, const SweepOptions& options = {});

// Collapses one axis by taking each fold's minimum error over that parameter,
// keeping the surviving tuples in first-appearance order.
SweepResult reduce_min_over_param(const SweepResult& result, std::size_t param_index);

// Inclusive arithmetic grid lo, lo+step, ..., hi. Throws ParseError unless
// step > 0 and hi >= lo; the point count is round((hi-lo)/step) + 1.
std::vector<double> make_grid(double lo, double hi, double step);

// One CSV row per fold x grid point: fold, parameters, error, degenerate flag.
void write_sweep_table(const std::string& path, const SweepResult& result);

}  // namespace strainiq::connectivity

namespace strainiq::serial {

// Reference implementation of connectivity::score_pair with no parallel
// constructs; kept for bitwise comparison and benchmarking.
double score_pair(const GrayImage& ref, const GrayImage& deg, const connectivity::ConnectivityKernel& kernel);

}  // namespace strainiq::serial
