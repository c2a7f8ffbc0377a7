#include "strainiq/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "strainiq/error.hpp"
#include "strainiq/stats.hpp"
#include "strainiq/util.hpp"

namespace strainiq::connectivity {

namespace {

void check_dog(const DogProfile& p) {
    if (!(p.sigma_center > 0.0) || !(p.sigma_surround > 0.0) || !(p.alpha > 0.0))
        throw ParseError("dog profile requires positive sigma_center, sigma_surround, alpha");
}

void check_kernel(const ConnectivityKernel& k) {
    if (k.radius < 0) throw ShapeError("kernel radius must be nonnegative");
    std::size_t side = static_cast<std::size_t>(2 * k.radius + 1);
    if (k.weights.size() != side * side) throw ShapeError("kernel weight count does not match radius");
}

// Smallest integer radius whose envelope value is already below the
// threshold, capped. The envelope must be strictly decreasing so that all
// larger distances are below it too.
template <typename Envelope>
int pick_radius(Envelope envelope, double cap_sigma, double threshold) {
    if (!(threshold > 0.0)) throw ParseError("truncation threshold must be positive");
    int cap = static_cast<int>(std::lround(std::ceil(4.0 * cap_sigma)));
    for (int r = 0; r <= cap; ++r)
        if (envelope(static_cast<double>(r)) <= threshold) return r;
    return cap;
}

template <typename Profile>
ConnectivityKernel fill_kernel(int radius, Profile profile) {
    ConnectivityKernel k;
    k.radius = radius;
    int side = k.side();
    k.weights.resize(static_cast<std::size_t>(side) * side);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            // integer squared distance keeps equal-distance weights bitwise equal
            double d = std::sqrt(static_cast<double>(dx * dx + dy * dy));
            k.weights[static_cast<std::size_t>(dy + radius) * side + (dx + radius)] = profile(d);
        }
    k.weights[static_cast<std::size_t>(radius) * side + radius] = 1.0;
    return k;
}

// Strained value of pixel (px, py): kernel-weighted sum of differences over
// the intersection of the stencil with [x0, x1) x [y0, y1).
double strained_at(const DifferenceField& delta, const ConnectivityKernel& k, int px, int py, int x0, int y0,
                   int x1, int y1) {
    int lo_dy = std::max(-k.radius, y0 - py), hi_dy = std::min(k.radius, y1 - 1 - py);
    int lo_dx = std::max(-k.radius, x0 - px), hi_dx = std::min(k.radius, x1 - 1 - px);
    int side = k.side();
    double acc = 0.0;
    for (int dy = lo_dy; dy <= hi_dy; ++dy) {
        const double* wrow = &k.weights[static_cast<std::size_t>(dy + k.radius) * side + k.radius];
        const double* drow = &delta.values[static_cast<std::size_t>(py + dy) * delta.width];
        for (int dx = lo_dx; dx <= hi_dx; ++dx) acc += wrow[dx] * drow[px + dx];
    }
    return acc;
}

// Shared by the parallel and serial entry points: per-pixel strained values
// land in a buffer, then squares are summed in raster order, so the result is
// independent of how the pixel loop was scheduled.
double score_with_buffer(const GrayImage& ref, const GrayImage& deg, const ConnectivityKernel& kernel,
                         bool parallel) {
    check_kernel(kernel);
    DifferenceField delta = difference(ref, deg);
    const int w = delta.width, h = delta.height;
    std::vector<double> strained(delta.size());
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int py = 0; py < h; ++py)
            for (int px = 0; px < w; ++px)
                strained[static_cast<std::size_t>(py) * w + px] = strained_at(delta, kernel, px, py, 0, 0, w, h);
    } else {
        for (int py = 0; py < h; ++py)
            for (int px = 0; px < w; ++px)
                strained[static_cast<std::size_t>(py) * w + px] = strained_at(delta, kernel, px, py, 0, 0, w, h);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < strained.size(); ++i) acc += strained[i] * strained[i];
    return acc;
}

}  // namespace

double gauss_profile(double d, double sigma) {
    if (!(d >= 0.0)) throw ParseError("distance must be nonnegative");
    if (!(sigma > 0.0)) throw ParseError("sigma must be positive");
    return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

double dog_profile(double d, const DogProfile& p) {
    if (!(d >= 0.0)) throw ParseError("distance must be nonnegative");
    check_dog(p);
    double center = std::exp(-(d * d) / (2.0 * p.sigma_center * p.sigma_center));
    double surround = std::exp(-(d * d) / (2.0 * p.sigma_surround * p.sigma_surround));
    return center / (1.0 + p.alpha) - p.alpha / (1.0 + p.alpha) * surround;
}

ConnectivityKernel build_kernel(const GaussianProfile& p, double truncation_threshold) {
    if (!(p.sigma > 0.0)) throw ParseError("sigma must be positive");
    double sigma = p.sigma;
    int radius =
        pick_radius([sigma](double d) { return gauss_profile(d, sigma); }, sigma, truncation_threshold);
    return fill_kernel(radius, [sigma](double d) { return gauss_profile(d, sigma); });
}

ConnectivityKernel build_kernel(const DogProfile& p, double truncation_threshold) {
    check_dog(p);
    // The profile itself crosses zero, so the decreasing bound is the sum of
    // the two component magnitudes.
    auto envelope = [p](double d) {
        double center = std::exp(-(d * d) / (2.0 * p.sigma_center * p.sigma_center));
        double surround = std::exp(-(d * d) / (2.0 * p.sigma_surround * p.sigma_surround));
        return center / (1.0 + p.alpha) + p.alpha / (1.0 + p.alpha) * surround;
    };
    int radius = pick_radius(envelope, std::max(p.sigma_center, p.sigma_surround), truncation_threshold);
    return fill_kernel(radius, [p](double d) { return dog_profile(d, p); });
}

double score_pair(const GrayImage& ref, const GrayImage& deg, const ConnectivityKernel& kernel) {
    return score_with_buffer(ref, deg, kernel, true);
}

double score_pair_tiled(const GrayImage& ref, const GrayImage& deg, const ConnectivityKernel& kernel,
                        int tile_side) {
    check_kernel(kernel);
    if (tile_side < 1) throw ParseError("tile side must be at least 1");
    DifferenceField delta = difference(ref, deg);
    const int tiles_x = delta.width / tile_side, tiles_y = delta.height / tile_side;
    if (tiles_x < 1 || tiles_y < 1) throw ShapeError("image smaller than one tile");
    double total = 0.0;
    for (int ty = 0; ty < tiles_y; ++ty)
        for (int tx = 0; tx < tiles_x; ++tx) {
            int x0 = tx * tile_side, y0 = ty * tile_side;
            int x1 = x0 + tile_side, y1 = y0 + tile_side;
            double tile_acc = 0.0;
            for (int py = y0; py < y1; ++py)
                for (int px = x0; px < x1; ++px) {
                    double v = strained_at(delta, kernel, px, py, x0, y0, x1, y1);
                    tile_acc += v * v;
                }
            total += tile_acc;
        }
    return total;
}

namespace {

struct GridAxes {
    std::vector<std::string> names;
    std::vector<std::vector<double>> tuples;
};

template <typename BuildFn>
SweepResult sweep_core(const std::vector<corpus::LoadedPair>& pairs, GridAxes axes, int fold_count,
                       std::uint64_t seed, const SweepOptions& options, BuildFn build) {
    if (axes.tuples.empty()) throw ParseError("parameter grid is empty");
    if (pairs.empty()) throw ParseError("no pairs to sweep");
    if (!(options.truncation_threshold > 0.0)) throw ParseError("truncation threshold must be positive");

    std::vector<corpus::RatedPair> metas;
    metas.reserve(pairs.size());
    for (const auto& p : pairs) metas.push_back(p.meta);

    SweepResult res;
    res.param_names = std::move(axes.names);
    res.grid = std::move(axes.tuples);
    res.fold_count = fold_count;
    res.folds = corpus::stratified_folds(metas, fold_count, seed);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(fold_count));
    for (std::size_t i = 0; i < pairs.size(); ++i)
        members[static_cast<std::size_t>(corpus::fold_of(res.folds, pairs[i].meta.ref_path))].push_back(i);
    for (int f = 0; f < fold_count; ++f)
        if (members[static_cast<std::size_t>(f)].empty())
            throw DegeneracyError("fold " + std::to_string(f) + " contains no pairs");

    const std::size_t n_grid = res.grid.size();
    res.fold_errors.assign(static_cast<std::size_t>(fold_count), std::vector<double>(n_grid, 0.0));
    res.degenerate.assign(static_cast<std::size_t>(fold_count), std::vector<char>(n_grid, 0));

    std::vector<double> scores(pairs.size());
    for (std::size_t g = 0; g < n_grid; ++g) {
        ConnectivityKernel kernel = build(res.grid[g]);
        for (std::size_t i = 0; i < pairs.size(); ++i)
            scores[i] = options.tiled ? score_pair_tiled(*pairs[i].ref, *pairs[i].deg, kernel, options.tile_side)
                                      : score_pair(*pairs[i].ref, *pairs[i].deg, kernel);
        for (int f = 0; f < fold_count; ++f) {
            std::vector<double> xs, ys;
            xs.reserve(members[static_cast<std::size_t>(f)].size());
            ys.reserve(members[static_cast<std::size_t>(f)].size());
            for (std::size_t i : members[static_cast<std::size_t>(f)]) {
                xs.push_back(scores[i]);
                ys.push_back(pairs[i].meta.dmos);
            }
            auto r = stats::try_pearson(xs, ys);
            if (r) {
                res.fold_errors[static_cast<std::size_t>(f)][g] = 1.0 - *r;
            } else {
                res.fold_errors[static_cast<std::size_t>(f)][g] = 1.0;
                res.degenerate[static_cast<std::size_t>(f)][g] = 1;
            }
        }
    }

    res.best_index_per_fold.resize(static_cast<std::size_t>(fold_count));
    for (int f = 0; f < fold_count; ++f) {
        const auto& errs = res.fold_errors[static_cast<std::size_t>(f)];
        res.best_index_per_fold[static_cast<std::size_t>(f)] =
            static_cast<std::size_t>(std::min_element(errs.begin(), errs.end()) - errs.begin());
    }
    return res;
}

}  // namespace

SweepResult sweep_gaussian(const std::vector<corpus::LoadedPair>& pairs, const std::vector<double>& sigma_grid,
                           int fold_count, std::uint64_t seed, const SweepOptions& options) {
    GridAxes axes;
    axes.names = {"sigma"};
    for (double s : sigma_grid) axes.tuples.push_back({s});
    return sweep_core(pairs, std::move(axes), fold_count, seed, options, [&](const std::vector<double>& t) {
        return build_kernel(GaussianProfile{t[0]}, options.truncation_threshold);
    });
}

SweepResult sweep_dog(const std::vector<corpus::LoadedPair>& pairs, const std::vector<double>& center_grid,
                      const std::vector<double>& surround_grid, const std::vector<double>& alpha_grid,
                      int fold_count, std::uint64_t seed, const SweepOptions& options) {
    GridAxes axes;
    axes.names = {"sigma_center", "sigma_surround", "alpha"};
    for (double c : center_grid)
        for (double s : surround_grid)
            for (double a : alpha_grid) axes.tuples.push_back({c, s, a});
    return sweep_core(pairs, std::move(axes), fold_count, seed, options, [&](const std::vector<double>& t) {
        return build_kernel(DogProfile{t[0], t[1], t[2]}, options.truncation_threshold);
    });
}

SweepResult reduce_min_over_param(const SweepResult& result, std::size_t param_index) {
    if (param_index >= result.param_names.size()) throw ParseError("parameter index out of range");
    if (result.param_names.size() < 2) throw ParseError("cannot reduce the only parameter axis");

    SweepResult out;
    out.param_names = result.param_names;
    out.param_names.erase(out.param_names.begin() + static_cast<std::ptrdiff_t>(param_index));
    out.fold_count = result.fold_count;
    out.folds = result.folds;

    // Grid values repeat bitwise across tuples, so exact keys dedup correctly.
    std::map<std::vector<double>, std::size_t> index_of;
    std::vector<std::vector<std::size_t>> sources;
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
        std::vector<double> key = result.grid[g];
        key.erase(key.begin() + static_cast<std::ptrdiff_t>(param_index));
        auto [it, inserted] = index_of.try_emplace(key, out.grid.size());
        if (inserted) {
            out.grid.push_back(key);
            sources.emplace_back();
        }
        sources[it->second].push_back(g);
    }

    out.fold_errors.assign(static_cast<std::size_t>(out.fold_count),
                           std::vector<double>(out.grid.size(), 0.0));
    out.degenerate.assign(static_cast<std::size_t>(out.fold_count), std::vector<char>(out.grid.size(), 0));
    for (int f = 0; f < out.fold_count; ++f) {
        for (std::size_t rg = 0; rg < out.grid.size(); ++rg) {
            std::size_t best = sources[rg][0];
            for (std::size_t g : sources[rg])
                if (result.fold_errors[static_cast<std::size_t>(f)][g] <
                    result.fold_errors[static_cast<std::size_t>(f)][best])
                    best = g;
            out.fold_errors[static_cast<std::size_t>(f)][rg] = result.fold_errors[static_cast<std::size_t>(f)][best];
            out.degenerate[static_cast<std::size_t>(f)][rg] = result.degenerate[static_cast<std::size_t>(f)][best];
        }
    }

    out.best_index_per_fold.resize(static_cast<std::size_t>(out.fold_count));
    for (int f = 0; f < out.fold_count; ++f) {
        const auto& errs = out.fold_errors[static_cast<std::size_t>(f)];
        out.best_index_per_fold[static_cast<std::size_t>(f)] =
            static_cast<std::size_t>(std::min_element(errs.begin(), errs.end()) - errs.begin());
    }
    return out;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0)) throw ParseError("grid step must be positive");
    if (!(hi >= lo)) throw ParseError("grid upper bound must not be below the lower bound");
    long long n = std::llround((hi - lo) / step);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n) + 1);
    for (long long i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    if (std::abs(grid.back() - hi) <= step * 1e-9) grid.back() = hi;
    return grid;
}

void write_sweep_table(const std::string& path, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open sweep table for writing: " + path);
    out << "fold";
    for (const auto& name : result.param_names) out << ',' << name;
    out << ",error,degenerate\n";
    for (int f = 0; f < result.fold_count; ++f)
        for (std::size_t g = 0; g < result.grid.size(); ++g) {
            out << f;
            for (double v : result.grid[g]) out << ',' << format_full(v);
            out << ',' << format_full(result.fold_errors[static_cast<std::size_t>(f)][g]) << ','
                << static_cast<int>(result.degenerate[static_cast<std::size_t>(f)][g]) << '\n';
        }
    if (!out) throw IoError("failed writing sweep table: " + path);
}

}  // namespace strainiq::connectivity

namespace strainiq::serial {

double score_pair(const GrayImage& ref, const GrayImage& deg, const connectivity::ConnectivityKernel& kernel) {
    return connectivity::score_with_buffer(ref, deg, kernel, false);
}

}  // namespace strainiq::serial
