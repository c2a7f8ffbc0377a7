#include "strainiq/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "strainiq/error.hpp"
#include "strainiq/rng.hpp"
#include "strainiq/stats.hpp"
#include "strainiq/util.hpp"

namespace strainiq::regression {

namespace {

constexpr int kDim = 64;
constexpr int kTileSide = 8;

// Per-pair training caches: tile difference vectors and the current J-strained
// vectors, both flat [tile][component].
struct PairCache {
    std::vector<double> delta;
    std::vector<double> strained;
    std::size_t n_tiles = 0;
};

double tile_quadratic(const TileJacobian& j, const std::vector<double>& tile_delta) {
    double score = 0.0;
    for (int r = 0; r < kDim; ++r) {
        const double* row = &j.entries[static_cast<std::size_t>(r) * kDim];
        double y = 0.0;
        for (int c = 0; c < kDim; ++c) y += row[c] * tile_delta[static_cast<std::size_t>(c)];
        score += y * y;
    }
    return score;
}

double tiled_distance_with_buffer(const GrayImage& ref, const GrayImage& deg, const TileJacobian& j,
                                  bool allow_crop, bool parallel) {
    if (j.dim != kDim || j.tile_side != kTileSide ||
        j.entries.size() != static_cast<std::size_t>(kDim) * kDim)
        throw ShapeError("tile jacobian must be 64x64 over 8x8 tiles");
    if (ref.width != deg.width || ref.height != deg.height)
        throw ShapeError("image dimensions differ between reference and degraded");
    TileGrid ref_tiles = tile_image(ref, j.tile_side, allow_crop);
    TileGrid deg_tiles = tile_image(deg, j.tile_side, allow_crop);
    const std::size_t n = ref_tiles.tiles.size();
    std::vector<double> scores(n);
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long t = 0; t < static_cast<long long>(n); ++t) {
            std::vector<double> tile_delta(kDim);
            for (int c = 0; c < kDim; ++c)
                tile_delta[static_cast<std::size_t>(c)] =
                    deg_tiles.tiles[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] -
                    ref_tiles.tiles[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
            scores[static_cast<std::size_t>(t)] = tile_quadratic(j, tile_delta);
        }
    } else {
        for (long long t = 0; t < static_cast<long long>(n); ++t) {
            std::vector<double> tile_delta(kDim);
            for (int c = 0; c < kDim; ++c)
                tile_delta[static_cast<std::size_t>(c)] =
                    deg_tiles.tiles[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] -
                    ref_tiles.tiles[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
            scores[static_cast<std::size_t>(t)] = tile_quadratic(j, tile_delta);
        }
    }
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) total += scores[t];
    return total;
}

std::vector<PairCache> build_caches(const std::vector<corpus::LoadedPair>& pairs, bool allow_crop) {
    std::vector<PairCache> caches(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        TileGrid ref_tiles = tile_image(*pairs[p].ref, kTileSide, allow_crop);
        TileGrid deg_tiles = tile_image(*pairs[p].deg, kTileSide, allow_crop);
        if (ref_tiles.tiles.size() != deg_tiles.tiles.size())
            throw ShapeError("image dimensions differ between reference and degraded");
        PairCache& cache = caches[p];
        cache.n_tiles = ref_tiles.tiles.size();
        cache.delta.resize(cache.n_tiles * kDim);
        for (std::size_t t = 0; t < cache.n_tiles; ++t)
            for (int c = 0; c < kDim; ++c)
                cache.delta[t * kDim + c] = deg_tiles.tiles[t][static_cast<std::size_t>(c)] -
                                            ref_tiles.tiles[t][static_cast<std::size_t>(c)];
    }
    return caches;
}

// Recomputes strained vectors and distances from scratch under j.
void full_recompute(const TileJacobian& j, std::vector<PairCache>& caches, std::vector<double>& distances) {
#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(caches.size()); ++p) {
        PairCache& cache = caches[static_cast<std::size_t>(p)];
        cache.strained.resize(cache.n_tiles * kDim);
        double total = 0.0;
        for (std::size_t t = 0; t < cache.n_tiles; ++t) {
            const double* tile_delta = &cache.delta[t * kDim];
            double tile_score = 0.0;
            for (int r = 0; r < kDim; ++r) {
                const double* row = &j.entries[static_cast<std::size_t>(r) * kDim];
                double y = 0.0;
                for (int c = 0; c < kDim; ++c) y += row[c] * tile_delta[c];
                cache.strained[t * kDim + r] = y;
                tile_score += y * y;
            }
            total += tile_score;
        }
        distances[static_cast<std::size_t>(p)] = total;
    }
}

double objective(const std::vector<double>& distances, const std::vector<double>& dmos, bool use_root,
                 bool* degenerate) {
    std::optional<double> r;
    if (use_root) {
        std::vector<double> roots(distances.size());
        for (std::size_t i = 0; i < distances.size(); ++i) roots[i] = std::sqrt(std::max(distances[i], 0.0));
        r = stats::try_pearson(roots, dmos);
    } else {
        r = stats::try_pearson(distances, dmos);
    }
    if (degenerate) *degenerate = !r.has_value();
    return r ? 1.0 - *r : 1.0;
}

}  // namespace

TileJacobian identity_tile_jacobian() {
    TileJacobian j;
    j.entries.assign(static_cast<std::size_t>(kDim) * kDim, 0.0);
    for (int i = 0; i < kDim; ++i) j.at(i, i) = 1.0;
    return j;
}

void validate(const TileJacobian& j) {
    if (j.dim != kDim) throw ShapeError("tile jacobian dimension must be 64");
    if (j.tile_side != kTileSide) throw ShapeError("tile side must be 8");
    if (j.entries.size() != static_cast<std::size_t>(kDim) * kDim)
        throw ShapeError("tile jacobian must hold 64x64 entries");
    for (double v : j.entries)
        if (!std::isfinite(v)) throw ShapeError("tile jacobian entries must be finite");
    for (int i = 0; i < kDim; ++i)
        if (j.at(i, i) != 1.0) throw ShapeError("tile jacobian diagonal must be exactly 1");
    for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < a; ++b) {
            if (j.at(a, b) != j.at(b, a)) throw ShapeError("tile jacobian must be exactly symmetric");
            if (j.at(a, b) < -1.0 || j.at(a, b) > 1.0)
                throw ShapeError("tile jacobian off-diagonals must lie in [-1, 1]");
        }
}

TileGrid tile_image(const GrayImage& img, int tile_side, bool allow_crop) {
    if (tile_side < 1) throw ParseError("tile side must be at least 1");
    strainiq::validate(img);
    TileGrid grid;
    grid.tile_side = tile_side;
    grid.tiles_x = img.width / tile_side;
    grid.tiles_y = img.height / tile_side;
    bool remainder = img.width % tile_side != 0 || img.height % tile_side != 0;
    if (remainder && !allow_crop)
        throw ShapeError("image dimensions are not multiples of the tile side (enable cropping to proceed)");
    if (grid.tiles_x < 1 || grid.tiles_y < 1) throw ShapeError("image smaller than one tile");
    grid.cropped = remainder;
    grid.tiles.reserve(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
    for (int ty = 0; ty < grid.tiles_y; ++ty)
        for (int tx = 0; tx < grid.tiles_x; ++tx) {
            std::vector<double> tile(static_cast<std::size_t>(tile_side) * tile_side);
            for (int y = 0; y < tile_side; ++y)
                for (int x = 0; x < tile_side; ++x)
                    tile[static_cast<std::size_t>(y) * tile_side + x] =
                        img.at(tx * tile_side + x, ty * tile_side + y);
            grid.tiles.push_back(std::move(tile));
        }
    return grid;
}

double tiled_distance(const GrayImage& ref, const GrayImage& deg, const TileJacobian& j, bool allow_crop) {
    return tiled_distance_with_buffer(ref, deg, j, allow_crop, true);
}

double training_error(const TileJacobian& j, const std::vector<corpus::LoadedPair>& pairs, bool* degenerate) {
    std::vector<double> distances(pairs.size()), dmos(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        distances[p] = tiled_distance(*pairs[p].ref, *pairs[p].deg, j);
        dmos[p] = pairs[p].meta.dmos;
    }
    return objective(distances, dmos, false, degenerate);
}

std::pair<int, int> cell_of_index(std::uint64_t k) {
    if (k >= static_cast<std::uint64_t>(kDim) * (kDim - 1) / 2)
        throw ParseError("cell index out of range");
    int a = static_cast<int>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k))) / 2.0);
    while (static_cast<std::uint64_t>(a) * (a - 1) / 2 > k) --a;
    while (static_cast<std::uint64_t>(a + 1) * a / 2 <= k) ++a;
    int b = static_cast<int>(k - static_cast<std::uint64_t>(a) * (a - 1) / 2);
    return {a, b};
}

std::pair<TileJacobian, TrainingTrace> train_jacobian(const std::vector<corpus::LoadedPair>& pairs,
                                                      const TrainingConfig& cfg) {
    if (cfg.iterations < 0) throw ParseError("iteration count must be nonnegative");
    if (!(cfg.step > 0.0)) throw ParseError("step must be positive");
    if (cfg.checkpoint_every < 0) throw ParseError("checkpoint cadence must be nonnegative");
    if (pairs.size() < 3) throw ShapeError("training requires at least 3 pairs");

    TileJacobian j = identity_tile_jacobian();
    j.seed = cfg.seed;
    j.iterations = cfg.iterations;

    std::vector<PairCache> caches = build_caches(pairs, cfg.allow_crop);
    const std::size_t n_pairs = pairs.size();
    std::vector<double> dmos(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) dmos[p] = pairs[p].meta.dmos;

    std::vector<double> distances(n_pairs);
    full_recompute(j, caches, distances);

    TrainingTrace trace;
    bool current_degenerate = false;
    double current_error = objective(distances, dmos, cfg.use_root, &current_degenerate);
    trace.initial_error = current_error;
    trace.initial_degenerate = current_degenerate;
    trace.proposals = cfg.iterations;

    // Integer step counts per free cell keep every value exactly n*step.
    const long long lattice_limit = static_cast<long long>(std::floor(1.0 / cfg.step + 1e-9));
    std::vector<long long> counts(static_cast<std::size_t>(kDim) * (kDim - 1) / 2, 0);

    Rng rng(cfg.seed);
    std::vector<double> cand_plus(n_pairs), cand_minus(n_pairs);

    for (long long iter = 1; iter <= cfg.iterations; ++iter) {
        std::uint64_t k = rng.next_index(counts.size());
        auto [a, b] = cell_of_index(k);
        long long n = counts[k];

        bool plus_ok = std::llabs(n + 1) <= lattice_limit;
        bool minus_ok = std::llabs(n - 1) <= lattice_limit;

        auto evaluate = [&](double delta, std::vector<double>& out) {
#pragma omp parallel for schedule(static)
            for (long long p = 0; p < static_cast<long long>(n_pairs); ++p) {
                const PairCache& cache = caches[static_cast<std::size_t>(p)];
                double d = distances[static_cast<std::size_t>(p)];
                for (std::size_t t = 0; t < cache.n_tiles; ++t) {
                    double ya = cache.strained[t * kDim + a], yb = cache.strained[t * kDim + b];
                    double da = cache.delta[t * kDim + a], db = cache.delta[t * kDim + b];
                    double na = ya + delta * db, nb = yb + delta * da;
                    d += na * na - ya * ya + nb * nb - yb * yb;
                }
                out[static_cast<std::size_t>(p)] = d;
            }
        };

        double err_plus = 2.0, err_minus = 2.0;
        bool deg_plus = true, deg_minus = true;
        if (plus_ok) {
            evaluate(cfg.step, cand_plus);
            err_plus = objective(cand_plus, dmos, cfg.use_root, &deg_plus);
        }
        if (minus_ok) {
            evaluate(-cfg.step, cand_minus);
            err_minus = objective(cand_minus, dmos, cfg.use_root, &deg_minus);
        }

        // pick the better candidate, tie toward +step; degenerate never wins
        bool take_plus = plus_ok && !deg_plus && (!minus_ok || deg_minus || err_plus <= err_minus);
        bool take_minus = !take_plus && minus_ok && !deg_minus;
        double best_err = take_plus ? err_plus : err_minus;

        if ((take_plus || take_minus) && best_err < current_error) {
            double delta = take_plus ? cfg.step : -cfg.step;
            counts[k] += take_plus ? 1 : -1;
            double value = static_cast<double>(counts[k]) * cfg.step;
            j.at(a, b) = value;
            j.at(b, a) = value;
            for (auto& cache : caches)
                for (std::size_t t = 0; t < cache.n_tiles; ++t) {
                    double da = cache.delta[t * kDim + a], db = cache.delta[t * kDim + b];
                    cache.strained[t * kDim + a] += delta * db;
                    cache.strained[t * kDim + b] += delta * da;
                }
            distances = take_plus ? cand_plus : cand_minus;
            current_error = best_err;
            current_degenerate = false;
            trace.accepted.push_back({iter, current_error});
        }

        if (cfg.checkpoint_every > 0 && iter % cfg.checkpoint_every == 0) {
            std::vector<double> fresh(n_pairs);
            full_recompute(j, caches, fresh);  // also refreshes strained caches in place
            bool full_degenerate = false;
            double full_error = objective(fresh, dmos, cfg.use_root, &full_degenerate);
            trace.checkpoints.push_back({iter, std::abs(current_error - full_error)});
            distances = std::move(fresh);
        }
    }

    trace.final_error = current_error;
    j.final_error = current_error;
    j.dataset_id = cfg.dataset_id;
    return {std::move(j), std::move(trace)};
}

void save_jacobian(const TileJacobian& j, const std::string& path) {
    validate(j);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open jacobian file for writing: " + path);
    out << "strainiq-jacobian v1\n";
    out << "dim " << j.dim << '\n';
    out << "tile_side " << j.tile_side << '\n';
    out << "dataset " << (j.dataset_id.empty() ? "-" : j.dataset_id) << '\n';
    out << "seed " << j.seed << '\n';
    out << "iterations " << j.iterations << '\n';
    out << "final_error " << format_full(j.final_error) << '\n';
    out << "entries\n";
    for (int r = 0; r < j.dim; ++r) {
        for (int c = 0; c < j.dim; ++c) {
            if (c) out << ' ';
            out << format_full(j.at(r, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing jacobian file: " + path);
}

TileJacobian load_jacobian(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open jacobian file: " + path);
    std::string line;
    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(path + ": truncated before " + what);
        return line;
    };
    if (next_line("header") != "strainiq-jacobian v1")
        throw ParseError(path + ": not a jacobian file (bad header)");

    TileJacobian j;
    auto read_field = [&](const std::string& key) {
        next_line(key.c_str());
        if (line.rfind(key + " ", 0) != 0) throw ParseError(path + ": expected field '" + key + "'");
        return line.substr(key.size() + 1);
    };
    try {
        j.dim = std::stoi(read_field("dim"));
        j.tile_side = std::stoi(read_field("tile_side"));
        std::string dataset = read_field("dataset");
        j.dataset_id = dataset == "-" ? "" : dataset;
        j.seed = std::stoull(read_field("seed"));
        j.iterations = std::stoll(read_field("iterations"));
        j.final_error = std::stod(read_field("final_error"));
    } catch (const std::invalid_argument&) {
        throw ParseError(path + ": malformed numeric field");
    } catch (const std::out_of_range&) {
        throw ParseError(path + ": numeric field out of range");
    }
    if (next_line("entries") != "entries") throw ParseError(path + ": expected 'entries' marker");
    if (j.dim != kDim || j.tile_side != kTileSide)
        throw ShapeError(path + ": tile jacobian must be 64x64 over 8x8 tiles");

    j.entries.resize(static_cast<std::size_t>(j.dim) * j.dim);
    for (int r = 0; r < j.dim; ++r) {
        next_line("matrix row");
        std::istringstream row(line);
        for (int c = 0; c < j.dim; ++c) {
            double v;
            if (!(row >> v))
                throw ParseError(path + ": row " + std::to_string(r) + " is malformed or has fewer than 64 values");
            j.at(r, c) = v;
        }
        double extra;
        if (row >> extra) throw ParseError(path + ": row " + std::to_string(r) + " has more than 64 values");
    }
    validate(j);
    return j;
}

void write_trace_table(const std::string& path, const TrainingTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open trace file for writing: " + path);
    out << "iteration,error\n";
    out << "0," << format_full(trace.initial_error) << '\n';
    for (const auto& e : trace.accepted) out << e.iteration << ',' << format_full(e.error) << '\n';
    if (!out) throw IoError("failed writing trace file: " + path);
}

}  // namespace strainiq::regression

namespace strainiq::serial {

double tiled_distance(const GrayImage& ref, const GrayImage& deg, const regression::TileJacobian& j,
                      bool allow_crop) {
    return regression::tiled_distance_with_buffer(ref, deg, j, allow_crop, false);
}

}  // namespace strainiq::serial
