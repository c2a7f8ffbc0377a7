#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "strainiq/corpus.hpp"
#include "strainiq/geometry.hpp"

namespace strainiq::regression {

// Learned 64x64 operator on flattened 8x8 tile differences, plus the
// provenance of the run that produced it. Symmetric, unit diagonal,
// off-diagonals in [-1, 1] and on the training step lattice.
struct TileJacobian {
    int dim = 64;
    int tile_side = 8;
    std::vector<double> entries;  // row-major dim x dim

    std::string dataset_id;  // empty when untrained
    std::uint64_t seed = 0;
    long long iterations = 0;
    double final_error = 1.0;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
};

TileJacobian identity_tile_jacobian();

// Throws ShapeError naming the first violated invariant, checked in order:
// shape, finiteness, unit diagonal, exact symmetry, off-diagonal range.
void validate(const TileJacobian& j);

struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    int tile_side = 8;
    bool cropped = false;                    // remainder rows/columns dropped
    std::vector<std::vector<double>> tiles;  // row-major tile order, tiles flattened row-major
};

// Splits the raster into non-overlapping tile_side x tile_side blocks. If the
// dimensions do not divide evenly: throws ShapeError unless allow_crop, which
// keeps the top-left maximal region and sets the cropped flag.
TileGrid tile_image(const GrayImage& img, int tile_side = 8, bool allow_crop = false);

// Sum over tiles of ||J Delta_tile||^2. Per-tile scores are computed in
// parallel into a buffer and summed serially in tile order, so the result is
// independent of thread count.
double tiled_distance(const GrayImage& ref, const GrayImage& deg, const TileJacobian& j,
                      bool allow_crop = false);

struct TrainingConfig {
    long long iterations = 10000;   // proposal count, >= 0
    double step = 0.1;              // > 0; cells move on the n*step lattice in [-1, 1]
    std::uint64_t seed = 0;
    long long checkpoint_every = 500;  // full objective recompute cadence; 0 disables
    bool allow_crop = false;
    bool use_root = false;   // correlate sqrt of distances instead of the squared form
    std::string dataset_id;  // recorded in the trained jacobian's provenance
};

struct TraceEntry {
    long long iteration = 0;  // 1-based proposal index
    double error = 0.0;       // objective after accepting this proposal
};

struct CheckpointRecord {
    long long iteration = 0;
    double divergence = 0.0;  // |incremental error - fully recomputed error|
};

struct TrainingTrace {
    double initial_error = 1.0;
    bool initial_degenerate = false;
    std::vector<TraceEntry> accepted;  // strictly decreasing error values
    std::vector<CheckpointRecord> checkpoints;
    double final_error = 1.0;
    long long proposals = 0;
};

// 1 - pearson(tiled distance per pair, dmos per pair). An undefined
// correlation (constant series or fewer than 3 pairs) yields 1.0 and sets
// *degenerate when provided.
double training_error(const TileJacobian& j, const std::vector<corpus::LoadedPair>& pairs,
                      bool* degenerate = nullptr);

// Random-walk coordinate descent from the identity: each proposal draws one
// free lower-triangle cell uniformly, tries +-step (off-lattice candidates
// discarded), and accepts the better candidate only on strict improvement,
// ties toward +step. Objective updates are incremental; every
// checkpoint_every proposals a full recompute is recorded and the caches are
// refreshed. Deterministic for fixed (pairs, cfg).
std::pair<TileJacobian, TrainingTrace> train_jacobian(const std::vector<corpus::LoadedPair>& pairs,
                                                      const TrainingConfig& cfg);

// Enumeration of free cells: k in [0, dim*(dim-1)/2) -> (row a, col b) with
// b < a, row-major over the strict lower triangle.
std::pair<int, int> cell_of_index(std::uint64_t k);

// Self-describing text format; entries serialized at 17 significant digits so
// the round trip is value-exact. load re-validates every invariant.
void save_jacobian(const TileJacobian& j, const std::string& path);
TileJacobian load_jacobian(const std::string& path);

// Two-column table: iteration, error; row 0 is the initial error.
void write_trace_table(const std::string& path, const TrainingTrace& trace);

}  // namespace strainiq::regression

namespace strainiq::serial {

// Reference implementation of regression::tiled_distance with no parallel
// constructs.
double tiled_distance(const GrayImage& ref, const GrayImage& deg, const regression::TileJacobian& j,
                      bool allow_crop = false);

}  // namespace strainiq::serial
