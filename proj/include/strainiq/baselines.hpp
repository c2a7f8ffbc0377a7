#pragma once

#include "strainiq/geometry.hpp"

namespace strainiq::baselines {

// Canonical single-scale structural-similarity parameters.
struct SsimConfig {
    int window_side = 11;        // odd, >= 3
    double window_sigma = 1.5;   // pixels, > 0
    double k1 = 0.01;            // > 0
    double k2 = 0.03;            // > 0
    double dynamic_range = 255;  // luminance span, > 0
};

// Throws ParseError when a field violates its bound.
void validate(const SsimConfig& cfg);

// Squared euclidean distance between the rasters. Throws ShapeError on
// dimension mismatch.
double euclidean_metric(const GrayImage& ref, const GrayImage& deg);

// Mean local structural similarity in [-1, 1], higher = more similar. Each
// fully interior window contributes one index built from Gaussian-weighted
// means, variances, and covariance; border windows are skipped, not padded.
// Window rows are scored in parallel; the mean is reduced serially.
double ssim(const GrayImage& ref, const GrayImage& deg, const SsimConfig& cfg = {});

}  // namespace strainiq::baselines

namespace strainiq::serial {

// Reference implementation of baselines::ssim with no parallel constructs.
double ssim(const GrayImage& ref, const GrayImage& deg, const baselines::SsimConfig& cfg = {});

}  // namespace strainiq::serial
