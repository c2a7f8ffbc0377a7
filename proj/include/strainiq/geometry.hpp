#pragma once

#include <cstddef>
#include <vector>

namespace strainiq {

// Luminance raster, row-major, nominal range [0, 255]. Pixel (x, y) lives at
// values[y * width + x]; every flattened vector in the toolkit uses this order.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Per-pixel difference degraded - reference, same raster order as GrayImage.
struct DifferenceField {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// Dense D x D matrix acting on flattened difference vectors.
struct DenseJacobian {
    int dim = 0;
    std::vector<double> entries;  // row-major

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
};

// sym(J) - I. Symmetric by construction; zero diagonal when J has unit diagonal.
struct StrainTensor {
    int dim = 0;
    std::vector<double> entries;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
};

// J - I, entrywise.
struct DisplacementGradient {
    int dim = 0;
    std::vector<double> entries;

    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * dim + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * dim + j]; }
};

// Throws ShapeError unless width/height >= 1, the value count matches, and all
// values are finite.
void validate(const GrayImage& img);

DenseJacobian identity_jacobian(int dim);

// deg - ref, pixelwise. Throws ShapeError on dimension mismatch.
DifferenceField difference(const GrayImage& ref, const GrayImage& deg);

// Sum of squared entries, accumulated in raster order.
double euclidean_distance_sq(const DifferenceField& delta);
double euclidean_distance(const DifferenceField& delta);

DisplacementGradient displacement_gradient(const DenseJacobian& p);

StrainTensor strain_tensor(const DenseJacobian& j);

// ||J Delta||^2: matrix-vector product, then squared entries summed in index
// order. With J = I this reduces bitwise to euclidean_distance_sq.
double perceived_distance_sq_dense(const DifferenceField& delta, const DenseJacobian& j);
double perceived_distance_dense(const DifferenceField& delta, const DenseJacobian& j);

// euclidean_distance_sq(delta) + 2 Delta^T eps Delta. May be negative for
// large strains; callers treating it as a distance must check sign.
double first_order_distance_sq(const DifferenceField& delta, const StrainTensor& eps);

}  // namespace strainiq
