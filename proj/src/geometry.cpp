#include "strainiq/geometry.hpp"

#include <cmath>
#include <string>

#include "strainiq/error.hpp"

namespace strainiq {

void validate(const GrayImage& img) {
    if (img.width < 1 || img.height < 1)
        throw ShapeError("image dimensions must be at least 1x1, got " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
    if (img.values.size() != img.pixel_count())
        throw ShapeError("image value count " + std::to_string(img.values.size()) + " does not match " +
                         std::to_string(img.width) + "x" + std::to_string(img.height));
    for (double v : img.values)
        if (!std::isfinite(v)) throw ShapeError("image contains a non-finite value");
}

DenseJacobian identity_jacobian(int dim) {
    DenseJacobian j;
    j.dim = dim;
    j.entries.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) j.at(i, i) = 1.0;
    return j;
}

DifferenceField difference(const GrayImage& ref, const GrayImage& deg) {
    if (ref.width != deg.width || ref.height != deg.height)
        throw ShapeError("image pair dimensions differ: " + std::to_string(ref.width) + "x" +
                         std::to_string(ref.height) + " vs " + std::to_string(deg.width) + "x" +
                         std::to_string(deg.height));
    DifferenceField delta;
    delta.width = ref.width;
    delta.height = ref.height;
    delta.values.resize(ref.values.size());
    for (std::size_t i = 0; i < ref.values.size(); ++i) delta.values[i] = deg.values[i] - ref.values[i];
    return delta;
}

double euclidean_distance_sq(const DifferenceField& delta) {
    double sum = 0.0;
    for (double v : delta.values) sum += v * v;
    return sum;
}

double euclidean_distance(const DifferenceField& delta) { return std::sqrt(euclidean_distance_sq(delta)); }

DisplacementGradient displacement_gradient(const DenseJacobian& p) {
    DisplacementGradient g;
    g.dim = p.dim;
    g.entries = p.entries;
    for (int i = 0; i < p.dim; ++i) g.at(i, i) -= 1.0;
    return g;
}

StrainTensor strain_tensor(const DenseJacobian& j) {
    StrainTensor eps;
    eps.dim = j.dim;
    eps.entries.resize(j.entries.size());
    for (int a = 0; a < j.dim; ++a)
        for (int b = 0; b <= a; ++b) {
            // One shared expression per unordered pair keeps symmetry exact.
            double v = (j.at(a, b) + j.at(b, a)) / 2.0;
            if (a == b) v -= 1.0;
            eps.at(a, b) = v;
            eps.at(b, a) = v;
        }
    return eps;
}

double perceived_distance_sq_dense(const DifferenceField& delta, const DenseJacobian& j) {
    if (j.dim < 0 || static_cast<std::size_t>(j.dim) != delta.size())
        throw ShapeError("jacobian dimension " + std::to_string(j.dim) + " does not match field size " +
                         std::to_string(delta.size()));
    double sum = 0.0;
    for (int r = 0; r < j.dim; ++r) {
        double y = 0.0;
        const double* row = j.entries.data() + static_cast<std::size_t>(r) * j.dim;
        for (int c = 0; c < j.dim; ++c) y += row[c] * delta.values[c];
        sum += y * y;
    }
    return sum;
}

double perceived_distance_dense(const DifferenceField& delta, const DenseJacobian& j) {
    return std::sqrt(perceived_distance_sq_dense(delta, j));
}

double first_order_distance_sq(const DifferenceField& delta, const StrainTensor& eps) {
    if (eps.dim < 0 || static_cast<std::size_t>(eps.dim) != delta.size())
        throw ShapeError("strain tensor dimension " + std::to_string(eps.dim) + " does not match field size " +
                         std::to_string(delta.size()));
    double quad = 0.0;
    for (int r = 0; r < eps.dim; ++r) {
        double y = 0.0;
        const double* row = eps.entries.data() + static_cast<std::size_t>(r) * eps.dim;
        for (int c = 0; c < eps.dim; ++c) y += row[c] * delta.values[c];
        quad += delta.values[r] * y;
    }
    return euclidean_distance_sq(delta) + 2.0 * quad;
}

}  // namespace strainiq
