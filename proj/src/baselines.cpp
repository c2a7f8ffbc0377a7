#include "strainiq/baselines.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "strainiq/error.hpp"

namespace strainiq::baselines {

namespace {

// Normalized Gaussian mask, row-major side x side, centered.
std::vector<double> window_weights(int side, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(side) * side);
    int half = side / 2;
    double total = 0.0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            double v = std::exp(-static_cast<double>(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(dy + half) * side + (dx + half)] = v;
            total += v;
        }
    for (double& v : w) v /= total;
    return w;
}

double window_index(const GrayImage& ref, const GrayImage& deg, const std::vector<double>& w, int side,
                    int x0, int y0, double c1, double c2) {
    double mu_x = 0.0, mu_y = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
    for (int dy = 0; dy < side; ++dy) {
        const double* wr = &w[static_cast<std::size_t>(dy) * side];
        const double* xr = &ref.values[static_cast<std::size_t>(y0 + dy) * ref.width + x0];
        const double* yr = &deg.values[static_cast<std::size_t>(y0 + dy) * deg.width + x0];
        for (int dx = 0; dx < side; ++dx) {
            double wd = wr[dx], xv = xr[dx], yv = yr[dx];
            mu_x += wd * xv;
            mu_y += wd * yv;
            xx += wd * xv * xv;
            yy += wd * yv * yv;
            xy += wd * xv * yv;
        }
    }
    double var_x = xx - mu_x * mu_x;
    double var_y = yy - mu_y * mu_y;
    double cov = xy - mu_x * mu_y;
    return ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) /
           ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
}

double ssim_with_buffer(const GrayImage& ref, const GrayImage& deg, const SsimConfig& cfg, bool parallel) {
    validate(cfg);
    DifferenceField probe = difference(ref, deg);  // shared shape/finiteness checks
    (void)probe;
    const int side = cfg.window_side;
    const int nx = ref.width - side + 1, ny = ref.height - side + 1;
    if (nx < 1 || ny < 1) throw ShapeError("image smaller than the similarity window");

    const std::vector<double> w = window_weights(side, cfg.window_sigma);
    const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
    const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);

    std::vector<double> indices(static_cast<std::size_t>(nx) * ny);
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int y0 = 0; y0 < ny; ++y0)
            for (int x0 = 0; x0 < nx; ++x0)
                indices[static_cast<std::size_t>(y0) * nx + x0] = window_index(ref, deg, w, side, x0, y0, c1, c2);
    } else {
        for (int y0 = 0; y0 < ny; ++y0)
            for (int x0 = 0; x0 < nx; ++x0)
                indices[static_cast<std::size_t>(y0) * nx + x0] = window_index(ref, deg, w, side, x0, y0, c1, c2);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < indices.size(); ++i) acc += indices[i];
    return acc / static_cast<double>(indices.size());
}

}  // namespace

void validate(const SsimConfig& cfg) {
    if (cfg.window_side < 3 || cfg.window_side % 2 == 0)
        throw ParseError("similarity window side must be odd and at least 3");
    if (!(cfg.window_sigma > 0.0)) throw ParseError("window sigma must be positive");
    if (!(cfg.k1 > 0.0) || !(cfg.k2 > 0.0)) throw ParseError("stabilization constants must be positive");
    if (!(cfg.dynamic_range > 0.0)) throw ParseError("dynamic range must be positive");
}

double euclidean_metric(const GrayImage& ref, const GrayImage& deg) {
    return euclidean_distance_sq(difference(ref, deg));
}

double ssim(const GrayImage& ref, const GrayImage& deg, const SsimConfig& cfg) {
    return ssim_with_buffer(ref, deg, cfg, true);
}

}  // namespace strainiq::baselines

namespace strainiq::serial {

double ssim(const GrayImage& ref, const GrayImage& deg, const baselines::SsimConfig& cfg) {
    return baselines::ssim_with_buffer(ref, deg, cfg, false);
}

}  // namespace strainiq::serial
