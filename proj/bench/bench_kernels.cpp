// Parallel kernels against their serial reference implementations. The serial
// versions exist so tests can assert bitwise agreement; this target measures
// what the OpenMP variants buy at the current thread count.

#include <benchmark/benchmark.h>

#include "strainiq/baselines.hpp"
#include "strainiq/connectivity.hpp"
#include "strainiq/geometry.hpp"
#include "strainiq/regression.hpp"
#include "strainiq/rng.hpp"

using namespace strainiq;

namespace {

GrayImage random_image(Rng& rng, int w, int h) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.values.resize(static_cast<std::size_t>(w) * h);
    for (double& v : img.values) v = 255.0 * rng.next_real01();
    return img;
}

struct PairFixture {
    GrayImage ref;
    GrayImage deg;
};

PairFixture make_pair(int side) {
    Rng rng(static_cast<std::uint64_t>(side));
    PairFixture f;
    f.ref = random_image(rng, side, side);
    f.deg = random_image(rng, side, side);
    return f;
}

const connectivity::ConnectivityKernel& gauss_kernel() {
    static const connectivity::ConnectivityKernel k =
        connectivity::build_kernel(connectivity::GaussianProfile{2.0});
    return k;
}

regression::TileJacobian random_tile_jacobian() {
    regression::TileJacobian j = regression::identity_tile_jacobian();
    Rng rng(12);
    for (int a = 1; a < j.dim; ++a)
        for (int b = 0; b < a; ++b) {
            double v = 0.2 * (rng.next_real01() - 0.5);
            j.at(a, b) = v;
            j.at(b, a) = v;
        }
    return j;
}

void bm_score_pair_parallel(benchmark::State& state) {
    PairFixture f = make_pair(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(connectivity::score_pair(f.ref, f.deg, gauss_kernel()));
}

void bm_score_pair_serial(benchmark::State& state) {
    PairFixture f = make_pair(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(serial::score_pair(f.ref, f.deg, gauss_kernel()));
}

void bm_ssim_parallel(benchmark::State& state) {
    PairFixture f = make_pair(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(baselines::ssim(f.ref, f.deg));
}

void bm_ssim_serial(benchmark::State& state) {
    PairFixture f = make_pair(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serial::ssim(f.ref, f.deg));
}

void bm_tiled_distance_parallel(benchmark::State& state) {
    PairFixture f = make_pair(static_cast<int>(state.range(0)));
    regression::TileJacobian j = random_tile_jacobian();
    for (auto _ : state) benchmark::DoNotOptimize(regression::tiled_distance(f.ref, f.deg, j));
}

void bm_tiled_distance_serial(benchmark::State& state) {
    PairFixture f = make_pair(static_cast<int>(state.range(0)));
    regression::TileJacobian j = random_tile_jacobian();
    for (auto _ : state) benchmark::DoNotOptimize(serial::tiled_distance(f.ref, f.deg, j));
}

}  // namespace

BENCHMARK(bm_score_pair_parallel)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_score_pair_serial)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_ssim_parallel)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_ssim_serial)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_tiled_distance_parallel)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_tiled_distance_serial)->Arg(64)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
