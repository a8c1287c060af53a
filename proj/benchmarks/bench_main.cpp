#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "implicit_recon/backprop.hpp"
#include "implicit_recon/isosurface.hpp"
#include "implicit_recon/lbfgs.hpp"
#include "implicit_recon/network.hpp"
#include "implicit_recon/point_set.hpp"
#include "implicit_recon/trainer.hpp"

using namespace irecon;

namespace {

NetworkConfig bench_config(Architecture kind) {
    NetworkConfig c;
    c.kind = kind;
    c.hidden_layers = 5;
    c.width = 50;
    c.seed = 1;
    return c;
}

const PointSet& sphere_points() {
    static const PointSet ps = [] {
        const PointSet raw = synth_sphere(200, 20, 1.0, 1);
        return apply_map(raw, unit_cube_map(raw.positions()));
    }();
    return ps;
}

void BM_Forward(benchmark::State& state) {
    const NetworkConfig c = bench_config(static_cast<Architecture>(state.range(0)));
    const Params p = init_params(c);
    const Matrix batch = to_batch(sphere_points().positions());
    for (auto _ : state) benchmark::DoNotOptimize(forward(c, p, batch));
    state.SetLabel(std::string(to_string(c.kind)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.cols()));
}

void BM_LossAndGradient(benchmark::State& state) {
    const NetworkConfig c = bench_config(static_cast<Architecture>(state.range(0)));
    const Params p = init_params(c);
    const Matrix batch = to_batch(sphere_points().positions());
    const auto labels = sphere_points().labels();
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(c, p, batch, labels));
    state.SetLabel(std::string(to_string(c.kind)));
}

void BM_MarchingCubes(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const ScalarField f = sample_field({{-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}}, {n, n, n},
                                       [](Point3 p) { return 1.0 - norm(p); });
    for (auto _ : state) benchmark::DoNotOptimize(marching_cubes(f));
}

void BM_EvaluateGrid(benchmark::State& state) {
    const NetworkConfig c = bench_config(Architecture::SqrHw);
    const Params p = init_params(c);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate_grid(c, p, reconstruction_bounds({}), {n, n, n}));
}

void BM_LbfgsRosenbrock(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    auto f = [](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            const double a = 1.0 - x[i];
            const double b = x[i + 1] - x[i] * x[i];
            v += a * a + 100.0 * b * b;
            g[i] += -2.0 * a - 400.0 * x[i] * b;
            g[i + 1] += 200.0 * b;
        }
        return v;
    };
    std::vector<double> x0(dim);
    for (std::size_t i = 0; i < dim; ++i) x0[i] = i % 2 == 0 ? -1.2 : 1.0;
    LbfgsOptions o;
    o.max_iterations = 10000;
    for (auto _ : state) benchmark::DoNotOptimize(lbfgs_minimize(f, x0, o));
}

}  // namespace

BENCHMARK(BM_Forward)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LossAndGradient)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MarchingCubes)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateGrid)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LbfgsRosenbrock)->Arg(2)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
