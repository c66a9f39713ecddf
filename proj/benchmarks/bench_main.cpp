#include <benchmark/benchmark.h>

#include <vector>

#include "gexp/gexp.hpp"

using namespace gexp;

static void BM_ClosedForm(benchmark::State& state) {
    const Generator g = parse_generator("timescaled:a=2", 1.0);
    const RTerminal xi = RTerminal::scalar(0.5, 1.5, 0.2, 0.9);
    for (auto _ : state) benchmark::DoNotOptimize(cond_gexp_R(g, xi, 0.1));
}
BENCHMARK(BM_ClosedForm);

static void BM_SolvePhi(benchmark::State& state) {
    const Generator g = parse_generator("lineary:a=1", 1.0);
    const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::size_t>(state.range(0)));
    const StepProcess h = StepProcess::window(1.0, 0.25, 0.75, MatrixZ::scalar(1.0));
    const Vector y = Vector::Constant(1, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_phi(g, y, h, grid));
}
BENCHMARK(BM_SolvePhi)->Arg(10)->Arg(100)->Arg(1000);

static void BM_Simulate(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, 50);
    const auto paths = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(grid, paths, 1, 42));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * paths * 50));
}
BENCHMARK(BM_Simulate)->Arg(1000)->Arg(100000);

static void BM_Entropic(benchmark::State& state) {
    const PathBatch batch = simulate(make_uniform_grid(1.0, 1), 100000, 1, 42);
    const StepProcess gamma = StepProcess::constant(1.0, MatrixZ::scalar(0.0));
    const RTerminal xi = RTerminal::scalar(0.0, 1.0, 0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(entropic_value(0.5, gamma, xi, batch));
}
BENCHMARK(BM_Entropic);

static void BM_Recover(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::size_t>(state.range(0)));
    const GExpectationOracle oracle(parse_generator("timescaled:a=2", 1.0));
    const std::vector<MatrixZ> zs = z_sample_set(1, 1, 5.0);
    const GFunction G = sample_G(oracle, grid, zs);
    for (auto _ : state) benchmark::DoNotOptimize(recover_generator(G));
}
BENCHMARK(BM_Recover)->Arg(100)->Arg(1000);

static void BM_Picard(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, 400);
    const Generator g = parse_generator("linear:mu=1", 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(picard_solve(g, affine_driver(-1.0, 0.0), 1.0, MatrixZ::scalar(1.0), grid));
}
BENCHMARK(BM_Picard);

static void BM_Penalize(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::size_t>(state.range(0)));
    const Generator g = parse_generator("linear:mu=1", 1.0);
    const MatrixZ z = MatrixZ::scalar(1.0);
    const std::vector<double> prim = drift_primitive(g, grid, z);
    std::vector<double> psi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = -prim[i] - 0.7 * grid[i];
    for (auto _ : state) benchmark::DoNotOptimize(penalize_decompose(g, grid, psi, z));
}
BENCHMARK(BM_Penalize)->Arg(200)->Arg(2000);

static void BM_AxiomSuite(benchmark::State& state) {
    const GExpectationOracle oracle(parse_generator("quadratic:nu=0.5", 1.0));
    CheckOptions options;
    options.samples = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(check_axioms(oracle, options));
}
BENCHMARK(BM_AxiomSuite)->Arg(200);

static void BM_ConvexitySuite(benchmark::State& state) {
    const Generator g = parse_generator("linear:mu=1", 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(check_convexity_suite(g));
}
BENCHMARK(BM_ConvexitySuite);
BENCHMARK_MAIN();
