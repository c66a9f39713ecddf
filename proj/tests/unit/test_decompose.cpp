#include <gtest/gtest.h>

#include <cmath>

#include "gexp/decompose.hpp"
#include "gexp/recover.hpp"

using namespace gexp;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::invalid_argument;
}

std::vector<double> drift_excess_psi(const Generator& g, const TimeGrid& grid, const MatrixZ& z,
                                     const std::function<double(double)>& a) {
    const std::vector<double> prim = drift_primitive(g, grid, z);
    std::vector<double> psi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = -prim[i] - a(grid[i]);
    return psi;
}

}  // namespace

TEST(Picard, AffineDriverClosedForm) {
    // f = aψ + b: ψ(t) = K + (y − K)e^{a(T−t)} with K = −(μ|z| + b)/a.
    const double T = 1.5, mu = 0.4, z = -2.0, a = 0.8, b = 0.3, y = 1.0;
    const TimeGrid grid = make_uniform_grid(T, 300);
    const PicardResult res = picard_solve(parse_generator("linear:mu=0.4", T), affine_driver(a, b), y,
                                          MatrixZ::scalar(z), grid);
    const double K = -(mu * std::abs(z) + b) / a;
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(res.psi[i], K + (y - K) * std::exp(a * (T - grid[i])), 1e-9);
    EXPECT_LT(res.fixed_point_residual, 1e-9);
    EXPECT_EQ(res.log_residuals.size(), res.iterations);
}

TEST(Picard, ContractionWithinHalfSquaredNorm) {
    for (const auto& [T, lambda] : std::vector<std::pair<double, double>>{{0.2, 4.0}, {1.0, 1.0}, {3.0, 2.0}}) {
        const TimeGrid grid = make_uniform_grid(T, 200);
        const PicardResult res = picard_solve(parse_generator("quadratic:nu=0.5", T), affine_driver(-lambda, 0.1), 0.5,
                                              MatrixZ::scalar(1.0), grid);
        EXPECT_LE(res.contraction_ratio, std::sqrt(0.5)) << T << " " << lambda;
        EXPECT_GT(res.contraction_ratio, 0.0);
    }
}

TEST(Picard, FromTableOracleMatchesBuiltin) {
    const TimeGrid grid = make_uniform_grid(1.0, 50);
    const std::vector<MatrixZ> zs{MatrixZ::scalar(1.0)};
    const Generator g = parse_generator("timescaled:a=2", 1.0);
    const TableOracle table(sample_G(GExpectationOracle(g), grid, zs));
    const PicardResult a = picard_solve(table, affine_driver(0.5, 0.0), 0.0, zs[0], grid);
    const PicardResult b = picard_solve(g, affine_driver(0.5, 0.0), 0.0, zs[0], grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a.psi[i], b.psi[i], 1e-12);
}

TEST(Picard, FailuresAreReported) {
    const TimeGrid grid = make_uniform_grid(1.0, 20);
    EXPECT_EQ(code_of([&] {
                  (void)picard_solve(parse_generator("zero", 1.0), affine_driver(3.0, 1.0), 1.0, MatrixZ::scalar(0.0),
                                     grid, {.tolerance = 1e-12, .max_iterations = 3});
              }),
              ErrorCode::contraction_failure);
    DriverF understated = affine_driver(2.0, 0.0);
    understated.lambda = 1.0;
    EXPECT_GT(driver_lipschitz_excess(understated, 1.0), 0.0);
    EXPECT_LE(driver_lipschitz_excess(affine_driver(2.0, 0.0), 1.0), 0.0);
}

TEST(Supermartingale, WitnessLocatesIncrease) {
    const TimeGrid grid = make_uniform_grid(1.0, 10);
    const Generator g = parse_generator("zero", 1.0);
    std::vector<double> psi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = -grid[i];
    EXPECT_TRUE(check_supermartingale(g, grid, psi, MatrixZ::scalar(0.0)).pass);
    psi[7] = psi[3] + 0.2;
    const SupermartingaleVerdict v = check_supermartingale(g, grid, psi, MatrixZ::scalar(0.0));
    EXPECT_FALSE(v.pass);
    EXPECT_NEAR(v.max_violation, 0.5, 1e-12);  // ψ(0.7) = −0.1 against the running minimum ψ(0.6) = −0.6
    EXPECT_NEAR(v.witness_t, 0.7, 1e-12);
    EXPECT_NEAR(v.witness_s, 0.6, 1e-12);
}

TEST(Penalization, QuadraticCompensatorAtNodes) {
    const TimeGrid grid = make_uniform_grid(2.0, 64);
    const Generator g = parse_generator("quadratic:nu=0.3", 2.0);
    const MatrixZ z = MatrixZ::scalar(1.5);
    const auto psi = drift_excess_psi(g, grid, z, [](double t) { return 0.4 * t * t; });
    const DecompositionResult res = penalize_decompose(g, grid, psi, z, {.tolerance = 1e-9});
    EXPECT_TRUE(res.converged);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(res.a[i], 0.4 * grid[i] * grid[i], 1e-6);
    EXPECT_EQ(res.monotonicity_violations, 0u);
    EXPECT_TRUE(res.a_nondecreasing);
    EXPECT_LT(res.reconstruction_residual, 1e-6);
    EXPECT_EQ(res.extrapolated_gaps.size() + 1, res.raw_gaps.size());
}

TEST(Penalization, PenaltySolutionIncreasesInM) {
    const TimeGrid grid = make_uniform_grid(1.0, 32);
    const Generator g = parse_generator("linear:mu=1", 1.0);
    const MatrixZ z = MatrixZ::scalar(-1.0);
    const auto psi = drift_excess_psi(g, grid, z, [](double t) { return std::sin(3.0 * t) + 3.0 * t; });
    const std::vector<double> prim = drift_primitive(g, grid, z);
    PenaltyIterate prev = penalty_solution(grid, psi, prim, 1.0);
    for (double m : {2.0, 4.0, 8.0, 16.0}) {
        const PenaltyIterate cur = penalty_solution(grid, psi, prim, m);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EXPECT_GE(cur.psi_m[i], prev.psi_m[i] - 1e-13);
            EXPECT_LE(cur.psi_m[i], psi[i] + 1e-13);
        }
        prev = cur;
    }
}

TEST(Penalization, FailureModes) {
    const TimeGrid grid = make_uniform_grid(1.0, 16);
    const Generator g = parse_generator("linear:mu=1", 1.0);
    const MatrixZ z = MatrixZ::scalar(1.0);
    const auto rising = drift_excess_psi(g, grid, z, [](double t) { return -0.5 * t; });
    EXPECT_EQ(code_of([&] { (void)penalize_decompose(g, grid, rising, z); }), ErrorCode::precondition_violation);
    const auto fine = drift_excess_psi(g, grid, z, [](double t) { return t * t; });
    try {
        (void)penalize_decompose(g, grid, fine, z, {.schedule = {1.0, 2.0, 4.0}, .tolerance = 1e-14});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::slow_convergence);
        EXPECT_GT(e.detail(), 1e-14);
    }
    EXPECT_EQ(code_of([&] { (void)penalize_decompose(parse_generator("lineary:a=1", 1.0), grid, fine, z); }),
              ErrorCode::unsupported_generator);
}

TEST(Penalization, RawStoppingIsSlowerThanRichardson) {
    const TimeGrid grid = make_uniform_grid(1.0, 16);
    const Generator g = parse_generator("zero", 1.0);
    const MatrixZ z = MatrixZ::scalar(0.0);
    const auto psi = drift_excess_psi(g, grid, z, [](double t) { return 0.5 * t; });
    const DecompositionResult rich = penalize_decompose(g, grid, psi, z, {.tolerance = 1e-6});
    const DecompositionResult raw =
        penalize_decompose(g, grid, psi, z, {.tolerance = 1e-6, .richardson = false});
    EXPECT_LT(rich.history.size(), raw.history.size());
}

TEST(RepresentationPair, BoundedByModulus) {
    const TimeGrid grid = make_uniform_grid(1.0, 20);
    const Generator g = parse_generator("quadratic:nu=0.5", 1.0);
    const RepresentationPair p = representation_pair(g, RTerminal::scalar(0.0, 2.0, 0.25, 0.75), grid);
    EXPECT_EQ(p.z_path[4].matrix()(0, 0), 0.0);
    EXPECT_EQ(p.z_path[5].matrix()(0, 0), 2.0);
    EXPECT_EQ(p.z_path[15].matrix()(0, 0), 2.0);
    EXPECT_EQ(p.g_path[10][0], 2.0);
    EXPECT_LE(p.max_ratio_excess, 0.0);

    GeneratorTraits wrong;
    wrong.rho = [](double) { return 0.1; };
    const Generator liar("liar", [](double, const Vector&, const MatrixZ& z) { return Vector::Constant(1, z.norm()); },
                         wrong);
    EXPECT_EQ(code_of([&] { (void)representation_pair(liar, RTerminal::scalar(0.0, 1.0, 0.0, 1.0), grid); }),
              ErrorCode::metadata_violation);
}

TEST(RepresentationPair, PairBoundInRk) {
    const TimeGrid grid = make_uniform_grid(1.0, 20);
    const Generator g = parse_generator("quadratic:nu=0.5", 1.0);
    const RTerminal xi = RTerminal::scalar(0.0, 1.9, 0.1, 0.9);
    const RTerminal eta = RTerminal::scalar(1.0, 1.2, 0.3, 0.6);
    EXPECT_TRUE(representation_pair_bound(g, xi, eta, 2.0, grid).holds());
    GeneratorTraits small;
    small.rho = [](double r) { return 0.5 * r; };
    const Generator undersized("q", [g](double t, const Vector& y, const MatrixZ& z) { return g(t, y, z); }, small);
    const PairBound bad = representation_pair_bound(undersized, xi, eta, 2.0, grid);
    EXPECT_FALSE(bad.holds());
    EXPECT_THROW((void)representation_pair_bound(g, xi, eta, 1.0, grid), Error);
}
