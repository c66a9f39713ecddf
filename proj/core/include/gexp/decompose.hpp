#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gexp/generator.hpp"
#include "gexp/oracle.hpp"
#include "gexp/types.hpp"

namespace gexp {

/// Scalar driver f(t, ψ), Lipschitz in ψ with constant lambda.
struct DriverF {
    std::function<double(double t, double psi)> eval;
    double lambda = 0.0;
    std::string name;
};

/// f(t, ψ) = a·ψ + b.
DriverF affine_driver(double a, double b);

/// Samples (t, ψ1, ψ2) and returns the largest |f(t,ψ1) − f(t,ψ2)| − λ|ψ1 − ψ2|.
double driver_lipschitz_excess(const DriverF& f, double horizon, std::size_t samples = 500, std::uint64_t seed = 5);

struct PicardOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 500;
};

struct PicardResult {
    TimeGrid grid;
    std::vector<double> psi;
    std::size_t iterations = 0;
    std::vector<double> log_residuals;  ///< log of the weighted L2 norm of ψ_{k+1} − ψ_k
    double weight_rate = 0.0;           ///< c in the weight e^{c s}
    double contraction_ratio = 0.0;     ///< largest ratio of successive residuals
    double fixed_point_residual = 0.0;  ///< sup |ψ − I(ψ)| at the returned ψ

    [[nodiscard]] double residual(std::size_t k) const { return std::exp(log_residuals[k]); }
};

/// Fixed point of I(ψ)(t) = y + ∫_t^T g(s,z) ds + ∫_t^T f(s, ψ(s)) ds by
/// Picard iteration from ψ ≡ 0. ∫_t^T g(s,z) ds is read off the oracle as
/// the time-0 value of z(B_T − B_t). Residuals are measured in the norm
/// (∫_0^T |·|² e^{c s} ds)^{1/2} with c = 2λ²T·max(T, 1); iteration stops
/// once sup |ψ_{k+1} − ψ_k| ≤ tolerance.
PicardResult picard_solve(const ExpectationOracle& oracle, const DriverF& f, double y, const MatrixZ& z,
                          const TimeGrid& grid, const PicardOptions& options = {});
PicardResult picard_solve(const Generator& g, const DriverF& f, double y, const MatrixZ& z, const TimeGrid& grid,
                          const PicardOptions& options = {});

struct SupermartingaleVerdict {
    bool pass = true;
    double max_violation = 0.0;   ///< max over s ≤ t of ψ(t) + ∫_s^t g − ψ(s)
    double witness_s = 0.0;
    double witness_t = 0.0;
    std::size_t pairs = 0;
    double tolerance = 0.0;
};

/// Checks ψ(t) + ∫_s^t g(r,z) dr ≤ ψ(s) for every pair of nodes s ≤ t.
SupermartingaleVerdict check_supermartingale(const Generator& g, const TimeGrid& grid, std::span<const double> psi,
                                             const MatrixZ& z);

/// ∫_0^{t_i} g(r, z) dr at every node.
std::vector<double> drift_primitive(const Generator& g, const TimeGrid& grid, const MatrixZ& z);

struct PenalizeOptions {
    std::vector<double> schedule;  ///< empty: 1, 2, 4, …, 2^20
    double tolerance = 1e-8;
    bool richardson = true;        ///< stop on 2a^{2m} − a^m rather than a^m
};

struct PenaltyIterate {
    double m = 0.0;
    std::vector<double> psi_m;
    std::vector<double> a_m;
};

struct DecompositionResult {
    TimeGrid grid;
    std::vector<double> a;                 ///< limit estimate, a(0) = 0
    std::vector<PenaltyIterate> history;   ///< every m solved, in schedule order
    std::vector<double> raw_gaps;          ///< sup |a^{2m} − a^m| per consecutive pair
    std::vector<double> extrapolated_gaps; ///< sup |R_{2m} − R_m|, R_m = 2a^{2m} − a^m
    bool converged = false;
    double final_gap = 0.0;
    std::size_t monotonicity_violations = 0;  ///< nodes with ψ^{2m} < ψ^m or ψ < ψ^m
    double reconstruction_residual = 0.0;    ///< sup |ψ(t) − ψ(T) − ∫_t^T g − a(T) + a(t)|
    bool a_nondecreasing = true;
    SupermartingaleVerdict precondition;
};

/// Penalized equations ψ^m(t) = ψ(T) + ∫_t^T g ds + m∫_t^T (ψ − ψ^m) ds solved
/// exactly per step (ψ linear between nodes), a^m(t) = ∫_0^t m(ψ − ψ^m) ds.
/// Fails with precondition-violation when ψ + zB is not a supermartingale
/// and slow-convergence when the schedule ends before the tolerance.
DecompositionResult penalize_decompose(const Generator& g, const TimeGrid& grid, std::span<const double> psi,
                                       const MatrixZ& z, const PenalizeOptions& options = {});

/// a^m at every node for one penalty weight, plus ψ^m.
PenaltyIterate penalty_solution(const TimeGrid& grid, std::span<const double> psi, std::span<const double> primitive,
                                double m);

struct RepresentationPair {
    TimeGrid grid;
    std::vector<Vector> g_path;   ///< g(s, Z_s)
    std::vector<MatrixZ> z_path;  ///< Z_s = z·1_{[u,v]}(s)
    double max_ratio_excess = 0.0;  ///< max |g_s| − ρ(|z|)|Z_s|
};

/// The pair (g_s, Z_s) representing E^g[ξ | F_t] in the closed-form class.
/// Fails with metadata-violation when |g_s| > ρ(|z|)|Z_s| at a node.
RepresentationPair representation_pair(const Generator& g, const RTerminal& xi, const TimeGrid& grid);

struct PairBound {
    double max_excess = 0.0;  ///< max |g^ξ − g^η| − ρ(k)|Z^ξ − Z^η|
    double witness_time = 0.0;
    [[nodiscard]] bool holds(double slack = 1e-12) const noexcept { return max_excess <= slack; }
};

/// Nodewise |g_s^ξ − g_s^η| ≤ ρ(k)|Z_s^ξ − Z_s^η| for terminals in R^k.
PairBound representation_pair_bound(const Generator& g, const RTerminal& xi, const RTerminal& eta, double k,
                                    const TimeGrid& grid);

}  // namespace gexp
