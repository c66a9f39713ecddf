#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gexp/generator.hpp"
#include "gexp/paths.hpp"
#include "gexp/quadrature.hpp"
#include "gexp/types.hpp"

namespace gexp {

struct PhiOptions {
    double tolerance = 1e-10;   ///< absolute, on the step-halving error estimate
    int max_refinements = 14;
    std::size_t max_nodes = std::size_t{1} << 22;
};

/// Deterministic part φ of the explicit solution: φ(s) = y + ∫_s^T g(r, φ(r), h(r)) dr.
///
/// Nodes are those of the finest grid the solver used (the supplied grid,
/// the breakpoints of h, and step halvings). Between nodes `at` uses the
/// cubic Hermite interpolant built from φ' = −g, which matches the
/// integrator's order; `linear_at` is the plain linear interpolant.
class PhiFunction {
public:
    PhiFunction(TimeGrid grid, std::vector<Vector> values, std::vector<Vector> slope_left,
                std::vector<Vector> slope_right, double achieved_tolerance, int refinements);

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Vector& node(std::size_t i) const { return values_[i]; }
    [[nodiscard]] std::span<const Vector> values() const noexcept { return values_; }
    [[nodiscard]] Vector at(double t) const;
    [[nodiscard]] Vector linear_at(double t) const;
    [[nodiscard]] double achieved_tolerance() const noexcept { return achieved_; }
    [[nodiscard]] int refinements() const noexcept { return refinements_; }

private:
    TimeGrid grid_;
    std::vector<Vector> values_;
    std::vector<Vector> slope_left_;   // φ' at the left end of step i
    std::vector<Vector> slope_right_;  // φ' at the right end of step i
    double achieved_;
    int refinements_;
};

/// Backward classical RK4 from φ(T) = y with step halving until the
/// Richardson estimate max|φ_{h/2} − φ_h|/15 is below tolerance.
PhiFunction solve_phi(const Generator& g, const Vector& y, const StepProcess& h, const TimeGrid& grid,
                      const PhiOptions& options = {});

/// max over nodes of |φ(s) − y − ∫_s^T g(r, φ(r), h(r)) dr|, the integral
/// taken by adaptive quadrature of the interpolated φ.
double phi_residual(const PhiFunction& phi, const Generator& g, const Vector& y, const StepProcess& h);

/// E^g[ξ | F_t] for ξ ∈ R: deterministic part plus z(B_to − B_from).
struct RConditionalValue {
    RTerminal xi;
    double t = 0.0;
    Vector deterministic;
    MatrixZ coefficient;
    double from = 0.0;
    double to = 0.0;

    [[nodiscard]] bool has_stochastic() const noexcept { return to > from; }
    /// The value as an element of R, measurable at t.
    [[nodiscard]] RTerminal as_terminal() const;
};

/// Closed form on R for deterministic, y-independent g with g(·,0) = 0:
///   t ≤ u:      y + ∫_u^v g(s,z) ds
///   u < t ≤ v:  y + ∫_t^v g(s,z) ds + z(B_t − B_u)
///   t > v:      ξ
RConditionalValue cond_gexp_R(const Generator& g, const RTerminal& xi, double t, const QuadratureOptions& quad = {});

struct MeanFieldSolution {
    PhiFunction phi;
    StepProcess z;
};

/// (Y, Z) = (φ(t) + ∫_0^t h dB, h) for the mean-field equation driven by E[Y].
MeanFieldSolution meanfield_solution(const Generator& g, const Vector& y, const StepProcess& h, const TimeGrid& grid,
                                     const PhiOptions& options = {});

/// Y along one simulated path at every batch node. The breakpoints of h must
/// be nodes of the batch grid.
std::vector<Vector> meanfield_path(const MeanFieldSolution& sol, const PathBatch& batch, std::size_t path);

/// ∫_a^b h dB along a path for a step process whose breakpoints are batch nodes.
Vector stochastic_integral(const StepProcess& h, const PathBatch& batch, std::size_t path, std::size_t from_node,
                           std::size_t to_node);

struct RepresentationEstimate {
    std::vector<double> eps;
    std::vector<Vector> quotients;       ///< (Y_t^{t+ε} − y)/ε
    std::vector<double> error_bounds;    ///< Gronwall-type bound on |quotient − g(t,y,z)|
    Vector extrapolated;                 ///< polynomial extrapolation to ε = 0
    double extrapolation_change = 0.0;   ///< |last − previous| Neville diagonal
};

/// Difference quotients (Y_t^{t+ε} − y)/ε with h = z·1_{[t,t+ε]} and their
/// extrapolated limit. ε below 1e4 × solver tolerance is rejected as
/// grid-too-coarse.
RepresentationEstimate invariant_representation(const Generator& g, double horizon, double t, const Vector& y,
                                                const MatrixZ& z, std::span<const double> eps_sequence,
                                                const PhiOptions& options = {.tolerance = 1e-12});

/// Neville extrapolation of samples (x_k, q_k) to x = 0, componentwise.
Vector extrapolate_to_zero(std::span<const double> x, std::span<const Vector> q, double* last_change = nullptr);

/// Checks |φ(s) − y| ≤ e^{μ(t+ε−s)} ∫_s^{t+ε} |g(r,y,z)| dr at every node in [t, t+ε].
/// Returns the largest (lhs − rhs); nonpositive means the bound holds.
double gronwall_gap(const Generator& g, double t, double eps, const Vector& y, const MatrixZ& z);

struct EntropicEstimate {
    double value = 0.0;
    double std_error = 0.0;        ///< delta-method propagated through the logarithm
    double raw_mean = 0.0;         ///< mean of exp(2ν(ξ + Γ − shift))
    double raw_std_error = 0.0;
    double shift = 0.0;
    double drift_integral = 0.0;   ///< Γ = ∫_0^T γ ds
    std::size_t samples = 0;
    std::size_t overflow_count = 0;  ///< samples whose unshifted exponential is not finite
};

/// Y_0 = (1/2ν) ln E[exp(2ν(ξ + ∫_0^T γ ds))] from payoff realizations.
/// Fails with non-finite-sample when a payoff is not finite or more than
/// 0.1% of the unshifted exponentials overflow.
EntropicEstimate entropic_value(double nu, const StepProcess& gamma, std::span<const double> payoff);
EntropicEstimate entropic_value(double nu, const StepProcess& gamma, const RTerminal& xi, const PathBatch& batch);

}  // namespace gexp
