#include "gexp/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gexp/quadrature.hpp"

namespace gexp {

DriverF affine_driver(double a, double b) {
    return {[a, b](double, double psi) { return a * psi + b; }, std::abs(a),
            "affine(a=" + std::to_string(a) + ",b=" + std::to_string(b) + ")"};
}

double driver_lipschitz_excess(const DriverF& f, double horizon, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, horizon);
    std::normal_distribution<double> value(0.0, 3.0);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = time(rng);
        const double p1 = value(rng);
        const double p2 = value(rng);
        const double lhs = std::abs(f.eval(t, p1) - f.eval(t, p2));
        const double rhs = f.lambda * std::abs(p1 - p2);
        worst = std::max(worst, lhs - rhs - 1e-12 * (1.0 + rhs));
    }
    return worst;
}

namespace {

double sup_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

double sup_abs(std::span<const double> a) {
    double worst = 0.0;
    for (double v : a) worst = std::max(worst, std::abs(v));
    return worst;
}

/// log (∫_0^T d² e^{c s} ds)^{1/2} by the trapezoid rule, scaled to avoid overflow.
double log_weighted_norm(const TimeGrid& grid, std::span<const double> d, double c) {
    const double T = grid.horizon();
    std::vector<double> w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = d[i] * d[i] * std::exp(c * (grid[i] - T));
    const double scaled = cumulative_trapezoid(grid, w).back();
    if (scaled <= 0.0) return -std::numeric_limits<double>::infinity();
    return 0.5 * (c * T + std::log(scaled));
}

}  // namespace

PicardResult picard_solve(const ExpectationOracle& oracle, const DriverF& f, double y, const MatrixZ& z,
                          const TimeGrid& grid, const PicardOptions& options) {
    require(oracle.n() == 1 && z.rows() == 1 && z.cols() == oracle.d(), ErrorCode::invalid_argument,
            "the Picard solver is scalar");
    require(f.lambda >= 0.0 && static_cast<bool>(f.eval), ErrorCode::invalid_argument, "invalid driver");
    const OracleFlags flags = oracle.flags();
    if (!flags.independent_increments || !flags.translation) {
        throw Error(ErrorCode::precondition_violation,
                    oracle.name() + " must declare independent increments and translation invariance");
    }
    const double T = grid.horizon();
    std::vector<double> base(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const RConditionalValue v = oracle.eval_R(RTerminal(Vector::Zero(1), z, grid[i], T), 0.0);
        if (v.has_stochastic()) {
            throw Error(ErrorCode::oracle_contract_violation, "unconditional value with a stochastic part");
        }
        base[i] = y + v.deterministic[0];
    }

    PicardResult out{grid, std::vector<double>(grid.size(), 0.0), 0, {}, 0.0, 0.0, 0.0};
    out.weight_rate = 2.0 * f.lambda * f.lambda * T * std::max(T, 1.0);

    std::vector<double> fv(grid.size());
    auto apply = [&](const std::vector<double>& psi) {
        for (std::size_t i = 0; i < grid.size(); ++i) fv[i] = f.eval(grid[i], psi[i]);
        std::vector<double> next = tail_integrals(grid, fv);
        for (std::size_t i = 0; i < grid.size(); ++i) next[i] += base[i];
        return next;
    };

    std::vector<double> diff(grid.size());
    for (std::size_t k = 0; k < options.max_iterations; ++k) {
        std::vector<double> next = apply(out.psi);
        for (std::size_t i = 0; i < grid.size(); ++i) diff[i] = next[i] - out.psi[i];
        out.log_residuals.push_back(log_weighted_norm(grid, diff, out.weight_rate));
        const double sup_diff = sup_abs(diff);
        out.psi = std::move(next);
        out.iterations = k + 1;
        // The weighted norm carries a factor up to e^{cT/2}, so it measures contraction, not accuracy.
        if (sup_diff <= options.tolerance) {
            // Ratios are meaningful only while the differences are above rounding, measured in the same norm.
            std::vector<double> rounding(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) rounding[i] = 1e-12 * (1.0 + std::abs(out.psi[i]));
            const double floor = log_weighted_norm(grid, rounding, out.weight_rate);
            for (std::size_t j = 1; j < out.log_residuals.size(); ++j) {
                if (out.log_residuals[j] > floor && out.log_residuals[j - 1] > floor) {
                    out.contraction_ratio =
                        std::max(out.contraction_ratio, std::exp(out.log_residuals[j] - out.log_residuals[j - 1]));
                }
            }
            out.fixed_point_residual = sup_abs_diff(apply(out.psi), out.psi);
            return out;
        }
    }
    const double last = out.log_residuals.empty() ? 0.0 : std::exp(out.log_residuals.back());
    throw Error(ErrorCode::contraction_failure,
                "Picard iteration did not reach tolerance in " + std::to_string(options.max_iterations) +
                    " iterations; check the declared Lipschitz constant",
                last);
}

PicardResult picard_solve(const Generator& g, const DriverF& f, double y, const MatrixZ& z, const TimeGrid& grid,
                          const PicardOptions& options) {
    const GExpectationOracle oracle(g, 1, z.cols());
    return picard_solve(oracle, f, y, z, grid, options);
}

std::vector<double> drift_primitive(const Generator& g, const TimeGrid& grid, const MatrixZ& z) {
    require(z.rows() == 1, ErrorCode::invalid_argument, "scalar case only");
    std::vector<double> out(grid.size(), 0.0);
    if (z.is_zero() && g.traits().zero_at_zero) return out;
    const auto breaks = g.traits().time_breakpoints;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        out[i] = out[i - 1] +
                 integrate_scalar([&](double r) { return g.of_z(r, z)[0]; }, grid[i - 1], grid[i], breaks,
                                  {.tolerance = 1e-13 * grid.step(i - 1)});
    }
    return out;
}

SupermartingaleVerdict check_supermartingale(const Generator& g, const TimeGrid& grid, std::span<const double> psi,
                                             const MatrixZ& z) {
    require(psi.size() == grid.size(), ErrorCode::invalid_argument, "one ψ sample per node expected");
    const std::vector<double> prim = drift_primitive(g, grid, z);
    std::vector<double> phi(grid.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = psi[i] + prim[i];

    SupermartingaleVerdict v;
    v.tolerance = 1e-12 * (1.0 + sup_abs(phi));
    v.pairs = grid.size() * (grid.size() + 1) / 2;
    v.max_violation = -std::numeric_limits<double>::infinity();
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (phi[i] < phi[argmin]) argmin = i;
        const double gap = phi[i] - phi[argmin];
        if (gap > v.max_violation) {
            v.max_violation = gap;
            v.witness_s = grid[argmin];
            v.witness_t = grid[i];
        }
    }
    v.pass = v.max_violation <= v.tolerance;
    return v;
}

PenaltyIterate penalty_solution(const TimeGrid& grid, std::span<const double> psi, std::span<const double> primitive,
                                double m) {
    require(m > 0.0, ErrorCode::invalid_argument, "penalty weight must be positive");
    const std::size_t N = grid.steps();
    std::vector<double> phi(grid.size()), beta(N), e(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) phi[i] = psi[i] + primitive[i];
    for (std::size_t i = 0; i < N; ++i) beta[i] = (phi[i + 1] - phi[i]) / grid.step(i);
    // e = ψ^m − ψ solves e' = m e − β on each step with e(T) = 0.
    for (std::size_t i = N; i-- > 0;) {
        const double target = beta[i] / m;
        e[i] = target + (e[i + 1] - target) * std::exp(-m * grid.step(i));
    }
    PenaltyIterate out{m, std::vector<double>(grid.size()), std::vector<double>(grid.size(), 0.0)};
    for (std::size_t i = 0; i < grid.size(); ++i) out.psi_m[i] = psi[i] + e[i];
    for (std::size_t i = 0; i < N; ++i) {
        const double dt = grid.step(i);
        out.a_m[i + 1] = out.a_m[i] - beta[i] * dt + (e[i + 1] - beta[i] / m) * std::expm1(-m * dt);
    }
    return out;
}

DecompositionResult penalize_decompose(const Generator& g, const TimeGrid& grid, std::span<const double> psi,
                                       const MatrixZ& z, const PenalizeOptions& options) {
    require(z.rows() == 1, ErrorCode::invalid_argument, "the decomposition is scalar");
    if (!g.closed_form_class()) {
        throw Error(ErrorCode::unsupported_generator, g.name() + " is not in the closed-form class");
    }
    require(psi.size() == grid.size(), ErrorCode::invalid_argument, "one ψ sample per node expected");

    std::vector<double> schedule = options.schedule;
    if (schedule.empty())
        for (int p = 0; p <= 20; ++p) schedule.push_back(std::ldexp(1.0, p));
    require(schedule.size() >= 3, ErrorCode::invalid_argument, "schedule needs at least three weights");
    for (std::size_t i = 0; i < schedule.size(); ++i)
        require(schedule[i] > 0.0 && (i == 0 || schedule[i] > schedule[i - 1]), ErrorCode::invalid_argument,
                "schedule must be positive and increasing");

    DecompositionResult out{grid, {}, {}, {}, {}, false, 0.0, 0, 0.0, true, {}};
    out.precondition = check_supermartingale(g, grid, psi, z);
    if (!out.precondition.pass) {
        throw Error(ErrorCode::precondition_violation,
                    "ψ + zB is not a supermartingale: witness s = " + std::to_string(out.precondition.witness_s) +
                        ", t = " + std::to_string(out.precondition.witness_t),
                    out.precondition.max_violation);
    }
    const std::vector<double> prim = drift_primitive(g, grid, z);
    const double slack = 1e-13 * (1.0 + sup_abs(psi));

    auto extrapolate = [](const PenaltyIterate& lo, const PenaltyIterate& hi) {
        const double r = hi.m / lo.m;
        std::vector<double> out(lo.a_m.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (r * hi.a_m[i] - lo.a_m[i]) / (r - 1.0);
        return out;
    };

    for (double m : schedule) {
        out.history.push_back(penalty_solution(grid, psi, prim, m));
        const std::size_t k = out.history.size() - 1;
        const PenaltyIterate& cur = out.history[k];
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (cur.psi_m[i] > psi[i] + slack) ++out.monotonicity_violations;
        if (k == 0) continue;
        const PenaltyIterate& prev = out.history[k - 1];
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (cur.psi_m[i] < prev.psi_m[i] - slack) ++out.monotonicity_violations;
        out.raw_gaps.push_back(sup_abs_diff(cur.a_m, prev.a_m));
        if (!options.richardson) {
            out.final_gap = out.raw_gaps.back();
            out.a = cur.a_m;
        } else if (k >= 2) {
            const std::vector<double> r_prev = extrapolate(out.history[k - 2], prev);
            std::vector<double> r_cur = extrapolate(prev, cur);
            out.extrapolated_gaps.push_back(sup_abs_diff(r_cur, r_prev));
            out.final_gap = out.extrapolated_gaps.back();
            out.a = std::move(r_cur);
        } else {
            continue;
        }
        if (out.final_gap <= options.tolerance) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        throw Error(ErrorCode::slow_convergence,
                    "penalty schedule ended at m = " + std::to_string(schedule.back()) + " with gap " +
                        std::to_string(out.final_gap),
                    out.final_gap);
    }
    out.a.front() = 0.0;
    const std::size_t N = grid.steps();
    for (std::size_t i = 0; i < N; ++i)
        if (out.a[i + 1] < out.a[i] - options.tolerance) out.a_nondecreasing = false;
    const double phi_T = psi[N] + prim[N];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lhs = psi[i] + prim[i] - phi_T;
        out.reconstruction_residual = std::max(out.reconstruction_residual, std::abs(lhs - (out.a[N] - out.a[i])));
    }
    return out;
}

namespace {

MatrixZ window_value(const RTerminal& xi, double s) {
    if (xi.u < xi.v && s >= xi.u && s <= xi.v) return xi.z;
    return MatrixZ::zero(xi.z.rows(), xi.z.cols());
}

}  // namespace

RepresentationPair representation_pair(const Generator& g, const RTerminal& xi, const TimeGrid& grid) {
    if (!g.closed_form_class()) {
        throw Error(ErrorCode::unsupported_generator, g.name() + " is not in the closed-form class");
    }
    RepresentationPair out{grid, {}, {}, -std::numeric_limits<double>::infinity()};
    const double bound = g.rho(xi.z.norm());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        MatrixZ Z = window_value(xi, grid[i]);
        Vector gs = g.of_z(grid[i], Z);
        const double lhs = gs.norm();
        const double rhs = bound * Z.norm();
        const double excess = lhs - rhs;
        out.max_ratio_excess = std::max(out.max_ratio_excess, excess);
        if (excess > 1e-12 * (1.0 + rhs)) {
            throw Error(ErrorCode::metadata_violation,
                        "|g_s| exceeds ρ(|z|)|Z_s| at s = " + std::to_string(grid[i]) + " for " + g.name(), excess);
        }
        out.g_path.push_back(std::move(gs));
        out.z_path.push_back(std::move(Z));
    }
    return out;
}

PairBound representation_pair_bound(const Generator& g, const RTerminal& xi, const RTerminal& eta, double k,
                                    const TimeGrid& grid) {
    require(xi.z.norm() <= k * (1.0 + 1e-12) && eta.z.norm() <= k * (1.0 + 1e-12), ErrorCode::invalid_argument,
            "terminals must lie in R^k");
    const double rho = g.rho(k);
    PairBound out{-std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const MatrixZ a = window_value(xi, grid[i]);
        const MatrixZ b = window_value(eta, grid[i]);
        const double lhs = (g.of_z(grid[i], a) - g.of_z(grid[i], b)).norm();
        const double excess = lhs - rho * (a - b).norm();
        if (excess > out.max_excess) {
            out.max_excess = excess;
            out.witness_time = grid[i];
        }
    }
    return out;
}

}  // namespace gexp
