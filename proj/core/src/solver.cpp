#include "gexp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gexp {

PhiFunction::PhiFunction(TimeGrid grid, std::vector<Vector> values, std::vector<Vector> slope_left,
                         std::vector<Vector> slope_right, double achieved_tolerance, int refinements)
    : grid_(std::move(grid)), values_(std::move(values)), slope_left_(std::move(slope_left)),
      slope_right_(std::move(slope_right)), achieved_(achieved_tolerance), refinements_(refinements) {
    require(values_.size() == grid_.size(), ErrorCode::invalid_argument, "one φ value per node expected");
    require(slope_left_.size() == grid_.steps() && slope_right_.size() == grid_.steps(), ErrorCode::invalid_argument,
            "one slope pair per step expected");
}

Vector PhiFunction::at(double t) const {
    require(t >= 0.0 && t <= grid_.horizon() * (1.0 + 1e-12), ErrorCode::invalid_argument, "t outside [0, T]");
    if (const auto idx = grid_.find(t)) return values_[*idx];
    const std::size_t i = grid_.locate(t);
    const double dt = grid_.step(i);
    const double s = (t - grid_[i]) / dt;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * values_[i] + (s3 - 2 * s2 + s) * dt * slope_left_[i] +
           (-2 * s3 + 3 * s2) * values_[i + 1] + (s3 - s2) * dt * slope_right_[i];
}

Vector PhiFunction::linear_at(double t) const {
    if (const auto idx = grid_.find(t)) return values_[*idx];
    const std::size_t i = grid_.locate(t);
    const double s = (t - grid_[i]) / grid_.step(i);
    return (1.0 - s) * values_[i] + s * values_[i + 1];
}

namespace {

double sup_diff(const Vector& a, const Vector& b) { return (a - b).lpNorm<Eigen::Infinity>(); }

std::vector<Vector> rk4_backward(const Generator& g, const Vector& y, const StepProcess& h, const TimeGrid& grid) {
    std::vector<Vector> phi(grid.size());
    phi.back() = y;
    for (std::size_t i = grid.steps(); i-- > 0;) {
        const double a = grid[i];
        const double b = grid[i + 1];
        const double dt = b - a;
        const double mid = 0.5 * (a + b);
        const MatrixZ& z = h.on(a, b);
        const Vector& p = phi[i + 1];
        const Vector k1 = g(b, p, z);
        const Vector k2 = g(mid, p + 0.5 * dt * k1, z);
        const Vector k3 = g(mid, p + 0.5 * dt * k2, z);
        const Vector k4 = g(a, p + dt * k3, z);
        phi[i] = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!phi[i].allFinite()) {
            throw Error(ErrorCode::non_finite_sample, "φ left the finite range at t = " + std::to_string(a));
        }
    }
    return phi;
}

}  // namespace

PhiFunction solve_phi(const Generator& g, const Vector& y, const StepProcess& h, const TimeGrid& grid,
                      const PhiOptions& options) {
    require(options.tolerance > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
    require(std::abs(h.horizon() - grid.horizon()) <= 1e-12 * std::max(1.0, grid.horizon()),
            ErrorCode::invalid_argument, "step process and grid horizons differ");
    require(h.values().front().rows() == y.size(), ErrorCode::invalid_argument, "z rows must match y size");

    std::vector<double> extra(h.breakpoints().begin(), h.breakpoints().end());
    for (double t : g.traits().time_breakpoints)
        if (t > 0.0 && t < grid.horizon()) extra.push_back(t);
    TimeGrid level = grid.with_nodes(extra);

    std::vector<Vector> coarse = rk4_backward(g, y, h, level);
    double estimate = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= options.max_refinements; ++r) {
        TimeGrid fine = level.refined(2);
        if (fine.size() > options.max_nodes) break;
        std::vector<Vector> fine_values = rk4_backward(g, y, h, fine);
        double diff = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < level.size(); ++i) {
            diff = std::max(diff, sup_diff(fine_values[2 * i], coarse[i]));
            scale = std::max(scale, fine_values[2 * i].lpNorm<Eigen::Infinity>());
        }
        estimate = diff / 15.0;
        level = std::move(fine);
        coarse = std::move(fine_values);
        // Below this the step-halving difference is rounding, not truncation.
        const double floor = 1e-13 * (1.0 + scale);
        if (estimate <= std::max(options.tolerance, floor)) {
            std::vector<Vector> left(level.steps()), right(level.steps());
            for (std::size_t i = 0; i < level.steps(); ++i) {
                const MatrixZ& z = h.on(level[i], level[i + 1]);
                left[i] = -g(level[i], coarse[i], z);
                right[i] = -g(level[i + 1], coarse[i + 1], z);
            }
            return PhiFunction(std::move(level), std::move(coarse), std::move(left), std::move(right), estimate, r);
        }
    }
    throw Error(ErrorCode::tolerance_not_reached,
                "step halving stopped at " + std::to_string(level.size()) + " nodes with error estimate " +
                    std::to_string(estimate),
                estimate);
}

double phi_residual(const PhiFunction& phi, const Generator& g, const Vector& y, const StepProcess& h) {
    const TimeGrid& grid = phi.grid();
    const double per_step = 1e-13 / static_cast<double>(grid.steps());
    Vector tail = Vector::Zero(y.size());
    double worst = sup_diff(phi.node(grid.steps()), y);
    for (std::size_t i = grid.steps(); i-- > 0;) {
        const double a = grid[i];
        const double b = grid[i + 1];
        const MatrixZ& z = h.on(a, b);
        tail += integrate([&](double r) { return g(r, phi.at(r), z); }, a, b, {}, {.tolerance = per_step});
        worst = std::max(worst, sup_diff(phi.node(i), y + tail));
    }
    return worst;
}

RTerminal RConditionalValue::as_terminal() const {
    return {deterministic, coefficient, from, std::max(from, to), xi.k};
}

RConditionalValue cond_gexp_R(const Generator& g, const RTerminal& xi, double t, const QuadratureOptions& quad) {
    if (!g.closed_form_class()) {
        throw Error(ErrorCode::unsupported_generator,
                    "closed form on R needs a deterministic, y-independent generator with g(t,0) = 0; got " +
                        g.name());
    }
    require(t >= 0.0, ErrorCode::invalid_argument, "t must be nonnegative");
    RConditionalValue out{xi, t, xi.y, xi.z, xi.u, xi.u};
    if (t > xi.v) {
        out.to = xi.v;
        return out;
    }
    const double start = std::max(t, xi.u);
    if (xi.v > start && !xi.z.is_zero()) {
        const MatrixZ& z = xi.z;
        out.deterministic += integrate([&](double s) { return g.of_z(s, z); }, start, xi.v,
                                       g.traits().time_breakpoints, quad);
    }
    out.to = std::max(xi.u, t);
    return out;
}

MeanFieldSolution meanfield_solution(const Generator& g, const Vector& y, const StepProcess& h, const TimeGrid& grid,
                                     const PhiOptions& options) {
    return {solve_phi(g, y, h, grid, options), h};
}

Vector stochastic_integral(const StepProcess& h, const PathBatch& batch, std::size_t path, std::size_t from_node,
                           std::size_t to_node) {
    const TimeGrid& grid = batch.grid();
    for (double b : h.breakpoints()) {
        if (b > 0.0 && b < grid.horizon() && !grid.find(b)) {
            throw Error(ErrorCode::off_grid_time,
                        "step-process breakpoint " + std::to_string(b) + " is not a node of the path grid");
        }
    }
    Vector acc = Vector::Zero(h.values().front().rows());
    for (std::size_t s = from_node; s < to_node; ++s) {
        const MatrixZ& z = h.on(grid[s], grid[s + 1]);
        if (!z.is_zero()) acc += z.apply(batch.increment(path, s));
    }
    return acc;
}

std::vector<Vector> meanfield_path(const MeanFieldSolution& sol, const PathBatch& batch, std::size_t path) {
    const TimeGrid& grid = batch.grid();
    require(std::abs(grid.horizon() - sol.z.horizon()) <= 1e-12 * std::max(1.0, grid.horizon()),
            ErrorCode::invalid_argument, "batch and solution horizons differ");
    std::vector<Vector> out(grid.size());
    Vector integral = stochastic_integral(sol.z, batch, path, 0, 0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) integral += stochastic_integral(sol.z, batch, path, i - 1, i);
        out[i] = sol.phi.at(grid[i]) + integral;
    }
    return out;
}

Vector extrapolate_to_zero(std::span<const double> x, std::span<const Vector> q, double* last_change) {
    require(!x.empty() && x.size() == q.size(), ErrorCode::invalid_argument, "need matching nonempty samples");
    std::vector<Vector> p(q.begin(), q.end());
    Vector previous = p[0];
    for (std::size_t level = 1; level < x.size(); ++level) {
        previous = p[0];
        for (std::size_t k = 0; k + level < x.size(); ++k) {
            const double xa = x[k];
            const double xb = x[k + level];
            p[k] = (xa * p[k + 1] - xb * p[k]) / (xa - xb);
        }
    }
    if (last_change != nullptr) *last_change = x.size() > 1 ? sup_diff(p[0], previous) : 0.0;
    return p[0];
}

namespace {

PhiFunction window_solution(const Generator& g, double t, double eps, const Vector& y, const MatrixZ& z,
                            const PhiOptions& options) {
    const double end = t + eps;
    std::vector<double> nodes{0.0};
    if (t > 0.0) nodes.push_back(t);
    nodes.push_back(end);
    return solve_phi(g, y, StepProcess::window(end, t, end, z), TimeGrid(nodes), options);
}

}  // namespace

RepresentationEstimate invariant_representation(const Generator& g, double horizon, double t, const Vector& y,
                                                const MatrixZ& z, std::span<const double> eps_sequence,
                                                const PhiOptions& options) {
    require(!eps_sequence.empty(), ErrorCode::invalid_argument, "empty ε sequence");
    require(t >= 0.0, ErrorCode::invalid_argument, "t must be nonnegative");
    RepresentationEstimate out;
    const double mu = g.traits().mu;
    const Vector g_t = g(t, y, z);
    for (double eps : eps_sequence) {
        require(eps > 0.0 && t + eps <= horizon * (1.0 + 1e-12), ErrorCode::invalid_argument,
                "need 0 < ε and t + ε ≤ T");
        if (eps < 1e4 * options.tolerance) {
            throw Error(ErrorCode::grid_too_coarse,
                        "ε = " + std::to_string(eps) + " is below the resolution of the backward solver", eps);
        }
        const PhiFunction phi = window_solution(g, t, eps, y, z, options);
        const Vector yt = phi.node(*phi.grid().find(t));
        out.eps.push_back(eps);
        out.quotients.push_back((yt - y) / eps);
        const double mass = integrate_scalar([&](double r) { return g(r, y, z).norm(); }, t, t + eps);
        const double drift = integrate_scalar([&](double r) { return (g(r, y, z) - g_t).norm(); }, t, t + eps);
        out.error_bounds.push_back(mu * std::exp(mu * eps) * mass + drift / eps + 2.0 * options.tolerance / eps);
    }
    out.extrapolated = extrapolate_to_zero(out.eps, out.quotients, &out.extrapolation_change);
    return out;
}

double gronwall_gap(const Generator& g, double t, double eps, const Vector& y, const MatrixZ& z) {
    const PhiFunction phi = window_solution(g, t, eps, y, z, {.tolerance = 1e-12});
    const double mu = g.traits().mu;
    const double end = t + eps;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < phi.grid().size(); ++i) {
        const double s = phi.grid()[i];
        if (s < t) continue;
        const double mass = integrate_scalar([&](double r) { return g(r, y, z).norm(); }, s, end);
        const double rhs = std::exp(mu * (end - s)) * mass;
        worst = std::max(worst, (phi.node(i) - y).norm() - rhs);
    }
    return worst;
}

namespace {

double drift_integral(const StepProcess& gamma) {
    const auto breaks = gamma.breakpoints();
    const auto values = gamma.values();
    require(values.front().rows() == 1 && values.front().cols() == 1, ErrorCode::invalid_argument,
            "γ must be a scalar step process");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) total += values[i].matrix()(0, 0) * (breaks[i + 1] - breaks[i]);
    return total;
}

}  // namespace

EntropicEstimate entropic_value(double nu, const StepProcess& gamma, std::span<const double> payoff) {
    require(nu > 0.0, ErrorCode::invalid_argument, "ν must be positive");
    require(!payoff.empty(), ErrorCode::invalid_argument, "no payoff samples");
    EntropicEstimate out;
    out.samples = payoff.size();
    out.drift_integral = drift_integral(gamma);

    const auto bad = static_cast<std::size_t>(
        std::count_if(payoff.begin(), payoff.end(), [](double v) { return !std::isfinite(v); }));
    if (bad > 0) {
        throw Error(ErrorCode::non_finite_sample, std::to_string(bad) + " payoff samples are not finite",
                    static_cast<double>(bad));
    }
    std::vector<double> s(payoff.begin(), payoff.end());
    for (double& v : s) v += out.drift_integral;
    out.overflow_count = static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [nu](double v) { return !std::isfinite(std::exp(2.0 * nu * v)); }));
    if (static_cast<double>(out.overflow_count) > 1e-3 * static_cast<double>(s.size())) {
        throw Error(ErrorCode::non_finite_sample,
                    std::to_string(out.overflow_count) + " exponential moments overflow (more than 0.1%)",
                    static_cast<double>(out.overflow_count));
    }
    out.shift = *std::max_element(s.begin(), s.end());
    for (double& v : s) v = std::exp(2.0 * nu * (v - out.shift));
    const MCEstimate w = mc_mean(s);
    out.raw_mean = w.mean;
    out.raw_std_error = w.std_error;
    out.value = out.shift + std::log(w.mean) / (2.0 * nu);
    out.std_error = w.std_error / (2.0 * nu * w.mean);
    return out;
}

EntropicEstimate entropic_value(double nu, const StepProcess& gamma, const RTerminal& xi, const PathBatch& batch) {
    require(xi.n() == 1, ErrorCode::invalid_argument, "entropic values are scalar");
    const std::vector<double> values = evaluate_scalar_terminal(batch, xi);
    return entropic_value(nu, gamma, values);
}

}  // namespace gexp
