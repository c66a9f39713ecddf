#include "gexp/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "gexp/solver.hpp"

namespace gexp {

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::skipped: return "SKIPPED";
    }
    return "UNKNOWN";
}

double Witness::input(std::string_view name) const {
    for (const auto& [key, value] : inputs)
        if (key == name) return value;
    throw Error(ErrorCode::invalid_argument, "witness has no input named " + std::string(name));
}

std::vector<std::vector<double>> unit_samples(std::size_t count, std::size_t dims, std::uint64_t seed) {
    static constexpr std::array<unsigned, 16> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    std::vector<std::vector<double>> out;
    out.reserve(count);
    if (count > 0) out.emplace_back(dims, 0.0);
    if (count > 1) out.emplace_back(dims, 1.0);
    const std::size_t sweep = count / 2;
    for (std::size_t i = 1; out.size() < sweep; ++i) {
        std::vector<double> x(dims);
        for (std::size_t k = 0; k < dims; ++k) {
            const unsigned base = primes[k % primes.size()];
            // Dimensions past the prime table reuse a base with a shifted index.
            std::size_t n = i + 7 * (k / primes.size());
            double f = 1.0;
            double r = 0.0;
            while (n > 0) {
                f /= base;
                r += f * static_cast<double>(n % base);
                n /= base;
            }
            x[k] = r;
        }
        out.push_back(std::move(x));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (out.size() < count) {
        std::vector<double> x(dims);
        for (double& v : x) v = unit(rng);
        out.push_back(std::move(x));
    }
    return out;
}

namespace {

using Inputs = std::vector<std::pair<std::string, double>>;

class Recorder {
public:
    Recorder(std::string id, const CheckOptions& options, double tolerance) : options_(options) {
        report_.id = std::move(id);
        report_.tolerance = tolerance;
        report_.seed = options.seed;
        report_.max_gap = -std::numeric_limits<double>::infinity();
    }

    /// `gap` > tolerance means the property fails on this sample.
    void observe(double gap, double lhs, double rhs, const std::function<Inputs()>& inputs) {
        ++report_.samples;
        report_.max_gap = std::max(report_.max_gap, gap);
        if (!(gap <= report_.tolerance)) {
            ++report_.failure_count;
            if (report_.failures.size() < options_.max_witnesses) report_.failures.push_back({inputs(), lhs, rhs, gap});
        }
    }

    PropertyReport finish(std::string note = {}) {
        if (report_.samples == 0) report_.max_gap = 0.0;
        report_.verdict = report_.failure_count > 0 ? Verdict::fail : Verdict::pass;
        report_.note = std::move(note);
        return std::move(report_);
    }

    PropertyReport skip(std::string note) {
        report_.verdict = Verdict::skipped;
        report_.max_gap = 0.0;
        report_.note = std::move(note);
        return std::move(report_);
    }

    [[nodiscard]] std::size_t failures() const noexcept { return report_.failure_count; }

private:
    const CheckOptions& options_;
    PropertyReport report_;
};

void describe(Inputs& in, const std::string& prefix, const RTerminal& xi) {
    const bool scalar = xi.n() == 1 && xi.d() == 1;
    for (Eigen::Index r = 0; r < xi.n(); ++r)
        in.emplace_back(prefix + "y" + (xi.n() == 1 ? "" : "[" + std::to_string(r) + "]"), xi.y[r]);
    for (Eigen::Index r = 0; r < xi.z.rows(); ++r)
        for (Eigen::Index c = 0; c < xi.z.cols(); ++c)
            in.emplace_back(prefix + "z" + (scalar ? "" : "[" + std::to_string(r) + "," + std::to_string(c) + "]"),
                            xi.z.matrix()(r, c));
    in.emplace_back(prefix + "u", xi.u);
    in.emplace_back(prefix + "v", xi.v);
}

std::size_t terminal_dims(Eigen::Index n, Eigen::Index d) { return 3 + static_cast<std::size_t>(n * d); }

MatrixZ draw_z(std::span<const double> x, Eigen::Index n, Eigen::Index d, double radius) {
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < d; ++c) m(r, c) = radius * (2.0 * x[static_cast<std::size_t>(r * d + c)] - 1.0);
    if (m.norm() > radius) m *= radius / m.norm();
    return MatrixZ(m);
}

/// x[0] → y, x[1], x[2] → (u, v), x[3..] → z entries.
RTerminal draw_terminal(std::span<const double> x, Eigen::Index n, Eigen::Index d, double T, double radius) {
    Vector y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double shifted = std::fmod(x[0] + 0.6180339887498949 * static_cast<double>(r), 1.0);
        y[r] = -2.0 + 4.0 * shifted;
    }
    const double u = T * x[1];
    const double v = std::min(T, u + (T - u) * x[2]);
    return {y, draw_z(x.subspan(3), n, d, radius), u, v, radius};
}

/// Distance between two conditional values: deterministic sup gap plus the
/// size of any difference in the stochastic parts.
double value_distance(const RConditionalValue& a, const RConditionalValue& b) {
    double gap = (a.deterministic - b.deterministic).lpNorm<Eigen::Infinity>();
    const bool sa = a.has_stochastic() && !a.coefficient.is_zero();
    const bool sb = b.has_stochastic() && !b.coefficient.is_zero();
    if (sa && sb) {
        gap += (a.coefficient - b.coefficient).norm() +
               a.coefficient.norm() * (std::abs(a.from - b.from) + std::abs(a.to - b.to));
    } else if (sa) {
        gap += a.coefficient.norm() * (a.to - a.from);
    } else if (sb) {
        gap += b.coefficient.norm() * (b.to - b.from);
    }
    return gap;
}

RConditionalValue as_value(const RTerminal& xi, double t) { return {xi, t, xi.y, xi.z, xi.u, xi.v}; }

}  // namespace

std::array<PropertyReport, 4> check_axioms(const ExpectationOracle& oracle, const CheckOptions& options) {
    const Eigen::Index n = oracle.n();
    const Eigen::Index d = oracle.d();
    const double T = options.horizon;
    const std::size_t td = terminal_dims(n, d);
    const auto points = unit_samples(options.samples, td + 3, options.seed);

    Recorder f1("F1_consistency", options, options.tolerance);
    Recorder f2("F2_constant_preservation", options, 0.0);
    Recorder f3("F3_monotonicity", options, options.tolerance);

    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::span<const double> x(points[i]);
        const RTerminal xi = draw_terminal(x, n, d, T, options.radius);
        const double t = T * x[td];
        // Every fourth sample conditions the outer value at time 0.
        const double s = (i % 4 == 0) ? 0.0 : t * x[td + 1];

        const RConditionalValue inner = oracle.eval_R(xi, t);
        const RConditionalValue nested = oracle.eval_R(inner.as_terminal(), s);
        const RConditionalValue direct = oracle.eval_R(xi, s);
        f1.observe(value_distance(nested, direct), nested.deterministic[0], direct.deterministic[0], [&] {
            Inputs in;
            describe(in, "", xi);
            in.emplace_back("t", t);
            in.emplace_back("s", s);
            return in;
        });

        const RTerminal c = RTerminal::constant(xi.y, d);
        const RConditionalValue cv = oracle.eval_R(c, t);
        f2.observe(value_distance(cv, as_value(c, t)), cv.deterministic[0], c.y[0], [&] {
            Inputs in;
            describe(in, "", c);
            in.emplace_back("t", t);
            return in;
        });

        const double delta = 2.0 * x[td + 2];
        const RTerminal lower((xi.y.array() - delta).matrix(), xi.z, xi.u, xi.v, xi.k);
        const RConditionalValue hi = oracle.eval_R(xi, t);
        const RConditionalValue lo = oracle.eval_R(lower, t);
        const double order_gap = (lo.deterministic - hi.deterministic).maxCoeff();
        RConditionalValue lo_shifted = lo;
        lo_shifted.deterministic = hi.deterministic;
        const double stochastic_gap = value_distance(hi, lo_shifted);
        f3.observe(order_gap + stochastic_gap, hi.deterministic[0], lo.deterministic[0], [&] {
            Inputs in;
            describe(in, "", xi);
            in.emplace_back("delta", delta);
            in.emplace_back("t", t);
            return in;
        });
    }

    Recorder f4("F4_zero_one_law", options, options.tolerance);
    PropertyReport r4;
    if (!oracle.flags().pathwise) {
        r4 = f4.skip("oracle does not declare pathwise conditional values; only A = Ω and A = ∅ would be checkable");
    } else {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::span<const double> x(points[i]);
            const RTerminal xi = draw_terminal(x, n, d, T, options.radius);
            const double t = T * x[td];
            const RConditionalValue whole = oracle.eval_R(xi, t);
            const RConditionalValue again = oracle.eval_R(xi, t);
            const RConditionalValue empty = oracle.eval_R(RTerminal::constant(Vector::Zero(n), d), t);
            const double gap = value_distance(whole, again) + empty.deterministic.lpNorm<Eigen::Infinity>();
            f4.observe(gap, 0.0, 0.0, [&] {
                Inputs in;
                describe(in, "", xi);
                in.emplace_back("t", t);
                return in;
            });
        }
        r4 = f4.finish("checked for A = Ω and A = ∅ only");
    }
    return {f1.finish(), f2.finish(), f3.finish("comparable pairs: same (z, u, v), ordered y"), std::move(r4)};
}

PropertyReport check_translation(const ExpectationOracle& oracle, const CheckOptions& options) {
    const Eigen::Index n = oracle.n();
    const Eigen::Index d = oracle.d();
    const double T = options.horizon;
    const std::size_t td = terminal_dims(n, d);
    Recorder rec("translation", options, options.tolerance);
    for (const auto& p : unit_samples(options.samples, td + 2, options.seed + 1)) {
        const std::span<const double> x(p);
        const RTerminal xi = draw_terminal(x, n, d, T, options.radius);
        const double t = T * x[td];
        const double c = -3.0 + 6.0 * x[td + 1];
        const RTerminal shifted((xi.y.array() + c).matrix(), xi.z, xi.u, xi.v, xi.k);
        const RConditionalValue a = oracle.eval_R(xi, t);
        RConditionalValue b = oracle.eval_R(shifted, t);
        b.deterministic.array() -= c;
        double gap = value_distance(a, b);
        if (t >= xi.v) gap += value_distance(a, as_value(xi, t));
        rec.observe(gap, b.deterministic[0] + c, a.deterministic[0] + c, [&] {
            Inputs in;
            describe(in, "", xi);
            in.emplace_back("c", c);
            in.emplace_back("t", t);
            return in;
        });
    }
    return rec.finish("constant shifts, and E[ξ|F_t] = ξ for t ≥ v");
}

PropertyReport check_independent_increments(const ExpectationOracle& oracle, const CheckOptions& options) {
    const Eigen::Index n = oracle.n();
    const Eigen::Index d = oracle.d();
    const double T = options.horizon;
    const auto nd = static_cast<std::size_t>(n * d);
    Recorder rec("independent_increments", options, options.tolerance);
    for (const auto& p : unit_samples(options.samples, nd + 1, options.seed + 2)) {
        const std::span<const double> x(p);
        const double t = T * x[0];
        const MatrixZ z = draw_z(x.subspan(1), n, d, options.radius);
        const RTerminal xi(Vector::Zero(n), z, t, T, options.radius);
        const RConditionalValue at_t = oracle.eval_R(xi, t);
        const RConditionalValue at_0 = oracle.eval_R(xi, 0.0);
        double gap = (at_t.deterministic - at_0.deterministic).lpNorm<Eigen::Infinity>();
        if (at_t.has_stochastic() && !at_t.coefficient.is_zero()) gap += at_t.coefficient.norm() * (at_t.to - at_t.from);
        rec.observe(gap, at_t.deterministic[0], at_0.deterministic[0], [&] {
            Inputs in;
            describe(in, "", xi);
            in.emplace_back("t", t);
            return in;
        });
    }
    return rec.finish();
}

PropertyReport check_comparison(const Generator& g, const Generator& f, const CheckOptions& options) {
    const GExpectationOracle og(g, 1, 1);
    const GExpectationOracle of(f, 1, 1);
    const double T = options.horizon;
    const auto points = unit_samples(options.samples, 6, options.seed + 3);
    Recorder rec("comparison", options, options.tolerance);

    bool ordered = true;
    for (const auto& x : points) {
        const double t = T * x[4];
        const MatrixZ z = MatrixZ::scalar(options.radius * (2.0 * x[3] - 1.0));
        if (g.of_z(t, z)[0] < f.of_z(t, z)[0] - options.tolerance) ordered = false;
    }
    for (const auto& p : points) {
        const std::span<const double> x(p);
        const RTerminal xi = draw_terminal(x, 1, 1, T, options.radius);
        const double t = T * x[4];
        const double delta = 2.0 * x[5];
        const RTerminal eta((xi.y.array() - delta).matrix(), xi.z, xi.u, xi.v, xi.k);
        const double a = og.eval_R(xi, t).deterministic[0];
        const double b = og.eval_R(eta, t).deterministic[0];
        rec.observe(b - a, a, b, [&] {
            Inputs in;
            describe(in, "", xi);
            in.emplace_back("delta", delta);
            in.emplace_back("t", t);
            in.emplace_back("part", 1.0);
            return in;
        });
        if (ordered) {
            const double eg = og.eval_R(xi, 0.0).deterministic[0];
            const double ef = of.eval_R(xi, 0.0).deterministic[0];
            rec.observe(ef - eg, eg, ef, [&] {
                Inputs in;
                describe(in, "", xi);
                in.emplace_back("t", 0.0);
                in.emplace_back("part", 2.0);
                return in;
            });
        }
    }
    return rec.finish(ordered ? "ordered terminals under g; E^g ≥ E^f since g ≥ f on the samples"
                              : "ordered terminals under g only; g ≥ f fails pointwise so E^g vs E^f is not asserted");
}

std::array<PropertyReport, 3> check_convexity_suite(const Generator& g, const CheckOptions& options) {
    require(g.closed_form_class(), ErrorCode::unsupported_generator, g.name() + " is not in the closed-form class");
    const double T = options.horizon;
    const double eps = 0.01 * T;
    const GExpectationOracle oracle(g, 1, 1, {.tolerance = 1e-14, .max_depth = 40});
    const auto points = unit_samples(options.samples, 5, options.seed + 4);
    const double tol = options.tolerance;

    using Level = std::function<double(double, double)>;
    const Level gen = [&](double t, double z) { return g.of_z(t, MatrixZ::scalar(z))[0]; };
    const Level expect = [&](double t, double z) {
        return oracle.eval_R(RTerminal::scalar(0.0, z, t, t + eps), 0.0).deterministic[0] / eps;
    };

    struct Property {
        const char* id;
        // (lhs, rhs) at level `val` for sample (t, z1, z2, λ, k); the property holds when lhs ≤ rhs.
        std::function<std::pair<double, double>(const Level&, double, double, double, double, double)> sides;
    };
    const std::array<Property, 3> properties{{
        {"concavity",
         [](const Level& val, double t, double z1, double z2, double lam, double) {
             return std::pair{lam * val(t, z1) + (1.0 - lam) * val(t, z2), val(t, lam * z1 + (1.0 - lam) * z2)};
         }},
        {"superadditivity",
         [](const Level& val, double t, double z1, double z2, double, double) {
             return std::pair{val(t, z1) + val(t, z2), val(t, z1 + z2)};
         }},
        {"positive_homogeneity",
         [](const Level& val, double t, double z1, double, double, double k) {
             return std::pair{std::abs(val(t, k * z1) - k * val(t, z1)), 0.0};
         }},
    }};

    std::array<PropertyReport, 3> out;
    for (std::size_t p = 0; p < properties.size(); ++p) {
        Recorder level_g(properties[p].id, options, tol);
        Recorder level_e(properties[p].id, options, tol);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& x = points[i];
            const double t = (T - eps) * x[0];
            const double r = options.radius / 2.0;
            const double z1 = r * (2.0 * x[1] - 1.0);
            // Every eighth pair is antipodal so non-linear convexity shows up.
            const double z2 = (i % 8 == 3) ? -z1 : r * (2.0 * x[2] - 1.0);
            const double lam = (i % 5 == 0) ? 0.0 : (i % 5 == 1 ? 1.0 : x[3]);
            const double k = 2.0 * x[4];
            auto inputs = [&] {
                return Inputs{{"t", t}, {"z1", z1}, {"z2", z2}, {"lambda", lam}, {"k", k}};
            };
            const auto [gl, gr] = properties[p].sides(gen, t, z1, z2, lam, k);
            const auto [el, er] = properties[p].sides(expect, t, z1, z2, lam, k);
            level_g.observe(gl - gr, gl, gr, inputs);
            level_e.observe(el - er, el, er, inputs);
        }
        PropertyReport e = level_e.finish();
        out[p] = level_g.finish("generator level; expectation level uses z(B_{t+ε} − B_t) with ε = " +
                                std::to_string(eps));
        out[p].expectation_verdict = e.verdict;
        out[p].samples += e.samples;
        if (out[p].verdict != e.verdict) {
            throw Error(ErrorCode::equivalence_violation,
                        std::string(properties[p].id) + ": generator level " + std::string(to_string(out[p].verdict)) +
                            " but expectation level " + std::string(to_string(e.verdict)) + " for " + g.name());
        }
    }
    return out;
}

PropertyReport check_domination(const ExpectationOracle& oracle, const Modulus& rho, double k,
                                const CheckOptions& options) {
    require(oracle.n() == 1, ErrorCode::invalid_argument, "domination is checked for scalar expectations");
    require(k > 0.0, ErrorCode::invalid_argument, "radius must be positive");
    const Eigen::Index d = oracle.d();
    const double T = options.horizon;
    const double mu = rho(k);
    GeneratorParams params;
    params.mu = mu;
    const Generator dominating = builtin_generator(GeneratorKind::linear_drift, params);
    const auto nd = static_cast<std::size_t>(d);
    auto points = unit_samples(options.samples, 5 + 2 * nd, options.seed + 5);

    Recorder rec("domination", options, options.tolerance);
    auto run = [&](const MatrixZ& z1, const MatrixZ& z2, double y1, double y2, double u, double v, double t) {
        const RTerminal xi(Vector::Constant(1, y1), z1, u, v, k);
        const RTerminal eta(Vector::Constant(1, y2), z2, u, v, k);
        const RConditionalValue a = oracle.eval_R(xi, t);
        const RConditionalValue b = oracle.eval_R(eta, t);
        const RConditionalValue up = cond_gexp_R(dominating, RTerminal(xi.y - eta.y, z1 - z2, u, v), t);
        const RConditionalValue down = cond_gexp_R(dominating, RTerminal(eta.y - xi.y, z2 - z1, u, v), t);
        const double diff = a.deterministic[0] - b.deterministic[0];
        double gap = std::max(diff - up.deterministic[0], -down.deterministic[0] - diff);
        // The stochastic parts must cancel against the dominating value's.
        if (a.from != b.from || a.to != b.to) gap += 1.0;
        if (a.to > a.from) gap += ((a.coefficient - b.coefficient) - up.coefficient).norm();
        rec.observe(gap, diff, up.deterministic[0], [&] {
            Inputs in;
            describe(in, "xi.", xi);
            describe(in, "eta.", eta);
            in.emplace_back("t", t);
            in.emplace_back("k", k);
            in.emplace_back("rho_k", mu);
            return in;
        });
    };

    // Extremal pairs near the boundary of the ball first.
    for (double sign : {1.0, -1.0}) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(1, d);
        e(0, 0) = sign * k;
        run(MatrixZ(e), MatrixZ(0.99 * e), 0.0, 0.0, 0.0, T, 0.0);
    }
    for (const auto& p : points) {
        const std::span<const double> x(p);
        const double u = T * x[0];
        const double v = std::min(T, u + (T - u) * x[1]);
        const double t = T * x[2];
        const double y1 = -2.0 + 4.0 * x[3];
        const double y2 = -2.0 + 4.0 * x[4];
        run(draw_z(x.subspan(5, nd), 1, d, k), draw_z(x.subspan(5 + nd, nd), 1, d, k), y1, y2, u, v, t);
    }
    return rec.finish("two-sided bound with ρ(k) = " + std::to_string(mu) + " on pairs sharing (u, v)");
}

PropertyReport check_domination(const Generator& g, const Modulus& rho, double k, const CheckOptions& options) {
    return check_domination(GExpectationOracle(g, 1, 1), rho, k, options);
}

PropertyReport check_meanfield_comparison(const Generator& g, double y1, double y2, const TimeGrid& grid,
                                          const CheckOptions& options) {
    if (y1 < y2) {
        throw Error(ErrorCode::precondition_violation, "need E[ξ] = y1 ≥ y2 = E[η]");
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::uniform_real_distribution<double> time(0.0, grid.horizon());
    for (int i = 0; i < 64; ++i) {
        const double t = time(rng);
        const Vector y = Vector::Constant(1, normal(rng));
        if (g(t, y, MatrixZ::scalar(normal(rng))) != g(t, y, MatrixZ::zero(1, 1))) {
            throw Error(ErrorCode::precondition_violation, g.name() + " depends on z");
        }
    }
    const StepProcess none = StepProcess::constant(grid.horizon(), MatrixZ::zero(1, 1));
    const PhiFunction p1 = solve_phi(g, Vector::Constant(1, y1), none, grid);
    const PhiFunction p2 = solve_phi(g, Vector::Constant(1, y2), none, grid);
    Recorder rec("meanfield_comparison", options, options.tolerance);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const double a = p1.at(t)[0];
        const double b = p2.at(t)[0];
        rec.observe(b - a, a, b, [&] { return Inputs{{"y1", y1}, {"y2", y2}, {"t", t}}; });
    }
    return rec.finish();
}

PropertyReport check_entropic_dominates_linear(double nu, const RTerminal& xi, const PathBatch& batch) {
    const StepProcess none = StepProcess::constant(batch.grid().horizon(), MatrixZ::zero(1, 1));
    const EntropicEstimate ent = entropic_value(nu, none, xi, batch);
    const std::vector<double> values = evaluate_scalar_terminal(batch, xi);
    const MCEstimate lin = mc_mean(values);
    const double tol = 3.0 * std::hypot(ent.std_error, lin.std_error);
    CheckOptions options;
    options.seed = batch.seed();
    Recorder rec("entropic_vs_linear", options, tol);
    rec.observe(lin.mean - ent.value, ent.value, lin.mean, [&] {
        Inputs in;
        describe(in, "", xi);
        in.emplace_back("nu", nu);
        in.emplace_back("paths", static_cast<double>(batch.paths()));
        return in;
    });
    return rec.finish("Monte Carlo at t = 0, tolerance 3 combined standard errors");
}

}  // namespace gexp
