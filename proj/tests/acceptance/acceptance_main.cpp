// One PASS/FAIL line per acceptance criterion; the exit status is the number
// of failed criteria.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "commands.hpp"
#include "gexp/gexp.hpp"

using namespace gexp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

Outcome closed_form_values() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double T = 0.5 + 2.5 * unit(rng);
        const double mu = 2.0 * unit(rng);
        const double y = -5.0 + 10.0 * unit(rng);
        const double z = -3.0 + 6.0 * unit(rng);
        double u = T * unit(rng);
        double v = T * unit(rng);
        if (u > v) std::swap(u, v);
        const Generator g = builtin_generator(GeneratorKind::linear_drift, [&] {
            GeneratorParams p;
            p.mu = mu;
            p.horizon = T;
            return p;
        }());
        const RConditionalValue value = cond_gexp_R(g, RTerminal::scalar(y, z, u, v), 0.0);
        const double expected = y + mu * std::abs(z) * (v - u);
        worst = std::max(worst, std::abs(value.deterministic[0] - expected) + (value.has_stochastic() ? 1.0 : 0.0));
    }
    return {worst <= 1e-10, fmt("50 parameter sets, max error %.3g (tol 1e-10)", worst)};
}

Outcome invariant_representation_recovers() {
    // "Exact" applies where the quotient does not depend on ε: g free of t
    // and y. The y-dependent a·y is held to the general tolerance.
    struct Case {
        std::string spec;
        bool time_constant;
    };
    const std::vector<Case> cases{{"zero", true},           {"linear:mu=0.7", true}, {"negdrift:mu=1.3", true},
                                  {"quadratic:nu=0.5,gamma=0", true}, {"scaled:c=0.8", true},
                                  {"lineary:a=0.9", false}, {"timescaled:a=1.5", false}};
    const double T = 1.0;
    const std::vector<double> eps{0.04, 0.02, 0.01, 0.005};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_general = 0.0;
    double worst_constant = 0.0;
    for (const Case& c : cases) {
        const Generator g = parse_generator(c.spec, T);
        for (int i = 0; i < 20; ++i) {
            const double t = 0.9 * unit(rng);
            const Vector y = Vector::Constant(1, -2.0 + 4.0 * unit(rng));
            const MatrixZ z = MatrixZ::scalar(-3.0 + 6.0 * unit(rng));
            const RepresentationEstimate est = invariant_representation(g, T, t, y, z, eps);
            const double err = std::abs(est.extrapolated[0] - g(t, y, z)[0]);
            worst_general = std::max(worst_general, err);
            if (c.time_constant) worst_constant = std::max(worst_constant, err);
        }
    }
    return {worst_general <= 1e-6 && worst_constant <= 1e-12,
            fmt("7 builtins x 20 points: max error %.3g (tol 1e-6), time-constant %.3g (tol 1e-12)", worst_general,
                worst_constant)};
}

Outcome entropic_values() {
    const auto start = std::chrono::steady_clock::now();
    const TimeGrid grid = make_uniform_grid(1.0, 1);
    const PathBatch batch = simulate(grid, 100000, 1, 42);
    const StepProcess no_drift = StepProcess::constant(1.0, MatrixZ::scalar(0.0));

    const EntropicEstimate linear = entropic_value(0.5, no_drift, RTerminal::scalar(0.0, 1.0, 0.0, 1.0), batch);
    const bool first = std::abs(linear.value - 0.5) <= 3.0 * linear.std_error;

    std::vector<double> squares(batch.paths());
    for (std::size_t p = 0; p < batch.paths(); ++p) squares[p] = std::pow(batch.position(p, 1)[0], 2);
    const EntropicEstimate square = entropic_value(0.2, no_drift, squares);
    const double exact = std::log(5.0) / 0.8;  // (1/2ν) ln E[e^{2νB²}] = −ln(1 − 4ν)/(4ν)
    const bool second = std::abs(square.value - 2.0118) <= 3.0 * square.std_error;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {first && second && seconds < 10.0,
            fmt("zB_T: %.5f (target 0.5, 3se %.5f); ", linear.value, 3.0 * linear.std_error) +
                fmt("B_1^2: %.5f (target 2.0118 = %.5f, ", square.value, exact) +
                fmt("3se %.5f); %.2f s", 3.0 * square.std_error, seconds)};
}

Outcome generator_recovery() {
    const TimeGrid grid = make_uniform_grid(1.0, 100);
    const std::vector<MatrixZ> zs = z_sample_set(1, 1, 5.0);
    double worst = 0.0;
    double worst_roundtrip = 0.0;
    for (const std::string spec : {"zero", "linear:mu=1", "quadratic:nu=0.5,gamma=0", "timescaled:a=1"}) {
        const Generator g = parse_generator(spec, 1.0);
        const GExpectationOracle oracle(g);
        const GFunction G = sample_G(oracle, grid, zs);
        const GeneratorTable table = recover_generator(G);
        for (std::size_t j = 0; j < zs.size(); ++j)
            for (std::size_t i = 1; i + 1 < grid.size(); ++i)
                worst = std::max(worst, std::abs(table.g[j][i][0] - g.of_z(grid[i], zs[j])[0]));
        worst_roundtrip = std::max(worst_roundtrip, roundtrip_necessity(G, table).max_discrepancy);
    }
    return {worst <= 1e-6 && worst_roundtrip <= 1e-8,
            fmt("interior max error %.3g (tol 1e-6), roundtrip %.3g (tol 1e-8)", worst, worst_roundtrip)};
}

Outcome picard_linear_driver() {
    double worst = 0.0;
    double ratio = 0.0;
    const std::vector<std::array<double, 5>> cases{
        // T, mu, z, lambda, y
        {1.0, 0.5, 1.0, 1.0, 2.0}, {0.5, 1.0, -2.0, 3.0, -1.0}, {2.0, 0.3, 0.5, 0.4, 0.0}};
    for (const auto& [T, mu, z, lambda, y] : cases) {
        const Generator g = parse_generator("linear:mu=" + std::to_string(mu), T);
        const TimeGrid grid = make_uniform_grid(T, 400);
        const PicardResult res = picard_solve(g, affine_driver(-lambda, 0.0), y, MatrixZ::scalar(z), grid);
        const double k = mu * std::abs(z) / lambda;
        for (std::size_t i = 0; i < grid.size(); ++i)
            worst = std::max(worst, std::abs(res.psi[i] - ((y - k) * std::exp(lambda * (grid[i] - T)) + k)));
        ratio = std::max(ratio, res.contraction_ratio);
    }
    return {worst <= 1e-8 && ratio <= std::sqrt(0.5),
            fmt("max error %.3g (tol 1e-8), contraction ratio %.4f (bound 1/sqrt2 = %.4f)", worst, ratio,
                std::sqrt(0.5))};
}

Outcome penalization() {
    const double c = 0.7;
    const double T = 1.0;
    const Generator g = parse_generator("linear:mu=1", T);
    const TimeGrid grid = make_uniform_grid(T, 200);
    const MatrixZ z = MatrixZ::scalar(1.0);
    const std::vector<double> prim = drift_primitive(g, grid, z);
    std::vector<double> psi(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) psi[i] = -prim[i] - c * grid[i];
    const DecompositionResult res = penalize_decompose(g, grid, psi, z);
    double a_err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) a_err = std::max(a_err, std::abs(res.a[i] - c * grid[i]));
    double am_err = 0.0;
    for (const PenaltyIterate& it : res.history) {
        const double expected = c * T - (c / it.m) * (-std::expm1(-it.m * T));
        am_err = std::max(am_err, std::abs(it.a_m.back() - expected));
    }
    return {a_err <= 1e-6 && am_err <= 1e-10 && res.monotonicity_violations == 0,
            fmt("sup|a - ct| %.3g (tol 1e-6), max a^m(T) error %.3g (tol 1e-10), ", a_err, am_err) +
                std::to_string(res.monotonicity_violations) + " monotonicity violations"};
}

Outcome axiom_suite() {
    CheckOptions options;
    options.samples = 200;
    std::size_t failures = 0;
    for (const std::string spec :
         {"zero", "linear:mu=1", "negdrift:mu=0.5", "quadratic:nu=0.5,gamma=0", "timescaled:a=1", "scaled:c=2"}) {
        const GExpectationOracle oracle(parse_generator(spec, 1.0));
        for (const auto& r : check_axioms(oracle, options))
            if (r.id != "F4_zero_one_law" && (r.verdict != Verdict::pass || r.samples < 200)) ++failures;
        if (check_translation(oracle, options).verdict != Verdict::pass) ++failures;
        if (check_independent_increments(oracle, options).verdict != Verdict::pass) ++failures;
    }

    // Faulty oracles must fail F1, and every witness must replay as a violation
    // under the faulty oracle and as a non-violation under the clean one.
    std::size_t witnesses = 0;
    std::size_t bad_witnesses = 0;
    std::size_t missed = 0;
    auto clean = std::make_shared<GExpectationOracle>(parse_generator("linear:mu=1", 1.0));
    for (const FaultMode mode : {FaultMode::all_times, FaultMode::at_zero}) {
        const FaultOracle faulty(clean, 0.01, mode);
        const PropertyReport f1 = check_axioms(faulty, options)[0];
        if (f1.verdict != Verdict::fail || f1.failures.empty()) ++missed;
        for (const Witness& w : f1.failures) {
            ++witnesses;
            const RTerminal xi = RTerminal::scalar(w.input("y"), w.input("z"), w.input("u"), w.input("v"));
            auto gap = [&](const ExpectationOracle& o) {
                const RConditionalValue nested = o.eval_R(o.eval_R(xi, w.input("t")).as_terminal(), w.input("s"));
                return std::abs(nested.deterministic[0] - o.eval_R(xi, w.input("s")).deterministic[0]);
            };
            if (gap(faulty) <= options.tolerance || gap(*clean) > options.tolerance) ++bad_witnesses;
        }
    }
    return {failures == 0 && missed == 0 && bad_witnesses == 0 && witnesses > 0,
            std::to_string(failures) + " clean-oracle failures; fault runs missed " + std::to_string(missed) + ", " +
                std::to_string(witnesses) + " witnesses replayed, " + std::to_string(bad_witnesses) + " wrong"};
}

Outcome equivalence_coherence() {
    std::size_t disagreements = 0;
    std::size_t runs = 0;
    std::string unexpected;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        CheckOptions options;
        options.seed = seed;
        for (const std::string spec : {"linear:mu=1", "-quadratic:nu=0.5"}) {
            try {
                const Generator g = spec[0] == 'l' ? parse_generator(spec, 1.0)
                                                   : negated(parse_generator("quadratic:nu=0.5,gamma=0", 1.0));
                const auto reports = check_convexity_suite(g, options);
                for (const auto& r : reports) {
                    ++runs;
                    if (r.verdict != r.expectation_verdict) ++disagreements;
                }
                // μ|z| is positively homogeneous and convex; −ν|z|² is concave.
                // Superadditivity of −ν|z|² holds only for z1·z2 ≤ 0, so both
                // levels are expected to FAIL it on same-sign pairs.
                const bool linear = spec[0] == 'l';
                if (linear && (reports[2].verdict != Verdict::pass || reports[0].verdict != Verdict::fail))
                    unexpected += " homogeneity/convexity(mu|z|)";
                if (!linear && reports[0].verdict != Verdict::pass) unexpected += " concavity(-nu|z|^2)";
            } catch (const Error&) {
                ++runs;
                ++disagreements;
            }
        }
        const TimeGrid grid = make_uniform_grid(1.0, 50);
        const std::vector<MatrixZ> zs = z_sample_set(1, 1, 5.0, 4, seed);
        const GExpectationOracle hi(parse_generator("linear:mu=0.6", 1.0));
        const GExpectationOracle lo(parse_generator("linear:mu=0.5", 1.0));
        const ConverseReport cmp = converse_compare(hi, lo, grid, zs);
        ++runs;
        if (!cmp.consistent()) ++disagreements;
        if (cmp.generator_verdict != OrderVerdict::g_dominates) unexpected += " order(0.6|z| vs 0.5|z|)";
    }
    return {disagreements == 0 && unexpected.empty(),
            std::to_string(disagreements) + " disagreements in " + std::to_string(runs) + " verdict pairs" +
                (unexpected.empty() ? "" : "; unexpected:" + unexpected)};
}

Outcome domination() {
    const double nu = 0.5;
    const Generator g = parse_generator("quadratic:nu=0.5,gamma=0", 1.0);
    CheckOptions options;
    options.samples = 500;
    std::size_t violations = 0;
    for (const double k : {1.0, 2.0, 5.0}) {
        const PropertyReport r = check_domination(g, [nu](double r) { return 2.0 * nu * r; }, k, options);
        violations += r.failure_count;
    }
    const PropertyReport undersized = check_domination(g, [nu](double r) { return nu * r; }, 2.0, options);
    const bool caught = undersized.verdict == Verdict::fail && !undersized.failures.empty();
    return {violations == 0 && caught, std::to_string(violations) + " violations over 3 x 500 pairs; undersized rho " +
                                           (caught ? "FAILs with a witness" : "was not caught")};
}

Outcome determinism() {
    using nlohmann::json;
    const std::vector<json> configs{
        {{"command", "solve"}, {"gen", "quadratic:nu=0.5"}, {"terminal", "y=1,z=1,u=0.2,v=0.7"}, {"t", 0.3}},
        {{"command", "solve"}, {"entropic", "nu=0.5"}, {"terminal", "y=0,z=1,u=0,v=1"}, {"M", 20000}, {"seed", 9}},
        {{"command", "recover"}, {"oracle", "builtin:timescaled:a=1"}, {"N", 50}},
        {{"command", "decompose"}, {"gen", "linear:mu=1"}, {"z", 1.0}, {"psi", "drift:c=0.5"}},
        {{"command", "check"}, {"suite", "axioms,translation,convexity,domination"}, {"gen", "quadratic:nu=0.5"}},
    };
    std::size_t mismatches = 0;
    for (const json& config : configs) {
        const json first = gexpect::without_timings(gexpect::run_command(config).report);
        const json again = gexpect::without_timings(gexpect::replay(gexpect::run_command(config).report).report);
        if (first.dump() != again.dump()) ++mismatches;
    }
    return {mismatches == 0,
            std::to_string(configs.size()) + " reports replayed, " + std::to_string(mismatches) + " differ"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"closed-form values on R", closed_form_values},
        {"invariant representation", invariant_representation_recovers},
        {"entropic solver", entropic_values},
        {"generator recovery fixed point", generator_recovery},
        {"Picard solver", picard_linear_driver},
        {"penalization decomposition", penalization},
        {"axiom suite and fault injection", axiom_suite},
        {"equivalence coherence", equivalence_coherence},
        {"domination", domination},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed;
}
