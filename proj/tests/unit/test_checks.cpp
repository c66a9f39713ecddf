#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gexp/checks.hpp"

using namespace gexp;

namespace {

// Decorates an oracle with a deliberately wrong behaviour.
class Distorted final : public ExpectationOracle {
public:
    enum class Kind { antitone, shift_constants, scale };
    Distorted(Generator g, Kind kind) : base_(std::move(g)), kind_(kind) {}
    RConditionalValue eval_R(const RTerminal& xi, double t) const override {
        RConditionalValue v = base_.eval_R(xi, t);
        switch (kind_) {
            case Kind::antitone: v.deterministic = -v.deterministic; break;
            case Kind::shift_constants:
                if (xi.is_constant()) v.deterministic.array() += 1e-3;
                break;
            case Kind::scale: v.deterministic *= 1.01; break;
        }
        return v;
    }
    OracleFlags flags() const override { return {}; }
    Eigen::Index n() const override { return 1; }
    Eigen::Index d() const override { return 1; }
    std::string name() const override { return "distorted"; }

private:
    GExpectationOracle base_;
    Kind kind_;
};

CheckOptions small(std::uint64_t seed = 42) {
    CheckOptions o;
    o.samples = 120;
    o.seed = seed;
    return o;
}

}  // namespace

TEST(UnitSamples, DeterministicCornersAndRange) {
    const auto a = unit_samples(50, 4, 9);
    const auto b = unit_samples(50, 4, 9);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, unit_samples(50, 4, 10));
    EXPECT_EQ(a[0], std::vector<double>(4, 0.0));
    EXPECT_EQ(a[1], std::vector<double>(4, 1.0));
    EXPECT_EQ(a[2][0], 0.5);  // Halton base 2, index 1
    EXPECT_NEAR(a[2][1], 1.0 / 3.0, 1e-16);
    for (const auto& x : a)
        for (double v : x) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    EXPECT_EQ(unit_samples(25, 20, 1).size(), 25u);
}

TEST(Axioms, BuiltinsPassInSeveralDimensions) {
    for (const auto& [n, d] : std::vector<std::pair<int, int>>{{1, 1}, {2, 1}, {1, 3}, {2, 2}}) {
        for (const char* spec : {"linear:mu=1", "quadratic:nu=0.3", "timescaled:a=2"}) {
            const GExpectationOracle oracle(parse_generator(spec, 1.0), n, d);
            const auto reports = check_axioms(oracle, small());
            for (std::size_t k = 0; k < 3; ++k)
                EXPECT_EQ(reports[k].verdict, Verdict::pass) << spec << " " << reports[k].id << " " << n << "x" << d;
            EXPECT_EQ(reports[3].verdict, Verdict::skipped);
            EXPECT_TRUE(check_translation(oracle, small()).passed());
            EXPECT_TRUE(check_independent_increments(oracle, small()).passed());
        }
    }
}

TEST(Axioms, FaultAtZeroIsCaughtOnlyThroughTimeZero) {
    auto base = std::make_shared<GExpectationOracle>(parse_generator("linear:mu=1", 1.0));
    const FaultOracle faulty(base, 0.05, FaultMode::at_zero);
    const auto reports = check_axioms(faulty, small());
    EXPECT_EQ(reports[0].verdict, Verdict::fail);
    for (const Witness& w : reports[0].failures) {
        EXPECT_EQ(w.input("s"), 0.0);
        EXPECT_LE(w.input("t"), w.input("u"));  // inner value is constant, so only the direct one is shifted
        EXPECT_NEAR(w.gap, 0.05, 1e-9);
    }
    EXPECT_EQ(reports[1].verdict, Verdict::pass);  // constants untouched
    EXPECT_EQ(reports[2].verdict, Verdict::pass);
}

TEST(Axioms, DistortedOraclesFailTheMatchingAxiom) {
    const Generator g = parse_generator("linear:mu=1", 1.0);
    EXPECT_EQ(check_axioms(Distorted(g, Distorted::Kind::antitone), small())[2].verdict, Verdict::fail);
    EXPECT_EQ(check_axioms(Distorted(g, Distorted::Kind::shift_constants), small())[1].verdict, Verdict::fail);
    EXPECT_EQ(check_translation(Distorted(g, Distorted::Kind::scale), small()).verdict, Verdict::fail);
    const PropertyReport f2 = check_axioms(Distorted(g, Distorted::Kind::shift_constants), small())[1];
    ASSERT_FALSE(f2.failures.empty());
    EXPECT_NEAR(f2.failures[0].lhs - f2.failures[0].rhs, 1e-3, 1e-12);
    EXPECT_EQ(f2.tolerance, 0.0);
}

TEST(Axioms, WitnessCapAndCount) {
    auto base = std::make_shared<GExpectationOracle>(parse_generator("linear:mu=1", 1.0));
    CheckOptions o = small();
    o.max_witnesses = 3;
    const PropertyReport f1 = check_axioms(FaultOracle(base, 0.1, FaultMode::all_times), o)[0];
    EXPECT_EQ(f1.failures.size(), 3u);
    EXPECT_GT(f1.failure_count, 3u);
    EXPECT_EQ(f1.seed, 42u);
}

TEST(Comparison, OrderedAndUnorderedGenerators) {
    const PropertyReport ok = check_comparison(parse_generator("linear:mu=1", 1), parse_generator("linear:mu=0.5", 1), small());
    EXPECT_EQ(ok.verdict, Verdict::pass);
    const PropertyReport skipped_part =
        check_comparison(parse_generator("linear:mu=0.5", 1), parse_generator("linear:mu=1", 1), small());
    EXPECT_EQ(skipped_part.verdict, Verdict::pass);
    EXPECT_NE(skipped_part.note.find("not asserted"), std::string::npos);
}

struct ConvexityCase {
    const char* spec;
    Verdict concave, superadditive, homogeneous;
};

void PrintTo(const ConvexityCase& c, std::ostream* os) { *os << c.spec; }

class ConvexitySuite : public ::testing::TestWithParam<ConvexityCase> {};

TEST_P(ConvexitySuite, VerdictsAgreeAcrossLevels) {
    const ConvexityCase c = GetParam();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = check_convexity_suite(parse_generator(c.spec, 1.0), small(seed));
        EXPECT_EQ(r[0].verdict, c.concave) << c.spec;
        EXPECT_EQ(r[1].verdict, c.superadditive) << c.spec;
        EXPECT_EQ(r[2].verdict, c.homogeneous) << c.spec;
        for (const auto& p : r) EXPECT_EQ(p.verdict, p.expectation_verdict);
    }
}

INSTANTIATE_TEST_SUITE_P(
    Builtins, ConvexitySuite,
    ::testing::Values(ConvexityCase{"zero", Verdict::pass, Verdict::pass, Verdict::pass},
                      ConvexityCase{"linear:mu=1", Verdict::fail, Verdict::fail, Verdict::pass},
                      ConvexityCase{"negdrift:mu=1", Verdict::pass, Verdict::pass, Verdict::pass},
                      ConvexityCase{"quadratic:nu=0.5", Verdict::fail, Verdict::fail, Verdict::fail},
                      ConvexityCase{"timescaled:a=1", Verdict::fail, Verdict::fail, Verdict::pass}),
    [](const ::testing::TestParamInfo<ConvexityCase>& info) {
        std::string name = info.param.spec;
        return name.substr(0, name.find(':'));
    });

TEST(ConvexitySuiteErrors, LevelsThatDisagreeRaise) {
    // Oscillates in t with period ε: pointwise not concave, but every ε-average vanishes.
    GeneratorTraits tr;
    tr.rho = [](double) { return 1.0; };
    const Generator wobble(
        "wobble",
        [](double t, const Vector&, const MatrixZ& z) {
            return Vector::Constant(1, std::sin(2.0 * std::numbers::pi * t / 0.01) * z.norm());
        },
        tr);
    try {
        (void)check_convexity_suite(wobble, small());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::equivalence_violation);
    }
    EXPECT_THROW((void)check_convexity_suite(parse_generator("lineary:a=1", 1.0), small()), Error);
}

TEST(Domination, ModulusTwoNuRAndUndersized) {
    const Generator g = parse_generator("quadratic:nu=0.25", 1.0);
    CheckOptions o = small();
    o.samples = 200;
    for (double k : {0.5, 1.0, 3.0}) {
        const PropertyReport r = check_domination(g, [](double r) { return 0.5 * r; }, k, o);
        EXPECT_EQ(r.verdict, Verdict::pass) << k;
        EXPECT_EQ(r.samples, 202u);
    }
    const PropertyReport bad = check_domination(g, [](double r) { return 0.3 * r; }, 2.0, o);
    ASSERT_EQ(bad.verdict, Verdict::fail);
    const Witness& w = bad.failures.front();
    // Replay the witness: E[ξ] − E[η] exceeds E^{ρ(k)|z|}[ξ − η] (or the mirror bound).
    const RTerminal xi = RTerminal::scalar(w.input("xi.y"), w.input("xi.z"), w.input("xi.u"), w.input("xi.v"));
    const RTerminal eta = RTerminal::scalar(w.input("eta.y"), w.input("eta.z"), w.input("eta.u"), w.input("eta.v"));
    const double t = w.input("t");
    EXPECT_DOUBLE_EQ(w.input("rho_k"), 0.6);
    const double diff = cond_gexp_R(g, xi, t).deterministic[0] - cond_gexp_R(g, eta, t).deterministic[0];
    GeneratorParams p;
    p.mu = 0.6;
    const Generator dom = builtin_generator(GeneratorKind::linear_drift, p);
    const RTerminal up(xi.y - eta.y, xi.z - eta.z, xi.u, xi.v);
    const RTerminal down(eta.y - xi.y, eta.z - xi.z, xi.u, xi.v);
    const double excess = std::max(diff - cond_gexp_R(dom, up, t).deterministic[0],
                                   -cond_gexp_R(dom, down, t).deterministic[0] - diff);
    EXPECT_GT(excess, o.tolerance);
}

TEST(Domination, LinearGeneratorIsDominatedByItsConstant) {
    const PropertyReport r = check_domination(parse_generator("linear:mu=0.8", 1.0), [](double) { return 0.8; }, 2.0);
    EXPECT_EQ(r.verdict, Verdict::pass);
    const PropertyReport bad = check_domination(parse_generator("linear:mu=0.8", 1.0), [](double) { return 0.7; }, 2.0);
    EXPECT_EQ(bad.verdict, Verdict::fail);
}

TEST(MeanField, ComparisonAndPreconditions) {
    const TimeGrid grid = make_uniform_grid(1.0, 20);
    EXPECT_EQ(check_meanfield_comparison(parse_generator("lineary:a=-1.5", 1.0), 2.0, 1.0, grid).verdict, Verdict::pass);
    EXPECT_THROW((void)check_meanfield_comparison(parse_generator("lineary:a=1", 1.0), 1.0, 2.0, grid), Error);
    EXPECT_THROW((void)check_meanfield_comparison(parse_generator("linear:mu=1", 1.0), 2.0, 1.0, grid), Error);
}

TEST(Entropic, DominatesLinearExpectation) {
    const PathBatch batch = simulate(make_uniform_grid(1.0, 4), 20000, 1, 5);
    const PropertyReport r = check_entropic_dominates_linear(0.5, RTerminal::scalar(0.3, 1.0, 0.25, 1.0), batch);
    EXPECT_EQ(r.verdict, Verdict::pass);
    EXPECT_EQ(r.id, "entropic_vs_linear");
}
