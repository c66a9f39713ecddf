#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gexp/generator.hpp"
#include "gexp/oracle.hpp"
#include "gexp/paths.hpp"

namespace gexp {

enum class Verdict { pass, fail, skipped };
std::string_view to_string(Verdict v) noexcept;

/// One failing sample: named inputs (enough to re-run it) and both sides.
struct Witness {
    std::vector<std::pair<std::string, double>> inputs;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;  ///< amount by which the property is violated (> tolerance)

    [[nodiscard]] double input(std::string_view name) const;
};

struct PropertyReport {
    std::string id;
    Verdict verdict = Verdict::pass;
    std::size_t samples = 0;
    std::size_t failure_count = 0;
    std::vector<Witness> failures;  ///< the first few, capped by CheckOptions::max_witnesses
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    double max_gap = 0.0;  ///< largest violation seen (≤ 0 when everything holds)
    std::string note;
    /// For the convexity suite: the verdict of the same property at the
    /// level of E-values (skipped elsewhere).
    Verdict expectation_verdict = Verdict::skipped;

    [[nodiscard]] bool passed() const noexcept { return verdict != Verdict::fail; }
};

struct CheckOptions {
    std::size_t samples = 200;
    std::uint64_t seed = 42;
    double tolerance = 1e-10;
    double horizon = 1.0;
    double radius = 5.0;  ///< z is sampled in the ball of this radius
    std::size_t max_witnesses = 20;
};

/// Deterministic sample points in [0,1]^dims: two pinned corners, a Halton
/// sweep for the first half, seeded uniform draws for the rest.
std::vector<std::vector<double>> unit_samples(std::size_t count, std::size_t dims, std::uint64_t seed);

/// (F1) consistency, (F2) constant preservation, (F3) monotonicity on
/// comparable pairs, (F4) 0-1 law (skipped unless the oracle is pathwise).
std::array<PropertyReport, 4> check_axioms(const ExpectationOracle& oracle, const CheckOptions& options = {});

/// E[ξ + c | F_t] = E[ξ | F_t] + c, and E[ξ | F_t] = ξ once t ≥ v.
PropertyReport check_translation(const ExpectationOracle& oracle, const CheckOptions& options = {});

/// E[z(B_T − B_t) | F_t] is deterministic and equals E[z(B_T − B_t)].
PropertyReport check_independent_increments(const ExpectationOracle& oracle, const CheckOptions& options = {});

/// Ordered terminals under g, and, when g ≥ f on the sampled points,
/// E^g[ξ] ≥ E^f[ξ]. Scalar closed-form generators only.
PropertyReport check_comparison(const Generator& g, const Generator& f, const CheckOptions& options = {});

/// Concavity, superadditivity and positive homogeneity, each tested on the
/// generator and on E-values of z(B_{t+ε} − B_t) at time 0. Throws
/// equivalence-violation when the two levels disagree.
std::array<PropertyReport, 3> check_convexity_suite(const Generator& g, const CheckOptions& options = {});

/// E[ξ|F_t] − E[η|F_t] ≤ E^{ρ(k)|z|}[ξ − η | F_t] and the lower bound
/// −E^{ρ(k)|z|}[η − ξ | F_t] on pairs in R^k sharing (u, v).
PropertyReport check_domination(const ExpectationOracle& oracle, const Modulus& rho, double k,
                                const CheckOptions& options = {});
PropertyReport check_domination(const Generator& g, const Modulus& rho, double k, const CheckOptions& options = {});

/// E[Y^1_t] ≥ E[Y^2_t] on the grid for the mean-field equation with a
/// z-independent driver, given E[ξ] = y1 ≥ y2 = E[η].
PropertyReport check_meanfield_comparison(const Generator& g, double y1, double y2, const TimeGrid& grid,
                                          const CheckOptions& options = {});

/// Pathwise check at t = 0: the entropic value dominates the linear
/// expectation within 3 combined standard errors.
PropertyReport check_entropic_dominates_linear(double nu, const RTerminal& xi, const PathBatch& batch);

}  // namespace gexp
