#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gexp/oracle.hpp"

namespace gexp {

/// G(t_i, z_j) = E[z_j B_{t_i}] from an oracle. Fails with
/// precondition-violation when the oracle does not declare independent
/// increments and translation invariance, and with oracle-contract-violation
/// when an unconditional value has a stochastic part or G(0, z) ≠ 0.
GFunction sample_G(const ExpectationOracle& oracle, const TimeGrid& grid, std::span<const MatrixZ> z_set);

/// Default z sample set: the axis points ±k/2, ±k for every entry of an n×d
/// matrix plus `random_directions` seeded points in the ball of radius k.
std::vector<MatrixZ> z_sample_set(Eigen::Index n, Eigen::Index d, double k, std::size_t random_directions = 4,
                                  std::uint64_t seed = 11);

enum class EndStencil {
    first_order,   ///< (G_1 − G_0)/Δt
    second_order,  ///< three-point one-sided
};

struct RecoverOptions {
    EndStencil ends = EndStencil::second_order;
    double irregularity_factor = 10.0;
};

/// g(t_i, z_j) sampled on the grid; g[j][i] is an n-vector.
struct GeneratorTable {
    TimeGrid grid;
    std::vector<MatrixZ> z;
    std::vector<std::vector<Vector>> g;
    /// Per z: the first/last difference of g is large against the interior ones.
    std::vector<std::pair<bool, bool>> endpoint_irregular;
    bool richardson = false;

    [[nodiscard]] std::optional<std::size_t> find_z(const MatrixZ& zz) const;
    [[nodiscard]] bool any_irregular() const;
};

/// ∂_t G by finite differences: three-point central (nonuniform-aware) at
/// interior nodes, one-sided at the ends. Needs N ≥ 4.
GeneratorTable recover_generator(const GFunction& G, const RecoverOptions& options = {});

/// Differences on `grid` and on its 2× refinement combined as (4D_{h/2} − D_h)/3.
/// The oracle must accept arbitrary t.
GeneratorTable recover_generator_richardson(const ExpectationOracle& oracle, const TimeGrid& grid,
                                            std::span<const MatrixZ> z_set, const RecoverOptions& options = {});

struct RoundtripReport {
    std::vector<double> discrepancy;  ///< per z: max_i |∫_0^{t_i} g − G(t_i)|
    double max_discrepancy = 0.0;
    double tolerance = 0.0;
    bool endpoint_irregular = false;
    [[nodiscard]] bool pass() const noexcept { return max_discrepancy <= tolerance; }
};

/// Re-integrates the recovered table by the trapezoid rule and compares with G.
RoundtripReport roundtrip_necessity(const GFunction& G, const GeneratorTable& table, double tolerance = 1e-8);

/// The table as a generator: linear in t between nodes, exact lookup in z
/// (z = 0 gives 0; other z outside the sample set is unsupported).
Generator table_generator(const GeneratorTable& table, std::string name = "recovered");

struct RepresentationWitness {
    RTerminal xi;
    double t = 0.0;
    Vector oracle_value;
    Vector model_value;
    double gap = 0.0;
    bool stochastic_mismatch = false;
};

struct RepresentationReport {
    std::size_t samples = 0;
    double tolerance = 0.0;
    double max_error = 0.0;
    std::vector<RepresentationWitness> failures;
    [[nodiscard]] bool pass() const noexcept { return failures.empty(); }
};

/// Compares oracle.eval_R(ξ, t) with cond_gexp_R(g, ξ, t): deterministic
/// parts within tolerance, stochastic parts identical.
RepresentationReport verify_representation_on_R(const ExpectationOracle& oracle, const Generator& g,
                                                std::span<const std::pair<RTerminal, double>> samples,
                                                double tolerance = 1e-8);

enum class OrderVerdict { equal, g_dominates, f_dominates, incomparable };
std::string_view to_string(OrderVerdict v) noexcept;

struct OrderWitness {
    double t = 0.0;
    MatrixZ z;
    double g_value = 0.0;
    double f_value = 0.0;
};

struct ConverseReport {
    OrderVerdict generator_verdict = OrderVerdict::equal;
    OrderVerdict expectation_verdict = OrderVerdict::equal;
    std::vector<OrderWitness> g_below_f;  ///< generator level, interior nodes
    std::vector<OrderWitness> f_below_g;
    std::size_t expectation_samples = 0;
    double tolerance = 0.0;
    [[nodiscard]] bool consistent() const noexcept { return generator_verdict == expectation_verdict; }
};

/// Recovers both generators (scalar case) on the grid, orders them at the
/// interior nodes, and repeats the comparison on E-values of z(B_{t_{i+1}} − B_{t_i})
/// at time 0 for every step and z.
ConverseReport converse_compare(const ExpectationOracle& oracle_g, const ExpectationOracle& oracle_f,
                                const TimeGrid& grid, std::span<const MatrixZ> z_set, double tolerance = 1e-9);

/// CSV with header t, z_index, z…, g… .
void write_generator_csv(std::ostream& out, const GeneratorTable& table);
GeneratorTable read_generator_csv(std::istream& in);

}  // namespace gexp
