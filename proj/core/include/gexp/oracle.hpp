#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gexp/generator.hpp"
#include "gexp/solver.hpp"
#include "gexp/types.hpp"

namespace gexp {

/// Assumptions an oracle declares about itself.
struct OracleFlags {
    bool independent_increments = true;  ///< E[z(B_T − B_t) | F_t] is deterministic
    bool translation = true;             ///< E[ξ + η | F_t] = E[ξ | F_t] + η for F_t-measurable η
    bool pathwise = false;               ///< conditional values are defined path by path (0-1 law checkable)
};

/// A filtration-consistent expectation evaluated on R. Implementations must
/// be pure: the same (ξ, t) always yields the same value.
class ExpectationOracle {
public:
    virtual ~ExpectationOracle() = default;

    [[nodiscard]] virtual RConditionalValue eval_R(const RTerminal& xi, double t) const = 0;
    [[nodiscard]] virtual OracleFlags flags() const = 0;
    [[nodiscard]] virtual Eigen::Index n() const = 0;
    [[nodiscard]] virtual Eigen::Index d() const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
    /// False for table-backed oracles that only know G on a fixed grid.
    [[nodiscard]] virtual bool arbitrary_times() const { return true; }
};

/// E^g on R through the closed form.
class GExpectationOracle final : public ExpectationOracle {
public:
    GExpectationOracle(Generator g, Eigen::Index n = 1, Eigen::Index d = 1, QuadratureOptions quad = {});

    [[nodiscard]] RConditionalValue eval_R(const RTerminal& xi, double t) const override;
    [[nodiscard]] OracleFlags flags() const override { return {}; }
    [[nodiscard]] Eigen::Index n() const override { return n_; }
    [[nodiscard]] Eigen::Index d() const override { return d_; }
    [[nodiscard]] std::string name() const override { return "gexp:" + g_.name(); }
    [[nodiscard]] const Generator& generator() const noexcept { return g_; }

private:
    Generator g_;
    Eigen::Index n_;
    Eigen::Index d_;
    QuadratureOptions quad_;
};

enum class FaultMode {
    all_times,  ///< offset added at every t
    at_zero,    ///< offset added only to evaluations at t = 0
};

/// Wraps an oracle and adds a constant to the deterministic part of every
/// non-constant terminal. Constants pass through untouched.
class FaultOracle final : public ExpectationOracle {
public:
    FaultOracle(std::shared_ptr<const ExpectationOracle> base, double offset, FaultMode mode);

    [[nodiscard]] RConditionalValue eval_R(const RTerminal& xi, double t) const override;
    [[nodiscard]] OracleFlags flags() const override { return base_->flags(); }
    [[nodiscard]] Eigen::Index n() const override { return base_->n(); }
    [[nodiscard]] Eigen::Index d() const override { return base_->d(); }
    [[nodiscard]] std::string name() const override;
    [[nodiscard]] bool arbitrary_times() const override { return base_->arbitrary_times(); }

private:
    std::shared_ptr<const ExpectationOracle> base_;
    double offset_;
    FaultMode mode_;
};

/// Samples G(t_i, z_j) = E[z_j B_{t_i}]; values[j][i] is an n-vector.
struct GFunction {
    TimeGrid grid;
    std::vector<MatrixZ> z;
    std::vector<std::vector<Vector>> values;

    [[nodiscard]] Eigen::Index n() const { return z.front().rows(); }
    [[nodiscard]] Eigen::Index d() const { return z.front().cols(); }
    /// Index of an exactly matching z sample.
    [[nodiscard]] std::optional<std::size_t> find_z(const MatrixZ& zz) const;
    /// G(t, z_j) by linear interpolation in t.
    [[nodiscard]] Vector at(double t, std::size_t j) const;
};

/// Plug-in oracle built from G samples:
///   E[y + z(B_v − B_u) | F_t] = y + G(v,z) − G(min(max(t,u),v), z) + z(B_{min(max(t,u),v)} − B_u).
/// Only terminals whose z is one of the sampled values can be evaluated.
class TableOracle final : public ExpectationOracle {
public:
    explicit TableOracle(GFunction table, std::string label = "table");

    [[nodiscard]] RConditionalValue eval_R(const RTerminal& xi, double t) const override;
    [[nodiscard]] OracleFlags flags() const override { return {}; }
    [[nodiscard]] Eigen::Index n() const override { return table_.n(); }
    [[nodiscard]] Eigen::Index d() const override { return table_.d(); }
    [[nodiscard]] std::string name() const override { return label_; }
    [[nodiscard]] bool arbitrary_times() const override { return false; }
    [[nodiscard]] const GFunction& table() const noexcept { return table_; }

private:
    GFunction table_;
    std::string label_;
};

/// CSV with header t, z…, G… (z entries row-major, n·d of them; n G columns).
GFunction read_G_csv(std::istream& in);
GFunction read_G_csv_file(const std::string& path);
void write_G_csv(std::ostream& out, const GFunction& G);

}  // namespace gexp
