#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "gexp/types.hpp"

namespace gexp {

/// Name of the normal sampler compiled into this build; recorded in reports.
inline constexpr std::string_view kNormalSampler = "box-muller/splitmix64-counter";

/// Counter-based standard normal keyed by (seed, path, index). Pure function.
double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t index) noexcept;

struct SimulationOptions {
    unsigned threads = 1;
    std::size_t memory_budget_bytes = std::size_t{1} << 30;
};

/// M Brownian paths on a grid, stored as increments B_{t_{i+1}} − B_{t_i}.
class PathBatch {
public:
    PathBatch(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed, std::vector<double> increments);

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t paths() const noexcept { return paths_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// d-vector increment of `path` over step `step`.
    [[nodiscard]] Eigen::Map<const Vector> increment(std::size_t path, std::size_t step) const {
        return {increments_.data() + (path * grid_.steps() + step) * dim_, static_cast<Eigen::Index>(dim_)};
    }
    /// B_{t_b} − B_{t_a} for node indices a ≤ b.
    [[nodiscard]] Vector increment_between(std::size_t path, std::size_t a, std::size_t b) const;
    /// B at node i (B_0 = 0).
    [[nodiscard]] Vector position(std::size_t path, std::size_t node) const { return increment_between(path, 0, node); }

    [[nodiscard]] std::span<const double> raw() const noexcept { return increments_; }

private:
    TimeGrid grid_;
    std::size_t paths_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<double> increments_;
};

/// Fills paths in parallel chunks; every normal is keyed by (seed, path,
/// step·d + component), so the batch does not depend on `threads`.
PathBatch simulate(const TimeGrid& grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
                   const SimulationOptions& options = {});

/// Realizations y + z(B_v − B_u), one row per path (M × n). u and v must be
/// grid nodes; use snap_to_grid first otherwise.
Eigen::MatrixXd evaluate_terminal(const PathBatch& batch, const RTerminal& xi);

/// First component of evaluate_terminal, for scalar terminals.
std::vector<double> evaluate_scalar_terminal(const PathBatch& batch, const RTerminal& xi);

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;  ///< sample std (M−1 denominator) / √M
    std::size_t samples = 0;
};

/// Pairwise (tree) summation; order fixed by the input order only.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error of transform(value). Non-finite transformed
/// values raise non-finite-sample with the bad count as detail.
MCEstimate mc_mean(std::span<const double> values, const std::function<double(double)>& transform = {});

/// Seed from GEXPECT_SEED when set (decimal, 64-bit), else `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback);

}  // namespace gexp
