#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gexp/error.hpp"

namespace gexp {

using Vector = Eigen::VectorXd;

/// Strictly increasing time nodes 0 = t_0 < ... < t_N = T.
class TimeGrid {
public:
    /// Validates: first node 0, strictly increasing, at least two nodes.
    explicit TimeGrid(std::vector<double> points);

    [[nodiscard]] double horizon() const noexcept { return points_.back(); }
    [[nodiscard]] std::size_t steps() const noexcept { return points_.size() - 1; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return points_[i]; }
    [[nodiscard]] double step(std::size_t i) const { return points_[i + 1] - points_[i]; }
    [[nodiscard]] std::span<const double> points() const noexcept { return points_; }

    /// Index of the node equal to `t` (within 1e-12 relative to T), if any.
    [[nodiscard]] std::optional<std::size_t> find(double t) const noexcept;

    /// Index of the step [t_i, t_{i+1}] containing t; t = T maps to the last step.
    [[nodiscard]] std::size_t locate(double t) const noexcept;

    /// Every step split into `factor` equal sub-steps.
    [[nodiscard]] TimeGrid refined(std::size_t factor = 2) const;

    /// Union with extra nodes inside (0, T]; nodes closer than 1e-12·T to an
    /// existing one are merged into it.
    [[nodiscard]] TimeGrid with_nodes(std::span<const double> extra) const;

    /// Restriction to [0, t] (t must be a node).
    [[nodiscard]] TimeGrid truncated(double t) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    std::vector<double> points_;
};

/// N+1 equally spaced nodes on [0, T]; the last node is exactly T.
TimeGrid make_uniform_grid(double horizon, std::size_t steps);

struct SnapResult {
    double time;
    std::size_t index;
    double rounding_error;
};

/// Nearest grid node to `t` and the distance moved.
SnapResult snap_to_grid(const TimeGrid& grid, double t);

/// An n×d real matrix in the z-slot of a generator; |z| is the Frobenius norm.
class MatrixZ {
public:
    MatrixZ() : m_(Eigen::MatrixXd::Zero(1, 1)) {}
    explicit MatrixZ(Eigen::MatrixXd m) : m_(std::move(m)) {}
    /// 1×1 convenience.
    static MatrixZ scalar(double z) { return MatrixZ(Eigen::MatrixXd::Constant(1, 1, z)); }
    static MatrixZ zero(Eigen::Index n, Eigen::Index d) { return MatrixZ(Eigen::MatrixXd::Zero(n, d)); }

    [[nodiscard]] Eigen::Index rows() const noexcept { return m_.rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return m_.cols(); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    [[nodiscard]] double norm() const { return m_.norm(); }
    [[nodiscard]] bool is_zero() const { return m_.isZero(0.0); }

    /// z·w for a d-vector w (a Brownian increment).
    [[nodiscard]] Vector apply(const Eigen::Ref<const Eigen::VectorXd>& w) const { return m_ * w; }

    MatrixZ operator+(const MatrixZ& o) const { return MatrixZ(m_ + o.m_); }
    MatrixZ operator-(const MatrixZ& o) const { return MatrixZ(m_ - o.m_); }
    MatrixZ operator-() const { return MatrixZ(-m_); }
    friend MatrixZ operator*(double k, const MatrixZ& z) { return MatrixZ(k * z.m_); }
    friend bool operator==(const MatrixZ& a, const MatrixZ& b) {
        return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
    }

private:
    Eigen::MatrixXd m_;
};

/// norm_bound(z) = |z|.
inline double norm_bound(const MatrixZ& z) { return z.norm(); }

/// Deterministic piecewise-constant z-process: value z_i on [t_i, t_{i+1}),
/// the last value also held at T.
class StepProcess {
public:
    StepProcess(std::vector<double> breakpoints, std::vector<MatrixZ> values);

    /// z on [0, T].
    static StepProcess constant(double horizon, MatrixZ z);
    /// z·1_{[u,v]}, zero elsewhere. Degenerate u = v gives the zero process.
    static StepProcess window(double horizon, double u, double v, const MatrixZ& z);

    [[nodiscard]] const MatrixZ& at(double t) const;
    /// Value on the open interval (a, b), which must not straddle a breakpoint.
    [[nodiscard]] const MatrixZ& on(double a, double b) const { return at(0.5 * (a + b)); }
    [[nodiscard]] double horizon() const noexcept { return breaks_.back(); }
    [[nodiscard]] std::span<const double> breakpoints() const noexcept { return breaks_; }
    [[nodiscard]] std::span<const MatrixZ> values() const noexcept { return values_; }
    [[nodiscard]] double sup_norm() const;

private:
    std::vector<double> breaks_;
    std::vector<MatrixZ> values_;
};

/// y + z(B_v − B_u) with 0 ≤ u ≤ v ≤ T and |z| ≤ k.
struct RTerminal {
    Vector y;
    MatrixZ z;
    double u = 0.0;
    double v = 0.0;
    double k = 0.0;

    RTerminal(Vector y_, MatrixZ z_, double u_, double v_, std::optional<double> bound = std::nullopt);

    static RTerminal constant(Vector y, Eigen::Index d = 1);
    static RTerminal scalar(double y, double z, double u, double v) {
        return RTerminal(Vector::Constant(1, y), MatrixZ::scalar(z), u, v);
    }

    [[nodiscard]] bool is_constant() const { return u == v || z.is_zero(); }
    [[nodiscard]] Eigen::Index n() const noexcept { return y.size(); }
    [[nodiscard]] Eigen::Index d() const noexcept { return z.cols(); }
};

}  // namespace gexp
