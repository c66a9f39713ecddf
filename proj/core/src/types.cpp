#include "gexp/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gexp {

namespace {

double merge_tolerance(double horizon) { return 1e-12 * std::max(1.0, horizon); }

}  // namespace

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    require(points_.size() >= 2, ErrorCode::invalid_argument, "time grid needs at least two nodes");
    require(points_.front() == 0.0, ErrorCode::invalid_argument, "time grid must start at 0");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        require(std::isfinite(points_[i]) && points_[i] > points_[i - 1], ErrorCode::invalid_argument,
                "time grid must be strictly increasing (node " + std::to_string(i) + ")");
    }
}

std::optional<std::size_t> TimeGrid::find(double t) const noexcept {
    const double tol = merge_tolerance(horizon());
    const auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
    if (it != points_.end() && std::abs(*it - t) <= tol) return static_cast<std::size_t>(it - points_.begin());
    return std::nullopt;
}

std::size_t TimeGrid::locate(double t) const noexcept {
    if (t <= points_.front()) return 0;
    if (t >= points_.back()) return steps() - 1;
    const auto it = std::upper_bound(points_.begin(), points_.end(), t);
    return static_cast<std::size_t>(it - points_.begin()) - 1;
}

TimeGrid TimeGrid::refined(std::size_t factor) const {
    require(factor >= 1, ErrorCode::invalid_argument, "refinement factor must be positive");
    std::vector<double> out;
    out.reserve(steps() * factor + 1);
    for (std::size_t i = 0; i < steps(); ++i) {
        const double a = points_[i];
        const double h = step(i);
        for (std::size_t j = 0; j < factor; ++j) out.push_back(a + h * static_cast<double>(j) / static_cast<double>(factor));
    }
    out.push_back(points_.back());
    return TimeGrid(std::move(out));
}

TimeGrid TimeGrid::with_nodes(std::span<const double> extra) const {
    std::vector<double> merged(points_);
    const double tol = merge_tolerance(horizon());
    for (double t : extra) {
        require(t >= 0.0 && t <= horizon() + tol, ErrorCode::invalid_argument,
                "extra node " + std::to_string(t) + " outside [0, T]");
        if (!find(t)) merged.push_back(t);
    }
    std::sort(merged.begin(), merged.end());
    std::vector<double> out;
    out.reserve(merged.size());
    for (double t : merged) {
        if (out.empty() || t - out.back() > tol) out.push_back(t);
    }
    return TimeGrid(std::move(out));
}

TimeGrid TimeGrid::truncated(double t) const {
    const auto idx = find(t);
    require(idx.has_value() && *idx > 0, ErrorCode::off_grid_time, "truncation time must be a positive grid node");
    return TimeGrid(std::vector<double>(points_.begin(), points_.begin() + static_cast<std::ptrdiff_t>(*idx) + 1));
}

TimeGrid make_uniform_grid(double horizon, std::size_t steps) {
    require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::invalid_argument, "horizon must be positive");
    require(steps >= 1, ErrorCode::invalid_argument, "step count must be at least 1");
    std::vector<double> pts(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) pts[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
    pts.back() = horizon;
    return TimeGrid(std::move(pts));
}

SnapResult snap_to_grid(const TimeGrid& grid, double t) {
    const std::size_t i = grid.locate(t);
    const double left = grid[i];
    const double right = grid[i + 1];
    const std::size_t idx = (std::abs(t - left) <= std::abs(right - t)) ? i : i + 1;
    return {grid[idx], idx, std::abs(grid[idx] - t)};
}

StepProcess::StepProcess(std::vector<double> breakpoints, std::vector<MatrixZ> values)
    : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    require(breaks_.size() >= 2 && values_.size() + 1 == breaks_.size(), ErrorCode::invalid_argument,
            "step process needs l+2 breakpoints for l+1 values");
    require(breaks_.front() == 0.0, ErrorCode::invalid_argument, "step process must start at 0");
    for (std::size_t i = 1; i < breaks_.size(); ++i) {
        require(breaks_[i] > breaks_[i - 1], ErrorCode::invalid_argument, "step breakpoints must increase");
    }
    for (const auto& z : values_) {
        require(z.rows() == values_.front().rows() && z.cols() == values_.front().cols(),
                ErrorCode::invalid_argument, "step values must share one shape");
    }
}

StepProcess StepProcess::constant(double horizon, MatrixZ z) {
    return StepProcess({0.0, horizon}, {std::move(z)});
}

StepProcess StepProcess::window(double horizon, double u, double v, const MatrixZ& z) {
    require(0.0 <= u && u <= v && v <= horizon, ErrorCode::invalid_argument, "window needs 0 <= u <= v <= T");
    const MatrixZ zero = MatrixZ::zero(z.rows(), z.cols());
    if (u == v) return constant(horizon, zero);
    std::vector<double> br{0.0};
    std::vector<MatrixZ> vals;
    if (u > 0.0) {
        br.push_back(u);
        vals.push_back(zero);
    }
    vals.push_back(z);
    br.push_back(v);
    if (v < horizon) {
        vals.push_back(zero);
        br.push_back(horizon);
    }
    return StepProcess(std::move(br), std::move(vals));
}

const MatrixZ& StepProcess::at(double t) const {
    if (t >= breaks_.back()) return values_.back();
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - breaks_.begin() - 1, 0));
    return values_[std::min(idx, values_.size() - 1)];
}

double StepProcess::sup_norm() const {
    double m = 0.0;
    for (const auto& z : values_) m = std::max(m, z.norm());
    return m;
}

RTerminal::RTerminal(Vector y_, MatrixZ z_, double u_, double v_, std::optional<double> bound)
    : y(std::move(y_)), z(std::move(z_)), u(u_), v(v_), k(bound.value_or(z.norm())) {
    require(y.size() == z.rows(), ErrorCode::invalid_argument, "terminal y and z row counts differ");
    require(std::isfinite(u) && std::isfinite(v) && 0.0 <= u && u <= v, ErrorCode::invalid_argument,
            "terminal needs 0 <= u <= v");
    require(z.norm() <= k * (1.0 + 1e-15), ErrorCode::invalid_argument, "terminal |z| exceeds its bound k");
}

RTerminal RTerminal::constant(Vector y, Eigen::Index d) {
    const auto n = y.size();
    return RTerminal(std::move(y), MatrixZ::zero(n, d), 0.0, 0.0);
}

}  // namespace gexp
