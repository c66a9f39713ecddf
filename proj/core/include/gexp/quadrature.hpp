#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gexp/types.hpp"

namespace gexp {

using VectorIntegrand = std::function<Vector(double)>;

struct QuadratureOptions {
    double tolerance = 1e-10;
    int max_depth = 40;
};

/// Adaptive Simpson over [a, b], split first at every breakpoint inside
/// (a, b). Returns the integral; a ≥ b integrates to zero length.
Vector integrate(const VectorIntegrand& f, double a, double b, std::span<const double> breakpoints = {},
                 const QuadratureOptions& options = {});

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        std::span<const double> breakpoints = {}, const QuadratureOptions& options = {});

/// ∫_{t_i}^{T} f for every node of `grid`, integrating the cubic through
/// the four nearest samples on each step (exact for cubics; fourth order).
std::vector<double> tail_integrals(const TimeGrid& grid, std::span<const double> samples);

/// Cumulative trapezoid ∫_0^{t_i} f.
std::vector<double> cumulative_trapezoid(const TimeGrid& grid, std::span<const double> samples);

}  // namespace gexp
