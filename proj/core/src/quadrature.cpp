#include "gexp/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace gexp {

namespace {

struct Panel {
    double a, m, b;
    Vector fa, fm, fb;
    Vector whole;
};

Vector simpson(double a, double b, const Vector& fa, const Vector& fm, const Vector& fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

Vector adapt(const VectorIntegrand& f, const Panel& p, double tol, int depth) {
    const double lm = 0.5 * (p.a + p.m);
    const double rm = 0.5 * (p.m + p.b);
    const Vector flm = f(lm);
    const Vector frm = f(rm);
    const Vector left = simpson(p.a, p.m, p.fa, flm, p.fm);
    const Vector right = simpson(p.m, p.b, p.fm, frm, p.fb);
    const Vector delta = left + right - p.whole;
    if (depth <= 0 || delta.lpNorm<Eigen::Infinity>() <= 15.0 * tol) return left + right + delta / 15.0;
    return adapt(f, {p.a, lm, p.m, p.fa, flm, p.fm, left}, 0.5 * tol, depth - 1) +
           adapt(f, {p.m, rm, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth - 1);
}

Vector integrate_piece(const VectorIntegrand& f, double a, double b, const QuadratureOptions& opt) {
    const double m = 0.5 * (a + b);
    const Vector fa = f(a), fm = f(m), fb = f(b);
    const Vector whole = simpson(a, b, fa, fm, fb);
    return adapt(f, {a, m, b, fa, fm, fb, whole}, opt.tolerance, opt.max_depth);
}

}  // namespace

Vector integrate(const VectorIntegrand& f, double a, double b, std::span<const double> breakpoints,
                 const QuadratureOptions& options) {
    if (!(b > a)) {
        return Vector::Zero(f(a).size());
    }
    std::vector<double> cuts{a};
    for (double t : breakpoints)
        if (t > a && t < b) cuts.push_back(t);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    const double per_piece_tol = options.tolerance / static_cast<double>(cuts.size() - 1);
    QuadratureOptions opt = options;
    opt.tolerance = per_piece_tol;
    Vector total = integrate_piece(f, cuts[0], cuts[1], opt);
    for (std::size_t i = 1; i + 1 < cuts.size(); ++i) total += integrate_piece(f, cuts[i], cuts[i + 1], opt);
    return total;
}

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        std::span<const double> breakpoints, const QuadratureOptions& options) {
    return integrate([&f](double t) { return Vector::Constant(1, f(t)); }, a, b, breakpoints, options)[0];
}

std::vector<double> tail_integrals(const TimeGrid& grid, std::span<const double> samples) {
    require(samples.size() == grid.size(), ErrorCode::invalid_argument, "one sample per grid node expected");
    const std::size_t n = grid.size();
    std::vector<double> tail(n, 0.0);
    if (n == 2) {
        tail[0] = 0.5 * grid.step(0) * (samples[0] + samples[1]);
        return tail;
    }
    // Two-point Gauss–Legendre integrates the local interpolant exactly.
    const double g = 0.5 / std::sqrt(3.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        const std::size_t width = std::min<std::size_t>(4, n);
        std::size_t first = (i >= 1) ? i - 1 : 0;
        if (first + width > n) first = n - width;
        const double a = grid[i];
        const double b = grid[i + 1];
        double piece = 0.0;
        for (double x : {0.5 * (a + b) - g * (b - a), 0.5 * (a + b) + g * (b - a)}) {
            double value = 0.0;
            for (std::size_t j = first; j < first + width; ++j) {
                double basis = 1.0;
                for (std::size_t m = first; m < first + width; ++m)
                    if (m != j) basis *= (x - grid[m]) / (grid[j] - grid[m]);
                value += basis * samples[j];
            }
            piece += 0.5 * (b - a) * value;
        }
        tail[i] = tail[i + 1] + piece;
    }
    return tail;
}

std::vector<double> cumulative_trapezoid(const TimeGrid& grid, std::span<const double> samples) {
    require(samples.size() == grid.size(), ErrorCode::invalid_argument, "one sample per grid node expected");
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i)
        out[i] = out[i - 1] + 0.5 * grid.step(i - 1) * (samples[i - 1] + samples[i]);
    return out;
}

}  // namespace gexp
