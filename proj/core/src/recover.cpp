#include "gexp/recover.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "gexp/quadrature.hpp"

namespace gexp {

namespace detail {
void write_indexed_table(std::ostream& out, const TimeGrid& grid, const std::vector<MatrixZ>& z,
                         const std::vector<std::vector<Vector>>& values);
void read_indexed_table(std::istream& in, std::vector<double>& times, std::vector<MatrixZ>& z,
                        std::vector<std::vector<Vector>>& values);
}  // namespace detail

GFunction sample_G(const ExpectationOracle& oracle, const TimeGrid& grid, std::span<const MatrixZ> z_set) {
    const OracleFlags flags = oracle.flags();
    if (!flags.independent_increments || !flags.translation) {
        throw Error(ErrorCode::precondition_violation,
                    oracle.name() + " does not declare independent increments and translation invariance");
    }
    require(!z_set.empty(), ErrorCode::invalid_argument, "empty z sample set");
    GFunction G{grid, {z_set.begin(), z_set.end()}, {}};
    for (const MatrixZ& z : z_set) {
        require(z.rows() == oracle.n() && z.cols() == oracle.d(), ErrorCode::invalid_argument,
                "z sample has the wrong shape");
        std::vector<Vector> column;
        column.reserve(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const RTerminal xi(Vector::Zero(z.rows()), z, 0.0, grid[i]);
            const RConditionalValue value = oracle.eval_R(xi, 0.0);
            if (value.has_stochastic()) {
                throw Error(ErrorCode::oracle_contract_violation,
                            oracle.name() + " returned a stochastic part for an unconditional value at t = " +
                                std::to_string(grid[i]));
            }
            column.push_back(value.deterministic);
        }
        if (column.front().lpNorm<Eigen::Infinity>() > 1e-12) {
            throw Error(ErrorCode::oracle_contract_violation, oracle.name() + " has G(0, z) ≠ 0",
                        column.front().lpNorm<Eigen::Infinity>());
        }
        G.values.push_back(std::move(column));
    }
    return G;
}

std::vector<MatrixZ> z_sample_set(Eigen::Index n, Eigen::Index d, double k, std::size_t random_directions,
                                  std::uint64_t seed) {
    require(k > 0.0, ErrorCode::invalid_argument, "radius must be positive");
    std::vector<MatrixZ> out;
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
            for (double s : {-1.0, -0.5, 0.5, 1.0}) {
                Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, d);
                m(r, c) = s * k;
                out.emplace_back(m);
            }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> radius(0.0, 1.0);
    for (std::size_t i = 0; i < random_directions; ++i) {
        Eigen::MatrixXd m(n, d);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < d; ++c) m(r, c) = normal(rng);
        const double scale = k * radius(rng) / m.norm();
        out.emplace_back(scale * m);
    }
    return out;
}

std::optional<std::size_t> GeneratorTable::find_z(const MatrixZ& zz) const {
    for (std::size_t j = 0; j < z.size(); ++j)
        if (z[j] == zz) return j;
    return std::nullopt;
}

bool GeneratorTable::any_irregular() const {
    return std::any_of(endpoint_irregular.begin(), endpoint_irregular.end(),
                       [](const auto& p) { return p.first || p.second; });
}

namespace {

/// Derivative at x of the quadratic through (x0,f0), (x1,f1), (x2,f2).
Vector quadratic_slope(double x0, double x1, double x2, const Vector& f0, const Vector& f1, const Vector& f2,
                       double x) {
    const double l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    const double l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    const double l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    return l0 * f0 + l1 * f1 + l2 * f2;
}

std::vector<Vector> differentiate(const TimeGrid& grid, const std::vector<Vector>& G, EndStencil ends) {
    const std::size_t N = grid.steps();
    std::vector<Vector> g(grid.size());
    for (std::size_t i = 1; i < N; ++i)
        g[i] = quadratic_slope(grid[i - 1], grid[i], grid[i + 1], G[i - 1], G[i], G[i + 1], grid[i]);
    if (ends == EndStencil::second_order) {
        g[0] = quadratic_slope(grid[0], grid[1], grid[2], G[0], G[1], G[2], grid[0]);
        g[N] = quadratic_slope(grid[N - 2], grid[N - 1], grid[N], G[N - 2], G[N - 1], G[N], grid[N]);
    } else {
        g[0] = (G[1] - G[0]) / grid.step(0);
        g[N] = (G[N] - G[N - 1]) / grid.step(N - 1);
    }
    return g;
}

std::pair<bool, bool> irregular_ends(const std::vector<Vector>& g, double factor) {
    const std::size_t N = g.size() - 1;
    std::vector<double> diffs(N);
    double scale = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        diffs[i] = (g[i + 1] - g[i]).lpNorm<Eigen::Infinity>();
        scale = std::max(scale, g[i].lpNorm<Eigen::Infinity>());
    }
    scale = std::max(scale, g[N].lpNorm<Eigen::Infinity>());
    std::vector<double> interior(diffs.begin() + 2, diffs.end() - 2);
    double median = 0.0;
    if (!interior.empty()) {
        auto mid = interior.begin() + static_cast<std::ptrdiff_t>(interior.size() / 2);
        std::nth_element(interior.begin(), mid, interior.end());
        median = *mid;
    }
    const double threshold = factor * median + 1e-9 * (1.0 + scale);
    return {std::max(diffs[0], diffs[1]) > threshold, std::max(diffs[N - 1], diffs[N - 2]) > threshold};
}

}  // namespace

GeneratorTable recover_generator(const GFunction& G, const RecoverOptions& options) {
    require(G.grid.steps() >= 4, ErrorCode::invalid_argument, "recovery needs at least 4 grid steps");
    GeneratorTable table{G.grid, G.z, {}, {}, false};
    for (const auto& column : G.values) {
        table.g.push_back(differentiate(G.grid, column, options.ends));
        table.endpoint_irregular.push_back(irregular_ends(table.g.back(), options.irregularity_factor));
    }
    return table;
}

GeneratorTable recover_generator_richardson(const ExpectationOracle& oracle, const TimeGrid& grid,
                                            std::span<const MatrixZ> z_set, const RecoverOptions& options) {
    if (!oracle.arbitrary_times()) {
        throw Error(ErrorCode::precondition_violation, oracle.name() + " only answers on its own time grid");
    }
    const GeneratorTable coarse = recover_generator(sample_G(oracle, grid, z_set), options);
    const GeneratorTable fine = recover_generator(sample_G(oracle, grid.refined(2), z_set), options);
    GeneratorTable out = coarse;
    out.richardson = true;
    for (std::size_t j = 0; j < out.g.size(); ++j) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            out.g[j][i] = (4.0 * fine.g[j][2 * i] - coarse.g[j][i]) / 3.0;
        out.endpoint_irregular[j] = irregular_ends(out.g[j], options.irregularity_factor);
    }
    return out;
}

RoundtripReport roundtrip_necessity(const GFunction& G, const GeneratorTable& table, double tolerance) {
    require(G.grid == table.grid && G.z.size() == table.z.size(), ErrorCode::invalid_argument,
            "table and G samples must share grid and z set");
    RoundtripReport report;
    report.tolerance = tolerance;
    report.endpoint_irregular = table.any_irregular();
    std::vector<double> samples(G.grid.size());
    for (std::size_t j = 0; j < G.z.size(); ++j) {
        double worst = 0.0;
        for (Eigen::Index r = 0; r < G.n(); ++r) {
            for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = table.g[j][i][r];
            const std::vector<double> integral = cumulative_trapezoid(G.grid, samples);
            for (std::size_t i = 0; i < samples.size(); ++i)
                worst = std::max(worst, std::abs(integral[i] - G.values[j][i][r]));
        }
        report.discrepancy.push_back(worst);
        report.max_discrepancy = std::max(report.max_discrepancy, worst);
    }
    return report;
}

Generator table_generator(const GeneratorTable& table, std::string name) {
    auto data = std::make_shared<const GeneratorTable>(table);
    GeneratorTraits traits;
    traits.time_breakpoints.assign(table.grid.points().begin() + 1, table.grid.points().end() - 1);
    auto fn = [data](double t, const Vector&, const MatrixZ& z) -> Vector {
        if (z.is_zero()) return Vector::Zero(z.rows());
        const auto j = data->find_z(z);
        if (!j) throw Error(ErrorCode::unsupported_generator, "z is outside the recovered sample set");
        const TimeGrid& grid = data->grid;
        const double tc = std::clamp(t, 0.0, grid.horizon());
        const std::size_t i = grid.locate(tc);
        const double s = (tc - grid[i]) / grid.step(i);
        return (1.0 - s) * data->g[*j][i] + s * data->g[*j][i + 1];
    };
    return {std::move(name), std::move(fn), std::move(traits)};
}

RepresentationReport verify_representation_on_R(const ExpectationOracle& oracle, const Generator& g,
                                                std::span<const std::pair<RTerminal, double>> samples,
                                                double tolerance) {
    RepresentationReport report;
    report.tolerance = tolerance;
    report.samples = samples.size();
    for (const auto& [xi, t] : samples) {
        const RConditionalValue lhs = oracle.eval_R(xi, t);
        const RConditionalValue rhs = cond_gexp_R(g, xi, t);
        bool mismatch = lhs.has_stochastic() != rhs.has_stochastic();
        if (!mismatch && lhs.has_stochastic()) {
            mismatch = !(lhs.coefficient == rhs.coefficient) || lhs.from != rhs.from || lhs.to != rhs.to;
        }
        const double gap = (lhs.deterministic - rhs.deterministic).lpNorm<Eigen::Infinity>();
        report.max_error = std::max(report.max_error, gap);
        if (mismatch || gap > tolerance) {
            report.failures.push_back({xi, t, lhs.deterministic, rhs.deterministic, gap, mismatch});
        }
    }
    return report;
}

std::string_view to_string(OrderVerdict v) noexcept {
    switch (v) {
        case OrderVerdict::equal: return "equal";
        case OrderVerdict::g_dominates: return "g_dominates";
        case OrderVerdict::f_dominates: return "f_dominates";
        case OrderVerdict::incomparable: return "incomparable";
    }
    return "unknown";
}

namespace {

OrderVerdict verdict_from(bool g_below, bool f_below) {
    if (g_below && f_below) return OrderVerdict::incomparable;
    if (g_below) return OrderVerdict::f_dominates;
    if (f_below) return OrderVerdict::g_dominates;
    return OrderVerdict::equal;
}

constexpr std::size_t kMaxWitnesses = 64;

}  // namespace

ConverseReport converse_compare(const ExpectationOracle& oracle_g, const ExpectationOracle& oracle_f,
                                const TimeGrid& grid, std::span<const MatrixZ> z_set, double tolerance) {
    require(oracle_g.n() == 1 && oracle_f.n() == 1, ErrorCode::invalid_argument,
            "converse comparison is for scalar expectations");
    const GeneratorTable tg = recover_generator(sample_G(oracle_g, grid, z_set));
    const GeneratorTable tf = recover_generator(sample_G(oracle_f, grid, z_set));
    ConverseReport report;
    report.tolerance = tolerance;
    bool g_below = false;
    bool f_below = false;
    for (std::size_t j = 0; j < z_set.size(); ++j) {
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const double a = tg.g[j][i][0];
            const double b = tf.g[j][i][0];
            if (a < b - tolerance) {
                g_below = true;
                if (report.g_below_f.size() < kMaxWitnesses) report.g_below_f.push_back({grid[i], z_set[j], a, b});
            } else if (b < a - tolerance) {
                f_below = true;
                if (report.f_below_g.size() < kMaxWitnesses) report.f_below_g.push_back({grid[i], z_set[j], a, b});
            }
        }
    }
    report.generator_verdict = verdict_from(g_below, f_below);

    bool eg_below = false;
    bool ef_below = false;
    for (const MatrixZ& z : z_set) {
        for (std::size_t i = 0; i < grid.steps(); ++i) {
            const RTerminal xi(Vector::Zero(1), z, grid[i], grid[i + 1]);
            const double eg = oracle_g.eval_R(xi, 0.0).deterministic[0];
            const double ef = oracle_f.eval_R(xi, 0.0).deterministic[0];
            const double per_time = (eg - ef) / grid.step(i);
            if (per_time < -tolerance) eg_below = true;
            if (per_time > tolerance) ef_below = true;
            ++report.expectation_samples;
        }
    }
    report.expectation_verdict = verdict_from(eg_below, ef_below);
    return report;
}

void write_generator_csv(std::ostream& out, const GeneratorTable& table) {
    detail::write_indexed_table(out, table.grid, table.z, table.g);
}

GeneratorTable read_generator_csv(std::istream& in) {
    std::vector<double> times;
    GeneratorTable table{TimeGrid({0.0, 1.0}), {}, {}, {}, false};
    detail::read_indexed_table(in, times, table.z, table.g);
    table.grid = TimeGrid(times);
    table.endpoint_irregular.assign(table.z.size(), {false, false});
    return table;
}

}  // namespace gexp
