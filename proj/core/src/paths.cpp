#include "gexp/paths.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numbers>
#include <thread>

namespace gexp {

namespace {

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t path, std::uint64_t counter) noexcept {
    const std::uint64_t key = mix64(seed ^ mix64(path + 0x632BE59BD9B4E019ULL));
    const std::uint64_t bits = mix64(key ^ mix64(counter));
    // (0, 1), never 0 so the logarithm below is finite.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t index) noexcept {
    const std::uint64_t pair = index >> 1;
    const double u1 = counter_uniform(seed, path, 2 * pair);
    const double u2 = counter_uniform(seed, path, 2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1U) ? r * std::sin(angle) : r * std::cos(angle);
}

PathBatch::PathBatch(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
                     std::vector<double> increments)
    : grid_(std::move(grid)), paths_(paths), dim_(dim), seed_(seed), increments_(std::move(increments)) {
    require(increments_.size() == paths_ * grid_.steps() * dim_, ErrorCode::invalid_argument,
            "increment array has the wrong size");
}

Vector PathBatch::increment_between(std::size_t path, std::size_t a, std::size_t b) const {
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t s = a; s < b; ++s) acc += increment(path, s);
    return acc;
}

PathBatch simulate(const TimeGrid& grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
                   const SimulationOptions& options) {
    require(paths >= 1, ErrorCode::invalid_argument, "path count must be at least 1");
    require(dim >= 1, ErrorCode::invalid_argument, "Brownian dimension must be at least 1");
    const std::size_t steps = grid.steps();
    const std::size_t per_path = steps * dim;
    const std::size_t budget = options.memory_budget_bytes / sizeof(double);
    if (per_path > budget / paths) {
        throw Error(ErrorCode::resource_limit, "M x N x d exceeds the memory budget of " +
                                                   std::to_string(options.memory_budget_bytes) + " bytes");
    }
    std::vector<double> scale(steps);
    for (std::size_t i = 0; i < steps; ++i) scale[i] = std::sqrt(grid.step(i));

    std::vector<double> inc(paths * per_path);
    auto fill = [&](std::size_t first, std::size_t last) {
        for (std::size_t p = first; p < last; ++p) {
            double* out = inc.data() + p * per_path;
            for (std::size_t s = 0; s < steps; ++s)
                for (std::size_t c = 0; c < dim; ++c)
                    out[s * dim + c] = scale[s] * counter_normal(seed, p, s * dim + c);
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, paths));
    if (workers == 1) {
        fill(0, paths);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (paths + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t a = w * chunk;
            const std::size_t b = std::min(paths, a + chunk);
            if (a < b) pool.emplace_back(fill, a, b);
        }
    }
    return PathBatch(grid, paths, dim, seed, std::move(inc));
}

namespace {

std::size_t node_index(const TimeGrid& grid, double t, const char* which) {
    const auto idx = grid.find(t);
    if (!idx) {
        throw Error(ErrorCode::off_grid_time,
                    std::string(which) + " = " + std::to_string(t) + " is not a grid node; snap it first");
    }
    return *idx;
}

}  // namespace

Eigen::MatrixXd evaluate_terminal(const PathBatch& batch, const RTerminal& xi) {
    require(xi.v <= batch.grid().horizon() * (1.0 + 1e-12), ErrorCode::invalid_argument, "terminal time beyond T");
    require(static_cast<std::size_t>(xi.d()) == batch.dim(), ErrorCode::invalid_argument,
            "terminal and batch Brownian dimensions differ");
    const std::size_t a = node_index(batch.grid(), xi.u, "u");
    const std::size_t b = node_index(batch.grid(), xi.v, "v");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(batch.paths()), xi.n());
    for (std::size_t p = 0; p < batch.paths(); ++p) {
        const auto row = static_cast<Eigen::Index>(p);
        if (xi.is_constant()) {
            out.row(row) = xi.y.transpose();
        } else {
            out.row(row) = (xi.y + xi.z.apply(batch.increment_between(p, a, b))).transpose();
        }
    }
    return out;
}

std::vector<double> evaluate_scalar_terminal(const PathBatch& batch, const RTerminal& xi) {
    const Eigen::MatrixXd m = evaluate_terminal(batch, xi);
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, 0);
    return out;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MCEstimate mc_mean(std::span<const double> values, const std::function<double(double)>& transform) {
    require(!values.empty(), ErrorCode::invalid_argument, "mc_mean needs at least one value");
    std::vector<double> x(values.begin(), values.end());
    if (transform) std::transform(x.begin(), x.end(), x.begin(), transform);
    const auto bad = static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double v) { return !std::isfinite(v); }));
    if (bad > 0) {
        throw Error(ErrorCode::non_finite_sample,
                    std::to_string(bad) + " of " + std::to_string(x.size()) + " samples are not finite",
                    static_cast<double>(bad));
    }
    const auto m = static_cast<double>(x.size());
    const double mean = pairwise_sum(x) / m;
    double se = 0.0;
    if (x.size() > 1) {
        for (double& v : x) v = (v - mean) * (v - mean);
        se = std::sqrt(pairwise_sum(x) / (m - 1.0) / m);
    }
    return {mean, se, x.size()};
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
    const char* raw = std::getenv("GEXPECT_SEED");
    if (raw == nullptr || *raw == '\0') return fallback;
    std::uint64_t value = 0;
    const char* end = raw + std::strlen(raw);
    const auto [ptr, ec] = std::from_chars(raw, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("GEXPECT_SEED must be a decimal 64-bit integer, got '" + std::string(raw) + "'", 1,
                         static_cast<std::size_t>(ptr - raw) + 1);
    }
    return value;
}

}  // namespace gexp
