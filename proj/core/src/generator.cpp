#include "gexp/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace gexp {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::declared_metadata_violation: return "declared-metadata-violation";
        case ErrorCode::resource_limit: return "resource-limit";
        case ErrorCode::off_grid_time: return "off-grid-time";
        case ErrorCode::non_finite_sample: return "non-finite-sample";
        case ErrorCode::unsupported_generator: return "unsupported-generator";
        case ErrorCode::tolerance_not_reached: return "tolerance-not-reached";
        case ErrorCode::grid_too_coarse: return "grid-too-coarse";
        case ErrorCode::oracle_contract_violation: return "oracle-contract-violation";
        case ErrorCode::contraction_failure: return "contraction-failure";
        case ErrorCode::slow_convergence: return "slow-convergence";
        case ErrorCode::precondition_violation: return "precondition-violation";
        case ErrorCode::metadata_violation: return "metadata-violation";
        case ErrorCode::equivalence_violation: return "equivalence-violation";
        case ErrorCode::parse_error: return "parse-error";
    }
    return "unknown";
}

double Generator::rho(double radius) const {
    require(traits_.rho.has_value(), ErrorCode::unsupported_generator,
            "generator '" + name_ + "' declares no local Lipschitz modulus");
    return (*traits_.rho)(radius);
}

namespace {

Vector row_norms(const MatrixZ& z) { return z.matrix().rowwise().norm(); }

}  // namespace

Generator builtin_generator(GeneratorKind kind, const GeneratorParams& p) {
    GeneratorTraits tr;
    switch (kind) {
        case GeneratorKind::zero:
            tr.rho = [](double) { return 0.0; };
            return Generator("zero", [](double, const Vector& y, const MatrixZ&) { return Vector::Zero(y.size()); },
                             tr);
        case GeneratorKind::linear_drift:
        case GeneratorKind::negative_drift: {
            require(p.mu >= 0.0, ErrorCode::invalid_argument, "mu must be nonnegative");
            const double mu = p.mu;
            const double sign = kind == GeneratorKind::linear_drift ? 1.0 : -1.0;
            tr.rho = [mu](double) { return mu; };
            std::ostringstream name;
            name << (sign > 0 ? "linear:mu=" : "negdrift:mu=") << mu;
            return Generator(name.str(),
                             [mu, sign](double, const Vector&, const MatrixZ& z) -> Vector {
                                 return sign * mu * row_norms(z);
                             },
                             tr);
        }
        case GeneratorKind::quadratic: {
            require(p.nu >= 0.0, ErrorCode::invalid_argument, "nu must be nonnegative");
            const double nu = p.nu;
            const double gamma = p.gamma;
            tr.rho = [nu](double r) { return 2.0 * nu * r; };
            tr.zero_at_zero = gamma == 0.0;
            std::ostringstream name;
            name << "quadratic:nu=" << nu << ",gamma=" << gamma;
            return Generator(name.str(),
                             [nu, gamma](double, const Vector&, const MatrixZ& z) -> Vector {
                                 const Vector r = row_norms(z);
                                 return (nu * r.array().square() + gamma).matrix();
                             },
                             tr);
        }
        case GeneratorKind::scaled_component: {
            require(!p.scales.empty(), ErrorCode::invalid_argument, "scaled_component needs per-row scales");
            double cmax = 0.0;
            for (double c : p.scales) {
                require(c >= 0.0, ErrorCode::invalid_argument, "row scales must be nonnegative");
                cmax = std::max(cmax, c);
            }
            const Vector c = Eigen::Map<const Vector>(p.scales.data(), static_cast<Eigen::Index>(p.scales.size()));
            tr.rho = [cmax](double) { return cmax; };
            return Generator("scaled",
                             [c](double, const Vector&, const MatrixZ& z) -> Vector {
                                 require(z.rows() == c.size(), ErrorCode::invalid_argument,
                                         "scaled generator row count mismatch");
                                 return (c.array() * row_norms(z).array()).matrix();
                             },
                             tr);
        }
        case GeneratorKind::time_scaled: {
            require(p.a >= 0.0, ErrorCode::invalid_argument, "time scale a must be nonnegative");
            const double a = p.a;
            const double horizon = p.horizon;
            tr.rho = [a, horizon](double) { return a * horizon; };
            std::ostringstream name;
            name << "timescaled:a=" << a;
            return Generator(name.str(),
                             [a](double t, const Vector&, const MatrixZ& z) -> Vector { return a * t * row_norms(z); },
                             tr);
        }
        case GeneratorKind::linear_in_y: {
            const double a = p.a;
            tr.mu = std::abs(a);
            tr.rho = [](double) { return 0.0; };
            tr.y_independent = a == 0.0;
            tr.zero_at_zero = a == 0.0;
            std::ostringstream name;
            name << "lineary:a=" << a;
            return Generator(name.str(), [a](double, const Vector& y, const MatrixZ&) -> Vector { return a * y; },
                             tr);
        }
    }
    throw Error(ErrorCode::invalid_argument, "unknown generator kind");
}

Generator negated(const Generator& g) {
    return Generator("-" + g.name(),
                     [g](double t, const Vector& y, const MatrixZ& z) -> Vector { return -g(t, y, z); },
                     g.traits());
}

ValidationReport validate_generator(const Generator& g, Eigen::Index n, Eigen::Index d, double horizon,
                                    std::size_t samples, std::uint64_t seed) {
    ValidationReport rep;
    rep.samples = samples;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> time(0.0, horizon);
    const auto& tr = g.traits();
    auto rand_vec = [&](double scale) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * unit(rng);
        return v;
    };
    auto rand_z = [&](double scale) {
        Eigen::MatrixXd m(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j) m(i, j) = scale * unit(rng);
        return MatrixZ(std::move(m));
    };
    auto note = [&](std::string what, std::size_t i) {
        if (rep.violations.size() < 20) rep.violations.push_back(std::move(what) + " at sample " + std::to_string(i));
    };
    const double slack = 1e-12;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = time(rng);
        const double scale = std::pow(10.0, 2.0 * std::abs(unit(rng)) - 1.0);  // radii in [0.1, 10]
        const Vector y1 = rand_vec(scale), y2 = rand_vec(scale);
        const MatrixZ z1 = rand_z(scale), z2 = rand_z(scale);
        const Vector g11 = g(t, y1, z1);
        if (!g11.allFinite()) note("non-finite value", i);
        if (tr.zero_at_zero) {
            const Vector g0 = g(t, y1, MatrixZ::zero(n, d));
            if (!g0.isZero(0.0)) note("g(t,y,0) != 0", i);
        }
        const Vector g21 = g(t, y2, z1);
        if (tr.y_independent && g11 != g21) note("value depends on y", i);
        const double ydiff = (g11 - g21).norm();
        const double ybound = tr.mu * (y1 - y2).norm();
        if (ydiff > ybound + slack * (1.0 + ybound)) note("Lipschitz-in-y bound mu exceeded", i);
        if (tr.rho) {
            const Vector g12 = g(t, y1, z2);
            const double zdiff = (g11 - g12).norm();
            const double zbound = (*tr.rho)(std::max(z1.norm(), z2.norm())) * (z1 - z2).norm();
            if (zdiff > zbound + slack * (1.0 + zbound)) note("local Lipschitz-in-z modulus rho exceeded", i);
        }
    }
    return rep;
}

Generator custom_generator(std::string name, GeneratorFn fn, GeneratorTraits traits, Eigen::Index n, Eigen::Index d,
                           double horizon, std::uint64_t seed) {
    Generator g(std::move(name), std::move(fn), std::move(traits));
    const auto rep = validate_generator(g, n, d, horizon, 1000, seed);
    if (!rep.ok()) throw Error(ErrorCode::declared_metadata_violation, g.name() + ": " + rep.violations.front());
    return g;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        const std::string item = text.substr(pos, end - pos);
        if (!item.empty()) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0)
                throw ParseError("expected key=value, got '" + item + "'", 1, pos + 1);
            out[item.substr(0, eq)] = item.substr(eq + 1);
        }
        pos = end + 1;
    }
    return out;
}

double key_value_number(const std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw ParseError("parameter '" + key + "' is not a number: '" + it->second + "'", 1, 1);
    }
}

Generator parse_generator(const std::string& spec, double horizon) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const auto kv = parse_key_values(colon == std::string::npos ? std::string() : spec.substr(colon + 1));
    GeneratorParams p;
    p.horizon = horizon;
    p.mu = key_value_number(kv, "mu", 0.0);
    p.nu = key_value_number(kv, "nu", 0.0);
    p.gamma = key_value_number(kv, "gamma", 0.0);
    p.a = key_value_number(kv, "a", 0.0);
    const bool neg = key_value_number(kv, "neg", 0.0) != 0.0;
    Generator g = [&]() {
        if (kind == "zero") return builtin_generator(GeneratorKind::zero, p);
        if (kind == "linear") return builtin_generator(GeneratorKind::linear_drift, p);
        if (kind == "negdrift") return builtin_generator(GeneratorKind::negative_drift, p);
        if (kind == "quadratic") return builtin_generator(GeneratorKind::quadratic, p);
        if (kind == "timescaled") return builtin_generator(GeneratorKind::time_scaled, p);
        if (kind == "lineary") return builtin_generator(GeneratorKind::linear_in_y, p);
        if (kind == "scaled") {
            const auto it = kv.find("c");
            if (it == kv.end()) throw ParseError("scaled generator needs c=c1;c2;...", 1, colon + 1);
            std::stringstream ss(it->second);
            std::string item;
            while (std::getline(ss, item, ';')) p.scales.push_back(key_value_number({{"c", item}}, "c", 0.0));
            return builtin_generator(GeneratorKind::scaled_component, p);
        }
        throw ParseError("unknown generator kind '" + kind + "'", 1, 1);
    }();
    return neg ? negated(g) : g;
}

}  // namespace gexp
