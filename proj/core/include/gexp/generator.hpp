#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gexp/types.hpp"

namespace gexp {

/// Local Lipschitz modulus in z, as a function of the radius |z1| ∨ |z2|.
using Modulus = std::function<double(double radius)>;
using GeneratorFn = std::function<Vector(double t, const Vector& y, const MatrixZ& z)>;

/// Regularity metadata a generator declares about itself.
struct GeneratorTraits {
    double mu = 0.0;                  ///< Lipschitz constant in y
    std::optional<Modulus> rho;       ///< local Lipschitz modulus in z
    bool deterministic = true;
    bool y_independent = true;
    bool zero_at_zero = true;         ///< g(t, y, 0) = 0
    std::vector<double> time_breakpoints;  ///< kinks in t the quadrature should split at
};

/// A deterministic driver (t, y, z) ↦ g(t, y, z) ∈ R^n with declared metadata.
class Generator {
public:
    Generator(std::string name, GeneratorFn fn, GeneratorTraits traits)
        : name_(std::move(name)), fn_(std::move(fn)), traits_(std::move(traits)) {}

    [[nodiscard]] Vector operator()(double t, const Vector& y, const MatrixZ& z) const { return fn_(t, y, z); }
    /// Evaluation for y-independent generators (y = 0).
    [[nodiscard]] Vector of_z(double t, const MatrixZ& z) const { return fn_(t, Vector::Zero(z.rows()), z); }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] const GeneratorTraits& traits() const noexcept { return traits_; }
    [[nodiscard]] double rho(double radius) const;

    /// Member of the class of deterministic, y-independent generators with g(·,0)=0.
    [[nodiscard]] bool closed_form_class() const noexcept {
        return traits_.deterministic && traits_.y_independent && traits_.zero_at_zero;
    }

private:
    std::string name_;
    GeneratorFn fn_;
    GeneratorTraits traits_;
};

enum class GeneratorKind {
    zero,
    linear_drift,     ///< μ|z|
    negative_drift,   ///< −μ|z|
    quadratic,        ///< ν|z|² + γ
    scaled_component, ///< row i: c_i |z_i·|
    time_scaled,      ///< a·t·|z|
    linear_in_y,      ///< a·y
};

/// Parameters for builtin generators; unused fields are ignored by a kind.
struct GeneratorParams {
    double mu = 0.0;
    double nu = 0.0;
    double gamma = 0.0;
    double a = 0.0;
    double horizon = 1.0;        ///< used for moduli of time-dependent kinds
    std::vector<double> scales;  ///< scaled_component
};

/// For n > 1 the |z|-based kinds act row by row: component i uses |z_i·|.
Generator builtin_generator(GeneratorKind kind, const GeneratorParams& params);

/// A user-supplied generator; its metadata is spot-verified by sampling and
/// a declared-metadata-violation error is raised when it does not hold.
Generator custom_generator(std::string name, GeneratorFn fn, GeneratorTraits traits, Eigen::Index n,
                           Eigen::Index d, double horizon, std::uint64_t seed = 7);

/// −g with the same metadata (zero_at_zero, moduli unchanged).
Generator negated(const Generator& g);

struct ValidationReport {
    std::size_t samples = 0;
    std::vector<std::string> violations;
    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Samples (t, y1, y2, z1, z2) and checks the declared flags and moduli
/// exactly as stated (Lipschitz in y with μ, local Lipschitz in z with ρ).
ValidationReport validate_generator(const Generator& g, Eigen::Index n, Eigen::Index d, double horizon,
                                    std::size_t samples = 1000, std::uint64_t seed = 7);

/// Parses specs like "linear:mu=0.5", "quadratic:nu=0.5,gamma=0", "zero",
/// "negdrift:mu=1", "timescaled:a=1", "lineary:a=1", "scaled:c=0.5;1".
Generator parse_generator(const std::string& spec, double horizon);

/// Flat key=value parameter list "a=1,b=2" (values may contain ';').
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Numeric value of `key`, `fallback` when absent; ParseError when malformed.
double key_value_number(const std::map<std::string, std::string>& kv, const std::string& key, double fallback);

}  // namespace gexp
