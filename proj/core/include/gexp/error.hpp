#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gexp {

enum class ErrorCode {
    invalid_argument,
    declared_metadata_violation,
    resource_limit,
    off_grid_time,
    non_finite_sample,
    unsupported_generator,
    tolerance_not_reached,
    grid_too_coarse,
    oracle_contract_violation,
    contraction_failure,
    slow_convergence,
    precondition_violation,
    metadata_violation,
    equivalence_violation,
    parse_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library error. `detail` carries the numeric payload some codes need
/// (bad-sample count, achieved residual, last gap); NaN when unused.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, double detail = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(detail) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] double detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    double detail_;
};

/// Raised by the CSV/config readers; position is 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(ErrorCode::parse_error,
                message + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace gexp
