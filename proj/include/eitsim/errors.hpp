#pragma once

#include <stdexcept>
#include <string>

namespace eitsim {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Bad or incomplete configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integration / steady-state solver failure (CLI exit code 3).
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
    SolverError(const std::string& msg, double t_fail)
        : std::runtime_error(msg + " (t = " + std::to_string(t_fail) + " ns)"),
          time_of_failure(t_fail) {}
    double time_of_failure = 0.0;
};

struct ConvergenceError : SolverError {
    using SolverError::SolverError;
};

// Nonlinear least-squares non-convergence (CLI exit code 4).
struct FitError : std::runtime_error {
    explicit FitError(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), residual_norm(residual) {}
    double residual_norm = 0.0;
};

} // namespace eitsim
