#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace l96 {

/// Invalid or inconsistent model configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed, degenerate, or insufficient input data.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Estimation failure (rank deficiency, non-PD covariance, non-convergence).
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure inside a solver (e.g. eigensolver non-convergence).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Trajectory left the admissible region (non-finite or |value| > threshold).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::int64_t step, double time)
        : std::runtime_error(what), step_(step), time_(time) {}

    std::int64_t step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    std::int64_t step_;
    double time_;
};

}  // namespace l96
