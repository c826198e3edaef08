#pragma once

#include <cstdio>

#include <stdexcept>
#include <string>

namespace stokes {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct SingularityError : DomainError {
    using DomainError::DomainError;
};

// Raised when an integrator cannot reach the requested tolerance.
struct ToleranceError : std::runtime_error {
    double estimate;
    ToleranceError(const std::string& what, double est)
        : std::runtime_error(what + " (achieved error " + format(est) + ")"), estimate(est) {}
    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", v);
        return buf;
    }
};

struct ResolutionError : std::invalid_argument {
    int jmin_ok, jmax_ok;
    ResolutionError(const std::string& what, int lo, int hi)
        : std::invalid_argument(what + " (admissible j in [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "])"),
          jmin_ok(lo), jmax_ok(hi) {}
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when an operation needs derivatives of data tagged as L^q only.
struct SmoothnessError : DomainError {
    using DomainError::DomainError;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace stokes
