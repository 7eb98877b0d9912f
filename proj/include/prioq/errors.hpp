#pragma once

#include <stdexcept>
#include <string>

namespace prioq {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model parameter violates its invariant; field() names it.
class InvalidParams : public Error {
public:
    explicit InvalidParams(std::string field, const std::string& detail = {})
        : Error("invalid parameter '" + field + "'" + (detail.empty() ? "" : ": " + detail)),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NotConverged : public Error {
public:
    NotConverged(long iterations, double residual)
        : Error("rate matrix iteration did not converge after " + std::to_string(iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    long iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    long iterations_;
    double residual_;
};

/// The class-2 queue has no stationary regime (spectral radius of R reached 1).
class Unstable : public Error {
public:
    explicit Unstable(double spectral_radius)
        : Error("model is unstable: spectral radius of R = " + std::to_string(spectral_radius)),
          spectral_radius_(spectral_radius) {}

    double spectral_radius() const noexcept { return spectral_radius_; }

private:
    double spectral_radius_;
};

/// A boundary matrix at the given level could not be inverted.
class SingularBoundary : public Error {
public:
    explicit SingularBoundary(int level)
        : Error("singular boundary system at level " + std::to_string(level)), level_(level) {}

    int level() const noexcept { return level_; }

private:
    int level_;
};

}  // namespace prioq
