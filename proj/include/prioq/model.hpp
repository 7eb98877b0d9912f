#pragma once

#include <cmath>
#include <random>
#include <string>
#include <variant>

#include "prioq/errors.hpp"

namespace prioq {

/// One instance of the two-class system: Poisson arrivals, c identical servers.
/// Class 1 preempts class 2 and is lost when all servers hold class 1.
struct SystemParams {
    double lambda1 = 0.0;  ///< class-1 arrival rate
    double lambda2 = 1.0;  ///< class-2 arrival rate
    double mu1 = 1.0;      ///< class-1 service rate
    double mu2 = 1.0;      ///< class-2 service rate
    int c = 1;             ///< number of servers

    double rho1() const { return lambda1 / mu1; }
    double rho2() const { return lambda2 / mu2; }

    bool operator==(const SystemParams&) const = default;
};

/// Returns params unchanged, or throws InvalidParams naming the first violated field.
SystemParams validate(const SystemParams& params);

/// (class-1 count, class-2 count); the class-1 count never exceeds c.
class State {
public:
    State(int i, int j, int c);

    int i() const { return i_; }
    int j() const { return j_; }

    bool operator==(const State&) const = default;

private:
    int i_;
    int j_;
};

struct Exponential {
    double rate;
};

struct Erlang {
    int shape;
    double stage_rate;
};

struct Deterministic {
    double duration;
};

/// Service-time law. All parameters are strictly positive.
class ServiceDistribution {
public:
    using Kind = std::variant<Exponential, Erlang, Deterministic>;

    static ServiceDistribution exponential(double rate);
    static ServiceDistribution erlang(int shape, double stage_rate);
    static ServiceDistribution deterministic(double duration);

    const Kind& kind() const { return kind_; }
    double mean() const;
    double variance() const;
    std::string describe() const;

    template <class Urbg>
    double sample(Urbg& gen) const {
        return std::visit(
            [&gen](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Exponential>) {
                    return std::exponential_distribution<double>(d.rate)(gen);
                } else if constexpr (std::is_same_v<T, Erlang>) {
                    // sum of `shape` exponential stages as -log of a product of uniforms
                    double prod = 1.0;
                    for (int k = 0; k < d.shape; ++k) {
                        prod *= 1.0 - std::generate_canonical<double, 53>(gen);
                    }
                    return -std::log(prod) / d.stage_rate;
                } else {
                    return d.duration;
                }
            },
            kind_);
    }

private:
    explicit ServiceDistribution(Kind kind) : kind_(kind) {}
    Kind kind_;
};

/// Erlang law with `shape` stages and mean 1/mu (per-stage rate shape*mu).
ServiceDistribution mean_preserving_erlang(double mu, int shape);

}  // namespace prioq
