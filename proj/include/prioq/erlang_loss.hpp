#pragma once

#include <cmath>
#include <span>

#include "prioq/model.hpp"
#include "prioq/types.hpp"

namespace prioq {

/// Stationary law of the number of servers held by class 1 (the M/G/c/0 loss system).
template <typename Scalar = double>
struct LossDistribution {
    Vector<Scalar> eta;  ///< eta[i] = P(i servers busy with class 1), i = 0..c

    int servers() const { return static_cast<int>(eta.size()) - 1; }
    /// Erlang-B blocking probability.
    Scalar blocking() const { return eta(eta.size() - 1); }
    /// Mean number of servers held by class 1.
    Scalar mean_busy() const {
        Scalar m(0);
        for (Eigen::Index i = 1; i < eta.size(); ++i) m += Scalar(i) * eta(i);
        return m;
    }
};

namespace detail {

// Truncated Poisson weights rho^i / i! built by w_i = w_{i-1} * rho / i.
// Rescaled on the fly so that large c cannot overflow; only ratios matter.
template <typename Scalar>
Vector<Scalar> truncated_poisson_weights(Scalar rho, int c) {
    Vector<Scalar> w(c + 1);
    w(0) = Scalar(1);
    const Scalar big = Scalar(1e200);
    for (int i = 1; i <= c; ++i) {
        w(i) = w(i - 1) * rho / Scalar(i);
        if (w(i) > big) w.head(i + 1) /= big;
    }
    return w;
}

}  // namespace detail

template <typename Scalar = double>
LossDistribution<Scalar> loss_distribution(Scalar rho1, int c) {
    if (!(rho1 >= Scalar(0)) || !std::isfinite(static_cast<double>(rho1))) {
        throw InvalidParams("rho1", "must be finite and >= 0");
    }
    if (c < 1) throw InvalidParams("c", "must be >= 1");
    Vector<Scalar> w = detail::truncated_poisson_weights(rho1, c);
    return {w / w.sum()};
}

template <typename Scalar = double>
struct StabilityReport {
    bool stable = false;
    Scalar delta{};       ///< mean number of servers left for class 2
    Scalar rho2{};
    Scalar lambda_max{};  ///< critical class-2 arrival rate
    Scalar margin{};      ///< delta - rho2
};

/// Critical class-2 rate mu2 * sum_{i<c} (c-i) rho1^i/i! / sum_{i<=c} rho1^i/i!.
template <typename Scalar = double>
Scalar lambda_max(const SystemParams& params) {
    const auto p = validate(params);
    const Vector<Scalar> w = detail::truncated_poisson_weights(Scalar(p.lambda1) / Scalar(p.mu1), p.c);
    Scalar num(0);
    for (int i = 0; i < p.c; ++i) num += Scalar(p.c - i) * w(i);
    return Scalar(p.mu2) * num / w.sum();
}

/// The class-2 queue is positive recurrent iff rho2 < c - sum_i i*eta_i.
/// Equality counts as unstable.
template <typename Scalar = double>
StabilityReport<Scalar> stability(const SystemParams& params) {
    const auto p = validate(params);
    const auto loss = loss_distribution<Scalar>(Scalar(p.lambda1) / Scalar(p.mu1), p.c);
    StabilityReport<Scalar> r;
    r.delta = Scalar(p.c) - loss.mean_busy();
    r.rho2 = Scalar(p.lambda2) / Scalar(p.mu2);
    r.lambda_max = lambda_max<Scalar>(p);
    r.margin = r.delta - r.rho2;
    r.stable = Scalar(p.lambda2) < r.lambda_max;
    return r;
}

/// Stability of the buffered multiclass system without losses: sum of loads < c.
inline bool no_loss_stability(std::span<const double> rhos, int c) {
    double total = 0.0;
    for (double r : rhos) {
        if (!(r >= 0.0)) throw InvalidParams("rho", "must be >= 0");
        total += r;
    }
    return total < static_cast<double>(c);
}

}  // namespace prioq
