#pragma once

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

#include "prioq/erlang_loss.hpp"
#include "prioq/qbd.hpp"

namespace prioq {

// Stationary measures of the class-2 queue. Sums over levels beyond c use
// the closed forms sum_k R^k = (I-R)^{-1} and sum_k k R^k = R (I-R)^{-2}.

/// Mean number of class-2 customers waiting (not in service): sum max(0, i+j-c) pi(i,j).
template <typename Scalar>
Scalar mean_queue_length(const StationarySolution<Scalar>& sol) {
    const int c = sol.c;
    Scalar total(0);
    for (int j = 1; j < c; ++j) {
        for (int i = c - j + 1; i <= c; ++i) total += Scalar(i + j - c) * sol.pi[static_cast<std::size_t>(j)](i);
    }
    const auto& pic = sol.pi[static_cast<std::size_t>(c)];
    Vector<Scalar> f(c + 1);
    for (int i = 0; i <= c; ++i) f(i) = Scalar(i);
    const Vector<Scalar> ones = Vector<Scalar>::Ones(c + 1);
    total += pic * sol.tail_inverse * sol.tail_inverse * sol.R * ones;
    total += pic * sol.tail_inverse * f;
    return total;
}

/// E W_q of class 2 by Little's law.
template <typename Scalar>
Scalar mean_waiting(const StationarySolution<Scalar>& sol, const SystemParams& params) {
    return mean_queue_length(sol) / Scalar(params.lambda2);
}

/// Stationary mass of the states where an arriving class-1 customer preempts a
/// class-2 customer: i + j >= c and i <= c-1.
template <typename Scalar>
Scalar termination_set_mass(const StationarySolution<Scalar>& sol) {
    const int c = sol.c;
    Scalar total(0);
    for (int j = 1; j < c; ++j) {
        total += sol.pi[static_cast<std::size_t>(j)].segment(c - j, j).sum();
    }
    const RowVector<Scalar> tail = sol.pi[static_cast<std::size_t>(c)] * sol.tail_inverse;
    total += tail.head(c).sum();
    return total;
}

/// E N_T: mean number of preemptions suffered per class-2 customer.
template <typename Scalar>
Scalar mean_terminations(const StationarySolution<Scalar>& sol, const SystemParams& params) {
    return Scalar(params.lambda1) / Scalar(params.lambda2) * termination_set_mass(sol);
}

/// Long-run class-2 departure rate: lambda2 below the critical rate, lambda_max above.
template <typename Scalar = double>
Scalar throughput(const SystemParams& params) {
    const auto report = stability<Scalar>(params);
    return std::min(Scalar(params.lambda2), report.lambda_max);
}

template <typename Scalar>
struct Marginals {
    Vector<Scalar> phase;                      ///< P(Q1 = i)
    std::vector<std::pair<int, Scalar>> tail;  ///< (k, P(Q2 >= k))
};

template <typename Scalar>
Scalar level_tail(const StationarySolution<Scalar>& sol, int k) {
    const int c = sol.c;
    if (k <= 0) return Scalar(1);
    if (k <= c) {
        Scalar below(0);
        for (int j = 0; j < k; ++j) below += sol.pi[static_cast<std::size_t>(j)].sum();
        return std::max(Scalar(0), Scalar(1) - below);
    }
    const RowVector<Scalar> pk = stationary_level(sol, k);
    return (pk * sol.tail_inverse).sum();
}

template <typename Scalar>
Marginals<Scalar> marginals(const StationarySolution<Scalar>& sol, std::span<const int> tail_levels = {}) {
    const int c = sol.c;
    Marginals<Scalar> out;
    out.phase = Vector<Scalar>::Zero(c + 1);
    for (int j = 0; j < c; ++j) out.phase += sol.pi[static_cast<std::size_t>(j)].transpose();
    out.phase += (sol.pi[static_cast<std::size_t>(c)] * sol.tail_inverse).transpose();
    for (int k : tail_levels) out.tail.emplace_back(k, level_tail(sol, k));
    return out;
}

template <typename Scalar = double>
struct PerformanceReport {
    Scalar mean_wait{};
    Scalar mean_terminations{};
    Scalar throughput{};
    Scalar mean_queue_length{};
    Scalar termination_set_mass{};
    Marginals<Scalar> marginals;
};

/// All measures for one stable parameter set; throws Unstable otherwise.
template <typename Scalar = double>
PerformanceReport<Scalar> analyze(const SystemParams& params, std::span<const int> tail_levels = {},
                                  const RateOptions<Scalar>& opt = {}) {
    const auto sol = solve_stationary<Scalar>(params, opt);
    PerformanceReport<Scalar> r;
    r.mean_queue_length = mean_queue_length(sol);
    r.mean_wait = r.mean_queue_length / Scalar(params.lambda2);
    r.termination_set_mass = termination_set_mass(sol);
    r.mean_terminations = Scalar(params.lambda1) / Scalar(params.lambda2) * r.termination_set_mass;
    r.throughput = throughput<Scalar>(params);
    r.marginals = marginals(sol, tail_levels);
    return r;
}

}  // namespace prioq
