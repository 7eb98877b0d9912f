#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "prioq/errors.hpp"
#include "prioq/model.hpp"
#include "prioq/types.hpp"

namespace prioq {

// Level j = number of class-2 customers, phase i = number of class-1 customers.
// The generator is block tridiagonal:
//   level j -> j+1 : C   = lambda2 * I
//   level j -> j-1 : A_j (diagonal, class-2 completions), A_j = A_c for j > c
//   within level j : B_j (class-1 arrivals/departures and the diagonal), B_j = B_c for j > c
template <typename Scalar = double>
struct QbdBlocks {
    int c = 0;
    Matrix<Scalar> up;                ///< C
    std::vector<Matrix<Scalar>> down; ///< A_1..A_c stored at index n-1
    std::vector<Matrix<Scalar>> local;///< B_0..B_c

    int phases() const { return c + 1; }
    const Matrix<Scalar>& C() const { return up; }
    const Matrix<Scalar>& A(int n) const { return down[static_cast<std::size_t>(std::min(n, c) - 1)]; }
    const Matrix<Scalar>& B(int n) const { return local[static_cast<std::size_t>(std::min(n, c))]; }
};

template <typename Scalar = double>
QbdBlocks<Scalar> build_blocks(const SystemParams& params) {
    const auto p = validate(params);
    const int c = p.c;
    const int m = c + 1;
    const Scalar l1(p.lambda1), l2(p.lambda2), m1(p.mu1), m2(p.mu2);

    QbdBlocks<Scalar> blocks;
    blocks.c = c;
    blocks.up = Matrix<Scalar>::Identity(m, m) * l2;

    for (int n = 1; n <= c; ++n) {
        Matrix<Scalar> a = Matrix<Scalar>::Zero(m, m);
        for (int i = 0; i <= c; ++i) a(i, i) = Scalar(std::min(n, c - i)) * m2;
        blocks.down.push_back(std::move(a));
    }

    for (int n = 0; n <= c; ++n) {
        Matrix<Scalar> b = Matrix<Scalar>::Zero(m, m);
        for (int i = 0; i < c; ++i) {
            b(i, i) = -(l1 + l2 + Scalar(i) * m1 + Scalar(std::min(c - i, n)) * m2);
            b(i, i + 1) = l1;
        }
        // a class-1 arrival finding c class-1 customers is lost
        b(c, c) = -(l2 + Scalar(c) * m1);
        for (int i = 1; i <= c; ++i) b(i, i - 1) = Scalar(i) * m1;
        blocks.local.push_back(std::move(b));
    }
    return blocks;
}

template <typename Derived>
typename Derived::Scalar inf_norm(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return typename Derived::Scalar(0);
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Largest eigenvalue modulus.
template <typename Scalar>
Scalar spectral_radius(const Matrix<Scalar>& m) {
    Eigen::EigenSolver<Matrix<Scalar>> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// ||C + R B_c + R^2 A_c||_inf
template <typename Scalar>
Scalar rate_equation_residual(const QbdBlocks<Scalar>& blocks, const Matrix<Scalar>& r) {
    const auto& a = blocks.A(blocks.c);
    const auto& b = blocks.B(blocks.c);
    return inf_norm(Matrix<Scalar>(blocks.C() + r * b + r * r * a));
}

enum class RateAlgorithm {
    LogarithmicReduction,
    FunctionalIteration,  ///< monotone R_{k+1} = -(C + R_k^2 A_c) B_c^{-1} from R_0 = 0
};

template <typename Scalar = double>
struct RateOptions {
    RateAlgorithm algorithm = RateAlgorithm::LogarithmicReduction;
    Scalar tolerance = Scalar(1e-12);  ///< inf-norm of the successive difference
    long max_iterations = 100000;      ///< functional iteration cap
    long max_reduction_steps = 200;    ///< logarithmic reduction cap
    /// Called with every iterate of the functional iteration.
    std::function<void(const Matrix<Scalar>&)> on_iterate;
};

template <typename Scalar = double>
struct RateMatrixResult {
    Matrix<Scalar> R;
    Scalar spectral_radius{};
    Scalar residual{};
    long iterations = 0;
};

/// Threshold on the spectral radius of R above which the model is declared unstable.
template <typename Scalar>
constexpr Scalar kUnstableRadius = Scalar(1) - Scalar(1e-12);

namespace detail {

template <typename Scalar>
Eigen::PartialPivLU<Matrix<Scalar>> checked_lu(const Matrix<Scalar>& m, int level) {
    Eigen::PartialPivLU<Matrix<Scalar>> lu(m);
    const Scalar rc = lu.rcond();
    if (!(rc > Scalar(64) * std::numeric_limits<Scalar>::epsilon())) throw SingularBoundary(level);
    return lu;
}

// rhs * m^{-1}
template <typename Scalar>
Matrix<Scalar> right_solve(const Matrix<Scalar>& rhs, const Matrix<Scalar>& m, int level) {
    const auto lu = checked_lu(Matrix<Scalar>(m.transpose()), level);
    return lu.solve(Matrix<Scalar>(rhs.transpose())).transpose();
}

template <typename Scalar>
std::pair<Matrix<Scalar>, long> functional_iteration(const QbdBlocks<Scalar>& blocks,
                                                     const RateOptions<Scalar>& opt) {
    const int c = blocks.c;
    const auto& a = blocks.A(c);
    const Matrix<Scalar> b_inv = checked_lu(blocks.B(c), c).inverse();
    Matrix<Scalar> r = Matrix<Scalar>::Zero(blocks.phases(), blocks.phases());
    Scalar diff = std::numeric_limits<Scalar>::infinity();
    for (long k = 1; k <= opt.max_iterations; ++k) {
        Matrix<Scalar> next = -(blocks.C() + r * r * a) * b_inv;
        diff = inf_norm(Matrix<Scalar>(next - r));
        r = std::move(next);
        if (opt.on_iterate) opt.on_iterate(r);
        if (diff < opt.tolerance) return {r, k};
    }
    throw NotConverged(opt.max_iterations, static_cast<double>(diff));
}

// Latouche-Ramaswami logarithmic reduction for G, then R = C (-(B_c + C G))^{-1}.
template <typename Scalar>
std::pair<Matrix<Scalar>, long> logarithmic_reduction(const QbdBlocks<Scalar>& blocks,
                                                      const RateOptions<Scalar>& opt) {
    const int c = blocks.c;
    const int m = blocks.phases();
    const auto& up = blocks.C();
    const auto& down = blocks.A(c);
    const auto& local = blocks.B(c);
    const Matrix<Scalar> id = Matrix<Scalar>::Identity(m, m);

    const auto neg_local = checked_lu(Matrix<Scalar>(-local), c);
    Matrix<Scalar> h = neg_local.solve(up);
    Matrix<Scalar> l = neg_local.solve(down);
    Matrix<Scalar> g = l;
    Matrix<Scalar> t = h;

    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    long k = 1;
    for (; k <= opt.max_reduction_steps; ++k) {
        const Matrix<Scalar> u = h * l + l * h;
        Eigen::PartialPivLU<Matrix<Scalar>> lu(Matrix<Scalar>(id - u));
        h = lu.solve(Matrix<Scalar>(h * h));
        l = lu.solve(Matrix<Scalar>(l * l));
        const Matrix<Scalar> incr = t * l;
        g += incr;
        t = t * h;
        const Scalar step = inf_norm(incr);
        if (step <= eps * std::max(Scalar(1), inf_norm(g)) || inf_norm(t) <= eps) break;
    }
    if (k > opt.max_reduction_steps) {
        throw NotConverged(opt.max_reduction_steps,
                           static_cast<double>(inf_norm(Matrix<Scalar>(t * l))));
    }
    Matrix<Scalar> r = -right_solve(up, Matrix<Scalar>(local + up * g), c);
    return {r, k};
}

}  // namespace detail

/// Minimal nonnegative solution of C + R B_c + R^2 A_c = 0 together with
/// its spectral radius. Does not reject unstable models; see solve_R.
template <typename Scalar = double>
RateMatrixResult<Scalar> compute_rate_matrix(const QbdBlocks<Scalar>& blocks,
                                             const RateOptions<Scalar>& opt = {}) {
    auto [r, iterations] = opt.algorithm == RateAlgorithm::FunctionalIteration
                               ? detail::functional_iteration(blocks, opt)
                               : detail::logarithmic_reduction(blocks, opt);
    // clear roundoff-level negatives
    r = r.cwiseMax(Scalar(0));
    RateMatrixResult<Scalar> out;
    out.spectral_radius = spectral_radius(r);
    out.residual = rate_equation_residual(blocks, r);
    out.iterations = iterations;
    out.R = std::move(r);
    return out;
}

/// Mean drift of the level above c: alpha C 1 - alpha A_c 1, with alpha the
/// stationary vector of C + B_c + A_c. Positive recurrence needs it < 0.
template <typename Scalar = double>
Scalar level_drift(const QbdBlocks<Scalar>& blocks) {
    const int c = blocks.c;
    const int m = blocks.phases();
    Matrix<Scalar> gen = (blocks.C() + blocks.B(c) + blocks.A(c)).transpose();
    gen.row(m - 1).setOnes();
    Vector<Scalar> rhs = Vector<Scalar>::Zero(m);
    rhs(m - 1) = Scalar(1);
    const Vector<Scalar> alpha = gen.fullPivLu().solve(rhs);
    const Vector<Scalar> ones = Vector<Scalar>::Ones(m);
    return alpha.dot(blocks.C() * ones) - alpha.dot(blocks.A(c) * ones);
}

/// Rate matrix of a stable model. Throws Unstable when the level drift is
/// nonnegative or sp(R) >= 1 - 1e-12. The drift test is the decisive one close
/// to the boundary, where the eigenvalue of R near 1 is ill-conditioned.
template <typename Scalar = double>
Matrix<Scalar> solve_R(const QbdBlocks<Scalar>& blocks, const RateOptions<Scalar>& opt = {}) {
    if (level_drift(blocks) >= Scalar(0)) throw Unstable(1.0);
    auto res = compute_rate_matrix(blocks, opt);
    if (res.spectral_radius >= kUnstableRadius<Scalar>) {
        throw Unstable(static_cast<double>(res.spectral_radius));
    }
    return std::move(res.R);
}

/// Level-dependent matrices R^(1)..R^(c) (returned at index j-1), where
/// R^(c) = R and R^(j) = -C (B_j + R^(j+1) A_{j+1})^{-1} for j = c-1..1.
template <typename Scalar = double>
std::vector<Matrix<Scalar>> solve_boundary(const QbdBlocks<Scalar>& blocks, const Matrix<Scalar>& r) {
    const int c = blocks.c;
    std::vector<Matrix<Scalar>> rj(static_cast<std::size_t>(c));
    rj[static_cast<std::size_t>(c - 1)] = r;
    for (int j = c - 1; j >= 1; --j) {
        const Matrix<Scalar> m = blocks.B(j) + rj[static_cast<std::size_t>(j)] * blocks.A(j + 1);
        Matrix<Scalar> next = -detail::right_solve(blocks.C(), m, j);
        rj[static_cast<std::size_t>(j - 1)] = next.cwiseMax(Scalar(0));
    }
    return rj;
}

template <typename Scalar = double>
struct StationarySolution {
    int c = 0;
    Matrix<Scalar> R;
    std::vector<Matrix<Scalar>> Rj;   ///< R^(1)..R^(c) at index j-1
    std::vector<RowVector<Scalar>> pi;///< level vectors pi_0..pi_c
    Matrix<Scalar> tail_inverse;      ///< (I - R)^{-1}
    Scalar spectral_radius_R{};

    struct Residuals {
        Scalar rate_equation{};  ///< ||C + R B_c + R^2 A_c||_inf
        Scalar boundary{};       ///< ||pi_0 (B_0 + R^(1) A_1)||_inf
        long iterations = 0;     ///< rate-matrix solver iterations
    } residuals;

    int phases() const { return c + 1; }
};

/// Boundary vector pi_0 and levels pi_1..pi_c. pi_0 solves
/// pi_0 (B_0 + R^(1) A_1) = 0 normalised so that all levels (including the
/// geometric tail) sum to one.
template <typename Scalar = double>
StationarySolution<Scalar> solve_pi0(const QbdBlocks<Scalar>& blocks, const Matrix<Scalar>& r,
                                     const std::vector<Matrix<Scalar>>& rj) {
    const int c = blocks.c;
    const int m = blocks.phases();
    const Matrix<Scalar> id = Matrix<Scalar>::Identity(m, m);

    StationarySolution<Scalar> sol;
    sol.c = c;
    sol.R = r;
    sol.Rj = rj;
    sol.spectral_radius_R = spectral_radius(r);
    if (sol.spectral_radius_R >= kUnstableRadius<Scalar>) {
        throw Unstable(static_cast<double>(sol.spectral_radius_R));
    }
    sol.residuals.rate_equation = rate_equation_residual(blocks, r);

    const Matrix<Scalar> boundary = blocks.B(0) + rj[0] * blocks.A(1);
    // Phase 0 of level 0 (empty system) is reachable from every state, so its
    // balance column is the redundant one; swap it for the normalisation.
    Matrix<Scalar> square = boundary;
    square.col(0).setOnes();
    Eigen::FullPivLU<Matrix<Scalar>> lu(square.transpose());
    if (!lu.isInvertible()) throw SingularBoundary(0);
    Vector<Scalar> rhs = Vector<Scalar>::Zero(m);
    rhs(0) = Scalar(1);
    RowVector<Scalar> pi0 = lu.solve(rhs).transpose();

    sol.tail_inverse = (id - r).partialPivLu().inverse();

    Matrix<Scalar> weight = id;
    Matrix<Scalar> prod = id;
    for (int i = 1; i <= c; ++i) {
        prod = prod * rj[static_cast<std::size_t>(i - 1)];
        weight += i < c ? prod : Matrix<Scalar>(prod * sol.tail_inverse);
    }
    const Scalar total = (pi0 * weight).sum();
    if (!(total > Scalar(0))) throw SingularBoundary(0);
    pi0 /= total;

    sol.residuals.boundary = inf_norm(RowVector<Scalar>(pi0 * boundary));
    sol.pi.reserve(static_cast<std::size_t>(c + 1));
    sol.pi.push_back(pi0);
    for (int j = 1; j <= c; ++j) {
        sol.pi.push_back(sol.pi.back() * rj[static_cast<std::size_t>(j - 1)]);
    }
    return sol;
}

/// pi_j for any level: stored for j <= c, pi_c R^{j-c} beyond.
template <typename Scalar = double>
RowVector<Scalar> stationary_level(const StationarySolution<Scalar>& sol, int j) {
    if (j < 0) throw InvalidParams("j", "level must be >= 0");
    if (j <= sol.c) return sol.pi[static_cast<std::size_t>(j)];
    RowVector<Scalar> v = sol.pi[static_cast<std::size_t>(sol.c)];
    for (int k = sol.c; k < j; ++k) v = v * sol.R;
    return v;
}

/// build_blocks, solve_R, solve_boundary and solve_pi0 in sequence.
template <typename Scalar = double>
StationarySolution<Scalar> solve_stationary(const SystemParams& params,
                                            const RateOptions<Scalar>& opt = {}) {
    const auto blocks = build_blocks<Scalar>(params);
    if (level_drift(blocks) >= Scalar(0)) throw Unstable(1.0);
    auto rate = compute_rate_matrix(blocks, opt);
    if (rate.spectral_radius >= kUnstableRadius<Scalar>) {
        throw Unstable(static_cast<double>(rate.spectral_radius));
    }
    const auto rj = solve_boundary(blocks, rate.R);
    auto sol = solve_pi0(blocks, rate.R, rj);
    sol.residuals.iterations = rate.iterations;
    return sol;
}

/// Row-major CSV dump of C, A_1..A_c, B_0..B_c and optionally R. Each matrix
/// is introduced by a `# name` line.
template <typename Scalar>
void write_matrices_csv(std::ostream& os, const QbdBlocks<Scalar>& blocks,
                        const Matrix<Scalar>* r = nullptr) {
    const auto emit = [&os](const std::string& name, const Matrix<Scalar>& mat) {
        os << "# " << name << '\n';
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index k = 0; k < mat.cols(); ++k) {
                if (k) os << ',';
                os << static_cast<double>(mat(i, k));
            }
            os << '\n';
        }
    };
    const auto old_precision = os.precision(17);
    emit("C", blocks.C());
    for (int n = 1; n <= blocks.c; ++n) emit("A" + std::to_string(n), blocks.A(n));
    for (int n = 0; n <= blocks.c; ++n) emit("B" + std::to_string(n), blocks.B(n));
    if (r) emit("R", *r);
    os.precision(old_precision);
}

}  // namespace prioq
