#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"
#include "oracles.hpp"
#include "trace.hpp"

namespace regnewton {

struct LMConfig {
    double c_const = 1.0;
    double grad_tol = 1e-8; // threshold on |J^T F|
    int max_iters = 1000;
    bool adaptive_c = false; // c_k = max(M_k, c_{k-1} / 2)
    bool check_invariants = false;

    void validate() const {
        if (!(c_const > 0.0) || !(grad_tol > 0.0) || max_iters < 1)
            throw DimensionMismatch("LMConfig: c_const, grad_tol and max_iters must be positive");
    }
};

struct LMStep {
    Vector x_next;
    double lambda = 0.0;
    double r = 0.0;
    FactorizationKind factorization = FactorizationKind::cholesky;
};

namespace detail {

inline constexpr double kResidualFloor = 1e-14;
inline constexpr double kMonotoneTol = 1e-12;

// Step from cached F and J; the Gram matrix J^T J is symmetric by construction.
inline LMStep lm_step_from(const Vector& x, const Vector& fx, const Matrix& jac, double c) {
    const Vector jtf = jac.transpose() * fx;
    const double gnorm = jtf.norm();
    if (gnorm == 0.0)
        return {x, 0.0, 0.0, FactorizationKind::cholesky};
    const double lambda = std::sqrt(c * gnorm);
    const DenseSymmetricMatrix gram(Matrix(jac.transpose() * jac));
    const auto report = shifted_solve(gram, lambda, -jtf);
    return {x + report.solution, lambda, report.solution.norm(), report.factorization_kind};
}

} // namespace detail

/// x -> x - (J^T J + lambda I)^{-1} J^T F(x) with lambda = sqrt(c |J^T F(x)|).
/// A point with J^T F = 0 is returned unchanged.
inline LMStep lm_step(const LeastSquaresOracle& oracle, const Vector& x, double c) {
    return detail::lm_step_from(x, oracle.residual(x), oracle.jacobian(x), c);
}

/// Local smoothness of the residual operator,
///   |F(x_curr) - F(x_prev) - J(x_prev)(x_curr - x_prev)| / |x_curr - x_prev|^2.
inline double lm_mk(const LeastSquaresOracle& oracle, const Vector& x_prev, const Vector& x_curr) {
    const Vector dx = x_curr - x_prev;
    const double dist = dx.norm();
    if (dist < 1e-14)
        throw DegenerateStep("lm_mk: |x_curr - x_prev| = " + std::to_string(dist));
    const Vector err = oracle.residual(x_curr) - oracle.residual(x_prev) - oracle.jacobian(x_prev) * dx;
    return err.norm() / (dist * dist);
}

/// Levenberg-Marquardt with gradient-norm regularization. Stops when
/// |J^T F| <= grad_tol or |F| <= 1e-14.
///
/// With check_invariants set each step is audited for the step identity
/// lambda s = -J^T (F + J s), lambda r <= |J^T F|, the Cholesky path of the
/// shifted Gram matrix, the recursion |F+|^2 <= |F|^2 - lambda r^2 and
/// residual monotonicity. The last two assume the cubic growth bound holds
/// with c_const.
inline LMRunResult run_lm(const LeastSquaresOracle& oracle, const Vector& x0, const LMConfig& cfg) {
    cfg.validate();
    LMRunResult out;
    Vector x = x0;
    Vector fx = oracle.residual(x);
    double c = cfg.c_const;
    double min_grad = std::numeric_limits<double>::infinity();
    std::optional<Vector> x_prev;

    for (int k = 0;; ++k) {
        const Matrix jac = oracle.jacobian(x);
        const Vector jtf = jac.transpose() * fx;
        const double gnorm = jtf.norm();
        const double fnorm = fx.norm();
        min_grad = std::min(min_grad, gnorm);

        if (cfg.adaptive_c && x_prev) {
            try {
                c = std::max(lm_mk(oracle, *x_prev, x), c / 2.0);
            } catch (const DegenerateStep&) {
            }
        }
        if (gnorm <= cfg.grad_tol || fnorm <= detail::kResidualFloor || k == cfg.max_iters) {
            out.trace.push_back({k, fnorm, gnorm, 0.0, 0.0, c});
            out.min_grad_norm.push_back(min_grad);
            out.status =
                (gnorm <= cfg.grad_tol || fnorm <= detail::kResidualFloor) ? RunStatus::converged : RunStatus::max_iters;
            break;
        }

        LMStep step;
        try {
            step = detail::lm_step_from(x, fx, jac, c);
        } catch (const SingularSystem& e) {
            out.trace.push_back({k, fnorm, gnorm, std::sqrt(c * gnorm), 0.0, c});
            out.min_grad_norm.push_back(min_grad);
            out.status = RunStatus::singular_system;
            out.message = e.what();
            break;
        }
        Vector fx_next = oracle.residual(step.x_next);

        if (cfg.check_invariants) {
            auto& v = out.invariant_violations;
            const Vector s = step.x_next - x;
            const double identity = (step.lambda * s + jac.transpose() * (fx + jac * s)).norm();
            detail::check_le(v, k, "eq15_identity", identity, detail::kIdentityTol * std::max(1.0, gnorm));
            detail::check_le(v, k, "eq18_lambda_r", step.lambda * step.r, gnorm * (1.0 + detail::kLambdaRTol));
            if (step.factorization != FactorizationKind::cholesky)
                v.push_back({k, "gram_cholesky", 1.0, 0.0});
            const double fn2 = fx_next.squaredNorm();
            detail::check_le(v, k, "eq19_recursion", fn2,
                             fnorm * fnorm - step.lambda * step.r * step.r + detail::kMonotoneTol * fnorm * fnorm);
            detail::check_le(v, k, "residual_monotone", fx_next.norm(), fnorm * (1.0 + detail::kMonotoneTol));
        }
        out.trace.push_back({k, fnorm, gnorm, step.lambda, step.r, c});
        out.min_grad_norm.push_back(min_grad);
        x_prev = std::move(x);
        x = std::move(step.x_next);
        fx = std::move(fx_next);
    }
    out.final_x = std::move(x);
    return out;
}

/// Brute-force estimate of the cubic growth constant over a box:
///   max over sampled pairs of (|F(y)|^2 - |F(x) + J(x)(y - x)|^2) / |y - x|^3.
/// A sampled stand-in for the analytic constant; the true supremum may be
/// larger (or infinite) when pairs can be arbitrarily close.
inline double cubic_growth_sweep(const LeastSquaresOracle& oracle, double box_lo, double box_hi, int pairs,
                                 unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(box_lo, box_hi);
    const auto n = static_cast<Eigen::Index>(oracle.dim);
    Vector x(n), y(n);
    double best = 0.0;
    for (int p = 0; p < pairs; ++p) {
        for (Eigen::Index i = 0; i < n; ++i)
            x[i] = unif(rng);
        for (Eigen::Index i = 0; i < n; ++i)
            y[i] = unif(rng);
        const Vector dx = y - x;
        const double dist = dx.norm();
        if (dist < 1e-12)
            continue;
        const double lhs = oracle.residual(y).squaredNorm();
        const double model = (oracle.residual(x) + oracle.jacobian(x) * dx).squaredNorm();
        best = std::max(best, (lhs - model) / (dist * dist * dist));
    }
    return best;
}

} // namespace regnewton
