#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "linalg.hpp"
#include "newton.hpp"
#include "oracles.hpp"
#include "trace.hpp"

namespace regnewton {

struct ArmijoConfig {
    double alpha_init = 1.0;
    double sufficient_decrease = 0.5; // fixed
    int max_halvings = 60;
};

struct CubicConfig {
    double h_const = 1.0;
    double bisect_tol = 1e-12;
    int bisect_max = 200;
};

struct ArmijoStep {
    double alpha = 0.0;
    Vector x_next;
    int trials = 0;
};

namespace detail {

inline ArmijoStep armijo_from(const ObjectiveOracle& oracle, const Vector& x, double f, const Vector& g,
                              const Vector& direction, double prev_alpha, const ArmijoConfig& cfg) {
    const double slope = g.dot(direction);
    if (!(slope < 0.0))
        throw NoDescent("armijo_search: <grad, d> = " + std::to_string(slope) + " is not negative");
    double alpha = 2.0 * prev_alpha;
    for (int trial = 0; trial <= cfg.max_halvings; ++trial) {
        Vector x_next = x + alpha * direction;
        if (oracle.value(x_next) <= f + alpha * cfg.sufficient_decrease * slope)
            return {alpha, std::move(x_next), trial + 1};
        alpha /= 2.0;
    }
    throw StallNoStep("armijo_search: no step after " + std::to_string(cfg.max_halvings) + " halvings");
}

} // namespace detail

/// Backtracking from 2 * prev_alpha, halving until
/// f(x + alpha d) <= f(x) + alpha/2 <grad f(x), d>.
inline ArmijoStep armijo_search(const ObjectiveOracle& oracle, const Vector& x, const Vector& direction,
                                double prev_alpha, const ArmijoConfig& cfg = {}) {
    return detail::armijo_from(oracle, x, oracle.value(x), oracle.gradient(x), direction, prev_alpha, cfg);
}

/// Newton direction -(Hess f)^{-1} grad f followed by Armijo backtracking.
inline ArmijoStep newton_armijo_step(const ObjectiveOracle& oracle, const Vector& x, double prev_alpha,
                                     const ArmijoConfig& cfg = {}) {
    const Vector g = oracle.gradient(x);
    const Vector d = shifted_solve(oracle.hessian(x), 0.0, -g).solution;
    return detail::armijo_from(oracle, x, oracle.value(x), g, d, prev_alpha, cfg);
}

inline ArmijoStep gd_armijo_step(const ObjectiveOracle& oracle, const Vector& x, double prev_alpha,
                                 const ArmijoConfig& cfg = {}) {
    const Vector g = oracle.gradient(x);
    return detail::armijo_from(oracle, x, oracle.value(x), g, -g, prev_alpha, cfg);
}

inline Vector gd_const_step(const ObjectiveOracle& oracle, const Vector& x, double lipschitz) {
    return x - oracle.gradient(x) / lipschitz;
}

namespace detail {

enum class ArmijoDirection { gradient, newton };

inline RunResult run_armijo(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg,
                            const ArmijoConfig& acfg, ArmijoDirection kind) {
    Stopwatch clock;
    RunResult out;
    Vector x = x0;
    double f = oracle.value(x);
    Vector g = oracle.gradient(x);
    double alpha = acfg.alpha_init;
    long steps = 0;

    for (int k = 0;; ++k) {
        const double gnorm = g.norm();
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters) {
            out.trace.push_back(make_record(k, f, gnorm, 0.0, 0.0, 1.0 / alpha, 0, steps, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        ArmijoStep step;
        try {
            Vector d;
            if (kind == ArmijoDirection::newton) {
                d = shifted_solve(oracle.hessian(x), 0.0, -g).solution;
                ++steps;
            } else {
                d = -g;
            }
            step = armijo_from(oracle, x, f, g, d, alpha, acfg);
        } catch (const SingularSystem& e) {
            out.trace.push_back(make_record(k, f, gnorm, 0.0, 0.0, 1.0 / alpha, 0, steps, clock));
            out.status = RunStatus::singular_system;
            out.message = e.what();
            break;
        } catch (const Error& e) { // NoDescent or StallNoStep
            out.trace.push_back(make_record(k, f, gnorm, 0.0, 0.0, 1.0 / alpha, 0, steps, clock));
            out.status = RunStatus::line_search_stalled;
            out.message = e.what();
            break;
        }
        alpha = step.alpha;
        const double r = (step.x_next - x).norm();
        out.trace.push_back(make_record(k, f, gnorm, 0.0, r, 1.0 / alpha, step.trials, steps, clock));
        x = std::move(step.x_next);
        f = oracle.value(x);
        g = oracle.gradient(x);
    }
    out.final_x = std::move(x);
    return out;
}

} // namespace detail

inline RunResult run_gd_armijo(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg,
                               const ArmijoConfig& acfg = {}) {
    return detail::run_armijo(oracle, x0, cfg, acfg, detail::ArmijoDirection::gradient);
}

/// A singular Hessian ends the run with status singular_system.
inline RunResult run_newton_armijo(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg,
                                   const ArmijoConfig& acfg = {}) {
    return detail::run_armijo(oracle, x0, cfg, acfg, detail::ArmijoDirection::newton);
}

inline RunResult run_gd(const ObjectiveOracle& oracle, const Vector& x0, double lipschitz, const SolverConfig& cfg) {
    if (!(lipschitz > 0.0))
        throw DimensionMismatch("run_gd: L must be positive");
    detail::Stopwatch clock;
    RunResult out;
    Vector x = x0;
    Vector g = oracle.gradient(x);
    for (int k = 0;; ++k) {
        const double gnorm = g.norm();
        const double f = oracle.value(x);
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters || !std::isfinite(gnorm)) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, lipschitz, 0, 0, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        const Vector step = -g / lipschitz;
        out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, step.norm(), lipschitz, 1, 0, clock));
        x += step;
        g = oracle.gradient(x);
    }
    out.final_x = std::move(x);
    return out;
}

/// Nesterov's accelerated gradient with constant step 1/L. When a momentum
/// step increases f, the step is discarded, momentum is reset and a plain
/// gradient step is taken from the current point instead, so f never
/// increases along the recorded iterates.
inline RunResult agd_restart_run(const ObjectiveOracle& oracle, const Vector& x0, double lipschitz,
                                 const SolverConfig& cfg) {
    if (!(lipschitz > 0.0))
        throw DimensionMismatch("agd_restart_run: L must be positive");
    detail::Stopwatch clock;
    RunResult out;
    Vector x = x0;
    Vector y = x0;
    double t = 1.0;
    double f = oracle.value(x);
    Vector gx = oracle.gradient(x);

    for (int k = 0;; ++k) {
        const double gnorm = gx.norm();
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters || !std::isfinite(gnorm)) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, lipschitz, 0, 0, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        int evals = 1;
        Vector x_next = y - oracle.gradient(y) / lipschitz;
        double f_next = oracle.value(x_next);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (f_next > f) {
            x_next = x - gx / lipschitz;
            f_next = oracle.value(x_next);
            y = x_next;
            t = 1.0;
            ++evals;
        } else {
            y = x_next + ((t - 1.0) / t_next) * (x_next - x);
            t = t_next;
        }
        out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, (x_next - x).norm(), lipschitz, evals, 0, clock));
        x = std::move(x_next);
        f = f_next;
        gx = oracle.gradient(x);
    }
    out.final_x = std::move(x);
    return out;
}

struct CubicStep {
    Vector x_next;
    double lambda_star = 0.0;
    int evaluations = 0; // |s(lambda)| evaluations used by the bracket and bisection
};

namespace detail {

// |s(lambda)| for s(lambda) = -(Hess + lambda I)^{-1} g from one
// eigendecomposition; infinite where Hess + lambda I is not positive definite.
class ShiftedStepNorm {
public:
    ShiftedStepNorm(const DenseSymmetricMatrix& hess, const Vector& g) : eig_(hess.matrix()) {
        if (eig_.info() != Eigen::Success)
            throw SingularSystem("cubic_newton_step: eigendecomposition failed");
        coeffs_ = eig_.eigenvectors().transpose() * g;
    }

    double operator()(double lambda) const {
        const Vector& mu = eig_.eigenvalues();
        double sum = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            const double denom = mu[i] + lambda;
            if (coeffs_[i] == 0.0)
                continue;
            if (!(denom > 0.0))
                return std::numeric_limits<double>::infinity();
            sum += (coeffs_[i] / denom) * (coeffs_[i] / denom);
        }
        return std::sqrt(sum);
    }

    Vector step(double lambda) const {
        const Vector& mu = eig_.eigenvalues();
        Vector scaled(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            scaled[i] = coeffs_[i] == 0.0 ? 0.0 : -coeffs_[i] / (mu[i] + lambda);
        return eig_.eigenvectors() * scaled;
    }

private:
    Eigen::SelfAdjointEigenSolver<Matrix> eig_;
    Vector coeffs_;
};

} // namespace detail

/// Cubic Newton step via bisection on the regularization: finds
/// lambda* >= 0 with lambda* ~= H |s(lambda*)|. The bracket starts at
/// sqrt(H |g|) and doubles until H |s(hi)| <= hi.
inline CubicStep cubic_newton_step(const ObjectiveOracle& oracle, const Vector& x, const CubicConfig& cfg) {
    const Vector g = oracle.gradient(x);
    const double gnorm = g.norm();
    if (gnorm == 0.0)
        return {x, 0.0, 0};
    const double h = cfg.h_const;
    const detail::ShiftedStepNorm step_norm(oracle.hessian(x), g);
    auto gap = [&](double lambda) { return lambda - h * step_norm(lambda); };
    auto converged = [&](double lambda, double value) {
        return std::abs(value) <= cfg.bisect_tol * std::max(1.0, lambda);
    };

    int evals = 0;
    double hi = std::sqrt(h * gnorm);
    double gap_hi = gap(hi);
    ++evals;
    while (gap_hi < 0.0) {
        if (evals >= cfg.bisect_max)
            throw BisectFail("cubic_newton_step: bracket not found");
        hi *= 2.0;
        gap_hi = gap(hi);
        ++evals;
    }
    double lambda = hi;
    double value = gap_hi;
    double lo = 0.0;
    while (!converged(lambda, value)) {
        // Collapsed bracket: keep the side with lambda >= H |s(lambda)|.
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) {
            lambda = hi;
            break;
        }
        if (evals >= cfg.bisect_max)
            throw BisectFail("cubic_newton_step: no fixed point after " + std::to_string(evals) + " evaluations");
        lambda = 0.5 * (lo + hi);
        value = gap(lambda);
        ++evals;
        if (value < 0.0)
            lo = lambda;
        else
            hi = lambda;
    }
    return {x + step_norm.step(lambda), lambda, evals};
}

inline RunResult run_cubic_newton(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg,
                                  const CubicConfig& ccfg) {
    detail::Stopwatch clock;
    RunResult out;
    Vector x = x0;
    long steps = 0;
    for (int k = 0;; ++k) {
        const double f = oracle.value(x);
        const double gnorm = oracle.gradient(x).norm();
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, ccfg.h_const, 0, steps, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        CubicStep step;
        try {
            step = cubic_newton_step(oracle, x, ccfg);
        } catch (const BisectFail& e) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, ccfg.h_const, 0, steps, clock));
            out.status = RunStatus::line_search_stalled;
            out.message = e.what();
            break;
        } catch (const SingularSystem& e) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, ccfg.h_const, 0, steps, clock));
            out.status = RunStatus::singular_system;
            out.message = e.what();
            break;
        }
        steps += step.evaluations;
        const double r = (step.x_next - x).norm();
        out.trace.push_back(
            detail::make_record(k, f, gnorm, step.lambda_star, r, ccfg.h_const, step.evaluations, steps, clock));
        x = std::move(step.x_next);
    }
    out.final_x = std::move(x);
    return out;
}

} // namespace regnewton
