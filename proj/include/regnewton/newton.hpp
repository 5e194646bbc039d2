#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "oracles.hpp"
#include "trace.hpp"

namespace regnewton {

/// Settings shared by the gradient-regularized Newton solvers.
struct SolverConfig {
    double h_const = 1.0;  // fixed H of run_reg_newton
    double h0 = 1.0;       // initial estimate for the adaptive variants
    double grad_tol = 1e-8;
    int max_iters = 1000;
    int max_inner = 60;    // cap on regularization doublings per AdaN iteration
    bool check_invariants = false;

    void validate() const {
        if (!(h_const > 0.0) || !(h0 > 0.0) || !(grad_tol > 0.0) || max_iters < 1 || max_inner < 1)
            throw DimensionMismatch("SolverConfig: h_const, h0, grad_tol, max_iters and max_inner must be positive");
    }
};

struct NewtonState {
    Vector x;
    int k = 0;
    double h_k = 1.0;
    long newton_steps = 0;
    std::optional<Vector> prev_x;
};

struct RegularizedStep {
    Vector x_next;
    double lambda = 0.0;
    double r = 0.0;
};

namespace detail {

// Relative tolerances for the per-step inequality audit.
inline constexpr double kEq8Tol = 1e-12;
inline constexpr double kGradBoundTol = 1e-8;
inline constexpr double kDescentTol = 1e-12;

/// Solves (hess + lambda I) s = -g.
inline Vector regularized_direction(const DenseSymmetricMatrix& hess, double lambda, const Vector& g) {
    return shifted_solve(hess, lambda, -g).solution;
}

/// |lambda s + g + hess s|, the residual of the step identity.
inline double step_identity_residual(const DenseSymmetricMatrix& hess, double lambda, const Vector& g,
                                     const Vector& s) {
    return (lambda * s + g + hess * s).norm();
}

/// Audit of one regularized Newton step from x (f, g, hess) to x + s.
struct StepAudit {
    double f = 0.0;
    const Vector* g = nullptr;
    const DenseSymmetricMatrix* hess = nullptr;
    double lambda = 0.0;
    const Vector* s = nullptr;
    double f_next = 0.0;
    double g_next_norm = 0.0;
};

// Identity and lambda*r bound hold for any lambda >= 0.
inline void audit_any_lambda(std::vector<InvariantViolation>& out, int k, const StepAudit& a) {
    const double gnorm = a.g->norm();
    const double r = a.s->norm();
    check_le(out, k, "lemma1_identity", step_identity_residual(*a.hess, a.lambda, *a.g, *a.s),
             kIdentityTol * std::max(1.0, gnorm));
    check_le(out, k, "lambda_r_le_grad", a.lambda * r, gnorm * (1.0 + kLambdaRTol));
}

// The rest need convexity and H at least the true constant.
inline void audit_convex(std::vector<InvariantViolation>& out, int k, const StepAudit& a, double h) {
    const double gnorm = a.g->norm();
    const double r = a.s->norm();
    check_le(out, k, "eq8_hr_le_lambda", h * r, a.lambda * (1.0 + kEq8Tol));
    check_le(out, k, "eq9_grad_bound", a.g_next_norm, 2.0 * a.lambda * r * (1.0 + kGradBoundTol));
    check_le(out, k, "eq10_descent", a.f_next,
             a.f - 2.0 / 3.0 * a.lambda * r * r + kDescentTol * std::abs(a.f));
    check_le(out, k, "no_blowup", a.g_next_norm, 2.0 * gnorm * (1.0 + kGradBoundTol));
}

inline TraceRecord make_record(int k, double f, double gnorm, double lambda, double r, double h, int inner,
                               long steps, const Stopwatch& clock) {
    return TraceRecord{k, f, gnorm, lambda, r, h, inner, steps, clock.elapsed_ms()};
}

} // namespace detail

/// One step x -> x - (Hess f(x) + lambda I)^{-1} grad f(x) with
/// lambda = sqrt(h |grad f(x)|). A stationary x is returned unchanged.
inline RegularizedStep reg_newton_step(const ObjectiveOracle& oracle, const Vector& x, double h) {
    const Vector g = oracle.gradient(x);
    const double gnorm = g.norm();
    if (gnorm == 0.0)
        return {x, 0.0, 0.0};
    const double lambda = std::sqrt(h * gnorm);
    const Vector s = detail::regularized_direction(oracle.hessian(x), lambda, g);
    return {x + s, lambda, s.norm()};
}

/// Fixed-H gradient-regularized Newton method.
///
/// With check_invariants set, every step is audited against the step identity,
/// H r_k <= lambda_k, |grad f(x^{k+1})| <= 2 lambda_k r_k, the descent bound
/// f(x^{k+1}) <= f(x^k) - 2/3 lambda_k r_k^2 and the no-blow-up bound. The
/// last four only hold for convex f with h_const at least the true constant;
/// violations are recorded, never raised.
inline RunResult run_reg_newton(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    detail::Stopwatch clock;
    RunResult out;
    Vector x = x0;
    double f = oracle.value(x);
    Vector g = oracle.gradient(x);
    long steps = 0;

    for (int k = 0;; ++k) {
        const double gnorm = g.norm();
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, cfg.h_const, 0, steps, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        const DenseSymmetricMatrix hess = oracle.hessian(x);
        const double lambda = std::sqrt(cfg.h_const * gnorm);
        Vector s;
        try {
            s = detail::regularized_direction(hess, lambda, g);
        } catch (const SingularSystem& e) {
            out.trace.push_back(detail::make_record(k, f, gnorm, lambda, 0.0, cfg.h_const, 1, steps, clock));
            out.status = RunStatus::singular_system;
            out.message = e.what();
            break;
        }
        ++steps;
        Vector x_next = x + s;
        const double f_next = oracle.value(x_next);
        Vector g_next = oracle.gradient(x_next);
        const double r = s.norm();

        if (cfg.check_invariants) {
            const detail::StepAudit audit{f, &g, &hess, lambda, &s, f_next, g_next.norm()};
            detail::audit_any_lambda(out.invariant_violations, k, audit);
            detail::audit_convex(out.invariant_violations, k, audit, cfg.h_const);
        }
        out.trace.push_back(detail::make_record(k, f, gnorm, lambda, r, cfg.h_const, 1, steps, clock));
        x = std::move(x_next);
        f = f_next;
        g = std::move(g_next);
    }
    out.final_x = std::move(x);
    return out;
}

namespace detail {

struct AdanOutcome {
    Vector x_next;
    double f_next = 0.0;
    Vector g_next;
    double h = 0.0;
    double lambda = 0.0;
    double r = 0.0;
    int inner = 0;
};

// Inner loop of AdaN at x with cached f, g and Hessian.
inline AdanOutcome adan_inner(const ObjectiveOracle& oracle, const Vector& x, double f, const Vector& g,
                              const DenseSymmetricMatrix& hess, double h_prev, int max_inner) {
    const double gnorm = g.norm();
    double h = h_prev / 4.0;
    for (int n = 1; n <= max_inner; ++n) {
        h *= 2.0;
        const double lambda = std::sqrt(h * gnorm);
        Vector s;
        try {
            s = regularized_direction(hess, lambda, g);
        } catch (const SingularSystem&) {
            continue; // a larger lambda can only improve conditioning
        }
        Vector x_plus = x + s;
        const double r = s.norm();
        Vector g_plus = oracle.gradient(x_plus);
        const double f_plus = oracle.value(x_plus);
        if (g_plus.norm() <= 2.0 * lambda * r && f_plus <= f - 2.0 / 3.0 * lambda * r * r)
            return {std::move(x_plus), f_plus, std::move(g_plus), h, lambda, r, n};
    }
    throw LineSearchStalled("AdaN: no acceptable regularization after " + std::to_string(max_inner) +
                            " doublings (last H = " + std::to_string(h) + ")");
}

} // namespace detail

/// One AdaN iteration: starts from H_{k-1}/4 and doubles H until both the
/// gradient bound and the descent bound hold at the trial point.
inline std::pair<NewtonState, TraceRecord> adan_step(const ObjectiveOracle& oracle, const NewtonState& state,
                                                     const SolverConfig& cfg) {
    cfg.validate();
    detail::Stopwatch clock;
    const double f = oracle.value(state.x);
    const Vector g = oracle.gradient(state.x);
    const auto out =
        detail::adan_inner(oracle, state.x, f, g, oracle.hessian(state.x), state.h_k, cfg.max_inner);

    NewtonState next;
    next.prev_x = state.x;
    next.x = out.x_next;
    next.k = state.k + 1;
    next.h_k = out.h;
    next.newton_steps = state.newton_steps + out.inner;
    const TraceRecord rec =
        detail::make_record(state.k, f, g.norm(), out.lambda, out.r, out.h, out.inner, next.newton_steps, clock);
    return {std::move(next), rec};
}

/// Cheap initial H estimate from a probe point y = x0 + scale * u, where u
/// is a fixed unit vector with positive entries:
///   |grad f(y) - grad f(x0) - Hess f(x0)(y - x0)| / |y - x0|^2,
/// floored at 1e-12.
inline double adan_h0_init(const ObjectiveOracle& oracle, const Vector& x0, double perturbation_scale,
                           unsigned seed = 0) {
    if (!(perturbation_scale > 0.0))
        throw DimensionMismatch("adan_h0_init: perturbation_scale must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Vector u(x0.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        u[i] = unif(rng);
    u.normalize();
    const Vector y = x0 + perturbation_scale * u;
    const Vector dy = y - x0;
    const Vector err = oracle.gradient(y) - oracle.gradient(x0) - oracle.hessian(x0) * dy;
    return std::max(err.norm() / dy.squaredNorm(), 1e-12);
}

/// AdaN driver. Each trace record stores n_k (inner_count), N_k
/// (newton_steps_cum) and the accepted H_k.
inline RunResult run_adan(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    detail::Stopwatch clock;
    RunResult out;
    Vector x = x0;
    double f = oracle.value(x);
    Vector g = oracle.gradient(x);
    double h = cfg.h0;
    long steps = 0;

    for (int k = 0;; ++k) {
        const double gnorm = g.norm();
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, h, 0, steps, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        const DenseSymmetricMatrix hess = oracle.hessian(x);
        detail::AdanOutcome step;
        try {
            step = detail::adan_inner(oracle, x, f, g, hess, h, cfg.max_inner);
        } catch (const LineSearchStalled& e) {
            steps += cfg.max_inner;
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, h, cfg.max_inner, steps, clock));
            out.status = RunStatus::line_search_stalled;
            out.message = e.what();
            break;
        }
        steps += step.inner;

        if (cfg.check_invariants) {
            const Vector s = step.x_next - x;
            // Recompute the acceptance quantities from scratch.
            const double f_check = oracle.value(step.x_next);
            const double g_check = oracle.gradient(step.x_next).norm();
            const double r = s.norm();
            detail::check_le(out.invariant_violations, k, "adan_accept_grad", g_check, 2.0 * step.lambda * r);
            detail::check_le(out.invariant_violations, k, "adan_accept_descent", f_check,
                             f - 2.0 / 3.0 * step.lambda * r * r);
            detail::audit_any_lambda(out.invariant_violations, k,
                                     {f, &g, &hess, step.lambda, &s, f_check, g_check});
        }
        out.trace.push_back(detail::make_record(k, f, gnorm, step.lambda, step.r, step.h, step.inner, steps, clock));
        h = step.h;
        x = std::move(step.x_next);
        f = step.f_next;
        g = std::move(step.g_next);
    }
    out.final_x = std::move(x);
    return out;
}

/// Local smoothness estimate
///   |grad f(x_curr) - grad f(x_prev) - Hess f(x_prev)(x_curr - x_prev)| / |x_curr - x_prev|^2.
inline double adan_plus_mk(const ObjectiveOracle& oracle, const Vector& x_prev, const Vector& x_curr) {
    const Vector dx = x_curr - x_prev;
    const double dist = dx.norm();
    if (dist < 1e-14)
        throw DegenerateStep("adan_plus_mk: |x_curr - x_prev| = " + std::to_string(dist));
    const Vector err = oracle.gradient(x_curr) - oracle.gradient(x_prev) - oracle.hessian(x_prev) * dx;
    return err.norm() / (dist * dist);
}

/// AdaN+: H_k = max(M_k, H_{k-1} / 2) with one linear solve per iteration.
/// x^1 comes from one fixed-H step with h = cfg.h0; H_0 is the smoothness
/// estimate on (x^0, x^1), floored at 1e-12.
inline RunResult run_adan_plus(const ObjectiveOracle& oracle, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    detail::Stopwatch clock;
    RunResult out;
    Vector x = x0;
    double f = oracle.value(x);
    Vector g = oracle.gradient(x);
    long steps = 0;
    double h = cfg.h0;
    std::optional<Vector> x_prev;

    for (int k = 0;; ++k) {
        const double gnorm = g.norm();
        if (gnorm <= cfg.grad_tol || k == cfg.max_iters) {
            out.trace.push_back(detail::make_record(k, f, gnorm, 0.0, 0.0, h, 0, steps, clock));
            out.status = gnorm <= cfg.grad_tol ? RunStatus::converged : RunStatus::max_iters;
            break;
        }
        if (x_prev) {
            const double h_prev = h;
            double mk = 0.0;
            bool degenerate = false;
            try {
                mk = adan_plus_mk(oracle, *x_prev, x);
            } catch (const DegenerateStep&) {
                degenerate = true;
            }
            if (k == 1) {
                h = degenerate ? h_prev : std::max(mk, 1e-12); // H_0
            }
            if (!degenerate) {
                const double h_before = h;
                h = std::max(mk, h_before / 2.0);
                if (cfg.check_invariants) {
                    detail::check_le(out.invariant_violations, k, "adan_plus_half_law", h_before / 2.0, h);
                    detail::check_le(out.invariant_violations, k, "adan_plus_mk_law", mk, h);
                }
            }
        }
        const DenseSymmetricMatrix hess = oracle.hessian(x);
        const double lambda = std::sqrt(h * gnorm);
        Vector s;
        try {
            s = detail::regularized_direction(hess, lambda, g);
        } catch (const SingularSystem& e) {
            out.trace.push_back(detail::make_record(k, f, gnorm, lambda, 0.0, h, 1, steps, clock));
            out.status = RunStatus::singular_system;
            out.message = e.what();
            break;
        }
        ++steps;
        Vector x_next = x + s;
        const double f_next = oracle.value(x_next);
        Vector g_next = oracle.gradient(x_next);
        if (cfg.check_invariants)
            detail::audit_any_lambda(out.invariant_violations, k, {f, &g, &hess, lambda, &s, f_next, g_next.norm()});
        out.trace.push_back(detail::make_record(k, f, gnorm, lambda, s.norm(), h, 1, steps, clock));
        x_prev = std::move(x);
        x = std::move(x_next);
        f = f_next;
        g = std::move(g_next);
    }
    out.final_x = std::move(x);
    return out;
}

/// For every k whose gradient norm is at most mu^2 / (4h) and that has a
/// successor, reports whether |g_{k+1}| <= (2 sqrt(h) / mu) |g_k|^{3/2}.
inline std::vector<bool> superlinear_monitor(const std::vector<TraceRecord>& trace, double mu, double h) {
    std::vector<bool> out;
    if (!(mu > 0.0) || !(h > 0.0))
        throw DimensionMismatch("superlinear_monitor: mu and h must be positive");
    const double trigger = mu * mu / (4.0 * h);
    const double factor = 2.0 * std::sqrt(h) / mu;
    for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
        const double gk = trace[k].grad_norm;
        if (gk <= trigger)
            out.push_back(trace[k + 1].grad_norm <= factor * std::pow(gk, 1.5));
    }
    return out;
}

/// Upper bound on the cumulative Newton-step count of AdaN after k + 1
/// iterations: 2(k + 1) + max(0, log2(2H / H0)).
inline double adan_step_bound(int k, double h_true, double h0) {
    return 2.0 * (k + 1) + std::max(0.0, std::log2(2.0 * h_true / h0));
}

} // namespace regnewton
