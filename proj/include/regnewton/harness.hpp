#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "baselines.hpp"
#include "data_io.hpp"
#include "errors.hpp"
#include "lm.hpp"
#include "newton.hpp"
#include "oracles.hpp"
#include "run_spec.hpp"
#include "trace.hpp"

namespace regnewton {

// Rate analysis ---------------------------------------------------------------

struct RateWindow {
    int k_lo = 1;
    int k_hi = 1;
};

/// Least-squares fit of log(f_k - f*) against log k.
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    RateWindow window;
    double r_squared = 0.0;
};

inline RateFit fit_rate(const std::vector<TraceRecord>& trace, double f_star, RateWindow window) {
    std::vector<double> xs, ys;
    for (const auto& rec : trace) {
        if (rec.k < std::max(window.k_lo, 1) || rec.k > window.k_hi)
            continue;
        const double gap = rec.f - f_star;
        if (!(gap > 0.0))
            throw DegenerateWindow("fit_rate: f - f* = " + std::to_string(gap) + " at k = " + std::to_string(rec.k));
        xs.push_back(std::log(static_cast<double>(rec.k)));
        ys.push_back(std::log(gap));
    }
    if (xs.size() < 3)
        throw DegenerateWindow("fit_rate: need at least 3 points, window has " + std::to_string(xs.size()));

    const auto m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.window = window;
    fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    return fit;
}

/// Middle two quartiles of the iterations before the superlinear phase. The
/// phase starts at the first k where |g_{k+1}| / |g_k| < 1e-2.
inline RateWindow default_rate_window(const std::vector<TraceRecord>& trace) {
    int phase = trace.empty() ? 0 : trace.back().k;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        if (trace[i].grad_norm > 0.0 && trace[i + 1].grad_norm / trace[i].grad_norm < 1e-2) {
            phase = trace[i].k;
            break;
        }
    }
    const int span = std::max(phase - 1, 0);
    return {1 + span / 4, 1 + (3 * span) / 4};
}

/// Iterates a_{k+1} = a_k - 2/3 a_k^{3/2} from a0 and checks
/// a_{k+1} <= 1 / (1 + k/3)^2 for every k < steps.
inline bool prop1_oracle_check(double alpha0, int steps) {
    double a = alpha0;
    for (int k = 0; k < steps; ++k) {
        a = a - 2.0 / 3.0 * std::pow(a, 1.5);
        const double bound = 1.0 / ((1.0 + k / 3.0) * (1.0 + k / 3.0));
        if (!(a <= bound))
            return false;
    }
    return true;
}

struct IterationPartition {
    std::vector<int> steady; // |g_{i+1}| >= |g_i| / 4
    std::vector<int> sharp;
    std::vector<int> blowup; // |g_{i+1}| > 2 |g_i| (1 + 1e-8)
};

inline IterationPartition steady_sharp_partition(const std::vector<TraceRecord>& trace) {
    IterationPartition out;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
        const double g = trace[i].grad_norm;
        const double g_next = trace[i + 1].grad_norm;
        (g_next >= 0.25 * g ? out.steady : out.sharp).push_back(trace[i].k);
        if (!(g_next <= 2.0 * g * (1.0 + 1e-8)))
            out.blowup.push_back(trace[i].k);
    }
    return out;
}

// Running a RunSpec -------------------------------------------------------------

struct BuiltProblem {
    std::optional<ObjectiveOracle> objective;
    std::optional<LeastSquaresOracle> least_squares;
    Vector x0;
};

/// Builds the oracle and default starting point of a spec:
/// quadratic diag(1..d) with b = 1 from 0; logistic from 1 (data from the
/// dataset file or synthetic); log-sum-exp from 0; cubic worst case from 0;
/// least squares x_i^2 - 1 from 2.
inline BuiltProblem build_problem(const RunSpec& spec) {
    BuiltProblem out;
    const auto d = static_cast<Eigen::Index>(spec.dim);
    switch (spec.problem) {
    case ProblemKind::quadratic: {
        Vector diag(d);
        for (Eigen::Index i = 0; i < d; ++i)
            diag[i] = static_cast<double>(i + 1);
        out.objective = make_quadratic(DenseSymmetricMatrix::diagonal(diag), Vector::Ones(d));
        out.x0 = Vector::Zero(d);
        break;
    }
    case ProblemKind::logistic: {
        Matrix a;
        Vector b;
        if (!spec.dataset.empty()) {
            LibsvmOptions opts;
            opts.remap_two_class = spec.remap_labels;
            std::tie(a, b) = to_dense(load_libsvm(spec.dataset, opts));
        } else {
            std::tie(a, b) = gen_logistic_instance(spec.samples, spec.dim, spec.seed);
        }
        const double reg = spec.reg.value_or(
            1e-10 * spectral_norm_estimate(DenseSymmetricMatrix(Matrix(a.transpose() * a)), 1000) /
            static_cast<double>(a.rows()));
        out.x0 = Vector::Ones(a.cols());
        out.objective = make_logistic(std::move(a), std::move(b), reg);
        break;
    }
    case ProblemKind::logsumexp: {
        auto [a, b] = gen_logsumexp_instance(spec.samples, spec.dim, spec.seed);
        ProblemMetadata meta;
        meta.hessian_lipschitz = logsumexp_h_estimate(a, spec.rho);
        meta.gradient_lipschitz =
            spectral_norm_estimate(DenseSymmetricMatrix(Matrix(a.transpose() * a)), 1000) / spec.rho;
        out.objective = make_logsumexp(std::move(a), std::move(b), spec.rho, meta);
        out.x0 = Vector::Zero(d);
        break;
    }
    case ProblemKind::cubic_worstcase:
        out.objective = make_cubic_norm_worstcase(spec.dim);
        out.x0 = Vector::Zero(d);
        break;
    case ProblemKind::least_squares:
        out.least_squares = make_componentwise_quadratic(Vector::Ones(d));
        out.x0 = Vector::Constant(d, 2.0);
        break;
    }
    return out;
}

struct RunSummary {
    RunStatus status = RunStatus::max_iters;
    int iterations = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    std::size_t violations = 0;
    long newton_steps = 0;
    std::string message;
};

struct RunOutcome {
    RunSummary summary;
    std::variant<RunResult, LMRunResult> result;

    void write_trace(const std::string& path) const {
        std::visit([&](const auto& r) { write_trace_csv(r.trace, path); }, result);
    }
    void write_trace(std::ostream& out) const {
        std::visit([&](const auto& r) { write_trace_csv(r.trace, out); }, result);
    }
};

namespace detail {

inline double default_lipschitz(const RunSpec& spec, const ObjectiveOracle& o, const Vector& x0) {
    if (spec.lipschitz)
        return *spec.lipschitz;
    if (o.metadata.gradient_lipschitz && *o.metadata.gradient_lipschitz > 0.0)
        return *o.metadata.gradient_lipschitz;
    // Local curvature at the start point for problems without a global L.
    return std::max(spectral_norm_estimate(o.hessian(x0), 1000), 1e-12);
}

inline double default_h(const RunSpec& spec, const ObjectiveOracle& o) {
    if (spec.h)
        return *spec.h;
    if (o.metadata.hessian_lipschitz && *o.metadata.hessian_lipschitz > 0.0)
        return *o.metadata.hessian_lipschitz;
    return 1.0;
}

} // namespace detail

/// Runs one spec end to end. Configuration problems raise ConfigError;
/// solver failures are reported through the status.
inline RunOutcome execute(const RunSpec& spec) {
    spec.validate();
    const BuiltProblem built = build_problem(spec);
    RunOutcome out;

    if (spec.method == MethodKind::lm) {
        LMConfig cfg;
        cfg.c_const = spec.c.value_or(1.0);
        cfg.grad_tol = spec.tol;
        cfg.max_iters = spec.max_iters;
        cfg.check_invariants = spec.check_invariants;
        LMRunResult r = run_lm(*built.least_squares, built.x0, cfg);
        const auto& last = r.trace.back();
        out.summary = {r.status, last.k, 0.5 * last.residual_norm * last.residual_norm, last.grad_norm,
                       r.invariant_violations.size(), static_cast<long>(last.k), r.message};
        out.result = std::move(r);
        return out;
    }

    const ObjectiveOracle& o = *built.objective;
    SolverConfig cfg;
    cfg.h_const = detail::default_h(spec, o);
    cfg.h0 = spec.h0;
    cfg.grad_tol = spec.tol;
    cfg.max_iters = spec.max_iters;
    cfg.check_invariants = spec.check_invariants;

    RunResult r;
    switch (spec.method) {
    case MethodKind::reg_newton:
        r = run_reg_newton(o, built.x0, cfg);
        break;
    case MethodKind::adan:
        r = run_adan(o, built.x0, cfg);
        break;
    case MethodKind::adan_plus:
        r = run_adan_plus(o, built.x0, cfg);
        break;
    case MethodKind::gd:
        r = run_gd(o, built.x0, detail::default_lipschitz(spec, o, built.x0), cfg);
        break;
    case MethodKind::agd_restart:
        r = agd_restart_run(o, built.x0, detail::default_lipschitz(spec, o, built.x0), cfg);
        break;
    case MethodKind::gd_armijo:
        r = run_gd_armijo(o, built.x0, cfg);
        break;
    case MethodKind::newton_armijo:
        r = run_newton_armijo(o, built.x0, cfg);
        break;
    case MethodKind::cubic_newton: {
        CubicConfig ccfg;
        ccfg.h_const = cfg.h_const;
        r = run_cubic_newton(o, built.x0, cfg, ccfg);
        break;
    }
    case MethodKind::lm:
        break;
    }
    const auto& last = r.trace.back();
    out.summary = {r.status, last.k, last.f, last.grad_norm, r.invariant_violations.size(), last.newton_steps_cum,
                   r.message};
    out.result = std::move(r);
    return out;
}

// Experiment batches ------------------------------------------------------------

enum class ExperimentKind { logreg_mushrooms, logreg_w8a, logsumexp_rho };

inline std::optional<ExperimentKind> parse_experiment(std::string_view s) {
    if (s == "logreg_mushrooms")
        return ExperimentKind::logreg_mushrooms;
    if (s == "logreg_w8a")
        return ExperimentKind::logreg_w8a;
    if (s == "logsumexp_rho")
        return ExperimentKind::logsumexp_rho;
    return std::nullopt;
}

struct ExperimentParams {
    std::string dataset;     // LIBSVM file, required for the logreg variants
    double rho = 0.5;
    std::uint64_t seed = 1;
    std::size_t samples = 500;
    std::size_t dim = 200;
    int max_iters = 500;
    double tol = 1e-6;
    std::string output_dir = ".";
};

/// Methods compared in every experiment batch.
inline constexpr std::array<MethodKind, 8> kExperimentRoster{
    MethodKind::gd,     MethodKind::agd_restart,   MethodKind::cubic_newton, MethodKind::reg_newton,
    MethodKind::gd_armijo, MethodKind::newton_armijo, MethodKind::adan,       MethodKind::adan_plus,
};

struct ExperimentRow {
    MethodKind method = MethodKind::reg_newton;
    RunSummary summary;
    std::string trace_path;
};

inline constexpr std::string_view kSummaryHeader = "method,status,iters,final_grad_norm,newton_steps,violations";

/// Runs the whole roster on one experiment setup. Writes <method>.csv per run
/// plus summary.csv into output_dir. A failing method is recorded in the
/// summary and does not stop the batch.
inline std::vector<ExperimentRow> reproduce_experiment(ExperimentKind kind, const ExperimentParams& params) {
    RunSpec base;
    base.seed = params.seed;
    base.max_iters = params.max_iters;
    base.tol = params.tol;
    if (kind == ExperimentKind::logsumexp_rho) {
        base.problem = ProblemKind::logsumexp;
        base.rho = params.rho;
        base.samples = params.samples;
        base.dim = params.dim;
    } else {
        if (params.dataset.empty())
            throw ConfigError("logistic regression experiments need a dataset file");
        base.problem = ProblemKind::logistic;
        base.dataset = params.dataset;
        base.remap_labels = true;
    }

    std::filesystem::create_directories(params.output_dir);
    std::vector<ExperimentRow> rows;
    for (const MethodKind m : kExperimentRoster) {
        RunSpec spec = base;
        spec.method = m;
        ExperimentRow row;
        row.method = m;
        row.trace_path = (std::filesystem::path(params.output_dir) / (std::string(to_string(m)) + ".csv")).string();
        try {
            const RunOutcome outcome = execute(spec);
            row.summary = outcome.summary;
            outcome.write_trace(row.trace_path);
        } catch (const Error& e) {
            row.summary.status = RunStatus::singular_system;
            row.summary.message = e.what();
            write_trace_csv(std::vector<TraceRecord>{}, row.trace_path);
        }
        rows.push_back(std::move(row));
    }

    const auto summary_path = std::filesystem::path(params.output_dir) / "summary.csv";
    std::ofstream out(summary_path);
    if (!out)
        throw IoError("cannot write " + summary_path.string());
    out << kSummaryHeader << '\n';
    for (const auto& row : rows) {
        out << to_string(row.method) << ',' << to_string(row.summary.status) << ',' << row.summary.iterations << ','
            << detail::format_real(row.summary.grad_norm) << ',' << row.summary.newton_steps << ','
            << row.summary.violations << '\n';
    }
    return rows;
}

} // namespace regnewton
