#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "regnewton/regnewton.hpp"

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitMaxIters = 2;
constexpr int kExitSolverError = 3;
constexpr int kExitUsage = 64;

int exit_code(regnewton::RunStatus s) {
    switch (s) {
    case regnewton::RunStatus::converged:
        return kExitConverged;
    case regnewton::RunStatus::max_iters:
        return kExitMaxIters;
    default:
        return kExitSolverError;
    }
}

} // namespace

int main(int argc, char** argv) {
    using namespace regnewton;

    CLI::App app{"Regularized Newton solvers and experiment runner"};
    std::string problem = "quadratic";
    std::string method = "reg_newton";
    std::string config_path;
    std::string experiment;
    std::string out_dir = ".";
    std::optional<double> h, c, lipschitz, reg;
    std::optional<std::string> dataset;
    std::optional<std::size_t> dim, samples;
    std::optional<double> rho, h0, tol;
    std::optional<int> max_iters;
    std::optional<std::uint64_t> seed;
    bool check_invariants = false;
    bool remap_labels = false;
    std::string out_path;

    app.add_option("--config", config_path, "key=value run spec file; flags override it");
    app.add_option("--problem", problem, "logistic|logsumexp|quadratic|cubic_worstcase|least_squares");
    app.add_option("--method", method,
                   "reg_newton|adan|adan_plus|lm|gd|gd_armijo|newton_armijo|agd_restart|cubic_newton");
    app.add_option("--dataset", dataset, "LIBSVM file for logistic regression");
    app.add_flag("--remap-labels", remap_labels, "map two arbitrary class labels to {0,1}");
    app.add_option("--dim", dim, "problem dimension");
    app.add_option("--n", samples, "number of synthetic samples");
    app.add_option("--rho", rho, "log-sum-exp smoothing");
    app.add_option("--reg", reg, "logistic l2 weight");
    app.add_option("--H", h, "Hessian Lipschitz constant");
    app.add_option("--c", c, "Levenberg-Marquardt constant");
    app.add_option("--L", lipschitz, "gradient Lipschitz constant for gd/agd_restart");
    app.add_option("--h0", h0, "initial H estimate for adan/adan_plus");
    app.add_option("--tol", tol, "gradient norm tolerance");
    app.add_option("--max-iters", max_iters, "iteration limit");
    app.add_option("--seed", seed, "random seed");
    app.add_flag("--check-invariants", check_invariants, "audit per-step invariants");
    app.add_option("--out", out_path, "trace CSV path");
    app.add_option("--experiment", experiment, "logreg_mushrooms|logreg_w8a|logsumexp_rho");
    app.add_option("--out-dir", out_dir, "output directory for --experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitUsage;
    }

    try {
        if (!experiment.empty()) {
            const auto kind = parse_experiment(experiment);
            if (!kind)
                throw ConfigError("unknown experiment '" + experiment + "'");
            ExperimentParams params;
            params.dataset = dataset.value_or("");
            if (rho)
                params.rho = *rho;
            if (seed)
                params.seed = *seed;
            if (samples)
                params.samples = *samples;
            if (dim)
                params.dim = *dim;
            if (max_iters)
                params.max_iters = *max_iters;
            if (tol)
                params.tol = *tol;
            params.output_dir = out_dir;
            if (!params.dataset.empty() && !std::filesystem::exists(params.dataset))
                throw ConfigError("dataset file not found: " + params.dataset);
            for (const auto& row : reproduce_experiment(*kind, params))
                std::cout << "method=" << to_string(row.method) << " status=" << to_string(row.summary.status)
                          << " iters=" << row.summary.iterations << " grad_norm=" << row.summary.grad_norm
                          << " violations=" << row.summary.violations << '\n';
            return kExitConverged;
        }

        RunSpec spec = config_path.empty() ? RunSpec{} : load_run_spec(config_path);
        if (config_path.empty() || app.count("--problem")) {
            const auto p = parse_problem(problem);
            if (!p)
                throw ConfigError("unknown problem '" + problem + "'");
            spec.problem = *p;
        }
        if (config_path.empty() || app.count("--method")) {
            const auto m = parse_method(method);
            if (!m)
                throw ConfigError("unknown method '" + method + "'");
            spec.method = *m;
        }
        if (dataset)
            spec.dataset = *dataset;
        if (remap_labels)
            spec.remap_labels = true;
        if (dim)
            spec.dim = *dim;
        if (samples)
            spec.samples = *samples;
        if (rho)
            spec.rho = *rho;
        if (reg)
            spec.reg = reg;
        if (h)
            spec.h = h;
        if (c)
            spec.c = c;
        if (lipschitz)
            spec.lipschitz = lipschitz;
        if (h0)
            spec.h0 = *h0;
        if (tol)
            spec.tol = *tol;
        if (max_iters)
            spec.max_iters = *max_iters;
        if (seed)
            spec.seed = *seed;
        if (check_invariants)
            spec.check_invariants = true;
        if (!out_path.empty())
            spec.output_path = out_path;
        spec.validate();

        const RunOutcome outcome = execute(spec);
        if (!spec.output_path.empty())
            outcome.write_trace(spec.output_path);
        const RunSummary& s = outcome.summary;
        std::cout << "status=" << to_string(s.status) << " iters=" << s.iterations << " f=" << detail::format_real(s.f)
                  << " grad_norm=" << detail::format_real(s.grad_norm) << " violations=" << s.violations << '\n';
        if (!s.message.empty())
            std::cerr << s.message << '\n';
        return exit_code(s.status);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolverError;
    }
}
