#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace regnewton {

enum class RunStatus { converged, max_iters, line_search_stalled, singular_system };

inline const char* to_string(RunStatus s) {
    switch (s) {
    case RunStatus::converged:
        return "converged";
    case RunStatus::max_iters:
        return "max_iters";
    case RunStatus::line_search_stalled:
        return "line_search_stalled";
    case RunStatus::singular_system:
        return "singular_system";
    }
    return "unknown";
}

/// One row of a minimization trace. Record k describes the iterate x^k and the
/// step taken from it; the final record of a run has lambda = step_norm = 0.
///
/// h_k holds the curvature scale a method works with: H for the regularized
/// Newton family and cubic Newton, L for constant-step gradient methods and
/// 1/alpha for Armijo methods.
struct TraceRecord {
    int k = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    double lambda = 0.0;
    double step_norm = 0.0;
    double h_k = 0.0;
    int inner_count = 0;
    long newton_steps_cum = 0;
    double wall_ms = 0.0;
};

/// One row of a Levenberg-Marquardt trace; grad_norm is |J^T F|.
struct LMTraceRecord {
    int k = 0;
    double residual_norm = 0.0;
    double grad_norm = 0.0;
    double lambda = 0.0;
    double step_norm = 0.0;
    double c_k = 0.0;
};

struct InvariantViolation {
    int k = 0;
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
};

template <class Record>
struct BasicRunResult {
    Vector final_x;
    std::vector<Record> trace;
    RunStatus status = RunStatus::max_iters;
    std::vector<InvariantViolation> invariant_violations;
    std::string message;
};

using RunResult = BasicRunResult<TraceRecord>;

struct LMRunResult : BasicRunResult<LMTraceRecord> {
    /// min_{t <= k} |J_t^T F(x^t)|, one entry per trace record.
    std::vector<double> min_grad_norm;
};

namespace detail {

// Tolerances shared by the step audits of the Newton and LM families.
inline constexpr double kIdentityTol = 1e-8;
inline constexpr double kLambdaRTol = 1e-10;

class Stopwatch {
public:
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Records lhs <= rhs, appending a violation when it fails (NaN fails too).
inline bool check_le(std::vector<InvariantViolation>& out, int k, const char* name, double lhs, double rhs) {
    if (lhs <= rhs)
        return true;
    out.push_back({k, name, lhs, rhs});
    return false;
}

} // namespace detail

} // namespace regnewton
