#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "regnewton/regnewton.hpp"

namespace regnewton::testing {

/// f(x) = 1/2 |x|^2.
inline ObjectiveOracle half_square(std::size_t dim = 1) {
    return make_quadratic(DenseSymmetricMatrix::identity(dim), Vector::Zero(static_cast<Eigen::Index>(dim)));
}

/// f(x) = 1/3 |x|^3 in one dimension; true H = 1.
inline ObjectiveOracle scalar_cubic() {
    ObjectiveOracle o;
    o.dim = 1;
    o.name = "scalar_cubic";
    o.value = [](const Vector& x) { return std::pow(std::abs(x[0]), 3) / 3.0; };
    o.gradient = [](const Vector& x) { return Vector::Constant(1, x[0] * std::abs(x[0])); };
    o.hessian = [](const Vector& x) { return DenseSymmetricMatrix(Matrix::Constant(1, 1, 2.0 * std::abs(x[0]))); };
    o.metadata.hessian_lipschitz = 1.0;
    o.metadata.optimal_value = 0.0;
    return o;
}

/// F(x) = x - shift in one dimension.
inline LeastSquaresOracle scalar_affine(double shift) { return make_affine_residual(Vector::Constant(1, shift)); }

/// F(x) = x^2 in one dimension.
inline LeastSquaresOracle scalar_square() {
    return make_least_squares(
        1, [](const Vector& x) { return Vector::Constant(1, x[0] * x[0]); },
        [](const Vector& x) { return Matrix::Constant(1, 1, 2.0 * x[0]); }, "scalar_square");
}

inline Vector random_point(std::mt19937_64& rng, std::size_t dim, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Vector x(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = normal(rng);
    return x;
}

struct FdErrors {
    double gradient = 0.0;       // relative error of the gradient
    double hessian_vector = 0.0; // relative error of a Hessian-vector product
};

/// Central differences with step h; errors relative to max(1, |exact|).
inline FdErrors finite_difference_errors(const ObjectiveOracle& o, const Vector& x, const Vector& v, double h = 1e-5) {
    const auto n = static_cast<Eigen::Index>(o.dim);
    Vector fd_grad(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        fd_grad[i] = (o.value(xp) - o.value(xm)) / (2.0 * h);
    }
    const Vector g = o.gradient(x);
    const Vector fd_hv = (o.gradient(x + h * v) - o.gradient(x - h * v)) / (2.0 * h);
    const Vector hv = o.hessian(x) * v;
    return {(fd_grad - g).norm() / std::max(1.0, g.norm()), (fd_hv - hv).norm() / std::max(1.0, hv.norm())};
}

/// Jacobian check for least-squares oracles: relative error of J v.
inline double jacobian_fd_error(const LeastSquaresOracle& o, const Vector& x, const Vector& v, double h = 1e-6) {
    const Vector fd = (o.residual(x + h * v) - o.residual(x - h * v)) / (2.0 * h);
    const Vector jv = o.jacobian(x) * v;
    return (fd - jv).norm() / std::max(1.0, jv.norm());
}

/// Every objective oracle the library ships, on small seeded instances.
inline std::vector<ObjectiveOracle> shipped_objectives() {
    std::vector<ObjectiveOracle> out;
    {
        auto [a, b] = gen_logistic_instance(40, 6, 3);
        out.push_back(make_logistic(std::move(a), std::move(b), 0.01));
    }
    {
        auto [a, b] = gen_logsumexp_instance(30, 5, 4);
        ProblemMetadata meta;
        meta.hessian_lipschitz = logsumexp_h_estimate(a, 0.5);
        out.push_back(make_logsumexp(std::move(a), std::move(b), 0.5, meta));
    }
    out.push_back(make_cubic_norm_worstcase(5));
    {
        Matrix m(3, 3);
        m << 4, 1, 0, 1, 3, -1, 0, -1, 2;
        out.push_back(make_quadratic(DenseSymmetricMatrix(m), Vector::Ones(3)));
    }
    return out;
}

inline std::vector<LeastSquaresOracle> shipped_least_squares() {
    return {make_affine_residual(Vector::Constant(3, 2.0)), make_componentwise_quadratic(Vector::Ones(3))};
}

/// Trace CSV with the wall_ms column stripped, for determinism comparisons.
inline std::string trace_without_wall_time(const std::vector<TraceRecord>& trace) {
    std::vector<TraceRecord> copy = trace;
    for (auto& r : copy)
        r.wall_ms = 0.0;
    std::ostringstream out;
    write_trace_csv(copy, out);
    return out.str();
}

} // namespace regnewton::testing
