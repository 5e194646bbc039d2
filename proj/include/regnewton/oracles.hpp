#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"

namespace regnewton {

/// Known structural constants of a problem. Every present value except
/// optimal_value is nonnegative.
struct ProblemMetadata {
    std::optional<double> hessian_lipschitz;  // H with a 2H-Lipschitz Hessian
    std::optional<double> strong_convexity;   // mu with Hessian >= mu I
    std::optional<double> optimal_value;      // f*
    std::optional<double> cubic_growth;       // c of the cubic growth bound for least squares
    std::optional<double> gradient_lipschitz; // L, used by constant-step first-order baselines
};

/// f, grad f and Hess f of a smooth objective. Immutable after construction;
/// the callables are reentrant.
struct ObjectiveOracle {
    std::size_t dim = 0;
    std::string name;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<DenseSymmetricMatrix(const Vector&)> hessian;
    ProblemMetadata metadata;
};

/// Residual operator F and its Jacobian for min 1/2 |F(x)|^2.
struct LeastSquaresOracle {
    std::size_t dim = 0;
    std::string name;
    std::function<Vector(const Vector&)> residual;
    std::function<Matrix(const Vector&)> jacobian;
    std::optional<double> jacobian_bound; // J, analysis only
    ProblemMetadata metadata;
};

namespace detail {

inline void require_dim(const Vector& x, std::size_t dim, const char* who) {
    if (static_cast<std::size_t>(x.size()) != dim)
        throw DimensionMismatch(std::string(who) + ": expected dim " + std::to_string(dim) + ", got " +
                                std::to_string(x.size()));
}

// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double sigmoid(double t) {
    if (t >= 0.0)
        return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace detail

/// Upper bound on the Hessian-Lipschitz constant of averaged logistic loss,
/// max_i |a_i| * |A|^2 / (6 sqrt 3). The bound carries no 1/n factor even
/// though the loss is averaged, which makes it conservative.
inline double logistic_h_estimate(const Matrix& features) {
    if (features.size() == 0)
        return 0.0;
    const double max_row = features.rowwise().norm().maxCoeff();
    const double a_norm_sq = spectral_norm_estimate(DenseSymmetricMatrix(features.transpose() * features), 1000);
    return max_row * a_norm_sq / (6.0 * std::sqrt(3.0));
}

/// Averaged l2-regularized logistic loss with labels in {0, 1}:
///   f(x) = 1/n sum_i [softplus(a_i^T x) - b_i a_i^T x] + reg/2 |x|^2.
inline ObjectiveOracle make_logistic(Matrix features, Vector labels, double reg) {
    const auto n = features.rows();
    const auto d = features.cols();
    if (n < 1 || d < 1)
        throw DimensionMismatch("make_logistic: empty feature matrix");
    if (labels.size() != n)
        throw DimensionMismatch("make_logistic: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(n) + " samples");
    if (!(reg >= 0.0))
        throw DimensionMismatch("make_logistic: reg must be nonnegative");
    for (Eigen::Index i = 0; i < n; ++i)
        if (labels[i] != 0.0 && labels[i] != 1.0)
            throw BadLabel("make_logistic: label " + std::to_string(labels[i]) + " at sample " +
                           std::to_string(i) + " is not in {0,1}");

    struct Data {
        Matrix a;
        Vector b;
        double reg;
    };
    auto data = std::make_shared<const Data>(Data{std::move(features), std::move(labels), reg});
    const auto dim = static_cast<std::size_t>(d);

    ObjectiveOracle o;
    o.dim = dim;
    o.name = "logistic";
    o.value = [data, dim](const Vector& x) {
        detail::require_dim(x, dim, "logistic");
        const Vector z = data->a * x;
        double sum = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            sum += detail::softplus(z[i]) - data->b[i] * z[i];
        return sum / static_cast<double>(z.size()) + 0.5 * data->reg * x.squaredNorm();
    };
    o.gradient = [data, dim](const Vector& x) {
        detail::require_dim(x, dim, "logistic");
        const Vector z = data->a * x;
        Vector s(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            s[i] = detail::sigmoid(z[i]) - data->b[i];
        Vector g = data->a.transpose() * s / static_cast<double>(z.size());
        g += data->reg * x;
        return g;
    };
    o.hessian = [data, dim](const Vector& x) {
        detail::require_dim(x, dim, "logistic");
        const Vector z = data->a * x;
        Vector w(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const double s = detail::sigmoid(z[i]);
            w[i] = s * (1.0 - s);
        }
        Matrix h = data->a.transpose() * w.asDiagonal() * data->a / static_cast<double>(z.size());
        h.diagonal().array() += data->reg;
        return DenseSymmetricMatrix(h);
    };
    o.metadata.hessian_lipschitz = logistic_h_estimate(data->a);
    o.metadata.strong_convexity = reg;
    const double a_norm_sq = spectral_norm_estimate(DenseSymmetricMatrix(data->a.transpose() * data->a), 1000);
    o.metadata.gradient_lipschitz = a_norm_sq / (4.0 * static_cast<double>(n)) + reg;
    return o;
}

/// Heuristic Hessian-Lipschitz bound for rho * logsumexp((Ax - b) / rho),
/// max_i |a_i| * |A|^2 / rho^2. Only used as a non-adaptive H in experiments.
inline double logsumexp_h_estimate(const Matrix& vectors, double rho) {
    const double max_row = vectors.rowwise().norm().maxCoeff();
    const double a_norm_sq = spectral_norm_estimate(DenseSymmetricMatrix(vectors.transpose() * vectors), 1000);
    return max_row * a_norm_sq / (rho * rho);
}

/// f(x) = rho * log sum_i exp((a_i^T x - b_i) / rho), evaluated with the
/// max-shift so every exponent is <= 0.
inline ObjectiveOracle make_logsumexp(Matrix vectors, Vector offsets, double rho, ProblemMetadata metadata = {}) {
    if (!(rho > 0.0))
        throw DimensionMismatch("make_logsumexp: rho must be positive");
    if (vectors.rows() < 1 || vectors.cols() < 1)
        throw DimensionMismatch("make_logsumexp: empty vector set");
    if (offsets.size() != vectors.rows())
        throw DimensionMismatch("make_logsumexp: offsets length mismatch");

    struct Data {
        Matrix a;
        Vector b;
        double rho;

        // Softmax weights p and the shifted log-partition.
        std::pair<Vector, double> softmax(const Vector& x) const {
            const Vector z = (a * x - b) / rho;
            const double zmax = z.maxCoeff();
            Vector p = (z.array() - zmax).exp().matrix();
            const double sum = p.sum();
            p /= sum;
            return {std::move(p), zmax + std::log(sum)};
        }
    };
    auto data = std::make_shared<const Data>(Data{std::move(vectors), std::move(offsets), rho});
    const auto dim = static_cast<std::size_t>(data->a.cols());

    ObjectiveOracle o;
    o.dim = dim;
    o.name = "logsumexp";
    o.value = [data, dim](const Vector& x) {
        detail::require_dim(x, dim, "logsumexp");
        return data->rho * data->softmax(x).second;
    };
    o.gradient = [data, dim](const Vector& x) {
        detail::require_dim(x, dim, "logsumexp");
        return Vector(data->a.transpose() * data->softmax(x).first);
    };
    o.hessian = [data, dim](const Vector& x) {
        detail::require_dim(x, dim, "logsumexp");
        const Vector p = data->softmax(x).first;
        const Vector ap = data->a.transpose() * p;
        Matrix h = data->a.transpose() * p.asDiagonal() * data->a;
        h -= ap * ap.transpose();
        h /= data->rho;
        return DenseSymmetricMatrix(h);
    };
    o.metadata = metadata;
    return o;
}

/// Bidiagonal difference matrix (1 on the diagonal, -1 on the superdiagonal)
/// used by the cubic worst-case instance.
inline Matrix cubic_worstcase_matrix(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix a = Matrix::Identity(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        a(i, i + 1) = -1.0;
    return a;
}

/// f(x) = 1/3 sum_i |(Ax - b)_i|^3 with A = cubic_worstcase_matrix(dim) and
/// b = e_1. Derivatives use t|t| and 2|t|, which vanish at t = 0.
/// The Hessian A^T diag(2|r|) A is 2H-Lipschitz with H = |A|^2 max_i |a_i|,
/// which is what the metadata records.
inline ObjectiveOracle make_cubic_norm_worstcase(std::size_t dim) {
    if (dim < 2)
        throw DimensionMismatch("make_cubic_norm_worstcase: dim must be >= 2");
    const auto n = static_cast<Eigen::Index>(dim);
    auto a = std::make_shared<const Matrix>(cubic_worstcase_matrix(dim));
    const Vector b = Vector::Unit(n, 0);

    ObjectiveOracle o;
    o.dim = dim;
    o.name = "cubic_worstcase";
    o.value = [a, b, dim](const Vector& x) {
        detail::require_dim(x, dim, "cubic_worstcase");
        const Vector r = *a * x - b;
        return r.array().abs().cube().sum() / 3.0;
    };
    o.gradient = [a, b, dim](const Vector& x) {
        detail::require_dim(x, dim, "cubic_worstcase");
        const Vector r = *a * x - b;
        return Vector(a->transpose() * (r.array() * r.array().abs()).matrix());
    };
    o.hessian = [a, b, dim](const Vector& x) {
        detail::require_dim(x, dim, "cubic_worstcase");
        const Vector r = *a * x - b;
        const Vector w = 2.0 * r.array().abs();
        return DenseSymmetricMatrix(Matrix(a->transpose() * w.asDiagonal() * *a));
    };
    o.metadata.hessian_lipschitz =
        spectral_norm_estimate(DenseSymmetricMatrix(Matrix(a->transpose() * *a)), 1000) * a->rowwise().norm().maxCoeff();
    o.metadata.optimal_value = 0.0;
    return o;
}

/// f(x) = 1/2 x^T A x - b^T x for PSD A. H = 0; f* is recorded when A is
/// nonsingular.
inline ObjectiveOracle make_quadratic(const DenseSymmetricMatrix& a, Vector b) {
    if (static_cast<std::size_t>(b.size()) != a.dim())
        throw DimensionMismatch("make_quadratic: rhs length mismatch");
    auto mat = std::make_shared<const DenseSymmetricMatrix>(a);
    auto rhs = std::make_shared<const Vector>(std::move(b));
    const std::size_t dim = a.dim();

    ObjectiveOracle o;
    o.dim = dim;
    o.name = "quadratic";
    o.value = [mat, rhs, dim](const Vector& x) {
        detail::require_dim(x, dim, "quadratic");
        return 0.5 * x.dot(*mat * x) - rhs->dot(x);
    };
    o.gradient = [mat, rhs, dim](const Vector& x) {
        detail::require_dim(x, dim, "quadratic");
        return Vector(*mat * x - *rhs);
    };
    o.hessian = [mat, dim](const Vector& x) {
        detail::require_dim(x, dim, "quadratic");
        return *mat;
    };
    o.metadata.hessian_lipschitz = 0.0;
    o.metadata.gradient_lipschitz = spectral_norm_estimate(a, 1000);
    try {
        const Vector xstar = shifted_solve(a, 0.0, *rhs).solution;
        o.metadata.optimal_value = -0.5 * rhs->dot(xstar);
    } catch (const SingularSystem&) {
    }
    return o;
}

/// Least-squares oracle from user callables.
inline LeastSquaresOracle make_least_squares(std::size_t dim, std::function<Vector(const Vector&)> residual,
                                             std::function<Matrix(const Vector&)> jacobian, std::string name = "custom") {
    LeastSquaresOracle o;
    o.dim = dim;
    o.name = std::move(name);
    o.residual = std::move(residual);
    o.jacobian = std::move(jacobian);
    return o;
}

/// F(x) = x - x0.
inline LeastSquaresOracle make_affine_residual(Vector x0) {
    const auto dim = static_cast<std::size_t>(x0.size());
    auto shift = std::make_shared<const Vector>(std::move(x0));
    auto o = make_least_squares(
        dim,
        [shift, dim](const Vector& x) {
            detail::require_dim(x, dim, "affine_residual");
            return Vector(x - *shift);
        },
        [dim](const Vector& x) {
            detail::require_dim(x, dim, "affine_residual");
            const auto n = static_cast<Eigen::Index>(dim);
            return Matrix(Matrix::Identity(n, n));
        },
        "affine_residual");
    o.jacobian_bound = 1.0;
    o.metadata.hessian_lipschitz = 0.0;
    o.metadata.optimal_value = 0.0;
    return o;
}

/// F(x)_i = x_i^2 - t_i. Its linearization error is exactly |x - y|_4^2, so
/// the smoothness constant of the residual is 1.
inline LeastSquaresOracle make_componentwise_quadratic(Vector targets) {
    const auto dim = static_cast<std::size_t>(targets.size());
    auto t = std::make_shared<const Vector>(std::move(targets));
    auto o = make_least_squares(
        dim,
        [t, dim](const Vector& x) {
            detail::require_dim(x, dim, "componentwise_quadratic");
            return Vector(x.array().square().matrix() - *t);
        },
        [dim](const Vector& x) {
            detail::require_dim(x, dim, "componentwise_quadratic");
            return Matrix((2.0 * x).asDiagonal());
        },
        "componentwise_quadratic");
    o.metadata.hessian_lipschitz = 1.0;
    if ((t->array() >= 0.0).all())
        o.metadata.optimal_value = 0.0;
    return o;
}

} // namespace regnewton
