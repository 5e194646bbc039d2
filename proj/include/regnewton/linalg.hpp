#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "errors.hpp"

namespace regnewton {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Square symmetric matrix. The stored entries are always exactly symmetric:
/// construction replaces the input by (A + A^T) / 2.
class DenseSymmetricMatrix {
public:
    explicit DenseSymmetricMatrix(const Matrix& a) {
        if (a.rows() != a.cols())
            throw DimensionMismatch("symmetric matrix must be square, got " + std::to_string(a.rows()) +
                                    "x" + std::to_string(a.cols()));
        if (a.rows() < 1)
            throw DimensionMismatch("symmetric matrix must have dim >= 1");
        data_ = 0.5 * (a + a.transpose());
    }

    /// Row-major entries of length dim*dim.
    DenseSymmetricMatrix(std::size_t dim, std::span<const double> row_major) {
        if (dim < 1 || row_major.size() != dim * dim)
            throw DimensionMismatch("expected " + std::to_string(dim * dim) + " entries, got " +
                                    std::to_string(row_major.size()));
        const auto n = static_cast<Eigen::Index>(dim);
        Matrix a(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                a(i, j) = row_major[static_cast<std::size_t>(i * n + j)];
        data_ = 0.5 * (a + a.transpose());
    }

    static DenseSymmetricMatrix identity(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return DenseSymmetricMatrix(Matrix::Identity(n, n));
    }

    static DenseSymmetricMatrix zero(std::size_t dim) {
        const auto n = static_cast<Eigen::Index>(dim);
        return DenseSymmetricMatrix(Matrix::Zero(n, n));
    }

    static DenseSymmetricMatrix diagonal(const Vector& d) { return DenseSymmetricMatrix(Matrix(d.asDiagonal())); }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }
    const Matrix& matrix() const noexcept { return data_; }

    Vector operator*(const Vector& v) const {
        if (v.size() != data_.rows())
            throw DimensionMismatch("matrix-vector product: dim " + std::to_string(data_.rows()) +
                                    " vs vector " + std::to_string(v.size()));
        return data_.selfadjointView<Eigen::Lower>() * v;
    }

private:
    Matrix data_;
};

enum class FactorizationKind { cholesky, ldlt_fallback };

inline const char* to_string(FactorizationKind k) {
    return k == FactorizationKind::cholesky ? "cholesky" : "ldlt_fallback";
}

struct ShiftedSolveReport {
    Vector solution;
    double residual_norm = 0.0;
    FactorizationKind factorization_kind = FactorizationKind::cholesky;
};

namespace detail {

// Residual above this (relative to max(1, |b|)) after refinement means the
// shifted matrix is numerically singular.
inline constexpr double kSingularResidual = 1e-6;
inline constexpr double kTargetResidual = 1e-10;
inline constexpr int kRefinementSteps = 2;

template <class Factorization>
bool solve_refined(const Factorization& fac, const Matrix& shifted, const Vector& b, Vector& x, double& residual) {
    x = fac.solve(b);
    if (!x.allFinite())
        return false;
    const double scale = std::max(1.0, b.norm());
    Vector res = shifted * x - b;
    residual = res.norm();
    for (int step = 0; step < kRefinementSteps && residual > kTargetResidual * scale; ++step) {
        Vector corrected = x - fac.solve(res);
        if (!corrected.allFinite())
            break;
        Vector corrected_res = shifted * corrected - b;
        const double corrected_norm = corrected_res.norm();
        if (!(corrected_norm < residual))
            break;
        x = std::move(corrected);
        res = std::move(corrected_res);
        residual = corrected_norm;
    }
    return std::isfinite(residual) && residual <= kSingularResidual * scale;
}

} // namespace detail

/// Solves (A + lambda I) x = b. Tries Cholesky first and falls back to a
/// pivoted LDL^T when the shifted matrix is not positive definite. Never forms
/// an inverse.
inline ShiftedSolveReport shifted_solve(const DenseSymmetricMatrix& a, double lambda, const Vector& b) {
    if (static_cast<std::size_t>(b.size()) != a.dim())
        throw DimensionMismatch("shifted_solve: matrix dim " + std::to_string(a.dim()) + " vs rhs " +
                                std::to_string(b.size()));
    if (!(lambda >= 0.0))
        throw DimensionMismatch("shifted_solve: lambda must be nonnegative");

    Matrix shifted = a.matrix();
    shifted.diagonal().array() += lambda;

    ShiftedSolveReport report;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() == Eigen::Success &&
        detail::solve_refined(llt, shifted, b, report.solution, report.residual_norm)) {
        report.factorization_kind = FactorizationKind::cholesky;
        return report;
    }

    Eigen::LDLT<Matrix> ldlt(shifted);
    if (ldlt.info() == Eigen::Success) {
        const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
        const double dmin = ldlt.vectorD().cwiseAbs().minCoeff();
        const double tiny = dmax * static_cast<double>(a.dim()) * Eigen::NumTraits<double>::epsilon();
        if (dmax > 0.0 && dmin > tiny &&
            detail::solve_refined(ldlt, shifted, b, report.solution, report.residual_norm)) {
            report.factorization_kind = FactorizationKind::ldlt_fallback;
            return report;
        }
    }
    throw SingularSystem("shifted_solve: (A + " + std::to_string(lambda) + " I) is numerically singular");
}

/// Power-iteration estimate of the spectral norm. The estimate |A v_k| with
/// v_k normalized is nondecreasing in k and never exceeds the true norm.
/// Stops early once the relative change drops below 1e-13.
inline double spectral_norm_estimate(const DenseSymmetricMatrix& a, int iters) {
    const Matrix& m = a.matrix();
    Eigen::Index start = 0;
    const double col_max = m.colwise().norm().maxCoeff(&start);
    if (col_max == 0.0)
        return 0.0;

    // Seed with the largest column (the image of a basis vector) so the start
    // vector lies in the range of A.
    Vector v = m.col(start) / col_max;
    double estimate = col_max;
    for (int it = 0; it < std::max(iters, 1); ++it) {
        Vector w = m * v;
        const double norm = w.norm();
        if (norm == 0.0)
            break;
        const double prev = estimate;
        estimate = std::max(estimate, norm);
        v = w / norm;
        if (estimate - prev <= 1e-13 * estimate && it > 0)
            break;
    }
    return estimate;
}

} // namespace regnewton
