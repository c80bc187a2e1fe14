#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace morsespec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A matrix stored as exp(log_scale) * direction.
///
/// Long cocycle products are carried in this form so that magnitudes such as
/// 2^500 never have to be materialised in double precision.
struct ScaledMatrix {
    Matrix direction;
    double log_scale = 0.0;

    static ScaledMatrix identity(int d) { return {Matrix::Identity(d, d), 0.0}; }

    /// Moves the largest absolute entry of `direction` into `log_scale`.
    void renormalize()
    {
        const double m = direction.cwiseAbs().maxCoeff();
        if (m > 0.0 && std::isfinite(m)) {
            direction /= m;
            log_scale += std::log(m);
        }
    }

    /// Plain matrix; check `fits_in_double` first.
    Matrix value() const { return direction * std::exp(log_scale); }

    bool fits_in_double() const
    {
        const double m = direction.cwiseAbs().maxCoeff();
        if (m == 0.0)
            return true;
        return std::log(m) + log_scale < 700.0;
    }
};

/// Largest singular value (spectral norm).
inline double operator_norm(const Matrix& m)
{
    if (m.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// log of the spectral norm of a scaled matrix; -inf for the zero matrix.
inline double log_norm(const ScaledMatrix& m)
{
    const double n = operator_norm(m.direction);
    if (n == 0.0)
        return -kInf;
    return std::log(n) + m.log_scale;
}

/// Orthonormal basis of the column space of `a` (rank decided with a relative cutoff).
inline Matrix orthonormal_basis(const Matrix& a, double rel_tol = 1e-10)
{
    const auto d = a.rows();
    if (a.cols() == 0)
        return Matrix(d, 0);
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0)
            ++rank;
    return svd.matrixU().leftCols(rank);
}

/// max |Q^T Q - I|; 0 for an empty basis.
inline double orthonormality_defect(const Matrix& q)
{
    if (q.cols() == 0)
        return 0.0;
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

/// Thin QR with a non-negative diagonal in R, so that successive frames vary continuously.
struct SignedQR {
    Matrix q;
    Vector r_diag;
};

inline SignedQR signed_qr(const Matrix& m)
{
    Eigen::HouseholderQR<Matrix> qr(m);
    const auto rows = m.rows();
    const auto cols = m.cols();
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    Matrix r = qr.matrixQR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
    Vector diag(cols);
    for (Eigen::Index i = 0; i < cols; ++i) {
        if (r(i, i) < 0.0) {
            q.col(i) = -q.col(i);
            diag(i) = -r(i, i);
        } else {
            diag(i) = r(i, i);
        }
    }
    return {std::move(q), std::move(diag)};
}

} // namespace morsespec
