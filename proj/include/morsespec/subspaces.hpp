#pragma once

// Random subspace families, oblique projectors and the angle diagnostics that
// tie projector norms to attractor-repeller separation.

#include "morsespec/base_dynamics.hpp"
#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace morsespec {

/// omega -> orthonormal d x k basis of a fibre of constant dimension k.
struct SubspaceFamily {
    int d = 0;
    int dim_sub = 0;
    std::function<Matrix(const OmegaPoint&)> basis_at;
    /// Optional: bases at theta_t omega for t = lo..hi in one pass.
    std::function<std::vector<Matrix>(const OmegaPoint&, std::int64_t, std::int64_t)> along;
    std::string label;
};

/// Constant family span(basis).
inline SubspaceFamily constant_family(const Matrix& basis, std::string label)
{
    SubspaceFamily f;
    const Matrix q = orthonormal_basis(basis);
    f.d = static_cast<int>(basis.rows());
    f.dim_sub = static_cast<int>(q.cols());
    f.basis_at = [q](const OmegaPoint&) { return q; };
    f.label = std::move(label);
    return f;
}

inline SubspaceFamily zero_family(int d, std::string label = "{0}")
{
    return constant_family(Matrix(d, 0), std::move(label));
}

inline SubspaceFamily full_family(int d, std::string label = "R^d")
{
    return constant_family(Matrix::Identity(d, d), std::move(label));
}

/// Fibres of `f` at theta_t omega, t = lo..hi.
inline std::vector<Matrix> bases_along(const SubspaceFamily& f, const Driver& driver, const OmegaPoint& omega,
                                       std::int64_t lo, std::int64_t hi)
{
    if (f.along)
        return f.along(omega, lo, hi);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(hi - lo + 1));
    OmegaPoint w = theta_step(driver, omega, lo);
    for (std::int64_t t = lo; t <= hi; ++t) {
        out.push_back(f.basis_at(w));
        if (t < hi)
            w = theta_step(driver, std::move(w), 1);
    }
    return out;
}

/// Thread-safe memo of orbit segments keyed by (omega, lo, hi). Fills are
/// idempotent: a racing second fill computes the same value and is dropped.
template <class Value>
class OrbitMemo {
public:
    using Key = std::tuple<std::size_t, std::int64_t, std::int64_t>;

    template <class Fn>
    Value get(const OmegaPoint& omega, std::int64_t lo, std::int64_t hi, Fn&& compute)
    {
        const Key key{OmegaPointHash{}(omega), lo, hi};
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end() && it->second.first == omega)
                return it->second.second;
        }
        Value value = compute();
        std::lock_guard<std::mutex> lock(mutex_);
        cache_.emplace(key, std::make_pair(omega, value));
        return value;
    }

private:
    std::mutex mutex_;
    std::map<Key, std::pair<OmegaPoint, Value>> cache_;
};

inline constexpr double kPinvRelCutoff = 1e-10;

/// Pseudoinverse via SVD, singular values below 1e-10 * sigma_max treated as zero.
inline Matrix moore_penrose(const Matrix& a)
{
    if (a.size() == 0)
        return Matrix(a.cols(), a.rows());
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cutoff = kPinvRelCutoff * s(0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff && s(i) > 0.0)
            inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Pseudoinverse as the limit of (A A^T + eps I)^{-1} A^T, eps -> 0 geometrically.
///
/// Stops when two successive iterates agree to `tol` relative to their size, or
/// when the differences start growing again (rounding in near-null directions
/// takes over once eps is tiny).
inline Matrix moore_penrose_limit(const Matrix& a, double tol = 1e-12, int max_rounds = 40)
{
    if (a.size() == 0)
        return Matrix(a.cols(), a.rows());
    const double smax = operator_norm(a);
    if (smax == 0.0)
        return Matrix::Zero(a.cols(), a.rows());
    const Matrix aat = a * a.transpose();
    const Matrix eye = Matrix::Identity(a.rows(), a.rows());
    Matrix prev;
    double last_diff = kInf;
    for (int k = 1; k <= max_rounds; ++k) {
        const double eps = smax * smax * std::pow(10.0, -k);
        Matrix cur = (aat + eps * eye).ldlt().solve(a).transpose();
        if (k > 1) {
            const double diff = (cur - prev).norm();
            if (diff <= tol * std::max(1.0, cur.norm()))
                return cur;
            if (diff > last_diff && eps < 1e-6 * smax * smax)
                return prev;
            last_diff = diff;
        }
        prev = std::move(cur);
    }
    return prev;
}

inline constexpr double kSpanFloor = 1e-10;

namespace detail {

inline void check_splitting(const Matrix& u, const Matrix& v)
{
    const auto d = u.rows();
    if (v.rows() != d)
        throw DimensionMismatch("splitting bases live in different dimensions");
    if (u.cols() + v.cols() != d)
        throw DegenerateSplitting("splitting dimensions do not add up to the ambient dimension");
    Matrix joined(d, d);
    joined << u, v;
    Eigen::JacobiSVD<Matrix> svd(joined);
    if (!(svd.singularValues()(d - 1) > kSpanFloor))
        throw DegenerateSplitting("subspaces do not span the ambient space");
}

} // namespace detail

/// Projector with range col(U) and kernel col(V), as (P_{V-perp} P_U)^+.
inline Matrix oblique_projector(const Matrix& u_basis, const Matrix& v_basis)
{
    const auto d = u_basis.rows();
    const Matrix u = orthonormal_basis(u_basis);
    const Matrix v = orthonormal_basis(v_basis);
    if (u.cols() != u_basis.cols() || v.cols() != v_basis.cols())
        throw DegenerateSplitting("splitting basis is rank deficient");
    detail::check_splitting(u, v);
    const Matrix eye = Matrix::Identity(d, d);
    const Matrix pu = u * u.transpose();
    const Matrix pv_perp = eye - v * v.transpose();
    return moore_penrose(pv_perp * pu);
}

struct NormAngle {
    double a = 0.0;
    double norm = 1.0;
};

/// a = cosine of the smallest principal angle between U and V, norm = 1/sqrt(1 - a^2).
///
/// The sine is taken from the residual of V against U rather than from 1 - a^2,
/// which keeps nearly parallel pairs accurate. U = {0} gives the zero projector
/// and norm 0.
inline NormAngle projector_norm_angle(const Matrix& u_basis, const Matrix& v_basis)
{
    const auto d = u_basis.rows();
    const Matrix u = orthonormal_basis(u_basis);
    const Matrix v = orthonormal_basis(v_basis);
    if (u.cols() != u_basis.cols() || v.cols() != v_basis.cols())
        throw DegenerateSplitting("splitting basis is rank deficient");
    detail::check_splitting(u, v);
    if (u.cols() == 0)
        return {0.0, 0.0};
    if (v.cols() == 0)
        return {0.0, 1.0};
    const double a = std::min(1.0, operator_norm(u.transpose() * v));
    const Matrix residual = (Matrix::Identity(d, d) - u * u.transpose()) * v;
    Eigen::JacobiSVD<Matrix> svd(residual);
    const double sine = svd.singularValues()(svd.singularValues().size() - 1);
    return {a, 1.0 / sine};
}

/// omega -> P(omega) with range `range` and kernel `null`.
struct ProjectorFamily {
    SubspaceFamily range;
    SubspaceFamily null;

    Matrix P_at(const OmegaPoint& w) const { return oblique_projector(range.basis_at(w), null.basis_at(w)); }
};

/// max_{|t| <= horizon} |P(theta_t omega) Phi(t, omega) - Phi(t, omega) P(omega)| / |Phi(t, omega)|.
inline double check_invariant_projector(const CocycleSystem& sys, const ProjectorFamily& proj,
                                        const OmegaPoint& omega, int horizon)
{
    if (horizon < 1)
        throw InvalidParams("invariance check needs a horizon of at least 1");
    const auto ranges = bases_along(proj.range, sys.driver, omega, -horizon, horizon);
    const auto nulls = bases_along(proj.null, sys.driver, omega, -horizon, horizon);
    auto p_at = [&](std::int64_t t) {
        const auto i = static_cast<std::size_t>(t + horizon);
        return oblique_projector(ranges[i], nulls[i]);
    };
    const Matrix p0 = p_at(0);
    double worst = 0.0;
    for (int dir : {+1, -1}) {
        Matrix phi = Matrix::Identity(sys.d, sys.d);
        OmegaPoint w = omega;
        for (int j = 1; j <= horizon; ++j) {
            ScaledMatrix g;
            if (dir > 0) {
                g = sys.step(w);
                w = theta_step(sys.driver, std::move(w), 1);
            } else {
                w = theta_step(sys.driver, std::move(w), -1);
                g = sys.inverse_step(w);
            }
            phi = g.direction * phi;
            phi /= phi.cwiseAbs().maxCoeff();
            const Matrix diff = p_at(dir * j) * phi - phi * p0;
            worst = std::max(worst, operator_norm(diff) / operator_norm(phi));
        }
    }
    return worst;
}

/// Temperedness slope of t -> |P(theta_t omega)| for |t| <= horizon, with P the
/// projector onto R along N.
inline double gap_temperedness(const CocycleSystem& sys, const SubspaceFamily& r, const SubspaceFamily& n,
                               const OmegaPoint& omega, int horizon)
{
    const auto rs = bases_along(r, sys.driver, omega, -horizon, horizon);
    const auto ns = bases_along(n, sys.driver, omega, -horizon, horizon);
    std::vector<std::pair<std::int64_t, double>> series;
    series.reserve(rs.size());
    for (std::int64_t t = -horizon; t <= horizon; ++t) {
        const auto i = static_cast<std::size_t>(t + horizon);
        const double norm = projector_norm_angle(rs[i], ns[i]).norm;
        series.emplace_back(t, norm > 0.0 ? norm : 1.0);
    }
    return temperedness_slope(series);
}

} // namespace morsespec
