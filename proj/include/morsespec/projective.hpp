#pragma once

// Real projective space P^{d-1}: canonical representatives, the metric
// d_P(p, q) = min(|p - q|, |p + q|) on unit representatives, the projectivised
// cocycle and the set distances used by the attraction tests.

#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace morsespec {

inline constexpr double kSignTolerance = 1e-12;

/// A line through the origin, stored as a unit vector whose first
/// non-negligible coordinate is positive.
class ProjPoint {
public:
    ProjPoint() = default;

    explicit ProjPoint(const Vector& x)
    {
        const double n = x.norm();
        if (!(n > 1e-12))
            throw ZeroVector("projective point of a (numerically) zero vector");
        rep_ = x / n;
        for (Eigen::Index i = 0; i < rep_.size(); ++i) {
            if (std::abs(rep_(i)) > kSignTolerance) {
                if (rep_(i) < 0.0)
                    rep_ = -rep_;
                break;
            }
        }
    }

    const Vector& rep() const { return rep_; }
    Eigen::Index dim() const { return rep_.size(); }

private:
    Vector rep_;
};

inline ProjPoint proj_point(const Vector& x) { return ProjPoint(x); }

inline double proj_metric(const ProjPoint& p, const ProjPoint& q)
{
    return std::min((p.rep() - q.rep()).norm(), (p.rep() + q.rep()).norm());
}

/// P(Phi(t, omega) rep).
inline ProjPoint proj_apply(const CocycleSystem& sys, const OmegaPoint& omega, std::int64_t t, const ProjPoint& p)
{
    if (t == 0)
        return p;
    return ProjPoint(evolve_vector(sys, omega, p.rep(), t).direction);
}

/// Finite point cloud standing in for a compact random-set fibre.
struct ProjPointSet {
    std::vector<ProjPoint> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// sup_{a in A} min_{b in B} d_P(a, b); dist(empty, B) = 0 and dist(A, empty) = inf.
inline double hausdorff_semidist(const ProjPointSet& a, const ProjPointSet& b)
{
    if (a.empty())
        return 0.0;
    if (b.empty())
        return kInf;
    double sup = 0.0;
    for (const auto& p : a.points) {
        double best = kInf;
        for (const auto& q : b.points)
            best = std::min(best, proj_metric(p, q));
        sup = std::max(sup, best);
    }
    return sup;
}

/// inf over pairs of d_P; 0 when either set is empty.
inline double set_min_dist(const ProjPointSet& a, const ProjPointSet& b)
{
    if (a.empty() || b.empty())
        return 0.0;
    double best = kInf;
    for (const auto& p : a.points)
        for (const auto& q : b.points)
            best = std::min(best, proj_metric(p, q));
    return best;
}

/// d_P from p to the nearest point of P(span(basis)); `basis` has orthonormal columns.
///
/// This is the limit of hausdorff_semidist({p}, cloud) as the cloud fills P(span).
inline double dist_to_subspace(const ProjPoint& p, const Matrix& basis)
{
    if (basis.cols() == 0)
        return kInf;
    const double c = std::min(1.0, (basis.transpose() * p.rep()).norm());
    // |p - a| for the unit a closest to p; the antipodal branch is never shorter.
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
}

inline double hausdorff_semidist_to_subspace(const ProjPointSet& a, const Matrix& basis)
{
    if (a.empty())
        return 0.0;
    double sup = 0.0;
    for (const auto& p : a.points)
        sup = std::max(sup, dist_to_subspace(p, basis));
    return sup;
}

/// Deterministic sample of P(span(basis)): `n` points spread over the unit sphere
/// of the subspace (great-circle grid for k = 2, seeded Gaussian directions otherwise).
template <class Rng>
ProjPointSet sample_subspace_cloud(const Matrix& basis, int n, Rng& rng)
{
    ProjPointSet out;
    const auto k = basis.cols();
    if (k == 0)
        return out;
    std::normal_distribution<double> gauss;
    for (int i = 0; i < n; ++i) {
        Vector c(k);
        if (k == 1) {
            c(0) = 1.0;
        } else if (k == 2) {
            const double phi = 3.14159265358979323846 * (i + 0.5) / n;
            c << std::cos(phi), std::sin(phi);
        } else {
            for (Eigen::Index j = 0; j < k; ++j)
                c(j) = gauss(rng);
            if (c.norm() < 1e-12)
                c(0) = 1.0;
        }
        out.points.emplace_back(basis * c);
    }
    return out;
}

} // namespace morsespec
