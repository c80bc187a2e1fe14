#pragma once

// Finest Morse decomposition of the projectivised system, estimated as the
// clustered Oseledets splitting and checked with weak-attraction tests.
//
// Fibres come from two QR sweeps through each base point: a forward sweep
// started T steps earlier yields the fast filtration, a backward sweep (inverse
// steps) started T steps later yields the slow one, and a Morse fibre is their
// intersection. Along an orbit segment both sweeps are shared, so the fibres
// over [lo, hi] cost one pass.

#include "morsespec/base_dynamics.hpp"
#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"
#include "morsespec/parallel.hpp"
#include "morsespec/projective.hpp"
#include "morsespec/spectra.hpp"
#include "morsespec/subspaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace morsespec {

struct ExponentCluster {
    double mean = 0.0;
    std::vector<double> members;
};

/// Single-linkage clusters of a descending list: neighbours closer than `gap` merge.
inline std::vector<ExponentCluster> cluster_exponents(const std::vector<double>& descending, double gap)
{
    if (!(gap > 0.0))
        throw InvalidParams("cluster gap must be positive");
    std::vector<ExponentCluster> out;
    for (std::size_t i = 0; i < descending.size(); ++i) {
        if (i == 0 || descending[i - 1] - descending[i] >= gap)
            out.emplace_back();
        out.back().members.push_back(descending[i]);
    }
    for (auto& c : out)
        c.mean = std::accumulate(c.members.begin(), c.members.end(), 0.0) / static_cast<double>(c.members.size());
    return out;
}

inline constexpr double kIntersectionTol = 1e-6;
inline constexpr double kSweepDecay = 36.0;
inline constexpr std::int64_t kMaxSweep = 20000;

/// Shared state behind the Morse-set families of one decomposition.
class OseledetsRealization {
public:
    /// first[i]..last[i] are the (descending) exponent indices of cluster i.
    OseledetsRealization(CocycleSystem sys, std::int64_t T, std::vector<int> first, std::vector<int> last)
        : sys_(std::move(sys)), T_(T), first_(std::move(first)), last_(std::move(last))
    {
        std::mt19937_64 rng(0x0F5E1ED5ULL);
        std::normal_distribution<double> gauss;
        Matrix g(sys_.d, sys_.d);
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (Eigen::Index i = 0; i < g.rows(); ++i)
                g(i, j) = gauss(rng);
        frame0_ = signed_qr(g).q;
    }

    const CocycleSystem& system() const { return sys_; }
    std::size_t clusters() const { return first_.size(); }
    int cluster_dim(std::size_t i) const { return last_[i] - first_[i] + 1; }

    /// fibres[s - lo][i] = orthonormal basis of cluster i at theta_s omega.
    std::vector<std::vector<Matrix>> along(const OmegaPoint& omega, std::int64_t lo, std::int64_t hi) const
    {
        return memo_->get(omega, lo, hi, [&] { return compute(omega, lo, hi); });
    }

private:
    std::vector<std::vector<Matrix>> compute(const OmegaPoint& omega, std::int64_t lo, std::int64_t hi) const
    {
        const int d = sys_.d;
        const auto n = static_cast<std::size_t>(hi - lo + 1);
        std::vector<Matrix> fast(n);
        std::vector<Matrix> slow(n);

        OmegaPoint w = theta_step(sys_.driver, omega, lo - T_);
        Matrix q = frame0_;
        for (std::int64_t s = lo - T_; s <= hi; ++s) {
            if (s >= lo)
                fast[static_cast<std::size_t>(s - lo)] = q;
            if (s == hi)
                break;
            q = signed_qr(sys_.step(w).direction * q).q;
            w = theta_step(sys_.driver, std::move(w), 1);
        }

        w = theta_step(sys_.driver, omega, hi + T_);
        q = frame0_;
        for (std::int64_t s = hi + T_; s >= lo; --s) {
            if (s <= hi)
                slow[static_cast<std::size_t>(s - lo)] = q;
            if (s == lo)
                break;
            w = theta_step(sys_.driver, std::move(w), -1);
            q = signed_qr(sys_.inverse_step(w).direction * q).q;
        }

        std::vector<std::vector<Matrix>> out(n);
        for (std::size_t k = 0; k < n; ++k) {
            out[k].reserve(first_.size());
            for (std::size_t i = 0; i < first_.size(); ++i)
                out[k].push_back(intersect(fast[k], slow[k], first_[i], last_[i], d));
        }
        return out;
    }

    /// span(first b+1 fast columns) meet span(first d-a slow columns).
    static Matrix intersect(const Matrix& fast, const Matrix& slow, int a, int b, int d)
    {
        const int m = b - a + 1;
        if (m == d)
            return Matrix::Identity(d, d);
        const Matrix f = fast.leftCols(b + 1);
        const Matrix s = slow.leftCols(d - a);
        Eigen::JacobiSVD<Matrix> svd(f.transpose() * s, Eigen::ComputeFullU);
        const double sigma_m = svd.singularValues()(m - 1);
        if (1.0 - sigma_m > kIntersectionTol)
            throw DegenerateSplitting("fast and slow filtrations do not meet in the expected dimension");
        return orthonormal_basis(f * svd.matrixU().leftCols(m));
    }

    CocycleSystem sys_;
    std::int64_t T_;
    std::vector<int> first_;
    std::vector<int> last_;
    Matrix frame0_;
    std::shared_ptr<OrbitMemo<std::vector<std::vector<Matrix>>>> memo_ =
        std::make_shared<OrbitMemo<std::vector<std::vector<Matrix>>>>();
};

/// Family spanned by the union of the listed clusters of a realisation.
inline SubspaceFamily realization_family(std::shared_ptr<const OseledetsRealization> real,
                                         std::vector<std::size_t> members, std::string label)
{
    SubspaceFamily f;
    f.d = real->system().d;
    f.dim_sub = 0;
    for (auto i : members)
        f.dim_sub += real->cluster_dim(i);
    f.label = std::move(label);
    auto combine = [members](const std::vector<Matrix>& fibres, int d) {
        int k = 0;
        for (auto i : members)
            k += static_cast<int>(fibres[i].cols());
        Matrix stacked(d, k);
        int col = 0;
        for (auto i : members) {
            stacked.middleCols(col, fibres[i].cols()) = fibres[i];
            col += static_cast<int>(fibres[i].cols());
        }
        return members.size() == 1 ? stacked : orthonormal_basis(stacked);
    };
    f.along = [real, combine](const OmegaPoint& w, std::int64_t lo, std::int64_t hi) {
        const auto all = real->along(w, lo, hi);
        std::vector<Matrix> out;
        out.reserve(all.size());
        for (const auto& fibres : all)
            out.push_back(combine(fibres, real->system().d));
        return out;
    };
    f.basis_at = [real, combine](const OmegaPoint& w) {
        return combine(real->along(w, 0, 0).front(), real->system().d);
    };
    return f;
}

/// Morse sets ordered fastest first, so A_i = M_1 + ... + M_i are the attractors.
struct MorseDecomposition {
    std::vector<SubspaceFamily> sets;
    std::vector<ExponentCluster> exponent_clusters;
    int n = 0;
    std::shared_ptr<const OseledetsRealization> realization;

    /// M_1 + ... + M_i (i >= 1).
    SubspaceFamily attractor(std::size_t i) const
    {
        return combined(0, i, "A" + std::to_string(i));
    }

    /// M_{i+1} + ... + M_n; the zero family when i = n.
    SubspaceFamily repeller(std::size_t i) const
    {
        return combined(i, sets.size(), "R" + std::to_string(i));
    }

private:
    SubspaceFamily combined(std::size_t from, std::size_t to, std::string label) const
    {
        const int d = sets.empty() ? 0 : sets.front().d;
        if (from >= to)
            return zero_family(d, std::move(label));
        if (!realization)
            throw InvalidParams("decomposition has no realisation");
        std::vector<std::size_t> members(to - from);
        std::iota(members.begin(), members.end(), from);
        return realization_family(realization, std::move(members), std::move(label));
    }
};

/// Oseledets-type splitting at horizon T with exponent clusters closer than
/// `cluster_gap` merged. Exponents come from the QR method along [omega, theta_T omega].
inline MorseDecomposition oseledets_splitting(const CocycleSystem& sys, const OmegaPoint& omega, std::int64_t T,
                                              double cluster_gap = 0.1)
{
    if (T < 50)
        throw InvalidParams("Oseledets splitting needs T >= 50");
    const auto exps = lyapunov_spectrum_qr(sys, omega, T);
    MorseDecomposition dec;
    dec.exponent_clusters = cluster_exponents(exps, cluster_gap);
    dec.n = static_cast<int>(dec.exponent_clusters.size());
    std::vector<int> first;
    std::vector<int> last;
    int idx = 0;
    for (const auto& c : dec.exponent_clusters) {
        first.push_back(idx);
        idx += static_cast<int>(c.members.size());
        last.push_back(idx - 1);
    }
    // Sweeps converge like exp(-gap * length); run them long enough that the
    // slowest-separating pair of clusters is resolved to rounding.
    double min_gap = kInf;
    for (std::size_t i = 1; i < first.size(); ++i)
        min_gap = std::min(min_gap, exps[static_cast<std::size_t>(last[i - 1])] -
                                        exps[static_cast<std::size_t>(first[i])]);
    std::int64_t sweep = T;
    if (std::isfinite(min_gap) && min_gap > 0.0)
        sweep = std::max(T, std::min(kMaxSweep, static_cast<std::int64_t>(std::ceil(kSweepDecay / min_gap))));
    auto real = std::make_shared<const OseledetsRealization>(sys, sweep, std::move(first), std::move(last));
    dec.realization = real;
    for (std::size_t i = 0; i < dec.exponent_clusters.size(); ++i) {
        if (dec.n == 1)
            dec.sets.push_back(full_family(sys.d, "M1"));
        else
            dec.sets.push_back(realization_family(real, {i}, "M" + std::to_string(i + 1)));
    }
    return dec;
}

struct WhitneyCheck {
    bool ok = false;
    double condition = kInf;
};

inline constexpr double kWhitneyFloor = 1e-8;

/// Stacks the fibre bases at omega; ok iff the smallest singular value exceeds 1e-8.
inline WhitneyCheck whitney_sum_check(const std::vector<SubspaceFamily>& sets, const OmegaPoint& omega)
{
    if (sets.empty())
        throw DimensionMismatch("no subspaces");
    const int d = sets.front().d;
    int total = 0;
    for (const auto& s : sets)
        total += s.dim_sub;
    if (total != d)
        throw DimensionMismatch("subspace dimensions do not add up to d");
    Matrix stacked(d, d);
    int col = 0;
    for (const auto& s : sets) {
        const Matrix b = s.basis_at(omega);
        if (b.cols() != s.dim_sub || b.rows() != d)
            throw DimensionMismatch("fibre basis has the wrong shape");
        stacked.middleCols(col, b.cols()) = b;
        col += static_cast<int>(b.cols());
    }
    Eigen::JacobiSVD<Matrix> svd(stacked);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return {smin > kWhitneyFloor, smin > 0.0 ? s(0) / smin : kInf};
}

struct AttractionReport {
    std::vector<std::int64_t> t_values;
    std::vector<double> exceedance_probabilities;
    double epsilon = 0.0;
    int n_omega = 0;
};

/// Frequency over `omegas` of dist(P Phi(t, omega) C(omega), P A(theta_t omega)) > epsilon.
///
/// The distance to the attractor fibre is the exact distance to its projective
/// subspace. C must stay away from the repeller (caller's job). Negative t tests
/// repulsion in backward time.
inline AttractionReport weak_attraction_probability(const CocycleSystem& sys, const SubspaceFamily& attractor,
                                                    const std::function<ProjPointSet(const OmegaPoint&)>& cloud,
                                                    double epsilon, const std::vector<std::int64_t>& t_values,
                                                    const std::vector<OmegaPoint>& omegas, int workers = 0)
{
    if (!(epsilon > 0.0))
        throw InvalidParams("epsilon must be positive");
    AttractionReport rep;
    rep.t_values = t_values;
    rep.epsilon = epsilon;
    rep.n_omega = static_cast<int>(omegas.size());
    if (omegas.empty())
        throw InvalidPlan("no base points");
    const auto exceed = parallel_map(
        omegas.size(),
        [&](std::size_t i) {
            const ProjPointSet c = cloud(omegas[i]);
            std::vector<char> out;
            out.reserve(t_values.size());
            for (std::int64_t t : t_values) {
                ProjPointSet img;
                img.points.reserve(c.size());
                for (const auto& p : c.points)
                    img.points.push_back(proj_apply(sys, omegas[i], t, p));
                const Matrix a = attractor.basis_at(theta_step(sys.driver, omegas[i], t));
                out.push_back(hausdorff_semidist_to_subspace(img, a) > epsilon ? 1 : 0);
            }
            return out;
        },
        workers);
    for (std::size_t k = 0; k < t_values.size(); ++k) {
        int hits = 0;
        for (const auto& e : exceed)
            hits += e[k];
        rep.exceedance_probabilities.push_back(static_cast<double>(hits) / static_cast<double>(omegas.size()));
    }
    return rep;
}

/// `n` random points at distance >= min_dist from P(repeller fibre).
inline ProjPointSet cloud_away_from(const Matrix& repeller_basis, int d, int n, double min_dist, std::uint64_t seed)
{
    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> gauss;
    ProjPointSet out;
    int attempts = 0;
    while (static_cast<int>(out.size()) < n) {
        if (++attempts > 1000 * n)
            throw EmptyFiber("could not place a cloud away from the repeller");
        Vector x(d);
        for (int i = 0; i < d; ++i)
            x(i) = gauss(rng);
        if (x.norm() < 1e-8)
            continue;
        ProjPoint p(x);
        if (repeller_basis.cols() == 0 || dist_to_subspace(p, repeller_basis) >= min_dist)
            out.points.push_back(std::move(p));
    }
    return out;
}

inline constexpr int kAttractionBurnIn = 5;

/// Non-increasing after the burn-in, and the last value is 0 or below the first tail value.
inline bool attraction_validates(const AttractionReport& rep, int burn_in = kAttractionBurnIn)
{
    std::vector<double> tail;
    for (std::size_t k = 0; k < rep.t_values.size(); ++k) {
        const auto t = rep.t_values[k];
        if ((t < 0 ? -t : t) >= burn_in)
            tail.push_back(rep.exceedance_probabilities[k]);
    }
    if (tail.empty())
        return false;
    for (std::size_t k = 1; k < tail.size(); ++k)
        if (tail[k] > tail[k - 1])
            return false;
    return tail.back() == 0.0 || tail.back() < tail.front();
}

/// Smallest principal angle between A_i and R_i over theta_s omega, |s| <= horizon, all proper i.
inline double min_separation_angle(const MorseDecomposition& dec, const OmegaPoint& omega, std::int64_t horizon)
{
    double best = 0.5 * 3.14159265358979323846;
    if (dec.n < 2)
        return best;
    const auto& driver = dec.realization->system().driver;
    for (std::size_t i = 1; i < dec.sets.size(); ++i) {
        const auto as = bases_along(dec.attractor(i), driver, omega, -horizon, horizon);
        const auto rs = bases_along(dec.repeller(i), driver, omega, -horizon, horizon);
        for (std::size_t k = 0; k < as.size(); ++k) {
            const double norm = projector_norm_angle(as[k], rs[k]).norm;
            best = std::min(best, std::asin(std::min(1.0, 1.0 / norm)));
        }
    }
    return best;
}

struct MorseParams {
    std::int64_t T = 200;
    double cluster_gap = 0.1;
    std::vector<double> epsilons{0.05, 0.01};
    int n_omega = 50;
    SamplingPlan plan;
    std::uint64_t seed = 1;
    std::int64_t attraction_t_max = 30;
    int cloud_size = 16;
    double cloud_min_dist = 0.1;
    int workers = 0;
};

struct MorseEstimate {
    MorseDecomposition decomposition;
    /// One interval per Morse set (label "M<i>"), sorted by midpoint.
    std::vector<SpectrumInterval> intervals;
    /// Attraction reports for every proper attractor A_i and every epsilon.
    std::vector<std::pair<int, AttractionReport>> attraction;
    bool validated = true;
    std::optional<AttractionReport> first_failure;
    bool whitney_ok = true;
    double whitney_condition = 1.0;
    std::vector<OmegaPoint> omegas;
};

inline std::vector<OmegaPoint> sample_omegas(const Driver& driver, int n, std::uint64_t seed)
{
    std::vector<OmegaPoint> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(sample_omega(driver, splitmix64(seed) + static_cast<std::uint64_t>(i)));
    return out;
}

/// Clustered Oseledets splitting, attraction checks on the nested attractors,
/// then one Morse-spectrum interval per set.
///
/// A failed attraction check flags the estimate rather than throwing.
inline MorseEstimate finest_morse_estimate(const CocycleSystem& sys, const MorseParams& params)
{
    if (params.n_omega < 1)
        throw InvalidParams("n_omega must be at least 1");
    MorseEstimate est;
    est.omegas = sample_omegas(sys.driver, params.n_omega, params.seed);
    est.decomposition = oseledets_splitting(sys, est.omegas.front(), params.T, params.cluster_gap);
    const auto& dec = est.decomposition;

    for (const auto& w : est.omegas) {
        const WhitneyCheck wc = whitney_sum_check(dec.sets, w);
        est.whitney_ok = est.whitney_ok && wc.ok;
        est.whitney_condition = std::max(est.whitney_condition, wc.condition);
    }

    std::vector<std::int64_t> ts(static_cast<std::size_t>(params.attraction_t_max + 1));
    std::iota(ts.begin(), ts.end(), std::int64_t{0});
    for (std::size_t i = 1; i < dec.sets.size(); ++i) {
        const SubspaceFamily a = dec.attractor(i);
        const SubspaceFamily r = dec.repeller(i);
        auto cloud = [&, i](const OmegaPoint& w) {
            return cloud_away_from(r.basis_at(w), sys.d, params.cloud_size, params.cloud_min_dist,
                                   params.seed ^ (0x9E37ULL * (i + 1)) ^ OmegaPointHash{}(w));
        };
        for (double eps : params.epsilons) {
            AttractionReport rep = weak_attraction_probability(sys, a, cloud, eps, ts, est.omegas, params.workers);
            if (!attraction_validates(rep) && est.validated) {
                est.validated = false;
                est.first_failure = rep;
            }
            est.attraction.emplace_back(static_cast<int>(i), std::move(rep));
        }
    }

    for (const auto& set : dec.sets)
        est.intervals.push_back(morse_spectrum_interval(sys, set, est.omegas, params.plan, params.workers));
    std::stable_sort(est.intervals.begin(), est.intervals.end(), [](const auto& x, const auto& y) {
        return x.lo + x.hi < y.lo + y.hi;
    });
    return est;
}

/// Splittings between consecutive clusters (range = slower sets, kernel = faster
/// sets) plus the two trivial ones.
inline std::vector<Splitting> candidate_splittings(const MorseDecomposition& dec, int d)
{
    std::vector<Splitting> out;
    out.push_back({full_family(d), zero_family(d), "R^d / {0}"});
    for (std::size_t i = 1; i < dec.sets.size(); ++i)
        out.push_back({dec.repeller(i), dec.attractor(i), "R" + std::to_string(i) + " / A" + std::to_string(i)});
    out.push_back({zero_family(d), full_family(d), "{0} / R^d"});
    return out;
}

} // namespace morsespec
