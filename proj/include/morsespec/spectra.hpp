#pragma once

// Finite-time exponents, Morse-spectrum interval estimates, the QR Lyapunov
// spectrum and the non-uniform dichotomy test and scan.

#include "morsespec/base_dynamics.hpp"
#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"
#include "morsespec/parallel.hpp"
#include "morsespec/subspaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace morsespec {

/// (1/T) ln(|Phi(T, omega) x| / |x|).
inline double ftle(const CocycleSystem& sys, const OmegaPoint& omega, const Vector& x, std::int64_t T)
{
    if (T == 0)
        throw InvalidParams("finite-time exponent needs T != 0");
    const double n0 = x.norm();
    const PropagatedVector y = evolve_vector(sys, omega, x, T);
    return (y.log_norm - std::log(n0)) / static_cast<double>(T);
}

/// (1/T) ln(|Phi(T + t, omega) x| / |Phi(t, omega) x|).
///
/// Both vectors are carried from omega. Restarting from the normalised
/// Phi(t, omega) x would lose components that shrank below rounding on the way
/// to t, and those can dominate again after T more steps.
inline double ftle_relative(const CocycleSystem& sys, const OmegaPoint& omega, const Vector& x, std::int64_t T,
                            std::int64_t t)
{
    if (T == 0)
        throw InvalidParams("finite-time exponent needs T != 0");
    const PropagatedVector at_t = evolve_vector(sys, omega, x, t);
    const PropagatedVector at_end = evolve_vector(sys, omega, x, t + T);
    return (at_end.log_norm - at_t.log_norm) / static_cast<double>(T);
}

/// Carries vectors of an invariant family's fibres along the orbit in fibre
/// coordinates: c_{s+1} = B(theta_{s+1} omega)^T G(theta_s omega) B(theta_s omega) c_s,
/// and the inverse step backwards. Columns are renormalised every step.
///
/// `visit(s, dirs, logs)` sees unit columns and their accumulated log norms for
/// s = 0, 1, ..., hi and then s = -1, ..., lo. A null family, or one of full
/// dimension, means plain propagation in R^d.
template <class Visit>
void sweep_in_fibres(const CocycleSystem& sys, const SubspaceFamily* fam, const OmegaPoint& omega,
                     std::int64_t lo, std::int64_t hi, const Matrix& c0, Visit&& visit)
{
    const bool plain = fam == nullptr || fam->dim_sub == sys.d;
    std::vector<Matrix> bases;
    if (!plain)
        bases = bases_along(*fam, sys.driver, omega, lo, hi);
    auto basis = [&](std::int64_t s) -> const Matrix& { return bases[static_cast<std::size_t>(s - lo)]; };

    const auto n = c0.cols();
    Matrix start = c0;
    Vector start_logs(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double nj = start.col(j).norm();
        if (!(nj > 0.0))
            throw ZeroVector("cannot propagate the zero vector");
        start.col(j) /= nj;
        start_logs(j) = std::log(nj);
    }
    visit(std::int64_t{0}, static_cast<const Matrix&>(start), static_cast<const Vector&>(start_logs));

    for (int dir : {+1, -1}) {
        const std::int64_t end = dir > 0 ? hi : lo;
        Matrix c = start;
        Vector logs = start_logs;
        OmegaPoint w = omega;
        for (std::int64_t s = 0; s != end;) {
            ScaledMatrix g;
            std::int64_t next = s + dir;
            if (dir > 0) {
                g = sys.step(w);
                w = theta_step(sys.driver, std::move(w), 1);
            } else {
                w = theta_step(sys.driver, std::move(w), -1);
                g = sys.inverse_step(w);
            }
            if (plain)
                c = g.direction * c;
            else
                c = basis(next).transpose() * (g.direction * (basis(s) * c));
            for (Eigen::Index j = 0; j < n; ++j) {
                const double nj = c.col(j).norm();
                c.col(j) /= nj;
                logs(j) += std::log(nj) + g.log_scale;
            }
            s = next;
            visit(s, static_cast<const Matrix&>(c), static_cast<const Vector&>(logs));
        }
    }
}

/// Which (T, t) pairs get sampled. Offsets are t = round(f * width * T) for each
/// fraction f; with allow_unrestricted off every pair must satisfy |t| <= T.
struct SamplingPlan {
    std::vector<std::int64_t> T_grid{50, 100, 200};
    std::vector<double> offset_fractions{-1.0, -0.5, 0.0, 0.5, 1.0};
    int x_per_fiber = 8;
    bool allow_unrestricted = false;
    double unrestricted_width = 1.0;
    double divergence_c = 1.0;
    std::uint64_t seed = 1;

    std::vector<std::pair<std::int64_t, std::int64_t>> points() const
    {
        if (T_grid.empty())
            throw InvalidPlan("T grid is empty");
        if (offset_fractions.empty())
            throw InvalidPlan("no offsets");
        if (x_per_fiber < 1)
            throw InvalidPlan("need at least one vector per fibre");
        for (std::size_t i = 0; i < T_grid.size(); ++i) {
            if (T_grid[i] < 1)
                throw InvalidPlan("horizons must be positive");
            if (i > 0 && T_grid[i] <= T_grid[i - 1])
                throw InvalidPlan("T grid must be increasing");
        }
        const double width = allow_unrestricted ? unrestricted_width : 1.0;
        std::vector<std::pair<std::int64_t, std::int64_t>> out;
        for (std::int64_t T : T_grid) {
            for (double f : offset_fractions) {
                const auto t = static_cast<std::int64_t>(std::llround(f * width * static_cast<double>(T)));
                if (!allow_unrestricted && (t > T || -t > T))
                    throw InvalidPlan("offset |t| exceeds the horizon T");
                out.emplace_back(T, t);
            }
        }
        return out;
    }
};

/// n fractions spread evenly over [-1, 1].
inline std::vector<double> uniform_fractions(int n)
{
    if (n < 1)
        throw InvalidPlan("need at least one offset");
    if (n == 1)
        return {0.0};
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (n - 1);
    return out;
}

struct SpectrumSample {
    std::int64_t T = 0;
    std::int64_t t = 0;
    double value = 0.0;
};

struct SpectrumInterval {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<SpectrumSample> samples;
    std::string morse_label;
};

namespace detail {

inline std::vector<double> spectrum_samples_at(const CocycleSystem& sys, const SubspaceFamily* fam,
                                               const OmegaPoint& omega, const SamplingPlan& plan,
                                               const std::vector<std::pair<std::int64_t, std::int64_t>>& pts,
                                               std::uint64_t task)
{
    const int k = fam ? fam->dim_sub : sys.d;
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    for (const auto& [T, t] : pts) {
        lo = std::min({lo, t, T + t});
        hi = std::max({hi, t, T + t});
    }
    std::mt19937_64 rng(splitmix64(plan.seed ^ splitmix64(task)));
    std::normal_distribution<double> gauss;
    Matrix c0(k, plan.x_per_fiber);
    for (Eigen::Index j = 0; j < c0.cols(); ++j) {
        do {
            for (Eigen::Index i = 0; i < k; ++i)
                c0(i, j) = gauss(rng);
        } while (c0.col(j).norm() < 1e-8);
    }
    Matrix logs(hi - lo + 1, plan.x_per_fiber);
    sweep_in_fibres(sys, fam, omega, lo, hi, c0, [&](std::int64_t s, const Matrix&, const Vector& l) {
        logs.row(s - lo) = l.transpose();
    });
    std::vector<double> out;
    out.reserve(pts.size() * static_cast<std::size_t>(plan.x_per_fiber));
    for (const auto& [T, t] : pts)
        for (int j = 0; j < plan.x_per_fiber; ++j)
            out.push_back((logs(T + t - lo, j) - logs(t - lo, j)) / static_cast<double>(T));
    return out;
}

inline double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

/// [min, max] at the largest horizon. hi becomes +inf when, at two or more
/// horizons (all of them if the grid is shorter), the largest sample exceeds
/// the median at the largest horizon by more than c sqrt(T); lo symmetrically.
inline void summarise(SpectrumInterval& iv, const SamplingPlan& plan)
{
    const std::int64_t t_max = plan.T_grid.back();
    std::vector<double> top;
    for (const auto& s : iv.samples)
        if (s.T == t_max)
            top.push_back(s.value);
    if (top.empty())
        throw InvalidPlan("no samples at the largest horizon");
    iv.lo = *std::min_element(top.begin(), top.end());
    iv.hi = *std::max_element(top.begin(), top.end());
    const double center = median(top);
    int up = 0;
    int down = 0;
    for (std::int64_t T : plan.T_grid) {
        double mx = -kInf;
        double mn = kInf;
        for (const auto& s : iv.samples) {
            if (s.T != T)
                continue;
            mx = std::max(mx, s.value);
            mn = std::min(mn, s.value);
        }
        const double bound = plan.divergence_c * std::sqrt(static_cast<double>(T));
        up += mx - center > bound;
        down += center - mn > bound;
    }
    const int needed = std::min<int>(2, static_cast<int>(plan.T_grid.size()));
    if (up >= needed)
        iv.hi = kInf;
    if (down >= needed)
        iv.lo = -kInf;
}

} // namespace detail

/// Morse-spectrum estimate of an invariant family, pooled over base points.
///
/// Vectors are drawn uniformly on the unit sphere of the fibre at each base
/// point and carried in fibre coordinates. Samples are ordered by (omega, T, t, x).
inline SpectrumInterval morse_spectrum_interval(const CocycleSystem& sys, const SubspaceFamily& fam,
                                                const std::vector<OmegaPoint>& omegas, const SamplingPlan& plan,
                                                int workers = 0)
{
    if (fam.dim_sub == 0)
        throw EmptyFiber("Morse-spectrum interval of an empty fibre");
    if (omegas.empty())
        throw InvalidPlan("no base points");
    const auto pts = plan.points();
    auto per_omega = parallel_map(
        omegas.size(),
        [&](std::size_t i) { return detail::spectrum_samples_at(sys, &fam, omegas[i], plan, pts, i); }, workers);
    SpectrumInterval iv;
    iv.morse_label = fam.label;
    for (const auto& vals : per_omega) {
        std::size_t idx = 0;
        for (const auto& [T, t] : pts)
            for (int j = 0; j < plan.x_per_fiber; ++j)
                iv.samples.push_back({T, t, vals[idx++]});
    }
    detail::summarise(iv, plan);
    return iv;
}

inline SpectrumInterval morse_spectrum_interval(const CocycleSystem& sys, const SubspaceFamily& fam,
                                                const OmegaPoint& omega, const SamplingPlan& plan)
{
    return morse_spectrum_interval(sys, fam, std::vector<OmegaPoint>{omega}, plan, 1);
}

inline SpectrumInterval full_space_interval(const CocycleSystem& sys, const std::vector<OmegaPoint>& omegas,
                                            const SamplingPlan& plan, int workers = 0)
{
    return morse_spectrum_interval(sys, full_family(sys.d, "full space"), omegas, plan, workers);
}

inline SpectrumInterval full_space_interval(const CocycleSystem& sys, const OmegaPoint& omega,
                                            const SamplingPlan& plan)
{
    return full_space_interval(sys, std::vector<OmegaPoint>{omega}, plan, 1);
}

/// Lyapunov exponents from T steps of QR re-orthonormalisation, descending.
inline std::vector<double> lyapunov_spectrum_qr(const CocycleSystem& sys, const OmegaPoint& omega, std::int64_t T)
{
    if (T < 10)
        throw InvalidParams("QR spectrum needs T >= 10");
    Matrix q = Matrix::Identity(sys.d, sys.d);
    Vector sums = Vector::Zero(sys.d);
    OmegaPoint w = omega;
    for (std::int64_t j = 0; j < T; ++j) {
        const ScaledMatrix g = sys.step(w);
        SignedQR qr = signed_qr(g.direction * q);
        q = std::move(qr.q);
        for (int i = 0; i < sys.d; ++i)
            sums(i) += std::log(qr.r_diag(i)) + g.log_scale;
        w = theta_step(sys.driver, std::move(w), 1);
    }
    std::vector<double> out(static_cast<std::size_t>(sys.d));
    for (int i = 0; i < sys.d; ++i)
        out[static_cast<std::size_t>(i)] = sums(i) / static_cast<double>(T);
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

/// Candidate invariant splitting: the projector has range `range` (the part
/// that must contract relative to gamma) and kernel `null`.
struct Splitting {
    SubspaceFamily range;
    SubspaceFamily null;
    std::string label;
};

struct DichotomyOptions {
    double tau_temper = kDefaultTauTemper;
    double resolution = 1e-3;
    /// alpha_star - K_slope must exceed this for a pass.
    double min_gap = 0.005;
    double residual_tol = 1e-3;
};

struct DichotomyVerdict {
    double gamma = 0.0;
    bool admits = false;
    double alpha_star = 0.0;
    int projector_rank = 0;
    double K_slope = 0.0;
    std::string splitting;
    double log_K_max = 0.0;
    double invariance_residual = 0.0;
};

/// ln|Phi(t) P| (forward) and ln|Phi(-t)(I - P)| (backward) for t = 0..h at
/// every (omega, s) with s in {-h, 0, h}. Independent of gamma and alpha.
struct DichotomyTables {
    int horizon = 0;
    int rank = 0;
    std::string label;
    double residual = 0.0;
    /// Index 3 * omega + {0, 1, 2} for s = -h, 0, h.
    std::vector<Vector> forward;
    std::vector<Vector> backward;
};

namespace detail {

/// ln |C Q| where column j of C is dirs.col(j) * exp(logs(j)).
inline double log_norm_product(const Matrix& dirs, const Vector& logs, const Matrix& q)
{
    const double m = logs.maxCoeff();
    Matrix acc = Matrix::Zero(dirs.rows(), q.cols());
    for (Eigen::Index j = 0; j < dirs.cols(); ++j)
        acc += dirs.col(j) * (std::exp(logs(j) - m) * q.row(j));
    const double n = operator_norm(acc);
    return n > 0.0 ? std::log(n) + m : -kInf;
}

inline Vector projected_log_norms(const CocycleSystem& sys, const SubspaceFamily& fam, const OmegaPoint& w,
                                  const Matrix& part, int h, int dir)
{
    Vector out = Vector::Constant(h + 1, -kInf);
    if (fam.dim_sub == 0 || part.cwiseAbs().maxCoeff() == 0.0)
        return out;
    const Matrix b = fam.basis_at(w);
    const Matrix q = b.transpose() * part;
    const Matrix c0 = Matrix::Identity(fam.dim_sub, fam.dim_sub);
    const std::int64_t lo = dir > 0 ? 0 : -h;
    const std::int64_t hi = dir > 0 ? h : 0;
    sweep_in_fibres(sys, &fam, w, lo, hi, c0, [&](std::int64_t s, const Matrix& dirs, const Vector& logs) {
        out(s < 0 ? -s : s) = log_norm_product(dirs, logs, q);
    });
    return out;
}

/// ln K-hat(alpha) at one base point.
inline double log_k_hat(const Vector& f, const Vector& g, double gamma, double alpha)
{
    double best = 0.0;
    for (Eigen::Index t = 0; t < f.size(); ++t) {
        const double td = static_cast<double>(t);
        if (std::isfinite(f(t)))
            best = std::max(best, f(t) - (gamma - alpha) * td);
        if (std::isfinite(g(t)))
            best = std::max(best, g(t) + (gamma + alpha) * td);
    }
    return best;
}

inline double k_slope(const DichotomyTables& tab, double gamma, double alpha)
{
    double worst = 0.0;
    const std::size_t n = tab.forward.size() / 3;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t s : {std::size_t{0}, std::size_t{2}})
            worst = std::max(worst, log_k_hat(tab.forward[3 * i + s], tab.backward[3 * i + s], gamma, alpha) /
                                        static_cast<double>(tab.horizon));
    return worst;
}

} // namespace detail

inline DichotomyTables dichotomy_tables(const CocycleSystem& sys, const Splitting& split,
                                        const std::vector<OmegaPoint>& omegas, int horizon, int workers = 0)
{
    if (horizon < 1)
        throw InvalidParams("dichotomy horizon must be positive");
    if (omegas.empty())
        throw InvalidPlan("no base points");
    if (split.range.dim_sub + split.null.dim_sub != sys.d)
        throw DegenerateSplitting("splitting dimensions do not add up to d");
    DichotomyTables tab;
    tab.horizon = horizon;
    tab.rank = split.range.dim_sub;
    tab.label = split.label;
    struct Pair {
        Vector f;
        Vector g;
    };
    const auto rows = parallel_map(
        3 * omegas.size(),
        [&](std::size_t idx) {
            const std::int64_t s = (static_cast<std::int64_t>(idx % 3) - 1) * horizon;
            const OmegaPoint w = theta_step(sys.driver, omegas[idx / 3], s);
            const Matrix p = oblique_projector(split.range.basis_at(w), split.null.basis_at(w));
            const Matrix eye = Matrix::Identity(sys.d, sys.d);
            return Pair{detail::projected_log_norms(sys, split.range, w, p, horizon, +1),
                        detail::projected_log_norms(sys, split.null, w, eye - p, horizon, -1)};
        },
        workers);
    for (const auto& r : rows) {
        tab.forward.push_back(r.f);
        tab.backward.push_back(r.g);
    }
    const ProjectorFamily pf{split.range, split.null};
    tab.residual = check_invariant_projector(sys, pf, omegas.front(), std::min(horizon, 10));
    return tab;
}

/// Verdict at one gamma from precomputed tables.
///
/// alpha passes when the temperedness slope of K-hat at theta_{+-h} omega is at
/// most tau and alpha exceeds that slope by more than min_gap; the slope grows
/// by at most 1 per unit of alpha, so the pass set is an interval and its right
/// end is found by bisection.
inline DichotomyVerdict dichotomy_verdict(const DichotomyTables& tab, double gamma,
                                          const DichotomyOptions& opt = {})
{
    DichotomyVerdict v;
    v.gamma = gamma;
    v.projector_rank = tab.rank;
    v.splitting = tab.label;
    v.invariance_residual = tab.residual;
    v.K_slope = detail::k_slope(tab, gamma, 0.0);
    if (v.K_slope > opt.tau_temper || tab.residual > opt.residual_tol)
        return v;
    double rate = 0.0;
    for (std::size_t i = 0; i < tab.forward.size(); ++i)
        for (const Vector* series : {&tab.forward[i], &tab.backward[i]})
            for (Eigen::Index t = 1; t < series->size(); ++t)
                if (std::isfinite((*series)(t)) && std::isfinite((*series)(0)))
                    rate = std::max(rate, std::abs((*series)(t) - (*series)(0)) / static_cast<double>(t));
    double lo = 0.0;
    double hi = std::abs(gamma) + rate + 1.0;
    if (detail::k_slope(tab, gamma, hi) <= opt.tau_temper) {
        lo = hi;
    } else {
        while (hi - lo > opt.resolution) {
            const double mid = 0.5 * (lo + hi);
            if (detail::k_slope(tab, gamma, mid) <= opt.tau_temper)
                lo = mid;
            else
                hi = mid;
        }
    }
    const double slope = detail::k_slope(tab, gamma, lo);
    if (lo > 0.0 && lo - slope > opt.min_gap) {
        v.admits = true;
        v.alpha_star = lo;
        v.K_slope = slope;
        double worst = 0.0;
        for (std::size_t i = 0; i < tab.forward.size(); i += 3)
            worst = std::max(worst, detail::log_k_hat(tab.forward[i + 1], tab.backward[i + 1], gamma, lo));
        v.log_K_max = worst;
    }
    return v;
}

inline DichotomyVerdict dichotomy_test(const CocycleSystem& sys, double gamma, const Splitting& split,
                                       const std::vector<OmegaPoint>& omegas, int horizon,
                                       const DichotomyOptions& opt = {}, int workers = 0)
{
    return dichotomy_verdict(dichotomy_tables(sys, split, omegas, horizon, workers), gamma, opt);
}

struct RealInterval {
    double lo = 0.0;
    double hi = 0.0;
};

struct DichotomyScan {
    std::vector<DichotomyVerdict> verdicts;
    /// Each failing grid point stands for [gamma - step/2, gamma + step/2]; touching cells merge.
    std::vector<RealInterval> sigma_prime;
};

/// Runs every candidate at every gamma; a gamma is admitted when some candidate
/// passes, and the reported verdict is the passing one with the largest alpha.
inline DichotomyScan dichotomy_spectrum_scan(const CocycleSystem& sys, const std::vector<double>& gamma_grid,
                                             const std::vector<Splitting>& candidates,
                                             const std::vector<OmegaPoint>& omegas, int horizon,
                                             const DichotomyOptions& opt = {}, int workers = 0)
{
    if (gamma_grid.empty())
        throw InvalidParams("gamma grid is empty");
    if (candidates.empty())
        throw InvalidParams("no candidate splittings");
    for (std::size_t i = 1; i < gamma_grid.size(); ++i)
        if (!(gamma_grid[i] > gamma_grid[i - 1]))
            throw InvalidParams("gamma grid must be increasing");
    std::vector<DichotomyTables> tables;
    tables.reserve(candidates.size());
    for (const auto& c : candidates)
        tables.push_back(dichotomy_tables(sys, c, omegas, horizon, workers));

    DichotomyScan scan;
    for (double gamma : gamma_grid) {
        DichotomyVerdict best;
        bool have = false;
        for (const auto& tab : tables) {
            DichotomyVerdict v = dichotomy_verdict(tab, gamma, opt);
            const bool better = !have || (v.admits && (!best.admits || v.alpha_star > best.alpha_star)) ||
                                (!v.admits && !best.admits && v.K_slope < best.K_slope);
            if (better) {
                best = std::move(v);
                have = true;
            }
        }
        scan.verdicts.push_back(std::move(best));
    }

    const double half = gamma_grid.size() > 1 ? 0.5 * (gamma_grid[1] - gamma_grid[0]) : 0.0;
    for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
        if (scan.verdicts[i].admits)
            continue;
        double left = gamma_grid[i] - (i > 0 ? 0.5 * (gamma_grid[i] - gamma_grid[i - 1]) : half);
        double right = gamma_grid[i] + (i + 1 < gamma_grid.size() ? 0.5 * (gamma_grid[i + 1] - gamma_grid[i]) : half);
        if (!scan.sigma_prime.empty() && i > 0 && !scan.verdicts[i - 1].admits)
            scan.sigma_prime.back().hi = right;
        else
            scan.sigma_prime.push_back({left, right});
    }
    return scan;
}

/// Increasing grid lo, lo + step, ..., up to hi (inclusive within step/1000).
inline std::vector<double> make_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || !(hi >= lo))
        throw InvalidParams("grid needs step > 0 and hi >= lo");
    std::vector<double> out;
    const auto n = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-3));
    for (std::int64_t i = 0; i <= n; ++i)
        out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

} // namespace morsespec
