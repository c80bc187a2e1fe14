#pragma once

// Linear cocycles Phi(t, omega) over a base driver, generated by a one-step map
// omega -> G(omega) in GL(d, R).
//
// Products are accumulated as ScaledMatrix (direction, log-magnitude) and
// renormalised every few steps; negative times are products of one-step
// inverses, never the inverse of a long product.

#include "morsespec/base_dynamics.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace morsespec {

inline constexpr double kDetFloor = 1e-12;

struct CocycleSystem {
    int d = 1;
    /// One-step generator. Returned as direction * exp(log_scale) so that
    /// generators with huge or tiny magnitudes stay representable.
    std::function<ScaledMatrix(const OmegaPoint&)> generator;
    Driver driver;
    std::string name;

    /// G(omega), checked for invertibility.
    ScaledMatrix step(const OmegaPoint& omega) const
    {
        ScaledMatrix g = generator(omega);
        if (g.direction.rows() != d || g.direction.cols() != d)
            throw DimensionMismatch("generator returned a matrix of the wrong size");
        const double det = g.direction.determinant();
        if (!(std::abs(det) > kDetFloor))
            throw SingularGenerator(name + ": |det G(omega)| = " + std::to_string(std::abs(det)) +
                                    " is below 1e-12");
        return g;
    }

    /// G(omega)^{-1}.
    ScaledMatrix inverse_step(const OmegaPoint& omega) const
    {
        ScaledMatrix g = step(omega);
        return {g.direction.partialPivLu().inverse(), -g.log_scale};
    }
};

/// System from a plain matrix-valued generator.
inline CocycleSystem make_system(int d, Driver driver, std::string name,
                                 std::function<Matrix(const OmegaPoint&)> g)
{
    CocycleSystem s;
    s.d = d;
    s.driver = std::move(driver);
    s.name = std::move(name);
    s.generator = [g = std::move(g)](const OmegaPoint& w) { return ScaledMatrix{g(w), 0.0}; };
    return s;
}

inline CocycleSystem make_scaled_system(int d, Driver driver, std::string name,
                                        std::function<ScaledMatrix(const OmegaPoint&)> g)
{
    CocycleSystem s;
    s.d = d;
    s.driver = std::move(driver);
    s.name = std::move(name);
    s.generator = std::move(g);
    return s;
}

inline CocycleSystem constant_system(const Matrix& g, Driver driver, std::string name)
{
    const int d = static_cast<int>(g.rows());
    return make_system(d, std::move(driver), std::move(name), [g](const OmegaPoint&) { return g; });
}

/// Checks invertibility of the generator on `n` sampled points; throws SingularGenerator.
inline void validate_generator(const CocycleSystem& sys, int n = 16, std::uint64_t seed = 0x5EED)
{
    for (int i = 0; i < n; ++i)
        (void)sys.step(sample_omega(sys.driver, seed + static_cast<std::uint64_t>(i)));
}

inline constexpr int kRenormalizeEvery = 10;

/// Phi(t, omega) in scaled form.
inline ScaledMatrix evolve_scaled(const CocycleSystem& sys, const OmegaPoint& omega, std::int64_t t)
{
    ScaledMatrix acc = ScaledMatrix::identity(sys.d);
    if (t > 0) {
        OmegaPoint w = omega;
        for (std::int64_t j = 0; j < t; ++j) {
            const ScaledMatrix g = sys.step(w);
            acc.direction = g.direction * acc.direction;
            acc.log_scale += g.log_scale;
            if ((j + 1) % kRenormalizeEvery == 0)
                acc.renormalize();
            w = theta_step(sys.driver, std::move(w), 1);
        }
    } else if (t < 0) {
        OmegaPoint w = omega;
        for (std::int64_t j = -1; j >= t; --j) {
            w = theta_step(sys.driver, std::move(w), -1);
            const ScaledMatrix g = sys.inverse_step(w);
            acc.direction = g.direction * acc.direction;
            acc.log_scale += g.log_scale;
            if ((-j) % kRenormalizeEvery == 0)
                acc.renormalize();
        }
    }
    acc.renormalize();
    return acc;
}

/// Phi(t, omega) as a plain matrix; throws NumericOverflow when it does not fit in a double.
inline Matrix cocycle_evolve(const CocycleSystem& sys, const OmegaPoint& omega, std::int64_t t)
{
    const ScaledMatrix m = evolve_scaled(sys, omega, t);
    if (!m.fits_in_double())
        throw NumericOverflow(sys.name + ": Phi(" + std::to_string(t) + ", omega) overflows double");
    return m.value();
}

/// Phi(t, omega) x as a unit direction plus ln |Phi(t, omega) x|.
struct PropagatedVector {
    Vector direction;
    double log_norm = 0.0;
};

inline PropagatedVector evolve_vector(const CocycleSystem& sys, const OmegaPoint& omega, const Vector& x,
                                      std::int64_t t)
{
    const double n0 = x.norm();
    if (!(n0 > kDetFloor))
        throw ZeroVector("cannot propagate the zero vector");
    PropagatedVector out{x / n0, std::log(n0)};
    OmegaPoint w = omega;
    const std::int64_t dir = t >= 0 ? 1 : -1;
    for (std::int64_t j = 0; j != t; j += dir) {
        ScaledMatrix g;
        if (dir > 0) {
            g = sys.step(w);
            w = theta_step(sys.driver, std::move(w), 1);
        } else {
            w = theta_step(sys.driver, std::move(w), -1);
            g = sys.inverse_step(w);
        }
        Vector y = g.direction * out.direction;
        const double n = y.norm();
        out.direction = y / n;
        out.log_norm += std::log(n) + g.log_scale;
    }
    return out;
}

/// ln ||Phi(t, omega)|| for t = 0, 1, ..., steps (dir = +1) or t = 0, -1, ..., -steps (dir = -1).
inline std::vector<double> log_norm_series(const CocycleSystem& sys, const OmegaPoint& omega, int steps,
                                           int dir)
{
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    ScaledMatrix acc = ScaledMatrix::identity(sys.d);
    out.push_back(0.0);
    OmegaPoint w = omega;
    for (int j = 1; j <= steps; ++j) {
        ScaledMatrix g;
        if (dir > 0) {
            g = sys.step(w);
            w = theta_step(sys.driver, std::move(w), 1);
        } else {
            w = theta_step(sys.driver, std::move(w), -1);
            g = sys.inverse_step(w);
        }
        acc.direction = g.direction * acc.direction;
        acc.log_scale += g.log_scale;
        acc.renormalize();
        out.push_back(log_norm(acc));
    }
    return out;
}

/// max over the last quartile of |t| of |(1/t) ln x_t|.
///
/// A value at or below the temperedness threshold (0.02 by default) is read as
/// "tempered at this horizon"; it says nothing about the true limit.
inline double temperedness_slope(const std::vector<std::pair<std::int64_t, double>>& series)
{
    if (series.empty())
        throw NonPositiveValue("temperedness slope needs a non-empty series");
    std::int64_t horizon = 0;
    for (const auto& [t, x] : series) {
        if (!(x > 0.0))
            throw NonPositiveValue("temperedness slope needs positive values");
        horizon = std::max<std::int64_t>(horizon, t < 0 ? -t : t);
    }
    if (horizon == 0)
        return 0.0;
    const double cut = 0.75 * static_cast<double>(horizon);
    double slope = 0.0;
    for (const auto& [t, x] : series) {
        const double at = static_cast<double>(t < 0 ? -t : t);
        if (t != 0 && at >= cut)
            slope = std::max(slope, std::abs(std::log(x) / at));
    }
    return slope;
}

inline constexpr double kDefaultTauTemper = 0.02;

struct GrowthFit {
    double a_hat = 0.0;
    double trial_rate = 0.0;
    /// (sample index, ln K(omega)) pairs, all >= 0.
    std::vector<std::pair<std::int64_t, double>> log_K_samples;
    double tempered_slope = 0.0;
    int horizon = 0;
};

namespace detail {

struct TwoSidedNorms {
    std::vector<double> forward;
    std::vector<double> backward;
};

inline TwoSidedNorms two_sided_norms(const CocycleSystem& sys, const OmegaPoint& w, int horizon)
{
    return {log_norm_series(sys, w, horizon, +1), log_norm_series(sys, w, horizon, -1)};
}

inline double log_k_hat(const TwoSidedNorms& n, double rate)
{
    double best = 0.0;
    for (std::size_t t = 0; t < n.forward.size(); ++t)
        best = std::max(best, n.forward[t] - rate * static_cast<double>(t));
    for (std::size_t t = 0; t < n.backward.size(); ++t)
        best = std::max(best, n.backward[t] - rate * static_cast<double>(t));
    return best;
}

} // namespace detail

/// Empirical bounded-growth constants ||Phi(t, omega)|| <= K(omega) e^{a|t|} over |t| <= horizon.
///
/// `trial_rate` defaults to the fitted rate a_hat.
inline GrowthFit bounded_growth_fit(const CocycleSystem& sys, const std::vector<OmegaPoint>& omegas, int horizon,
                                    std::optional<double> trial_rate = std::nullopt)
{
    if (horizon < 10)
        throw InvalidParams("bounded growth fit needs a horizon of at least 10");
    GrowthFit fit;
    fit.horizon = horizon;
    std::vector<detail::TwoSidedNorms> norms;
    norms.reserve(omegas.size());
    for (const auto& w : omegas) {
        norms.push_back(detail::two_sided_norms(sys, w, horizon));
        for (int t = 1; t <= horizon; ++t) {
            fit.a_hat = std::max(fit.a_hat, norms.back().forward[static_cast<std::size_t>(t)] / t);
            fit.a_hat = std::max(fit.a_hat, norms.back().backward[static_cast<std::size_t>(t)] / t);
        }
    }
    fit.trial_rate = trial_rate.value_or(fit.a_hat);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        fit.log_K_samples.emplace_back(static_cast<std::int64_t>(i), detail::log_k_hat(norms[i], fit.trial_rate));
        for (int s : {horizon, -horizon}) {
            const OmegaPoint shifted = theta_step(sys.driver, omegas[i], s);
            const double lk = detail::log_k_hat(detail::two_sided_norms(sys, shifted, horizon), fit.trial_rate);
            fit.tempered_slope = std::max(fit.tempered_slope, std::abs(lk / s));
        }
    }
    return fit;
}

} // namespace morsespec
