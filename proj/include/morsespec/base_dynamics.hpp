#pragma once

// Ergodic base systems (metric dynamical systems) over integer time.
//
// Two kinds are supported, and products of them:
//   * circle rotation  omega -> omega + alpha mod 1,
//   * two-sided Bernoulli shift on a finite alphabet.
//
// Circle states are 64-bit fixed-point fractions (omega = phase / 2^64), so the
// shift is exact modular arithmetic and theta_{t+s} = theta_t o theta_s holds
// bit for bit. The default rotation number is the 64-bit rounding of the
// golden-ratio conjugate, a rational surrogate with ~19 significant digits and
// period 2^64.
//
// Bernoulli sequences are a counter-based hash of (seed, absolute index). A
// state keeps a window of 2W+1 symbols around its offset as a cache; symbols
// outside the window are regenerated on demand from the seed.

#include "morsespec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

namespace morsespec {

/// splitmix64 finaliser; the mixing function behind every seeded stream here.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0,1) from the top 53 bits of a 64-bit word.
constexpr double unit_from_bits(std::uint64_t bits)
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Round(2^64 * (sqrt(5) - 1) / 2).
inline constexpr std::uint64_t kGoldenRotation = 0x9E3779B97F4A7C15ULL;

struct CircleRotation {
    std::uint64_t alpha = kGoldenRotation;
};

struct BernoulliShift {
    int symbols = 2;
    std::vector<double> probabilities;
    int half_width = 32;
    /// cumulative[j] = p_0 + ... + p_j, last entry forced to 1.
    std::shared_ptr<const std::vector<double>> cumulative;
};

using DriverPart = std::variant<CircleRotation, BernoulliShift>;

struct Driver {
    std::vector<DriverPart> parts;
    std::string description;

    std::string kind() const
    {
        if (parts.size() != 1)
            return "product";
        return std::holds_alternative<CircleRotation>(parts.front()) ? "circle-rotation"
                                                                    : "bernoulli-shift";
    }
};

/// Circle rotation by a real alpha in [0,1), rounded to the 64-bit grid.
inline Driver circle_rotation(double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw InvalidParams("rotation number must lie in [0,1)");
    const auto fixed = static_cast<std::uint64_t>(std::ldexp(static_cast<long double>(alpha), 64));
    return {{CircleRotation{fixed}}, "circle rotation"};
}

inline Driver golden_rotation()
{
    return {{CircleRotation{kGoldenRotation}}, "circle rotation by the golden-ratio conjugate"};
}

inline Driver bernoulli_shift(int symbols, std::vector<double> probabilities, int half_width = 32)
{
    if (symbols < 1 || static_cast<int>(probabilities.size()) != symbols)
        throw InvalidParams("bernoulli shift needs one probability per symbol");
    if (half_width < 0)
        throw InvalidParams("window half width must be non-negative");
    for (double p : probabilities)
        if (!(p >= 0.0))
            throw InvalidParams("probabilities must be non-negative");
    const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidParams("probabilities must sum to 1 within 1e-12");
    auto cumulative = std::make_shared<std::vector<double>>(probabilities.size());
    std::partial_sum(probabilities.begin(), probabilities.end(), cumulative->begin());
    cumulative->back() = 1.0;
    BernoulliShift b{symbols, std::move(probabilities), half_width, std::move(cumulative)};
    return {{std::move(b)}, "bernoulli shift"};
}

inline Driver product(const Driver& a, const Driver& b)
{
    Driver out;
    out.parts = a.parts;
    out.parts.insert(out.parts.end(), b.parts.begin(), b.parts.end());
    out.description = "product(" + a.description + ", " + b.description + ")";
    return out;
}

struct CircleState {
    std::uint64_t phase = 0;

    /// omega in [0,1); never rounds up to 1.
    double value() const { return unit_from_bits(phase); }

    static CircleState from_value(double omega)
    {
        omega -= std::floor(omega);
        const long double scaled = std::ldexp(static_cast<long double>(omega), 64);
        if (scaled >= 0x1.0p64L)
            return {0};
        return {static_cast<std::uint64_t>(scaled)};
    }

    friend bool operator==(const CircleState&, const CircleState&) = default;
};

struct BernoulliState {
    std::uint64_t seed = 0;
    std::int64_t offset = 0;
    int half_width = 0;
    /// window[i] is the symbol at relative index i - half_width.
    std::vector<std::uint8_t> window;
    std::shared_ptr<const std::vector<double>> cumulative;

    static std::uint8_t generate(std::uint64_t seed, std::int64_t absolute,
                                 const std::vector<double>& cumulative)
    {
        const double u = unit_from_bits(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(absolute))));
        std::size_t j = 0;
        while (j + 1 < cumulative.size() && u >= cumulative[j])
            ++j;
        return static_cast<std::uint8_t>(j);
    }

    /// Symbol omega_i of the current point (i relative to the point, two-sided).
    std::uint8_t symbol(std::int64_t i) const
    {
        const std::int64_t slot = i + half_width;
        if (slot >= 0 && slot < static_cast<std::int64_t>(window.size()))
            return window[static_cast<std::size_t>(slot)];
        return generate(seed, offset + i, *cumulative);
    }

    void refill_window()
    {
        window.resize(static_cast<std::size_t>(2 * half_width + 1));
        for (int k = 0; k < 2 * half_width + 1; ++k)
            window[static_cast<std::size_t>(k)] = generate(seed, offset + k - half_width, *cumulative);
    }

    void shift(std::int64_t t)
    {
        const auto n = static_cast<std::int64_t>(window.size());
        offset += t;
        if (t == 0)
            return;
        if (t >= n || -t >= n) {
            refill_window();
            return;
        }
        if (t > 0) {
            std::move(window.begin() + t, window.end(), window.begin());
            for (std::int64_t k = n - t; k < n; ++k)
                window[static_cast<std::size_t>(k)] = generate(seed, offset + k - half_width, *cumulative);
        } else {
            std::move_backward(window.begin(), window.end() + t, window.end());
            for (std::int64_t k = 0; k < -t; ++k)
                window[static_cast<std::size_t>(k)] = generate(seed, offset + k - half_width, *cumulative);
        }
    }

    friend bool operator==(const BernoulliState& a, const BernoulliState& b)
    {
        return a.seed == b.seed && a.offset == b.offset && a.half_width == b.half_width;
    }
};

using OmegaPart = std::variant<CircleState, BernoulliState>;

/// A point of the base space: one state per driver part.
struct OmegaPoint {
    std::vector<OmegaPart> parts;

    const CircleState& circle(std::size_t part = 0) const { return std::get<CircleState>(parts.at(part)); }
    const BernoulliState& bernoulli(std::size_t part = 0) const { return std::get<BernoulliState>(parts.at(part)); }

    friend bool operator==(const OmegaPoint&, const OmegaPoint&) = default;
};

inline OmegaPoint circle_point(double omega) { return {{CircleState::from_value(omega)}}; }

struct OmegaPointHash {
    std::size_t operator()(const OmegaPoint& w) const noexcept
    {
        std::uint64_t h = 0x51ED27A3ULL;
        for (const auto& part : w.parts) {
            if (const auto* c = std::get_if<CircleState>(&part))
                h = splitmix64(h ^ c->phase);
            else {
                const auto& b = std::get<BernoulliState>(part);
                h = splitmix64(h ^ b.seed);
                h = splitmix64(h ^ static_cast<std::uint64_t>(b.offset));
            }
        }
        return static_cast<std::size_t>(h);
    }
};

/// theta_t omega for any integer t (two-sided time).
inline OmegaPoint theta_step(const Driver& driver, OmegaPoint omega, std::int64_t t)
{
    if (omega.parts.size() != driver.parts.size())
        throw DimensionMismatch("omega point does not match the driver");
    for (std::size_t i = 0; i < omega.parts.size(); ++i) {
        if (auto* c = std::get_if<CircleState>(&omega.parts[i]))
            c->phase += static_cast<std::uint64_t>(t) * std::get<CircleRotation>(driver.parts[i]).alpha;
        else
            std::get<BernoulliState>(omega.parts[i]).shift(t);
    }
    return omega;
}

/// Deterministic draw from the invariant measure.
inline OmegaPoint sample_omega(const Driver& driver, std::uint64_t seed)
{
    OmegaPoint out;
    out.parts.reserve(driver.parts.size());
    for (std::size_t i = 0; i < driver.parts.size(); ++i) {
        const std::uint64_t stream = splitmix64(splitmix64(seed) + 0xD1B54A32D192ED03ULL * (i + 1));
        if (std::holds_alternative<CircleRotation>(driver.parts[i])) {
            out.parts.emplace_back(CircleState{splitmix64(stream)});
        } else {
            const auto& b = std::get<BernoulliShift>(driver.parts[i]);
            BernoulliState s;
            s.seed = splitmix64(stream ^ 0xA0761D6478BD642FULL);
            s.offset = 0;
            s.half_width = b.half_width;
            s.cumulative = b.cumulative;
            s.refill_window();
            out.parts.emplace_back(std::move(s));
        }
    }
    return out;
}

/// Uniform variate in [0,1) from the binary expansion of the forward symbols
/// omega_0, omega_1, ... of a two-symbol Bernoulli part (53 bits).
inline double forward_binary_variate(const BernoulliState& s)
{
    std::uint64_t bits = 0;
    for (int j = 0; j < 53; ++j)
        bits = (bits << 1) | (s.symbol(j) & 1U);
    return static_cast<double>(bits) * 0x1.0p-53;
}

} // namespace morsespec
