#pragma once

// Registry of worked examples: each builds a cocycle, an optional companion
// (the same system before a coordinate change), expected results and run hints.

#include "morsespec/base_dynamics.hpp"
#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace morsespec {

/// An expected value with where it comes from: "worked-example",
/// "closed-form" or "by-construction".
template <class T>
struct Tagged {
    T value{};
    std::string provenance;
};

struct Expected {
    std::optional<Tagged<std::vector<double>>> exponents;
    std::optional<Tagged<std::vector<double>>> morse_points;
    std::optional<Tagged<std::vector<double>>> sigma_prime_points;
    std::optional<Tagged<std::pair<double, double>>> full_interval;
    std::optional<Tagged<bool>> angle_collapse;
    /// The system's full-space interval reaches +inf.
    std::optional<Tagged<bool>> divergent;
    std::optional<Tagged<std::pair<double, double>>> companion_full_interval;
    std::optional<Tagged<std::string>> classification;
    double tolerance = 0.05;
    double companion_tolerance = 1e-9;
};

/// Settings a scenario needs to show its behaviour; config values override them.
struct RunHints {
    std::vector<std::int64_t> T_grid{50, 100, 200};
    std::int64_t morse_T = 200;
    int dichotomy_horizon = 200;
    int n_omega = 50;
    double gamma_lo = -0.5;
    double gamma_hi = 1.2;
};

struct CustomTable {
    int d = 1;
    /// "circle": bins over [0,1); "bernoulli": one matrix per symbol of omega_0.
    std::string driver = "circle";
    std::vector<Matrix> matrices;
    std::vector<double> probabilities;
};

struct ScenarioParams {
    std::map<std::string, double> values;
    std::optional<CustomTable> custom;

    double get(const std::string& key, double fallback) const
    {
        const auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }
};

struct Scenario {
    std::string name;
    ScenarioParams params;
    CocycleSystem system;
    /// The system before the coordinate change, when the example is a pair.
    std::optional<CocycleSystem> companion;
    Expected expected;
    RunHints hints;
};

inline constexpr std::uint64_t kHalfPhase = 1ULL << 63;

/// Coordinate change H(omega) = [[1, e^omega], [1, e^{1-omega}]], identity at omega = 1/2.
inline Matrix coord_change_h(const CircleState& c)
{
    if (c.phase == kHalfPhase)
        return Matrix::Identity(2, 2);
    const double w = c.value();
    Matrix h(2, 2);
    h << 1.0, std::exp(w), 1.0, std::exp(1.0 - w);
    return h;
}

/// k with omega in [1 - 2^{1-k}, 1 - 2^{-k}), read off the leading one-bits of the phase.
inline int rotation_cell(const CircleState& c)
{
    return std::countl_one(c.phase) + 1;
}

inline constexpr int kDefaultKMax = 1000000;

/// Cumulative masses of cells U_k with mu(U_k) = 6/(pi^2 k^2), k <= k_max, tail folded into the last cell.
inline std::shared_ptr<const std::vector<double>> zeta_cells(int k_max)
{
    auto c = std::make_shared<std::vector<double>>(static_cast<std::size_t>(k_max));
    const double norm = 6.0 / (3.14159265358979323846 * 3.14159265358979323846);
    double acc = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        acc += norm / (static_cast<double>(k) * static_cast<double>(k));
        (*c)[static_cast<std::size_t>(k - 1)] = acc;
    }
    c->back() = 1.0;
    return c;
}

/// Cell index of u in [0,1) for the cumulative table (1-based).
inline int zeta_cell(const std::vector<double>& cumulative, double u)
{
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1)) + 1;
}

namespace detail {

inline Matrix diag2(double a, double b)
{
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

inline Scenario block_scenario(const ScenarioParams& p, const std::string& name = "block")
{
    const double beta = p.get("beta", 2.0);
    if (!(beta > 1.0))
        throw InvalidParams("block scenario needs beta > 1");
    const double lb = std::log(beta);
    Scenario s;
    s.name = name;
    s.params = p;
    s.system = constant_system(diag2(beta, 1.0), golden_rotation(), "block");
    s.expected.exponents = {{lb, 0.0}, "worked-example"};
    s.expected.morse_points = {{0.0, lb}, "worked-example"};
    s.expected.sigma_prime_points = {{0.0, lb}, "worked-example"};
    s.expected.full_interval = {{0.0, lb}, "closed-form"};
    s.expected.classification = {"uniform", "worked-example"};
    s.hints.gamma_hi = std::max(1.2, lb + 0.5);
    return s;
}

inline Scenario coord_change_scenario(const ScenarioParams& p)
{
    Scenario s = block_scenario(p, "coord-change");
    const double beta = p.get("beta", 2.0);
    const Matrix g = diag2(beta, 1.0);
    const Driver driver = golden_rotation();
    const std::uint64_t alpha = std::get<CircleRotation>(driver.parts.front()).alpha;
    s.companion = s.system;
    s.system = make_system(2, driver, "coord-change", [g, alpha](const OmegaPoint& w) {
        const CircleState& c = w.circle();
        const CircleState next{c.phase + alpha};
        if (c.phase == kHalfPhase || next.phase == kHalfPhase)
            throw Error("coord-change: orbit hit the exceptional point omega = 1/2");
        return Matrix(coord_change_h(next) * g * coord_change_h(c).inverse());
    });
    s.expected.classification = {"weak", "worked-example"};
    s.expected.angle_collapse = {true, "worked-example"};
    s.hints.T_grid = {250, 500, 1000};
    s.hints.morse_T = 200;
    s.hints.dichotomy_horizon = 1000;
    s.hints.n_omega = 20;
    return s;
}

inline Scenario bernoulli_beta_scenario(const ScenarioParams& p)
{
    const int k_max = static_cast<int>(p.get("k_max", kDefaultKMax));
    if (k_max < 2)
        throw InvalidParams("k_max must be at least 2");
    const int width = static_cast<int>(p.get("half_width", 63));
    if (width < 52)
        throw InvalidParams("half_width must cover the 53 forward symbols");
    const Driver driver = bernoulli_shift(2, {0.5, 0.5}, width);
    const auto cells = zeta_cells(k_max);
    auto k_of = [cells](const OmegaPoint& w) {
        return zeta_cell(*cells, forward_binary_variate(w.bernoulli()));
    };
    Scenario s;
    s.name = "bernoulli-beta";
    s.params = p;
    s.system = make_scaled_system(1, driver, "bernoulli-beta", [driver, k_of](const OmegaPoint& w) {
        const OmegaPoint next = theta_step(driver, w, 1);
        // ln beta = k, so psi(1, omega) = exp(k(theta omega) - k(omega)).
        return ScaledMatrix{Matrix::Ones(1, 1), static_cast<double>(k_of(next) - k_of(w))};
    });
    s.companion = constant_system(Matrix::Ones(1, 1), driver, "bernoulli-beta (unchanged)");
    s.expected.divergent = {true, "worked-example"};
    s.expected.companion_full_interval = {{0.0, 0.0}, "worked-example"};
    s.hints.T_grid = {1, 10, 100, 1000, 10000};
    s.hints.morse_T = 200;
    s.hints.dichotomy_horizon = 200;
    s.hints.n_omega = 50;
    s.hints.gamma_lo = -0.5;
    s.hints.gamma_hi = 0.5;
    return s;
}

inline Scenario rotation_beta_scenario(const ScenarioParams& p)
{
    const Driver driver = golden_rotation();
    const std::uint64_t alpha = std::get<CircleRotation>(driver.parts.front()).alpha;
    Scenario s;
    s.name = "rotation-beta";
    s.params = p;
    s.system = make_system(1, driver, "rotation-beta", [alpha](const OmegaPoint& w) {
        const CircleState& c = w.circle();
        return Matrix::Constant(1, 1, static_cast<double>(rotation_cell({c.phase + alpha})) /
                                          static_cast<double>(rotation_cell(c)));
    });
    s.companion = constant_system(Matrix::Ones(1, 1), driver, "rotation-beta (unchanged)");
    s.expected.exponents = {{0.0}, "by-construction"};
    s.expected.morse_points = {{0.0}, "worked-example"};
    s.hints.T_grid = {250, 500, 1000};
    s.hints.n_omega = 50;
    s.hints.gamma_lo = -0.5;
    s.hints.gamma_hi = 0.5;
    return s;
}

inline Scenario const_diag_scenario(const ScenarioParams& p)
{
    const double a = p.get("a", 2.0);
    const double b = p.get("b", 0.5);
    if (!(a > 0.0) || !(b > 0.0))
        throw InvalidParams("const-diag needs positive diagonal entries");
    const double la = std::log(std::max(a, b));
    const double lb = std::log(std::min(a, b));
    Scenario s;
    s.name = "const-diag";
    s.params = p;
    s.system = constant_system(diag2(a, b), golden_rotation(), "const-diag");
    s.expected.exponents = {{la, lb}, "closed-form"};
    if (la - lb >= 0.1) {
        s.expected.morse_points = {{lb, la}, "closed-form"};
        s.expected.sigma_prime_points = {{lb, la}, "closed-form"};
    }
    s.expected.full_interval = {{lb, la}, "closed-form"};
    s.hints.gamma_lo = std::min(-1.0, lb - 0.3);
    s.hints.gamma_hi = std::max(1.0, la + 0.3);
    return s;
}

inline Scenario identity_scenario(const ScenarioParams& p)
{
    const int d = static_cast<int>(p.get("d", 2));
    if (d < 1)
        throw InvalidParams("identity scenario needs d >= 1");
    Scenario s;
    s.name = "identity";
    s.params = p;
    s.system = constant_system(Matrix::Identity(d, d), golden_rotation(), "identity");
    s.expected.exponents = {std::vector<double>(static_cast<std::size_t>(d), 0.0), "by-construction"};
    s.expected.morse_points = {{0.0}, "by-construction"};
    s.expected.sigma_prime_points = {{0.0}, "by-construction"};
    s.expected.full_interval = {{0.0, 0.0}, "by-construction"};
    s.hints.gamma_lo = -0.5;
    s.hints.gamma_hi = 0.5;
    return s;
}

inline Scenario custom_scenario(const ScenarioParams& p)
{
    if (!p.custom)
        throw InvalidParams("custom scenario needs a matrix table");
    const CustomTable tab = *p.custom;
    if (tab.matrices.empty())
        throw InvalidParams("custom table is empty");
    for (const auto& m : tab.matrices)
        if (m.rows() != tab.d || m.cols() != tab.d)
            throw InvalidParams("custom matrices must be d x d");
    Scenario s;
    s.name = "custom";
    s.params = p;
    if (tab.driver == "circle") {
        const auto bins = static_cast<double>(tab.matrices.size());
        s.system = make_system(tab.d, golden_rotation(), "custom", [tab, bins](const OmegaPoint& w) {
            const auto i = static_cast<std::size_t>(std::floor(w.circle().value() * bins));
            return tab.matrices[std::min(i, tab.matrices.size() - 1)];
        });
    } else if (tab.driver == "bernoulli") {
        const int k = static_cast<int>(tab.matrices.size());
        std::vector<double> probs = tab.probabilities;
        if (probs.empty())
            probs.assign(static_cast<std::size_t>(k), 1.0 / k);
        s.system = make_system(tab.d, bernoulli_shift(k, probs, 8), "custom", [tab](const OmegaPoint& w) {
            return tab.matrices[w.bernoulli().symbol(0)];
        });
    } else {
        throw InvalidParams("custom driver must be \"circle\" or \"bernoulli\"");
    }
    validate_generator(s.system);
    return s;
}

} // namespace detail

struct ScenarioInfo {
    std::string name;
    std::string summary;
};

inline std::vector<ScenarioInfo> scenario_list()
{
    return {
        {"block", "diag(beta, 1) over a golden rotation (beta > 1, default 2)"},
        {"coord-change", "block system conjugated by H(omega) = [[1, e^w], [1, e^(1-w)]]"},
        {"bernoulli-beta", "scalar psi = beta(theta omega)/beta(omega) on a Bernoulli shift, ln beta not integrable"},
        {"rotation-beta", "scalar psi = k(theta omega)/k(omega) on a golden rotation with dyadic cells"},
        {"const-diag", "diag(a, b) over a golden rotation (defaults a = 2, b = 0.5)"},
        {"identity", "identity cocycle in dimension d (default 2)"},
        {"custom", "matrix table keyed by circle bins or Bernoulli symbols"},
    };
}

inline Scenario build_scenario(const std::string& name, const ScenarioParams& params = {})
{
    if (name == "block")
        return detail::block_scenario(params);
    if (name == "coord-change")
        return detail::coord_change_scenario(params);
    if (name == "bernoulli-beta")
        return detail::bernoulli_beta_scenario(params);
    if (name == "rotation-beta")
        return detail::rotation_beta_scenario(params);
    if (name == "const-diag")
        return detail::const_diag_scenario(params);
    if (name == "identity")
        return detail::identity_scenario(params);
    if (name == "custom")
        return detail::custom_scenario(params);
    throw UnknownScenario("unknown scenario: " + name);
}

} // namespace morsespec
