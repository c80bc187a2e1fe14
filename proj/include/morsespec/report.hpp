#pragma once

// Run configuration, the analysis pipeline behind the command-line tool, the
// JSON report and the CSV series for plotting.

#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/morse.hpp"
#include "morsespec/scenarios.hpp"
#include "morsespec/spectra.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace morsespec {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// Analyses run in this order whatever order they are requested in.
inline const std::vector<std::string>& analysis_order()
{
    static const std::vector<std::string> order{"growth", "lyapunov", "morse", "dichotomy", "attraction"};
    return order;
}

struct GammaGrid {
    double lo = -0.5;
    double hi = 1.2;
    double step = 0.01;
};

/// Unset optionals fall back to the scenario's run hints.
struct RunConfig {
    std::string scenario = "block";
    ScenarioParams params;
    std::uint64_t seed = 1;
    std::optional<std::int64_t> T_max;
    std::optional<std::vector<std::int64_t>> T_grid;
    std::optional<int> n_omega;
    std::optional<GammaGrid> gamma_grid;
    std::vector<double> epsilon{0.05, 0.01};
    double cluster_gap = 0.1;
    double tau_temper = kDefaultTauTemper;
    bool allow_unrestricted = false;
    double unrestricted_width = 1.0;
    std::vector<double> offsets{-1.0, -0.5, 0.0, 0.5, 1.0};
    int x_per_fiber = 8;
    std::optional<int> dichotomy_horizon;
    int dichotomy_omegas = 10;
    std::int64_t attraction_t_max = 30;
    std::int64_t angle_horizon = 5000;
    std::vector<std::string> outputs = analysis_order();
};

namespace detail {

/// Rounds to 12 significant digits so the JSON text is stable and round-trips.
inline double round12(double x)
{
    if (!std::isfinite(x))
        return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline std::string fmt12(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    if (std::isnan(x))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// Extended real as JSON: a number, or "inf" / "-inf".
inline Json num(double x)
{
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    if (std::isnan(x))
        return "nan";
    return round12(x);
}

inline double as_extended(const Json& j)
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return kInf;
        if (s == "-inf")
            return -kInf;
        if (s == "nan")
            return std::nan("");
        throw ConfigError("not a number: " + s);
    }
    return j.get<double>();
}

inline Json num_array(const std::vector<double>& v)
{
    Json out = Json::array();
    for (double x : v)
        out.push_back(num(x));
    return out;
}

template <class T>
T field(const Json& j, const char* key, const char* what)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' must be " + what);
    }
}

inline Matrix matrix_from_json(const Json& j, int d)
{
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        throw ConfigError("custom matrix must have d rows");
    Matrix m(d, d);
    for (int r = 0; r < d; ++r) {
        const Json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            throw ConfigError("custom matrix rows must have d entries");
        for (int c = 0; c < d; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number())
                throw ConfigError("custom matrix entries must be numbers");
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

} // namespace detail

/// Checks the invariants a config must satisfy; throws ConfigError.
inline void validate_config(const RunConfig& c)
{
    if (c.T_grid) {
        if (c.T_grid->empty())
            throw ConfigError("T_grid must not be empty");
        for (std::size_t i = 0; i < c.T_grid->size(); ++i) {
            if ((*c.T_grid)[i] < 1)
                throw ConfigError("T_grid entries must be positive");
            if (i > 0 && (*c.T_grid)[i] <= (*c.T_grid)[i - 1])
                throw ConfigError("T_grid must be increasing");
        }
    }
    if (c.T_max && *c.T_max < 50)
        throw ConfigError("T_max must be at least 50");
    if (c.n_omega && *c.n_omega < 1)
        throw ConfigError("n_omega must be at least 1");
    if (c.gamma_grid && (!(c.gamma_grid->step > 0.0) || !(c.gamma_grid->hi >= c.gamma_grid->lo)))
        throw ConfigError("gamma_grid needs step > 0 and hi >= lo");
    if (c.epsilon.empty())
        throw ConfigError("epsilon must not be empty");
    for (double e : c.epsilon)
        if (!(e > 0.0))
            throw ConfigError("epsilon must be positive");
    if (!(c.cluster_gap > 0.0))
        throw ConfigError("cluster_gap must be positive");
    if (!(c.tau_temper > 0.0))
        throw ConfigError("tau_temper must be positive");
    if (c.offsets.empty())
        throw ConfigError("offsets must not be empty");
    for (double f : c.offsets)
        if (!c.allow_unrestricted && std::abs(f) > 1.0)
            throw ConfigError("offset fractions must lie in [-1, 1] unless allow_unrestricted is set");
    if (!(c.unrestricted_width >= 1.0))
        throw ConfigError("unrestricted_width must be at least 1");
    if (c.x_per_fiber < 1)
        throw ConfigError("x_per_fiber must be at least 1");
    if (c.dichotomy_horizon && *c.dichotomy_horizon < 1)
        throw ConfigError("dichotomy_horizon must be positive");
    if (c.dichotomy_omegas < 1)
        throw ConfigError("dichotomy_omegas must be at least 1");
    if (c.attraction_t_max < 6)
        throw ConfigError("attraction_t_max must exceed the burn-in of 5 steps");
    if (c.angle_horizon < 1)
        throw ConfigError("angle_horizon must be positive");
    const auto& known = analysis_order();
    for (const auto& o : c.outputs)
        if (std::find(known.begin(), known.end(), o) == known.end())
            throw ConfigError("unknown output: " + o);
}

inline RunConfig config_from_json(const Json& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::set<std::string> allowed{
        "scenario", "seed", "T_max", "T_grid", "n_omega", "gamma_grid", "epsilon", "cluster_gap", "tau_temper",
        "allow_unrestricted", "unrestricted_width", "offsets", "x_per_fiber", "dichotomy_horizon",
        "dichotomy_omegas", "attraction_t_max", "angle_horizon", "outputs"};
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown config field: " + key);

    RunConfig c;
    if (!j.contains("scenario"))
        throw ConfigError("config needs a scenario");
    const Json& s = j.at("scenario");
    if (s.is_string()) {
        c.scenario = s.get<std::string>();
    } else if (s.is_object()) {
        c.scenario = detail::field<std::string>(s, "name", "a string");
        if (s.contains("params")) {
            const Json& p = s.at("params");
            if (!p.is_object())
                throw ConfigError("scenario params must be an object");
            for (const auto& [key, value] : p.items()) {
                if (!value.is_number())
                    throw ConfigError("scenario param '" + key + "' must be a number");
                c.params.values[key] = value.get<double>();
            }
        }
        if (s.contains("custom")) {
            const Json& t = s.at("custom");
            CustomTable tab;
            tab.d = detail::field<int>(t, "d", "an integer");
            if (tab.d < 1)
                throw ConfigError("custom d must be positive");
            if (t.contains("driver"))
                tab.driver = detail::field<std::string>(t, "driver", "a string");
            if (!t.contains("matrices") || !t.at("matrices").is_array())
                throw ConfigError("custom table needs a 'matrices' array");
            for (const auto& m : t.at("matrices"))
                tab.matrices.push_back(detail::matrix_from_json(m, tab.d));
            if (t.contains("probabilities"))
                tab.probabilities = detail::field<std::vector<double>>(t, "probabilities", "a list of numbers");
            c.params.custom = std::move(tab);
        }
    } else {
        throw ConfigError("scenario must be a name or an object");
    }

    if (j.contains("seed"))
        c.seed = detail::field<std::uint64_t>(j, "seed", "a non-negative integer");
    if (j.contains("T_max"))
        c.T_max = detail::field<std::int64_t>(j, "T_max", "an integer");
    if (j.contains("T_grid"))
        c.T_grid = detail::field<std::vector<std::int64_t>>(j, "T_grid", "a list of integers");
    if (j.contains("n_omega"))
        c.n_omega = detail::field<int>(j, "n_omega", "an integer");
    if (j.contains("gamma_grid")) {
        const Json& g = j.at("gamma_grid");
        c.gamma_grid = GammaGrid{detail::field<double>(g, "lo", "a number"), detail::field<double>(g, "hi", "a number"),
                                 detail::field<double>(g, "step", "a number")};
    }
    if (j.contains("epsilon")) {
        if (j.at("epsilon").is_number())
            c.epsilon = {j.at("epsilon").get<double>()};
        else
            c.epsilon = detail::field<std::vector<double>>(j, "epsilon", "a number or a list of numbers");
    }
    if (j.contains("cluster_gap"))
        c.cluster_gap = detail::field<double>(j, "cluster_gap", "a number");
    if (j.contains("tau_temper"))
        c.tau_temper = detail::field<double>(j, "tau_temper", "a number");
    if (j.contains("allow_unrestricted"))
        c.allow_unrestricted = detail::field<bool>(j, "allow_unrestricted", "a boolean");
    if (j.contains("unrestricted_width"))
        c.unrestricted_width = detail::field<double>(j, "unrestricted_width", "a number");
    if (j.contains("offsets"))
        c.offsets = detail::field<std::vector<double>>(j, "offsets", "a list of numbers");
    if (j.contains("x_per_fiber"))
        c.x_per_fiber = detail::field<int>(j, "x_per_fiber", "an integer");
    if (j.contains("dichotomy_horizon"))
        c.dichotomy_horizon = detail::field<int>(j, "dichotomy_horizon", "an integer");
    if (j.contains("dichotomy_omegas"))
        c.dichotomy_omegas = detail::field<int>(j, "dichotomy_omegas", "an integer");
    if (j.contains("attraction_t_max"))
        c.attraction_t_max = detail::field<std::int64_t>(j, "attraction_t_max", "an integer");
    if (j.contains("angle_horizon"))
        c.angle_horizon = detail::field<std::int64_t>(j, "angle_horizon", "an integer");
    if (j.contains("outputs"))
        c.outputs = detail::field<std::vector<std::string>>(j, "outputs", "a list of analysis names");
    validate_config(c);
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config: " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

/// The JSON report; CSV series are derived from it.
struct ResultBundle {
    Json report = Json::object();

    bool validation_ok() const { return !report.contains("validation") || report["validation"].value("ok", true); }

    /// Report text with the wall-time field removed.
    std::string canonical() const
    {
        Json copy = report;
        if (copy.contains("meta"))
            copy["meta"].erase("wall_time_s");
        return copy.dump(2);
    }
};

inline std::string bundle_to_json(const ResultBundle& b) { return b.report.dump(2); }

inline ResultBundle bundle_from_json(const std::string& text)
{
    ResultBundle b;
    b.report = Json::parse(text);
    return b;
}

namespace detail {

struct Comparison {
    std::string field;
    Json expected;
    Json observed;
    double tolerance = 0.0;
    std::string provenance;
    bool pass = false;

    Json to_json() const
    {
        return Json{{"field", field},   {"expected", expected},     {"observed", observed},
                    {"tolerance", num(tolerance)}, {"provenance", provenance}, {"pass", pass}};
    }
};

/// Every point is within tol of an interval, every interval within tol of a
/// point, and no interval is wider than 2 tol (the expected spectra are points).
inline bool points_match_intervals(const std::vector<double>& points, const std::vector<RealInterval>& ivs,
                                   double tol)
{
    auto near = [tol](double p, const RealInterval& iv) { return p >= iv.lo - tol && p <= iv.hi + tol; };
    for (const auto& iv : ivs)
        if (!(iv.hi - iv.lo <= 2 * tol))
            return false;
    for (double p : points)
        if (std::none_of(ivs.begin(), ivs.end(), [&](const auto& iv) { return near(p, iv); }))
            return false;
    for (const auto& iv : ivs)
        if (std::none_of(points.begin(), points.end(), [&](double p) { return near(p, iv); }))
            return false;
    return !ivs.empty() || points.empty();
}

inline Json intervals_json(const std::vector<RealInterval>& ivs)
{
    Json out = Json::array();
    for (const auto& iv : ivs)
        out.push_back(Json::array({num(iv.lo), num(iv.hi)}));
    return out;
}

inline Json interval_json(const SpectrumInterval& iv, bool with_samples)
{
    Json j{{"label", iv.morse_label}, {"lo", num(iv.lo)}, {"hi", num(iv.hi)}};
    if (with_samples) {
        Json s = Json::array();
        for (const auto& x : iv.samples)
            s.push_back(Json::array({x.T, x.t, num(x.value)}));
        j["samples"] = std::move(s);
    }
    return j;
}

inline Json resolved_config(const RunConfig& c, const SamplingPlan& plan, std::int64_t T_max, int n_omega,
                            const GammaGrid& g, int horizon)
{
    Json params = Json::object();
    for (const auto& [k, v] : c.params.values)
        params[k] = num(v);
    return Json{{"scenario", c.scenario},
                {"params", params},
                {"custom_table", c.params.custom.has_value()},
                {"seed", c.seed},
                {"T_max", T_max},
                {"T_grid", plan.T_grid},
                {"n_omega", n_omega},
                {"gamma_grid", Json{{"lo", num(g.lo)}, {"hi", num(g.hi)}, {"step", num(g.step)}}},
                {"epsilon", num_array(c.epsilon)},
                {"cluster_gap", num(c.cluster_gap)},
                {"tau_temper", num(c.tau_temper)},
                {"allow_unrestricted", c.allow_unrestricted},
                {"unrestricted_width", num(c.unrestricted_width)},
                {"offsets", num_array(c.offsets)},
                {"x_per_fiber", c.x_per_fiber},
                {"dichotomy_horizon", horizon},
                {"dichotomy_omegas", c.dichotomy_omegas},
                {"attraction_t_max", c.attraction_t_max},
                {"angle_horizon", c.angle_horizon},
                {"outputs", c.outputs}};
}

} // namespace detail

/// Runs the requested analyses in the fixed order. The report is identical for
/// any worker count; only meta.wall_time_s varies between runs.
inline ResultBundle run(const RunConfig& config, int workers = 0)
{
    validate_config(config);
    const auto start = std::chrono::steady_clock::now();
    const Scenario sc = build_scenario(config.scenario, config.params);
    const CocycleSystem& sys = sc.system;
    const RunHints& hints = sc.hints;

    SamplingPlan plan;
    plan.T_grid = config.T_grid.value_or(hints.T_grid);
    plan.offset_fractions = config.offsets;
    plan.x_per_fiber = config.x_per_fiber;
    plan.allow_unrestricted = config.allow_unrestricted;
    plan.unrestricted_width = config.unrestricted_width;
    plan.seed = config.seed;
    (void)plan.points();

    const std::int64_t T_max = config.T_max.value_or(hints.morse_T);
    const int n_omega = config.n_omega.value_or(hints.n_omega);
    const GammaGrid ggrid = config.gamma_grid.value_or(GammaGrid{hints.gamma_lo, hints.gamma_hi, 0.01});
    const int horizon = config.dichotomy_horizon.value_or(hints.dichotomy_horizon);
    const double tol = sc.expected.tolerance;
    auto wants = [&](const char* name) {
        return std::find(config.outputs.begin(), config.outputs.end(), name) != config.outputs.end();
    };

    ResultBundle bundle;
    Json& rep = bundle.report;
    rep["meta"] = Json{{"tool", "morsespec"}, {"version", kVersion}, {"seed", config.seed}, {"wall_time_s", 0.0}};
    rep["config"] = detail::resolved_config(config, plan, T_max, n_omega, ggrid, horizon);
    rep["scenario"] = Json{{"name", sc.name}, {"system", sys.name}, {"d", sys.d},
                           {"driver", sys.driver.description}};

    std::vector<detail::Comparison> comparisons;
    const std::vector<OmegaPoint> omegas = sample_omegas(sys.driver, n_omega, config.seed);
    std::string stage;
    try {
        stage = "growth";
        if (wants("growth")) {
            const std::vector<OmegaPoint> few(omegas.begin(),
                                              omegas.begin() + std::min<std::ptrdiff_t>(10, n_omega));
            const int gh = static_cast<int>(std::min<std::int64_t>(T_max, 200));
            const GrowthFit fit = bounded_growth_fit(sys, few, gh, sc.name == "bernoulli-beta"
                                                                         ? std::optional<double>(0.1)
                                                                         : std::nullopt);
            Json samples = Json::array();
            for (const auto& [i, lk] : fit.log_K_samples)
                samples.push_back(Json::array({i, detail::num(lk)}));
            rep["growth"] = Json{{"a_hat", detail::num(fit.a_hat)},
                                 {"trial_rate", detail::num(fit.trial_rate)},
                                 {"horizon", fit.horizon},
                                 {"tempered_slope", detail::num(fit.tempered_slope)},
                                 {"tempered", fit.tempered_slope <= config.tau_temper},
                                 {"log_K_samples", samples}};
        }

        stage = "lyapunov";
        std::vector<double> exps;
        if (wants("lyapunov")) {
            exps = lyapunov_spectrum_qr(sys, omegas.front(), T_max);
            rep["lyapunov"] = Json{{"T", T_max}, {"exponents", detail::num_array(exps)}};
            if (sc.expected.exponents) {
                const auto& e = *sc.expected.exponents;
                bool ok = e.value.size() == exps.size();
                for (std::size_t i = 0; ok && i < exps.size(); ++i)
                    ok = std::abs(exps[i] - e.value[i]) <= tol;
                comparisons.push_back({"lyapunov.exponents", detail::num_array(e.value), detail::num_array(exps),
                                       tol, e.provenance, ok});
            }
        }

        std::optional<MorseEstimate> est;
        stage = "morse";
        if (wants("morse") || wants("dichotomy") || wants("attraction")) {
            MorseParams mp;
            mp.T = T_max;
            mp.cluster_gap = config.cluster_gap;
            mp.epsilons = config.epsilon;
            mp.n_omega = n_omega;
            mp.plan = plan;
            mp.seed = config.seed;
            mp.attraction_t_max = config.attraction_t_max;
            mp.workers = workers;
            est = finest_morse_estimate(sys, mp);
        }
        if (wants("morse")) {
            const auto& dec = est->decomposition;
            Json sets = Json::array();
            for (std::size_t i = 0; i < dec.sets.size(); ++i) {
                const auto& c = dec.exponent_clusters[i];
                Json j{{"index", i + 1},
                       {"label", dec.sets[i].label},
                       {"dim", dec.sets[i].dim_sub},
                       {"cluster_mean", detail::num(c.mean)},
                       {"cluster_members", detail::num_array(c.members)}};
                for (const auto& iv : est->intervals)
                    if (iv.morse_label == dec.sets[i].label)
                        j["interval"] = detail::interval_json(iv, true);
                sets.push_back(std::move(j));
            }
            const SpectrumInterval full = full_space_interval(sys, omegas, plan, workers);
            Json morse{{"n", dec.n},
                       {"validated", est->validated},
                       {"whitney_ok", est->whitney_ok},
                       {"whitney_condition", detail::num(est->whitney_condition)},
                       {"sets", std::move(sets)},
                       {"full_space_interval", detail::interval_json(full, false)}};
            if (sys.d >= 2 && dec.n >= 2) {
                const double angle = min_separation_angle(dec, omegas.front(), config.angle_horizon);
                const SubspaceFamily a = dec.attractor(1);
                const SubspaceFamily r = dec.repeller(1);
                const double slope = gap_temperedness(sys, a, r, omegas.front(), static_cast<int>(config.angle_horizon));
                morse["min_separation_angle"] = detail::num(angle);
                morse["gap_temperedness_slope"] = detail::num(slope);
                morse["classification"] = angle >= 0.05 ? "uniform" : "weak";
                if (sc.expected.angle_collapse) {
                    const bool observed = angle <= 0.05 && slope <= config.tau_temper;
                    comparisons.push_back({"morse.angle_collapse", sc.expected.angle_collapse->value, observed, 0.05,
                                           sc.expected.angle_collapse->provenance,
                                           observed == sc.expected.angle_collapse->value});
                }
                if (sc.expected.classification) {
                    const std::string observed = angle >= 0.05 ? "uniform" : "weak";
                    comparisons.push_back({"morse.classification", sc.expected.classification->value, observed, 0.05,
                                           sc.expected.classification->provenance,
                                           observed == sc.expected.classification->value});
                }
            }
            if (sc.expected.morse_points) {
                std::vector<RealInterval> ivs;
                for (const auto& iv : est->intervals)
                    ivs.push_back({iv.lo, iv.hi});
                const auto& e = *sc.expected.morse_points;
                comparisons.push_back({"morse.intervals", detail::num_array(e.value), detail::intervals_json(ivs), tol,
                                       e.provenance, detail::points_match_intervals(e.value, ivs, tol)});
            }
            if (sc.expected.full_interval) {
                const auto& e = *sc.expected.full_interval;
                const bool ok = std::abs(full.lo - e.value.first) <= tol && std::abs(full.hi - e.value.second) <= tol;
                comparisons.push_back({"morse.full_space_interval",
                                       Json::array({detail::num(e.value.first), detail::num(e.value.second)}),
                                       Json::array({detail::num(full.lo), detail::num(full.hi)}), tol, e.provenance,
                                       ok});
            }
            if (sc.expected.divergent) {
                const bool observed = std::isinf(full.hi) && full.hi > 0;
                comparisons.push_back({"morse.divergent", sc.expected.divergent->value, observed, 0.0,
                                       sc.expected.divergent->provenance, observed == sc.expected.divergent->value});
            }
            if (sc.expected.companion_full_interval && sc.companion) {
                const SpectrumInterval cf = full_space_interval(*sc.companion, omegas, plan, workers);
                const auto& e = *sc.expected.companion_full_interval;
                const double ctol = sc.expected.companion_tolerance;
                const bool ok = std::abs(cf.lo - e.value.first) <= ctol && std::abs(cf.hi - e.value.second) <= ctol;
                morse["companion_full_space_interval"] = detail::interval_json(cf, false);
                comparisons.push_back({"morse.companion_full_space_interval",
                                       Json::array({detail::num(e.value.first), detail::num(e.value.second)}),
                                       Json::array({detail::num(cf.lo), detail::num(cf.hi)}), ctol, e.provenance, ok});
            }
            comparisons.push_back({"morse.attraction_validated", true, est->validated, 0.0, "by-construction",
                                   est->validated});
            rep["morse"] = std::move(morse);
        }

        stage = "dichotomy";
        if (wants("dichotomy")) {
            const auto grid = make_grid(ggrid.lo, ggrid.hi, ggrid.step);
            const std::vector<OmegaPoint> few(
                est->omegas.begin(), est->omegas.begin() + std::min<std::ptrdiff_t>(config.dichotomy_omegas, n_omega));
            DichotomyOptions opt;
            opt.tau_temper = config.tau_temper;
            const auto scan = dichotomy_spectrum_scan(sys, grid, candidate_splittings(est->decomposition, sys.d), few,
                                                      horizon, opt, workers);
            Json verdicts = Json::array();
            for (const auto& v : scan.verdicts)
                verdicts.push_back(Json{{"gamma", detail::num(v.gamma)},
                                        {"admits", v.admits},
                                        {"alpha_star", detail::num(v.alpha_star)},
                                        {"projector_rank", v.projector_rank},
                                        {"K_slope", detail::num(v.K_slope)},
                                        {"splitting", v.splitting},
                                        {"log_K_max", detail::num(v.log_K_max)},
                                        {"invariance_residual", detail::num(v.invariance_residual)}});
            rep["dichotomy"] = Json{{"horizon", horizon},
                                    {"sigma_prime", detail::intervals_json(scan.sigma_prime)},
                                    {"verdicts", std::move(verdicts)}};
            if (sc.expected.sigma_prime_points) {
                const auto& e = *sc.expected.sigma_prime_points;
                comparisons.push_back({"dichotomy.sigma_prime", detail::num_array(e.value),
                                       detail::intervals_json(scan.sigma_prime), tol, e.provenance,
                                       detail::points_match_intervals(e.value, scan.sigma_prime, tol)});
            }
        }

        stage = "attraction";
        if (wants("attraction")) {
            Json reports = Json::array();
            for (const auto& [i, r] : est->attraction) {
                Json probs = Json::array();
                for (double p : r.exceedance_probabilities)
                    probs.push_back(detail::num(p));
                reports.push_back(Json{{"attractor_index", i},
                                       {"epsilon", detail::num(r.epsilon)},
                                       {"n_omega", r.n_omega},
                                       {"t_values", r.t_values},
                                       {"exceedance", std::move(probs)},
                                       {"validated", attraction_validates(r)}});
            }
            rep["attraction"] = Json{{"reports", std::move(reports)}};
        }
    } catch (const Error& e) {
        throw Error(stage + ": " + e.what());
    }

    Json cmp = Json::array();
    bool ok = true;
    for (const auto& c : comparisons) {
        ok = ok && c.pass;
        cmp.push_back(c.to_json());
    }
    rep["validation"] = Json{{"ok", ok}, {"comparisons", std::move(cmp)}};
    rep["meta"]["wall_time_s"] =
        detail::round12(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return bundle;
}

/// CSV header lines, one per emitted file.
inline const std::vector<std::pair<std::string, std::string>>& csv_headers()
{
    static const std::vector<std::pair<std::string, std::string>> h{
        {"dichotomy.csv", "gamma,admits,alpha_star,K_slope"},
        {"morse_intervals.csv", "set_index,label,dim,lo,hi,midpoint"},
        {"lambda_samples.csv", "set_index,T,t,lambda_tilde"},
        {"attraction.csv", "attractor_index,epsilon,t,exceedance"},
        {"lyapunov.csv", "index,exponent"},
    };
    return h;
}

/// Writes the CSV series of the bundle into `dir`; absent analyses give header-only files.
inline void emit_plot_data(const ResultBundle& bundle, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Json& rep = bundle.report;
    using detail::as_extended;
    using detail::fmt12;
    auto open = [&](const std::string& name) {
        std::ofstream out(dir / name);
        if (!out)
            throw Error("cannot write " + (dir / name).string());
        for (const auto& [file, header] : csv_headers())
            if (file == name)
                out << header << '\n';
        return out;
    };

    {
        auto out = open("dichotomy.csv");
        if (rep.contains("dichotomy"))
            for (const auto& v : rep["dichotomy"]["verdicts"])
                out << fmt12(as_extended(v["gamma"])) << ',' << (v["admits"].get<bool>() ? 1 : 0) << ','
                    << fmt12(as_extended(v["alpha_star"])) << ',' << fmt12(as_extended(v["K_slope"])) << '\n';
    }
    {
        auto ivs = open("morse_intervals.csv");
        auto samples = open("lambda_samples.csv");
        if (rep.contains("morse")) {
            for (const auto& s : rep["morse"]["sets"]) {
                const int idx = s["index"].get<int>();
                if (!s.contains("interval"))
                    continue;
                const auto& iv = s["interval"];
                const double lo = as_extended(iv["lo"]);
                const double hi = as_extended(iv["hi"]);
                ivs << idx << ',' << s["label"].get<std::string>() << ',' << s["dim"].get<int>() << ',' << fmt12(lo)
                    << ',' << fmt12(hi) << ',' << fmt12(0.5 * (lo + hi)) << '\n';
                for (const auto& x : iv["samples"])
                    samples << idx << ',' << x[0].get<std::int64_t>() << ',' << x[1].get<std::int64_t>() << ','
                            << fmt12(as_extended(x[2])) << '\n';
            }
        }
    }
    {
        auto out = open("attraction.csv");
        if (rep.contains("attraction"))
            for (const auto& r : rep["attraction"]["reports"]) {
                const auto& ts = r["t_values"];
                const auto& ps = r["exceedance"];
                for (std::size_t k = 0; k < ts.size(); ++k)
                    out << r["attractor_index"].get<int>() << ',' << fmt12(as_extended(r["epsilon"])) << ','
                        << ts[k].get<std::int64_t>() << ',' << fmt12(as_extended(ps[k])) << '\n';
            }
    }
    {
        auto out = open("lyapunov.csv");
        if (rep.contains("lyapunov")) {
            int i = 1;
            for (const auto& e : rep["lyapunov"]["exponents"])
                out << i++ << ',' << fmt12(as_extended(e)) << '\n';
        }
    }
}

/// report.json plus the CSV series.
inline void write_outputs(const ResultBundle& bundle, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "report.json");
    if (!out)
        throw Error("cannot write " + (dir / "report.json").string());
    out << bundle_to_json(bundle) << '\n';
    emit_plot_data(bundle, dir);
}

} // namespace morsespec
