#pragma once

// Run configuration: line-based `key = value` files, overridable by
// environment variables (SPINBATH_<KEY>) and then by command-line flags.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spinbath/errors.hpp"
#include "spinbath/model.hpp"
#include "spinbath/splitting.hpp"

namespace spinbath {

struct RunConfig {
    ModelParams params;
    double dt = 0.001;
    double t_end = 25.0;
    std::uint64_t samples = 10000;
    std::uint64_t seed = 12345;
    Scheme scheme = Scheme::Trotter;
    VariantPolicy policy = VariantPolicy::cycle();
    std::string output_path;           // empty: stdout
    std::size_t stride = 0;            // 0: about 500 output rows
    unsigned workers = 1;
    double weight_scale = 1.0;         // exponent scale of the Sz Boltzmann weight
    Surface surface = Surface::S11;    // trajectory command only
    SpinVector initial_spin{0.48, 0.36, 0.8};  // trajectory command only; scaled by radius

    std::size_t n_steps() const noexcept { return static_cast<std::size_t>(std::llround(t_end / dt)); }

    std::size_t output_stride() const noexcept {
        if (stride > 0)
            return stride;
        return std::max<std::size_t>(1, n_steps() / 500);
    }
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "omega", "b",       "c1",     "c2",     "mu",      "beta",         "radius",
        "dt",    "t_end",   "samples", "seed",  "scheme",  "variant",      "output",
        "stride", "workers", "weight_scale", "surface", "spin"};
    return keys;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::string normalize_key(std::string_view key) {
    std::string k = lower(trim(key));
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

inline double parse_real(const std::string& key, const std::string& v, std::size_t line) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out))
        throw ConfigError(key, line, "expected a finite number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v, std::size_t line) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(key, line, "expected a non-negative integer, got '" + v + "'");
    return out;
}

}  // namespace detail

inline Scheme parse_scheme(const std::string& v) {
    const std::string s = detail::lower(v);
    if (s == "trotter")
        return Scheme::Trotter;
    if (s == "yoshida4" || s == "yoshida")
        return Scheme::Yoshida4;
    if (s == "yoshida6")
        return Scheme::Yoshida6;
    throw ConfigError("scheme", 0, "unknown scheme '" + v + "' (trotter, yoshida4, yoshida6)");
}

inline Surface parse_surface(const std::string& v) {
    const std::string s = detail::lower(v);
    if (s == "s11" || s == "11")
        return Surface::S11;
    if (s == "s22" || s == "22")
        return Surface::S22;
    if (s == "s12" || s == "12" || s == "s21" || s == "21")
        return Surface::S12;
    throw ConfigError("surface", 0, "unknown surface '" + v + "' (s11, s22, s12)");
}

inline VariantPolicy parse_variant(const std::string& v) {
    const std::string s = detail::lower(v);
    if (s == "cycle")
        return VariantPolicy::cycle();
    if (s == "u1" || s == "1")
        return VariantPolicy::fixed_variant(StepVariant::U1);
    if (s == "u2" || s == "2")
        return VariantPolicy::fixed_variant(StepVariant::U2);
    if (s == "u3" || s == "3")
        return VariantPolicy::fixed_variant(StepVariant::U3);
    throw ConfigError("variant", 0, "unknown variant '" + v + "' (cycle, u1, u2, u3)");
}

// Applies one setting; `line` is 0 for environment and flag overrides.
inline void apply_setting(RunConfig& cfg, std::string_view raw_key, const std::string& raw_value,
                          std::size_t line = 0) {
    using detail::parse_real;
    using detail::parse_uint;
    const std::string key = detail::normalize_key(raw_key);
    const std::string v = detail::trim(raw_value);
    try {
        if (key == "omega") cfg.params.omega = parse_real(key, v, line);
        else if (key == "b") cfg.params.b = parse_real(key, v, line);
        else if (key == "c1") cfg.params.c1 = parse_real(key, v, line);
        else if (key == "c2") cfg.params.c2 = parse_real(key, v, line);
        else if (key == "mu") cfg.params.mu = parse_real(key, v, line);
        else if (key == "beta") cfg.params.beta = parse_real(key, v, line);
        else if (key == "radius") cfg.params.radius = parse_real(key, v, line);
        else if (key == "dt") cfg.dt = parse_real(key, v, line);
        else if (key == "t_end") cfg.t_end = parse_real(key, v, line);
        else if (key == "samples") cfg.samples = parse_uint(key, v, line);
        else if (key == "seed") cfg.seed = parse_uint(key, v, line);
        else if (key == "scheme") cfg.scheme = parse_scheme(v);
        else if (key == "variant") cfg.policy = parse_variant(v);
        else if (key == "output") cfg.output_path = v;
        else if (key == "stride") cfg.stride = parse_uint(key, v, line);
        else if (key == "workers") cfg.workers = static_cast<unsigned>(parse_uint(key, v, line));
        else if (key == "weight_scale") cfg.weight_scale = parse_real(key, v, line);
        else if (key == "surface") cfg.surface = parse_surface(v);
        else if (key == "spin") {
            std::array<double, 3> c{};
            std::stringstream ss(v);
            std::string part;
            int n = 0;
            while (std::getline(ss, part, ',')) {
                if (n == 3)
                    throw ConfigError(key, line, "expected three comma-separated components");
                c[static_cast<std::size_t>(n++)] = parse_real(key, detail::trim(part), line);
            }
            if (n != 3)
                throw ConfigError(key, line, "expected three comma-separated components");
            cfg.initial_spin = {c[0], c[1], c[2]};
        } else
            throw ConfigError(key, line, "unknown key");
    } catch (const ConfigError& e) {
        if (e.line() == line)
            throw;
        throw ConfigError(key, line, e.reason());
    }
}

inline void validate(const RunConfig& cfg) {
    const auto& p = cfg.params;
    if (!(cfg.dt > 0.0))
        throw ConfigError("dt", 0, "must be > 0");
    if (!(cfg.t_end >= 0.0))
        throw ConfigError("t_end", 0, "must be >= 0");
    if (cfg.samples < 1)
        throw ConfigError("samples", 0, "must be >= 1");
    if (cfg.workers < 1)
        throw ConfigError("workers", 0, "must be >= 1");
    if (!(p.beta > 0.0))
        throw ConfigError("beta", 0, "must be > 0");
    if (!(p.radius > 0.0))
        throw ConfigError("radius", 0, "must be > 0");
    if (!(cfg.weight_scale >= 0.0))
        throw ConfigError("weight_scale", 0, "must be >= 0");
    if (cfg.surface == Surface::S12 && cfg.policy.kind == VariantPolicy::Kind::Fixed &&
        cfg.policy.fixed == StepVariant::U3)
        throw ConfigError("variant", 0, "u3 is not defined on surface s12");
    if (!cfg.initial_spin.finite() || cfg.initial_spin.norm2() == 0.0)
        throw ConfigError("spin", 0, "must be a finite nonzero vector");
}

// SPINBATH_<KEY> for every known key (e.g. SPINBATH_MU, SPINBATH_T_END).
inline Overrides environment_overrides() {
    Overrides out;
    for (const auto& key : config_keys()) {
        std::string name = "SPINBATH_" + key;
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        if (const char* v = std::getenv(name.c_str()))
            out.emplace_back(key, v);
    }
    return out;
}

// Reads `key = value` lines ('#' starts a comment), then applies overrides in
// order, then validates.
inline RunConfig parse_config(std::istream& in, const Overrides& overrides = {}) {
    RunConfig cfg;
    std::map<std::string, std::size_t> origin;  // key -> file line that last set it
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (const auto hash = text.find('#'); hash != std::string::npos)
            text.erase(hash);
        if (detail::trim(text).empty())
            continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError(detail::trim(text), line_no, "expected 'key = value'");
        apply_setting(cfg, text.substr(0, eq), text.substr(eq + 1), line_no);
        origin[detail::normalize_key(text.substr(0, eq))] = line_no;
    }
    for (const auto& [k, v] : overrides) {
        apply_setting(cfg, k, v);
        origin.erase(detail::normalize_key(k));
    }
    try {
        validate(cfg);
    } catch (const ConfigError& e) {
        const auto it = origin.find(e.key());
        if (it == origin.end())
            throw;
        throw ConfigError(e.key(), it->second, e.reason());
    }
    return cfg;
}

inline RunConfig parse_config(std::string_view text, const Overrides& overrides = {}) {
    std::istringstream in{std::string(text)};
    return parse_config(in, overrides);
}

}  // namespace spinbath
