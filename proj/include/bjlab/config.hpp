#pragma once

// Campaign configuration: flat sectioned text with [spec] and [campaign]
// blocks. Fourier tables for W/R/F appear as repeated entries
//
//     W = k row col re im
//
// with 1-based row/col. The reality constraint coeff(-k) = conj(coeff(k)) is
// validated on load. omega accepts a literal or the keyword "goldenmean".
// Loading collects every error instead of failing fast; unknown keys are
// rejected by name.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bjlab/common.hpp"
#include "bjlab/operator_core.hpp"
#include "bjlab/report.hpp"
#include "bjlab/trig_poly.hpp"

namespace bjlab {

struct CampaignConfig {
    // [spec]
    int l{1};
    double lambda{0.0};
    double omega{golden_mean};
    double annulus_r{0.1};
    std::optional<OperatorSpec> spec;

    // [campaign]
    long N{8};
    int M{4};
    double E{0.0};
    double x{0.0};
    std::vector<double> energies;
    int phases{64};
    long quadrature{2048};
    std::vector<double> radii;
    long horizon{256};
    long box{100};
    std::uint64_t seed{0};
    std::optional<double> delta;      // eps0 scan width override
    std::optional<double> bad_delta;  // qBET delta override
    double good_green_divisor{50.0};
    double rate_bar{0.5};
    double localized_fraction_bar{0.9};

    std::string raw_text;
    std::string digest;

    std::vector<double> energy_grid() const {
        return energies.empty() ? std::vector<double>{E} : energies;
    }
};

struct ConfigResult {
    std::optional<CampaignConfig> config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty() && config.has_value(); }
};

namespace detail {

struct FourierEntry {
    int k;
    int row, col;
    double re, im;
};

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    std::istringstream is(s);
    is >> out;
    return static_cast<bool>(is) && is.eof();
}

inline bool parse_long(const std::string& s, long& out) {
    std::istringstream is(s);
    is >> out;
    return static_cast<bool>(is) && is.eof();
}

// builds one trig poly from its (k,row,col,re,im) entries, validating the
// reality constraint; absent tables become the zero polynomial
inline std::optional<TrigMatrixPoly> build_table(const std::string& name, int l,
                                                 const std::vector<FourierEntry>& entries,
                                                 std::vector<std::string>& errors) {
    int degree = 0;
    for (const auto& e : entries) degree = std::max(degree, std::abs(e.k));
    std::vector<CMat> table(static_cast<std::size_t>(2 * degree + 1), CMat::Zero(l, l));
    std::set<std::tuple<int, int, int>> seen;
    bool bad = false;
    for (const auto& e : entries) {
        if (e.row < 1 || e.row > l || e.col < 1 || e.col > l) {
            errors.push_back(name + ": entry (k=" + std::to_string(e.k) +
                             ") row/col outside [1," + std::to_string(l) + "]");
            bad = true;
            continue;
        }
        if (!seen.insert({e.k, e.row, e.col}).second) {
            errors.push_back(name + ": duplicate entry for (k=" + std::to_string(e.k) + ", " +
                             std::to_string(e.row) + "," + std::to_string(e.col) + ")");
            bad = true;
            continue;
        }
        table[static_cast<std::size_t>(degree + e.k)](e.row - 1, e.col - 1) = Complex(e.re, e.im);
    }
    if (bad) return std::nullopt;
    try {
        return TrigMatrixPoly::from_two_sided(l, degree, table);
    } catch (const std::exception& ex) {
        errors.push_back(name + ": " + ex.what());
        return std::nullopt;
    }
}

}  // namespace detail

inline ConfigResult parse_config_text(const std::string& text) {
    using detail::FourierEntry;
    ConfigResult result;
    CampaignConfig cfg;
    cfg.raw_text = text;
    cfg.digest = fnv1a_digest(text);
    auto& errors = result.errors;

    static const std::set<std::string> spec_keys = {"l", "lambda", "omega", "annulus_r",
                                                    "W", "R",      "F"};
    static const std::set<std::string> campaign_keys = {
        "N",       "M",         "E",    "x",         "energies", "phases",   "quadrature",
        "radii",   "horizon",   "box",  "seed",      "delta",    "bad_delta",
        "good_green_divisor",   "rate_bar",          "localized_fraction_bar"};

    std::map<std::string, std::vector<FourierEntry>> tables;
    std::map<std::string, std::string> spec_values;
    std::map<std::string, std::string> campaign_values;

    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "spec" && section != "campaign")
                errors.push_back("line " + std::to_string(lineno) + ": unknown section [" +
                                 section + "]");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (section == "spec") {
            if (!spec_keys.count(key)) {
                errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key +
                                 "' in [spec]");
                continue;
            }
            if (key == "W" || key == "R" || key == "F") {
                std::istringstream vs(value);
                FourierEntry e{};
                if (!(vs >> e.k >> e.row >> e.col >> e.re >> e.im)) {
                    errors.push_back("line " + std::to_string(lineno) + ": " + key +
                                     " entry must be 'k row col re im'");
                    continue;
                }
                tables[key].push_back(e);
            } else {
                spec_values[key] = value;
            }
        } else if (section == "campaign") {
            if (!campaign_keys.count(key)) {
                errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key +
                                 "' in [campaign]");
                continue;
            }
            campaign_values[key] = value;
        } else {
            errors.push_back("line " + std::to_string(lineno) + ": key outside any section");
        }
    }

    // [spec] scalars
    auto get_spec = [&](const std::string& key) -> std::optional<std::string> {
        auto it = spec_values.find(key);
        return it == spec_values.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    if (auto v = get_spec("l")) {
        long l = 0;
        if (!detail::parse_long(*v, l) || l < 1)
            errors.push_back("l: must be a positive integer");
        else
            cfg.l = static_cast<int>(l);
    }
    if (auto v = get_spec("lambda")) {
        if (!detail::parse_double(*v, cfg.lambda)) errors.push_back("lambda: not a number");
    }
    if (cfg.lambda == 0.0) errors.push_back("lambda: coupling must be nonzero");
    if (auto v = get_spec("omega")) {
        if (*v == "goldenmean")
            cfg.omega = golden_mean;
        else if (!detail::parse_double(*v, cfg.omega))
            errors.push_back("omega: not a number or 'goldenmean'");
        cfg.omega = wrap01(cfg.omega);
    }
    if (auto v = get_spec("annulus_r")) {
        if (!detail::parse_double(*v, cfg.annulus_r) || !(cfg.annulus_r > 0.0) ||
            cfg.annulus_r >= 1.0)
            errors.push_back("annulus_r: must lie in (0,1)");
    }

    // [campaign] scalars
    auto campaign_double = [&](const std::string& key, double& out, auto&& valid,
                               const std::string& msg) {
        auto it = campaign_values.find(key);
        if (it == campaign_values.end()) return;
        double v;
        if (!detail::parse_double(it->second, v) || !valid(v))
            errors.push_back(key + ": " + msg);
        else
            out = v;
    };
    auto campaign_longv = [&](const std::string& key, long& out, auto&& valid,
                              const std::string& msg) {
        auto it = campaign_values.find(key);
        if (it == campaign_values.end()) return;
        long v;
        if (!detail::parse_long(it->second, v) || !valid(v))
            errors.push_back(key + ": " + msg);
        else
            out = v;
    };

    campaign_longv("N", cfg.N, [](long v) { return v >= 1; }, "must be >= 1");
    {
        long m = cfg.M;
        campaign_longv(
            "M", m, [](long v) { return v >= 1; }, "must be >= 1");
        cfg.M = static_cast<int>(m);
    }
    campaign_double("E", cfg.E, [](double) { return true; }, "not a number");
    campaign_double("x", cfg.x, [](double) { return true; }, "not a number");
    {
        long p = cfg.phases;
        campaign_longv(
            "phases", p, [](long v) { return v >= 1; }, "must be >= 1");
        cfg.phases = static_cast<int>(p);
    }
    campaign_longv(
        "quadrature", cfg.quadrature,
        [](long v) { return v >= 256 && (v & (v - 1)) == 0; },
        "must be a power of two >= 256");
    campaign_longv("horizon", cfg.horizon, [](long v) { return v >= 1 && v <= 1000000; },
                   "must lie in [1, 1e6]");
    campaign_longv("box", cfg.box, [](long v) { return v >= 1; }, "must be >= 1");
    if (auto it = campaign_values.find("seed"); it != campaign_values.end()) {
        long s;
        if (!detail::parse_long(it->second, s) || s < 0)
            errors.push_back("seed: must be a non-negative integer");
        else
            cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (auto it = campaign_values.find("energies"); it != campaign_values.end()) {
        std::istringstream vs(it->second);
        double e;
        while (vs >> e) cfg.energies.push_back(e);
        if (!vs.eof()) errors.push_back("energies: expected a whitespace-separated list");
    }
    if (auto it = campaign_values.find("radii"); it != campaign_values.end()) {
        std::istringstream vs(it->second);
        double r;
        while (vs >> r) cfg.radii.push_back(r);
        if (!vs.eof()) errors.push_back("radii: expected a whitespace-separated list");
    }
    if (auto it = campaign_values.find("delta"); it != campaign_values.end()) {
        double d;
        if (!detail::parse_double(it->second, d) || !(d > 0.0))
            errors.push_back("delta: must be positive");
        else
            cfg.delta = d;
    }
    if (auto it = campaign_values.find("bad_delta"); it != campaign_values.end()) {
        double d;
        if (!detail::parse_double(it->second, d) || !(d > 0.0) || d > 1.0)
            errors.push_back("bad_delta: must lie in (0,1]");
        else
            cfg.bad_delta = d;
    }
    campaign_double("good_green_divisor", cfg.good_green_divisor,
                    [](double v) { return v > 0.0; }, "must be positive");
    campaign_double("rate_bar", cfg.rate_bar, [](double v) { return v > 0.0; },
                    "must be positive");
    campaign_double("localized_fraction_bar", cfg.localized_fraction_bar,
                    [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0,1]");

    // Fourier tables; absent tables default to the zero polynomial, which
    // preflight flags against the standing assumptions rather than rejecting
    std::optional<TrigMatrixPoly> W, R, F;
    if (errors.empty() || cfg.l >= 1) {
        W = detail::build_table("W", cfg.l, tables["W"], errors);
        R = detail::build_table("R", cfg.l, tables["R"], errors);
        F = detail::build_table("F", cfg.l, tables["F"], errors);
    }

    if (errors.empty() && W && R && F) {
        try {
            cfg.spec.emplace(cfg.l, cfg.lambda, cfg.omega, cfg.annulus_r, *W, *R, *F);
        } catch (const std::exception& ex) {
            errors.push_back(std::string("spec: ") + ex.what());
        }
    }

    if (errors.empty()) result.config = std::move(cfg);
    return result;
}

inline ConfigResult load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        ConfigResult r;
        r.errors.push_back("cannot open config file: " + path);
        return r;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace bjlab
