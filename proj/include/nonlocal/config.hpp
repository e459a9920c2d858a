#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nonlocal/error.hpp"
#include "nonlocal/nonlinearity.hpp"

namespace nonlocal::cli {

using json = nlohmann::json;

/// Profile as written in a config: constant, polynomial coefficients or nodal samples.
struct ProfileConfig {
    std::string type = "constant";
    std::vector<double> values{0.0};  ///< value, coefficients or samples

    Profile build(double a, double b) const {
        if (type == "constant") {
            return Profile::constant(values.front());
        }
        if (type == "polynomial") {
            return Profile::polynomial(values);
        }
        return Profile::nodal(a, b, values);
    }
};

enum class SolverMode { Auto, CaseA, CaseB };

struct RunConfig {
    double a = -1.0;
    double b = 1.0;
    std::string kernel_family = "fractional";
    double s = 0.5;
    double theta = 1.0;
    int n_elements = 64;
    int quad_order = 8;
    double assembly_tol = 1e-8;

    std::string family = "affine";
    ProfileConfig m;
    double amplitude = 0.0;  ///< delta (saturating) or c (bounded_perturbation)
    ProfileConfig g;
    std::optional<ProfileConfig> growth_a;
    std::optional<double> growth_b;

    SolverMode mode = SolverMode::Auto;
    double tol = 1e-9;
    int max_iter = 200;
    int starts = 1;
    std::uint64_t seed = 42;

    std::vector<double> probe_radii{10.0, 100.0, 1000.0};
    int probe_samples = 200;
    bool probe_in_solve = false;

    std::string output_dir = "out";

    Kernel kernel() const {
        Kernel k = Kernel::fractional(s);
        return theta == 1.0 ? k : k.with_theta(theta);
    }

    Nonlinearity nonlinearity() const {
        const Profile mp = m.build(a, b);
        const Profile gp = g.build(a, b);
        Nonlinearity spec = family == "affine"       ? Nonlinearity::affine(mp, gp)
                            : family == "saturating" ? Nonlinearity::saturating(mp, amplitude, gp)
                                                     : Nonlinearity::bounded_perturbation(mp, amplitude, gp);
        if (growth_a || growth_b) {
            Growth gr;
            gr.a = growth_a ? growth_a->build(a, b) : Profile::constant(0.0);
            gr.b = growth_b.value_or(0.0);
            spec = spec.with_growth(gr);
        }
        return spec;
    }
};

namespace detail {

inline std::string child(const std::string& path, const std::string& key) {
    return path + "/" + key;
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(path.empty() ? "/" : path, "expected an object");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed) {
            ok = ok || it.key() == key;
        }
        if (!ok) {
            throw ConfigError(child(path, it.key()), "unknown key \"" + it.key() + "\"");
        }
    }
}

inline double number(const json& obj, const std::string& path, const char* key, double fallback,
                     bool required = false) {
    if (!obj.contains(key)) {
        if (required) {
            throw ConfigError(child(path, key), "required field is missing");
        }
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(child(path, key), "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ConfigError(child(path, key), "expected a finite number");
    }
    return d;
}

inline long long integer(const json& obj, const std::string& path, const char* key,
                         long long fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) {
            throw ConfigError(child(path, key), "required field is missing");
        }
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        throw ConfigError(child(path, key), "expected an integer");
    }
    return v.get<long long>();
}

inline std::string text(const json& obj, const std::string& path, const char* key,
                        const std::string& fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) {
            throw ConfigError(child(path, key), "required field is missing");
        }
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
        throw ConfigError(child(path, key), "expected a string");
    }
    return v.get<std::string>();
}

inline void require(bool cond, const std::string& path, const std::string& msg) {
    if (!cond) {
        throw ConfigError(path, msg);
    }
}

inline std::vector<double> number_list(const json& v, const std::string& path) {
    require(v.is_array() && !v.empty(), path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i].is_number() && std::isfinite(v[i].get<double>()),
                path + "/" + std::to_string(i), "expected a finite number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

/// A bare number is shorthand for a constant profile.
inline ProfileConfig profile(const json& v, const std::string& path) {
    ProfileConfig p;
    if (v.is_number()) {
        require(std::isfinite(v.get<double>()), path, "expected a finite number");
        p.values = {v.get<double>()};
        return p;
    }
    require(v.is_object(), path, "expected a number or a profile object");
    p.type = text(v, path, "type", "", true);
    if (p.type == "constant") {
        reject_unknown(v, path, {"type", "value"});
        p.values = {number(v, path, "value", 0.0, true)};
    } else if (p.type == "polynomial") {
        reject_unknown(v, path, {"type", "coefficients"});
        require(v.contains("coefficients"), child(path, "coefficients"), "required field is missing");
        p.values = number_list(v.at("coefficients"), child(path, "coefficients"));
    } else if (p.type == "nodal") {
        reject_unknown(v, path, {"type", "values"});
        require(v.contains("values"), child(path, "values"), "required field is missing");
        p.values = number_list(v.at("values"), child(path, "values"));
        require(p.values.size() >= 2, child(path, "values"), "need at least 2 samples");
    } else {
        throw ConfigError(child(path, "type"),
                          "expected \"constant\", \"polynomial\" or \"nodal\", got \"" + p.type + "\"");
    }
    return p;
}

} // namespace detail

/// Parses and validates a run configuration. Every violation is reported with
/// the JSON pointer of the offending field before any computation starts.
inline RunConfig parse_config(const std::string& source) {
    using namespace detail;
    json root;
    try {
        root = json::parse(source);
    } catch (const json::parse_error& e) {
        // nlohmann reports "line L, column C" inside what().
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    reject_unknown(root, "", {"domain", "kernel", "mesh", "quadrature", "nonlinearity", "solver",
                              "probe", "output"});
    RunConfig cfg;

    if (root.contains("domain")) {
        const json& d = root.at("domain");
        reject_unknown(d, "/domain", {"a", "b"});
        cfg.a = number(d, "/domain", "a", cfg.a);
        cfg.b = number(d, "/domain", "b", cfg.b);
        require(cfg.a < cfg.b, "/domain/b", "require a < b");
    }

    require(root.contains("kernel"), "/kernel", "required section is missing");
    {
        const json& k = root.at("kernel");
        reject_unknown(k, "/kernel", {"family", "s", "theta"});
        cfg.kernel_family = text(k, "/kernel", "family", cfg.kernel_family);
        require(cfg.kernel_family == "fractional", "/kernel/family",
                "only \"fractional\" kernels can be configured");
        cfg.s = number(k, "/kernel", "s", 0.0, true);
        require(cfg.s > 0.0 && cfg.s < 1.0, "/kernel/s", "s must lie in (0,1)");
        cfg.theta = number(k, "/kernel", "theta", cfg.theta);
        require(cfg.theta > 0.0, "/kernel/theta", "theta must be > 0");
    }

    require(root.contains("mesh"), "/mesh", "required section is missing");
    {
        const json& m = root.at("mesh");
        reject_unknown(m, "/mesh", {"n_elements"});
        const auto n = integer(m, "/mesh", "n_elements", 0, true);
        require(n >= 2 && n <= 1024, "/mesh/n_elements", "n_elements must lie in 2..1024");
        cfg.n_elements = static_cast<int>(n);
    }

    if (root.contains("quadrature")) {
        const json& q = root.at("quadrature");
        reject_unknown(q, "/quadrature", {"order", "assembly_tol"});
        const auto order = integer(q, "/quadrature", "order", cfg.quad_order);
        require(order >= 3 && order <= 64, "/quadrature/order", "order must lie in 3..64");
        cfg.quad_order = static_cast<int>(order);
        cfg.assembly_tol = number(q, "/quadrature", "assembly_tol", cfg.assembly_tol);
        require(cfg.assembly_tol > 0.0, "/quadrature/assembly_tol", "assembly_tol must be > 0");
    }

    require(root.contains("nonlinearity"), "/nonlinearity", "required section is missing");
    {
        const std::string p = "/nonlinearity";
        const json& nl = root.at("nonlinearity");
        cfg.family = text(nl, p, "family", "", true);
        if (cfg.family == "affine") {
            reject_unknown(nl, p, {"family", "m", "g", "growth"});
        } else if (cfg.family == "saturating") {
            reject_unknown(nl, p, {"family", "m", "delta", "g", "growth"});
            cfg.amplitude = number(nl, p, "delta", 0.0, true);
        } else if (cfg.family == "bounded_perturbation") {
            reject_unknown(nl, p, {"family", "m", "c", "g", "growth"});
            cfg.amplitude = number(nl, p, "c", 0.0, true);
        } else {
            throw ConfigError(p + "/family", "expected \"affine\", \"saturating\" or "
                                             "\"bounded_perturbation\", got \"" + cfg.family + "\"");
        }
        if (nl.contains("m")) {
            cfg.m = profile(nl.at("m"), p + "/m");
        }
        if (nl.contains("g")) {
            cfg.g = profile(nl.at("g"), p + "/g");
        }
        if (nl.contains("growth")) {
            const json& gr = nl.at("growth");
            reject_unknown(gr, p + "/growth", {"a", "b"});
            if (gr.contains("a")) {
                cfg.growth_a = profile(gr.at("a"), p + "/growth/a");
            }
            if (gr.contains("b")) {
                cfg.growth_b = number(gr, p + "/growth", "b", 0.0);
                require(*cfg.growth_b >= 0.0, p + "/growth/b", "b must be >= 0");
            }
        }
    }

    if (root.contains("solver")) {
        const std::string p = "/solver";
        const json& sv = root.at("solver");
        reject_unknown(sv, p, {"mode", "tol", "max_iter", "starts", "seed"});
        const std::string mode = text(sv, p, "mode", "auto");
        if (mode == "auto") {
            cfg.mode = SolverMode::Auto;
        } else if (mode == "case_a") {
            cfg.mode = SolverMode::CaseA;
        } else if (mode == "case_b") {
            cfg.mode = SolverMode::CaseB;
        } else {
            throw ConfigError(p + "/mode", "expected \"auto\", \"case_a\" or \"case_b\"");
        }
        cfg.tol = number(sv, p, "tol", cfg.tol);
        require(cfg.tol > 0.0, p + "/tol", "tol must be > 0");
        const auto it = integer(sv, p, "max_iter", cfg.max_iter);
        require(it >= 1 && it <= 100000, p + "/max_iter", "max_iter must lie in 1..100000");
        cfg.max_iter = static_cast<int>(it);
        const auto st = integer(sv, p, "starts", cfg.starts);
        require(st >= 1 && st <= 1000, p + "/starts", "starts must lie in 1..1000");
        cfg.starts = static_cast<int>(st);
        const auto seed = integer(sv, p, "seed", static_cast<long long>(cfg.seed));
        require(seed >= 0, p + "/seed", "seed must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(seed);
    }

    if (root.contains("probe")) {
        const std::string p = "/probe";
        const json& pr = root.at("probe");
        reject_unknown(pr, p, {"radii", "samples", "in_solve"});
        if (pr.contains("radii")) {
            cfg.probe_radii = number_list(pr.at("radii"), p + "/radii");
            for (std::size_t i = 0; i < cfg.probe_radii.size(); ++i) {
                require(cfg.probe_radii[i] > 0.0 && (i == 0 || cfg.probe_radii[i] > cfg.probe_radii[i - 1]),
                        p + "/radii/" + std::to_string(i), "radii must be positive and ascending");
            }
        }
        const auto n = integer(pr, p, "samples", cfg.probe_samples);
        require(n >= 1 && n <= 100000, p + "/samples", "samples must lie in 1..100000");
        cfg.probe_samples = static_cast<int>(n);
        if (pr.contains("in_solve")) {
            require(pr.at("in_solve").is_boolean(), p + "/in_solve", "expected a boolean");
            cfg.probe_in_solve = pr.at("in_solve").get<bool>();
        }
    }

    if (root.contains("output")) {
        const json& o = root.at("output");
        reject_unknown(o, "/output", {"dir"});
        cfg.output_dir = text(o, "/output", "dir", cfg.output_dir);
        require(!cfg.output_dir.empty(), "/output/dir", "must not be empty");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read config file " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace nonlocal::cli
