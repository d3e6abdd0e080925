#pragma once

#include "integrator.hpp"

#include <fstream>
#include <functional>

namespace wildscalar {

// line-oriented "key = value"; '#' starts a comment; blank lines ignored
inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& origin = "config") {
    std::map<std::string, std::string> kv;
    std::string line;
    int ln = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        s.erase(0, s.find_first_not_of(ws));
        auto e = s.find_last_not_of(ws);
        s.erase(e == std::string::npos ? 0 : e + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++ln;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::UsageError, origin + ":" + std::to_string(ln) + ": expected key = value");
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (k.empty()) throw Error(ErrorKind::UsageError, origin + ":" + std::to_string(ln) + ": empty key");
        kv[k] = v;
    }
    return kv;
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    return parse_key_values(in, path);
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorKind::UsageError, "bad number for " + key + ": " + v);
    }
}

inline long parse_int(const std::string& key, const std::string& v) {
    double d = parse_real(key, v);
    if (d != std::floor(d)) throw Error(ErrorKind::UsageError, "integer expected for " + key + ": " + v);
    return static_cast<long>(d);
}

inline Vec parse_vec(const std::string& key, const std::string& v) {
    std::vector<double> xs;
    std::string tok;
    std::istringstream is(v);
    while (std::getline(is, tok, ','))
        xs.push_back(parse_real(key, tok.find_first_not_of(' ') == std::string::npos ? tok : tok.substr(tok.find_first_not_of(' '))));
    Vec out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out(i) = xs[i];
    return out;
}

// "64" -> nx = nt = 64; "64x32" -> nx = 64, nt = 32
inline void parse_grid(const std::string& v, GridSpec& g) {
    auto x = v.find('x');
    if (x == std::string::npos) {
        g.nx = g.nt = static_cast<int>(parse_int("grid", v));
    } else {
        g.nx = static_cast<int>(parse_int("grid", v.substr(0, x)));
        g.nt = static_cast<int>(parse_int("grid", v.substr(x + 1)));
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorKind::UsageError, "bad boolean for " + key + ": " + v);
}

inline void apply_setting(ConstructionParams& p, const std::string& k, const std::string& v) {
    static const std::map<std::string, std::function<void(ConstructionParams&, const std::string&)>> table = {
        {"symbol", [](auto& p, const auto& v) { p.symbol = v; }},
        {"dim", [](auto& p, const auto& v) { p.grid.n = static_cast<int>(parse_int("dim", v)); }},
        {"grid", [](auto& p, const auto& v) { parse_grid(v, p.grid); }},
        {"nx", [](auto& p, const auto& v) { p.grid.nx = static_cast<int>(parse_int("nx", v)); }},
        {"nt", [](auto& p, const auto& v) { p.grid.nt = static_cast<int>(parse_int("nt", v)); }},
        {"T", [](auto& p, const auto& v) { p.grid.T = parse_real("T", v); }},
        {"dealias", [](auto& p, const auto& v) { p.grid.dealias = parse_bool("dealias", v); }},
        {"xi1", [](auto& p, const auto& v) { p.xi1 = parse_vec("xi1", v); }},
        {"xi2", [](auto& p, const auto& v) { p.xi2 = parse_vec("xi2", v); }},
        {"patch_radius", [](auto& p, const auto& v) { p.patch_radius = parse_real("patch_radius", v); }},
        {"cone_width", [](auto& p, const auto& v) { p.cone_width = parse_real("cone_width", v); }},
        {"lambda", [](auto& p, const auto& v) { p.lambda = parse_real("lambda", v); }},
        {"epsilon", [](auto& p, const auto& v) { p.eps = parse_real("epsilon", v); }},
        {"eps1", [](auto& p, const auto& v) { p.eps1 = parse_real("eps1", v); }},
        {"eps2", [](auto& p, const auto& v) { p.eps2 = parse_real("eps2", v); }},
        {"delta0", [](auto& p, const auto& v) { p.delta0 = parse_real("delta0", v); }},
        {"delta_decay", [](auto& p, const auto& v) { p.delta_decay = parse_real("delta_decay", v); }},
        {"s", [](auto& p, const auto& v) { p.s = parse_real("s", v); }},
        {"eta", [](auto& p, const auto& v) { p.eta = parse_real("eta", v); }},
        {"steps", [](auto& p, const auto& v) { p.N = static_cast<int>(parse_int("steps", v)); }},
        {"stages", [](auto& p, const auto& v) { p.stages = static_cast<int>(parse_int("stages", v)); }},
        {"r0", [](auto& p, const auto& v) { p.r0 = parse_real("r0", v); }},
        {"rho", [](auto& p, const auto& v) { p.rho = parse_real("rho", v); }},
        {"mollifier", [](auto& p, const auto& v) { p.mollifier = parse_real("mollifier", v); }},
        {"mollifier_t", [](auto& p, const auto& v) { p.mollifier_t = parse_real("mollifier_t", v); }},
        {"window_lo", [](auto& p, const auto& v) { p.window_lo = parse_real("window_lo", v); }},
        {"window_hi", [](auto& p, const auto& v) { p.window_hi = parse_real("window_hi", v); }},
        {"window_ramp", [](auto& p, const auto& v) { p.window_ramp = parse_real("window_ramp", v); }},
        {"max_order", [](auto& p, const auto& v) { p.max_order = static_cast<int>(parse_int("max_order", v)); }},
        {"max_regions", [](auto& p, const auto& v) { p.max_regions = static_cast<int>(parse_int("max_regions", v)); }},
        {"min_region_fraction", [](auto& p, const auto& v) { p.min_region_fraction = parse_real("min_region_fraction", v); }},
        {"max_probes", [](auto& p, const auto& v) { p.max_probes = static_cast<int>(parse_int("max_probes", v)); }},
        {"witness_probes", [](auto& p, const auto& v) { p.witness_probes = static_cast<int>(parse_int("witness_probes", v)); }},
        {"cover_beyond_half", [](auto& p, const auto& v) { p.cover_beyond_half = parse_bool("cover_beyond_half", v); }},
        {"nested_masks", [](auto& p, const auto& v) { p.nested_masks = parse_bool("nested_masks", v); }},
        {"nest_radius", [](auto& p, const auto& v) { p.nest_radius = parse_real("nest_radius", v); }},
        {"time_scheme",
         [](auto& p, const auto& v) {
             if (v == "spectral")
                 p.scheme = TimeScheme::spectral;
             else if (v == "fd4")
                 p.scheme = TimeScheme::fourth_order;
             else
                 throw Error(ErrorKind::UsageError, "time_scheme must be spectral or fd4");
         }},
        {"seed", [](auto& p, const auto& v) { p.seed = static_cast<std::uint64_t>(parse_int("seed", v)); }},
        {"basket", [](auto& p, const auto& v) { p.basket = static_cast<int>(parse_int("basket", v)); }},
    };
    auto it = table.find(k);
    if (it == table.end()) throw Error(ErrorKind::UsageError, "unknown config key: " + k);
    it->second(p, v);
}

inline std::vector<std::string> config_keys() {
    return {"symbol", "dim", "grid", "nx", "nt", "T", "dealias", "xi1", "xi2", "patch_radius", "cone_width", "lambda",
            "epsilon", "eps1", "eps2", "delta0", "delta_decay", "s", "eta", "steps", "stages", "r0", "rho", "mollifier", "mollifier_t",
            "window_lo", "window_hi", "window_ramp", "max_order", "max_regions", "min_region_fraction", "max_probes", "witness_probes", "cover_beyond_half", "nested_masks",
            "nest_radius", "time_scheme", "seed", "basket"};
}

inline ConstructionParams params_from(const std::map<std::string, std::string>& kv, ConstructionParams p = {}) {
    for (const auto& [k, v] : kv) apply_setting(p, k, v);
    if (kv.count("symbol") && !kv.count("dim")) p.grid.n = resolve_symbol(p.symbol)->dim;
    return p;
}

}
