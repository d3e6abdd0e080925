#pragma once

#include "torus_field.hpp"

#include <iomanip>
#include <sstream>

namespace wildscalar {

// smooth space-time bump: compactly supported polynomial envelope in t times a periodic
// von Mises bump in x, band-limited by dropping modes above the basket bandwidth
struct TestFunction {
    double tc = 0.5, tw = 0.25;
    Vec center;
    double kappa = 2.0;
    int band = 16;

    double envelope(double t, int deriv = 0) const {
        double r = (t - tc) / tw;
        if (std::abs(r) >= 1.0) return 0.0;
        double a = 1.0 - r * r;
        if (deriv == 0) return a * a * a * a;
        return 4.0 * a * a * a * (-2.0 * r) / tw;
    }

    // channel 0: B, channels 1..n: d_i B on the spatial grid
    PhysicalField spatial(const GridSpec& g) const {
        GridSpec g1 = g;
        g1.nt = 1;
        PhysicalField b(g1, 1);
        for (std::size_t p = 0; p < b.slice(); ++p) {
            Vec x = position(g1, p);
            double e = 0.0;
            for (int d = 0; d < g.n; ++d) e += std::cos(x(d) - center(d)) - 1.0;
            b.data[p] = std::exp(kappa * e);
        }
        SpectralField bs = to_spectral(b);
        const auto& mt = modes(g1);
        SpectralField all(g1, 1 + g.n);
        for (std::size_t f = 0; f < bs.slice(); ++f) {
            bool in = true;
            for (int d = 0; d < g.n; ++d) in = in && std::abs(mt.k[f][d]) <= band;
            cplx c = in ? bs.data[f] : cplx(0.0);
            all.at(0, 0)[f] = c;
            for (int d = 0; d < g.n; ++d) all.at(1 + d, 0)[f] = cplx(0.0, mt.k[f][d]) * c;
        }
        return to_physical(all);
    }
};

inline std::vector<TestFunction> test_basket(const GridSpec& g, int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<TestFunction> out;
    for (int i = 0; i < size; ++i) {
        TestFunction f;
        f.band = std::max(1, g.nx / 4);
        f.tc = (0.2 + 0.6 * U(rng)) * g.T;
        f.tw = (0.2 + 0.3 * U(rng)) * g.T;
        f.center.resize(g.n);
        for (int d = 0; d < g.n; ++d) f.center(d) = two_pi * U(rng);
        f.kappa = std::exp(std::log(0.5) + (std::log(8.0) - std::log(0.5)) * U(rng));
        out.push_back(f);
    }
    return out;
}

struct Pairing {
    double value = 0.0;     // mean of theta (d_t phi + u . grad phi)
    double seminorm = 0.0;  // max of sup |d_t phi|, sup |d_i phi|
};

// phi(t,x) = c + env(t) B(x); c never enters
inline Pairing weak_pairing(const PhysicalField& theta, const PhysicalField& u, const TestFunction& f) {
    const GridSpec& g = theta.grid;
    const std::size_t S = g.spatial();
    PhysicalField B = f.spatial(g);
    double supB = 0.0, supG = 0.0;
    for (std::size_t p = 0; p < S; ++p) {
        supB = std::max(supB, std::abs(B.data[p]));
        for (int d = 0; d < g.n; ++d) supG = std::max(supG, std::abs(B(1 + d, 0, p)));
    }
    Pairing out;
    double acc = 0.0;
    for (int t = 0; t < g.nt; ++t) {
        const double tt = g.time(t);
        const double e = f.envelope(tt), de = f.envelope(tt, 1);
        out.seminorm = std::max({out.seminorm, std::abs(de) * supB, std::abs(e) * supG});
        if (e == 0.0 && de == 0.0) continue;
        const double* th = theta.at(0, t);
        for (std::size_t p = 0; p < S; ++p) {
            double v = de * B.data[p];
            for (int d = 0; d < g.n; ++d) v += u(d, t, p) * e * B(1 + d, 0, p);
            acc += th[p] * v;
        }
    }
    out.value = acc / (static_cast<double>(g.nt) * S);
    return out;
}

inline double weak_form_residual(const PhysicalField& theta, const PhysicalField& u, int basket, std::uint64_t seed) {
    const GridSpec& g = theta.grid;
    if (!(u.grid == g) || theta.channels != 1 || u.channels != g.n)
        throw Error(ErrorKind::GridMismatch, "theta and u must share a grid, with n velocity channels");
    double norm = 0.0;
    for (double v : theta.data) norm += v * v;
    norm = std::sqrt(norm / theta.data.size());
    if (norm == 0.0) return 0.0;
    double worst = 0.0;
    for (const auto& f : test_basket(g, basket, seed)) {
        Pairing p = weak_pairing(theta, u, f);
        if (p.seminorm > 0.0) worst = std::max(worst, std::abs(p.value) / (norm * p.seminorm));
    }
    return worst;
}

// ---- reports ---------------------------------------------------------------------------

struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool upper = true;  // pass when value <= tolerance; otherwise value >= tolerance
    bool pass() const { return upper ? value <= tolerance : value >= tolerance; }
};

struct DiagnosticsReport {
    std::vector<Check> checks;

    void add(std::string name, double value, double tol, bool upper = true) { checks.push_back({std::move(name), value, tol, upper}); }
    void info(std::string name, double value) { checks.push_back({std::move(name), value, std::numeric_limits<double>::infinity(), true}); }
    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
    }
    const Check* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    std::string csv() const {
        std::ostringstream os;
        os << "check,value,tolerance,pass\n";
        for (const auto& c : checks) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "%s,%.10g,%s%.10g,%d\n", c.name.c_str(), c.value, c.upper ? "<=" : ">=", c.tolerance,
                          c.pass() ? 1 : 0);
            os << buf;
        }
        return os.str();
    }

    std::string table() const {
        std::ostringstream os;
        std::size_t w = 5;
        for (const auto& c : checks) w = std::max(w, c.name.size());
        for (const auto& c : checks) {
            os << std::left << std::setw(static_cast<int>(w) + 2) << c.name << std::setw(16) << std::setprecision(6) << c.value;
            if (std::isinf(c.tolerance))
                os << "\n";
            else
                os << (c.upper ? "<= " : ">= ") << std::setw(12) << c.tolerance << (c.pass() ? "pass" : "FAIL") << "\n";
        }
        return os.str();
    }
};

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::size_t i = std::min(v.size() - 1, static_cast<std::size_t>(q * (v.size() - 1) + 0.5));
    std::nth_element(v.begin(), v.begin() + i, v.end());
    return v[i];
}

struct ConstraintOptions {
    std::vector<RegularPatch> cones;  // empty: no cone check
    double t_lo = 0.0, t_hi = -1.0;   // temporal support window; t_hi < t_lo: no check
    double support_tol = 1e-10;
    double cone_tol = 1e-6;
};

inline DiagnosticsReport constraint_report(const StateField& U, const ConstraintOptions& opt = {}) {
    const GridSpec& g = U.grid();
    const int n = g.n;
    const std::size_t cells = static_cast<std::size_t>(g.nt) * g.spatial();
    std::vector<double> abs_theta(cells), gap_theta(cells), nonlinear(cells), dist(cells);
    for (int t = 0; t < g.nt; ++t)
        for (std::size_t x = 0; x < g.spatial(); ++x) {
            const std::size_t i = static_cast<std::size_t>(t) * g.spatial() + x;
            const double th = U.data(0, t, x);
            double nl = 0.0, dp = 0.0, dm = 0.0;
            for (int d = 0; d < n; ++d) {
                double q = U.data(U.q_channel(d), t, x), u = U.data(U.u_channel(d), t, x);
                nl += (q - th * u) * (q - th * u);
                dp += (q - u) * (q - u);
                dm += (q + u) * (q + u);
            }
            abs_theta[i] = std::abs(th);
            gap_theta[i] = std::abs(std::abs(th) - 1.0);
            nonlinear[i] = std::sqrt(nl);
            dist[i] = std::sqrt(std::min((th - 1) * (th - 1) + dp / 2, (th + 1) * (th + 1) + dm / 2));
        }
    DiagnosticsReport r;
    r.info("abs_theta_median", quantile(abs_theta, 0.5));
    r.info("abs_theta_p90", quantile(abs_theta, 0.9));
    r.info("theta_gap_median", quantile(gap_theta, 0.5));
    double near = 0.0;
    for (double v : gap_theta) near += v < 0.25 ? 1.0 : 0.0;
    r.info("theta_near_one_fraction", near / cells);
    r.info("nonlinear_gap_median", quantile(nonlinear, 0.5));
    r.info("nonlinear_gap_max", *std::max_element(nonlinear.begin(), nonlinear.end()));
    double mean = 0.0, mx = 0.0;
    for (double v : dist) {
        mean += v;
        mx = std::max(mx, v);
    }
    r.info("dist_mean", mean / cells);
    r.info("dist_median", quantile(dist, 0.5));
    r.info("dist_max", mx);
    r.info("sup_theta", sup_norm(U.data, 0));
    double sq = 0.0, su = 0.0;
    for (int d = 0; d < n; ++d) {
        sq = std::max(sq, sup_norm(U.data, U.q_channel(d)));
        su = std::max(su, sup_norm(U.data, U.u_channel(d)));
    }
    r.info("sup_q", sq);
    r.info("sup_u", su);
    if (opt.t_hi >= opt.t_lo) {
        double leak = 0.0;
        for (int t = 0; t < g.nt; ++t) {
            double tt = g.time(t);
            if (tt > opt.t_lo && tt < opt.t_hi) continue;
            for (std::size_t x = 0; x < g.spatial(); ++x) {
                leak = std::max(leak, std::abs(U.data(0, t, x)));
                for (int d = 0; d < n; ++d) leak = std::max(leak, std::abs(U.data(U.u_channel(d), t, x)));
            }
        }
        r.add("temporal_leak", leak, opt.support_tol);
    }
    if (!opt.cones.empty()) {
        SpectralField s = to_spectral(U.data);
        // theta and u channels only: q carries the constant background
        SpectralField tu(g, 1 + n);
        std::copy(s.at(0, 0), s.at(0, 0) + s.slice() * g.nt, tu.at(0, 0));
        for (int d = 0; d < n; ++d)
            std::copy(s.at(U.u_channel(d), 0), s.at(U.u_channel(d), 0) + s.slice() * g.nt, tu.at(1 + d, 0));
        r.add("cone_fraction", support_cone_check(tu, opt.cones).fraction_inside, 1.0 - opt.cone_tol, false);
    }
    return r;
}

}
