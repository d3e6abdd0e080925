#pragma once

// Canned experiments shared by the CLI and the acceptance binary.

#include "diagnostics.hpp"
#include "integrator.hpp"

#include <chrono>

namespace wildscalar {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- symbol gate ------------------------------------------------------------------------

// known closed-form ranges: pm2d on a circle, pm3d on a sphere. -1 when the symbol has none.
inline double range_sphere_violation(const MultiplierSymbol& s, int samples) {
    Vec c = Vec::Zero(s.dim);
    if (s.name == "pm2d" || s.name == "pm3d")
        c(s.dim - 1) = -0.5;
    else
        return -1.0;
    double worst = 0.0;
    for (const Vec& xi : sphere_samples(s.dim, samples)) worst = std::max(worst, std::abs((s.eval(xi) - c).norm() - 0.5));
    return worst;
}

inline DiagnosticsReport symbol_gate(const MultiplierSymbol& s, int samples = 1000, double tol = 1e-12) {
    AdmissibilityReport a = check_admissibility(s, samples, tol);
    DiagnosticsReport r;
    r.add("even_violation", a.even_violation, tol);
    r.add("homogeneity_violation", a.homogeneity_violation, tol);
    r.add("tangency_violation", a.tangency_violation, tol);
    double rv = range_sphere_violation(s, samples);
    if (rv >= 0.0) r.add("range_sphere_violation", rv, tol);
    r.info("samples", a.samples_used);
    return r;
}

// ---- single wave packet ---------------------------------------------------------------------

struct WavePacketSetup {
    std::string symbol = "pm2d";
    int nx = 64, nt = 64;
    double T = 64.0;
    double lambda = 0.5;
    double eps = 0.2;
    double delta = two_pi;
    double cone_width = 0.2;
    int order = 31;             // capped by the grid
    double ramp_cells = 3.0;    // temporal ramp, inside Omega
    double slack = 0.02;
    TimeScheme scheme = TimeScheme::spectral;
};

struct WavePacketOutcome {
    WaveResult wave;
    DiagnosticsReport checks;
    double seconds = 0.0;
};

// Omega = torus x [T/16, 15T/16]; L = (1, m(xi0), m(xi0)) along the first default patch center
inline WavePacketOutcome wave_packet(const WavePacketSetup& s) {
    auto t0 = std::chrono::steady_clock::now();
    SymbolPtr sym = resolve_symbol(s.symbol);
    GridSpec g{sym->dim, s.nx, s.nt, s.T, false};
    g.validate();
    Vec xi0 = default_centers(*sym).first;
    Region om = Region::full_space(s.T / 16.0, 15.0 * s.T / 16.0);
    LocalizerOptions lo;
    lo.temporal_ramp_cells = s.ramp_cells;
    Localizer loc = make_localizer(om, g, 0.0, 0, 0.1, lo);
    WaveDirection L{1.0, xi0, sym->eval(xi0), {xi0, 0.3, 0.0}};
    LatticeFrequency lf = select_frequency(xi0, s.delta, s.nx);
    int kmax = 1;
    for (int v : lf.k) kmax = std::max(kmax, std::abs(v));
    WaveOptions opt;
    opt.truncation_order = std::max(1, std::min(s.order, (s.nx / 2 - 1) / kmax));
    opt.enforce = false;
    opt.scheme = s.scheme;
    opt.cone_width = s.cone_width;
    opt.dwell_slack = s.slack;
    opt.phase_offset = 0.5 / s.nx;
    WavePacketOutcome out;
    out.wave = build_wave(L, loc, s.lambda, s.eps, s.delta, g, sym, opt);
    const WaveReport& r = out.wave.report;
    out.checks.add("div_residual", r.div_residual, 1e-8);
    out.checks.add("dwell_plus", r.dwell_plus, r.dwell_plus_bound, false);
    out.checks.add("dwell_minus", r.dwell_minus, r.dwell_minus_bound, false);
    out.checks.add("sup_outside", r.sup_outside, s.eps);
    out.checks.add("cone_fraction", r.cone_fraction, 1.0 - 1e-6, false);
    out.checks.info("segment_distance", r.segment_distance);
    out.checks.info("frozen_error", r.frozen_error);
    out.checks.info("truncation_order", r.truncation_order);
    out.seconds = seconds_since(t0);
    return out;
}

// ---- frozen-symbol scaling ----------------------------------------------------------------

struct FrozenSweep {
    std::vector<double> delta, error, ratio;
};

// delta halves exactly on the lattice ray (1,1): modes (1,1), (2,2), (4,4), ...
inline FrozenSweep frozen_sweep(int octaves = 3, int nx = 64) {
    GridSpec g{2, nx, 4, 1.0, false};
    Vec c(2);
    c << pi, pi;
    Region om = Region::ball(0.0, 1.0, c, 0.25 * two_pi);
    Localizer loc = make_localizer(om, g, 1.0, 6);
    Vec xi = unit(Vec::Ones(2));
    Vec q0(2);
    q0 << 0.3, -0.2;
    WaveDirection L{1.0, xi, q0, {xi, 0.3, 0.0}};
    WaveOptions opt;
    opt.truncation_order = 3;
    opt.enforce = false;
    opt.confine = false;
    opt.scheme = TimeScheme::spectral;
    FrozenSweep fs;
    for (int o = 0; o <= octaves; ++o) {
        double d = two_pi / (std::sqrt(2.0) * std::pow(2.0, o));
        double e = build_wave(L, loc, 0.5, 0.2, d, g, builtin("pm2d"), opt).report.frozen_error;
        if (!fs.error.empty()) fs.ratio.push_back(e / fs.error.back());
        fs.delta.push_back(d);
        fs.error.push_back(e);
    }
    return fs;
}

// ---- T4 sweep ----------------------------------------------------------------------------

struct T4Sweep {
    int samples = 0, failures = 0;
    double delta = 0.0;
    double reconstruction = 0.0;  // max |sum lambda_j T_j - A|
    double k_distance = 0.0;      // max dist(T_j, K)
    int cone_failures = 0;
    double min_lambda = 1.0, max_lambda = 0.0;
    double min_separation = 1e300;  // min |A' - T_j(A'')|
    std::string first_error;
};

inline StateMatrix draw_in_ball(const StateMatrix& c, double radius, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    Vec v(c.vec().size());
    for (auto& x : v) x = nd(rng);
    v *= radius * std::pow(ud(rng), 1.0 / v.size()) / v.norm();
    return c + StateMatrix::from(v);
}

inline T4Sweep t4_sweep(const Screens& sc, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    T4Sweep s;
    s.delta = sc.delta;
    for (int i = 0; i < count; ++i) {
        StateMatrix A = draw_in_ball(sc.A0(), 0.5 * sc.delta, rng);
        StateMatrix A2 = draw_in_ball(sc.A0(), 0.5 * sc.delta, rng);
        ++s.samples;
        try {
            T4Configuration cfg = t4_of(A, sc);
            Vec acc = Vec::Zero(A.vec().size());
            for (int j = 0; j < 4; ++j) {
                acc += cfg.lambda[j] * cfg.T[j].vec();
                s.k_distance = std::max(s.k_distance, dist_to_K(cfg.T[j]));
                if (!lambda_w_member(sc, cfg.T[j] - A)) ++s.cone_failures;
                s.min_lambda = std::min(s.min_lambda, cfg.lambda[j]);
                s.max_lambda = std::max(s.max_lambda, cfg.lambda[j]);
            }
            s.reconstruction = std::max(s.reconstruction, (acc - A.vec()).norm());
            T4Configuration other = t4_of(A2, sc);
            for (int j = 0; j < 4; ++j) s.min_separation = std::min(s.min_separation, (A - other.T[j]).norm());
        } catch (const Error& e) {
            if (s.first_error.empty()) s.first_error = e.what();
            ++s.failures;
        }
    }
    return s;
}

inline DiagnosticsReport t4_checks(const T4Sweep& s) {
    DiagnosticsReport r;
    r.info("certified_delta", s.delta);
    r.add("failures", s.failures, 0);
    r.add("reconstruction", s.reconstruction, 1e-10);
    r.add("k_distance", s.k_distance, 1e-10);
    r.add("cone_failures", s.cone_failures, 0);
    r.add("min_lambda", s.min_lambda, 1e-12, false);
    r.add("one_minus_max_lambda", 1.0 - s.max_lambda, 1e-12, false);
    r.add("corner_separation", s.min_separation, 1.0 - s.delta, false);
    return r;
}

// ---- staged run ----------------------------------------------------------------------------

// per-stage gates of the energy-gain step and the observable trends
inline DiagnosticsReport stage_checks(const std::vector<StageReport>& rs, double c0 = 0.05, double dwell_floor = 0.225) {
    DiagnosticsReport r;
    for (std::size_t k = 1; k < rs.size(); ++k) {
        const StageReport &a = rs[k - 1], &b = rs[k];
        const std::string p = "stage" + std::to_string(k) + "_";
        r.add(p + "gain_ratio", b.gain_ratio, c0, false);
        r.add(p + "mean_dist_drop", a.mean_dist - b.mean_dist, 1e-12, false);
        r.add(p + "theta_gap_drop", a.median_theta_gap - b.median_theta_gap, 1e-12, false);
        if (k >= 2) r.add(p + "weak_residual_drop", a.weak_residual - b.weak_residual, 1e-15, false);
        r.add(p + "temporal_leak", b.temporal_leak, 1e-10);
        r.add(p + "cone_fraction", b.cone_fraction, 1.0 - 1e-6, false);
        r.add(p + "div_residual", b.div_residual, 1e-8);
        if (k == 1)
            r.add(p + "dwell_mass", b.dwell_mass, dwell_floor, false);
        else
            r.info(p + "dwell_mass", b.dwell_mass);
    }
    return r;
}

}
