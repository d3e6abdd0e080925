#pragma once

#include "diagnostics.hpp"
#include "geometry.hpp"
#include "wave_builder.hpp"

#include <chrono>
#include <numeric>

namespace wildscalar {

struct ConstructionParams {
    GridSpec grid{2, 64, 64, 8.0, false};
    std::string symbol = "pm2d";
    Vec xi1, xi2;                  // patch centers; empty -> symbol default
    double patch_radius = 0.35;    // angular radius of the screen patches
    double cone_width = 0.6;       // half-width of the confinement cones around +-xi1, +-xi2
    double lambda = 0.5;
    double eps = 0.1;
    double eps1 = 0.1;
    double eps2 = 0.1;
    double delta0 = two_pi;
    double delta_decay = 0.6;
    double s = 0.05;
    double eta = 0.15;
    int N = 12;
    int stages = 3;
    double r0 = 1e9;               // cover radius (space-time distance, radians / time units)
    double rho = 0.4;              // level-set radius of a region in state space
    double mollifier = 0.25;       // spatial Gaussian width of the region masks (radians)
    double mollifier_t = 0.25;     // temporal Gaussian width of the region masks (time units)
    double window_lo = 0.05;       // temporal support [lo T, hi T] of every localizer
    double window_hi = 0.95;
    double window_ramp = 0.1;      // ramp width as a fraction of T
    int max_order = 31;            // sawtooth truncation cap (also capped by the grid)
    int max_regions = 8;
    bool cover_beyond_half = true; // keep adding regions after the half-mass condition holds
    int max_probes = 4096;         // infeasible cover centers tolerated per stage
    int witness_probes = 16;       // of which may run the membership witness solve
    double min_region_fraction = 0.005;
    bool nested_masks = false;
    double nest_radius = 0.3;
    TimeScheme scheme = TimeScheme::spectral;
    std::uint64_t seed = 1;
    int basket = 20;

    void validate() const {
        grid.validate();
        check_eta(eta);
        if (!steps_admissible(eta, N))
            throw Error(ErrorKind::PreconditionViolation, "N must be a multiple of 4 with (1 - eta)^(N - 4) < 1/2");
        for (double v : {eps, eps1, eps2})
            if (!(v > 0.0 && v < 1.0)) throw Error(ErrorKind::PreconditionViolation, "tolerances must lie in (0,1)");
        if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::PreconditionViolation, "lambda must lie in (0,1)");
        if (!(s > 0.0 && s <= 0.25)) throw Error(ErrorKind::PreconditionViolation, "s must lie in (0, 1/4]");
        if (stages < 0) throw Error(ErrorKind::PreconditionViolation, "stages must be >= 0");
        if (!(delta0 > 0.0) || !(delta_decay > 0.0 && delta_decay < 1.0))
            throw Error(ErrorKind::PreconditionViolation, "delta schedule must be positive and decaying");
        if (!(window_lo > 0.0 && window_hi < 1.0 && window_lo < window_hi))
            throw Error(ErrorKind::PreconditionViolation, "temporal window must sit inside (0,1)");
    }

    double stage_delta(int stage) const { return delta0 * std::pow(delta_decay, stage - 1); }
    TemporalBump window() const { return {window_lo * grid.T, window_hi * grid.T, window_ramp * grid.T}; }
};

// default patch pair per built-in: images whose chord meets the range transversally
inline std::pair<Vec, Vec> default_centers(const MultiplierSymbol& s) {
    Vec a(s.dim), b(s.dim);
    if (s.name == "pm2d") {
        a << 1, 0;
        b << 0, 1;
    } else if (s.name == "pm3d") {
        a << 0, 0, 1;
        b << 1, 0, 1;
    } else if (s.name == "mg") {
        a << 0, 1, 1;
        b << 0, 0, 1;
    } else {
        // generic: the pair of regular grid directions with the best transversality
        auto patches = find_regular_patches(s, 0.3);
        double best = -1.0;
        for (std::size_t i = 0; i < patches.size(); ++i)
            for (std::size_t j = i + 1; j < patches.size(); ++j) {
                Vec seg = s.eval(patches[j].center) - s.eval(patches[i].center);
                if (seg.norm() < 0.1) continue;
                double ang = std::min(detail::crossing_angle(sphere_jacobian(s, patches[i].center), seg),
                                      detail::crossing_angle(sphere_jacobian(s, patches[j].center), seg));
                if (ang > best) {
                    best = ang;
                    a = patches[i].center;
                    b = patches[j].center;
                }
            }
        if (best < 0) throw Error(ErrorKind::SpanFailure, "no usable pair of regular patches");
    }
    return {unit(a), unit(b)};
}

struct Construction {
    ConstructionParams params;
    SymbolPtr symbol;
    Screens screens;
    std::vector<RegularPatch> cones;
    std::vector<char> cone_mask;
    MultiplierTable mtab;
};

inline Construction prepare(const ConstructionParams& p) {
    p.validate();
    Construction c;
    c.params = p;
    c.symbol = resolve_symbol(p.symbol);
    if (c.symbol->dim != p.grid.n) throw Error(ErrorKind::ShapeMismatch, "symbol dimension differs from grid dimension");
    auto adm = check_admissibility(*c.symbol, 1000, 1e-12);
    if (!adm.admissible())
        throw Error(ErrorKind::PreconditionViolation, "symbol " + c.symbol->name + " fails the admissibility gate");
    auto centers = default_centers(*c.symbol);
    Vec x1 = p.xi1.size() ? unit(p.xi1) : centers.first;
    Vec x2 = p.xi2.size() ? unit(p.xi2) : centers.second;
    c.screens = build_screens(c.symbol, {x1, p.patch_radius, 0.0}, {x2, p.patch_radius, 0.0});
    c.cones = {{x1, p.cone_width, 0.0}, {x2, p.cone_width, 0.0}};
    c.cone_mask = wildscalar::cone_mask(p.grid, c.cones);
    c.mtab = multiplier_table(p.grid, *c.symbol);
    return c;
}

inline StateField init_state(const Construction& c) {
    StateField U(c.params.grid, c.symbol);
    const int n = c.params.grid.n;
    for (int d = 0; d < n; ++d) {
        double* p = U.data.at(U.q_channel(d), 0);
        std::fill(p, p + U.data.slice() * c.params.grid.nt, c.screens.q0(d));
    }
    return U;
}

// ---- cascade --------------------------------------------------------------------------

enum class CascadeBranch { t4_certified, t4_extended, single_wave, two_level, none };

inline const char* branch_name(CascadeBranch b) {
    switch (b) {
    case CascadeBranch::t4_certified: return "t4_certified";
    case CascadeBranch::t4_extended: return "t4_extended";
    case CascadeBranch::single_wave: return "single_wave";
    case CascadeBranch::two_level: return "two_level";
    case CascadeBranch::none: return "none";
    }
    return "none";
}

struct CascadeReport {
    CascadeBranch branch = CascadeBranch::none;
    double dist_A = 0.0;
    double dwell_mass = 0.0;   // fraction of the region where |Z| >= dist(A, K) / 2
    double embed_max = 0.0;    // max over the region of dist(A + Z, union of arm segments)
    double sup_outside = 0.0;
    int waves = 0;
};

struct CascadeContext {
    const Construction* c = nullptr;
    double delta = 1.0;
    std::map<std::vector<int>, double> offsets;
};

inline int grid_capped_order(const ConstructionParams& p, const std::vector<int>& k) {
    int kmax = 1;
    for (int v : k) kmax = std::max(kmax, std::abs(v));
    return std::max(1, std::min(p.max_order, (p.grid.nx / 2 - 1) / kmax));
}

// one single-direction wave around the current base: A + Z oscillates between A - (1 - lam) L and A + lam L
inline PhysicalField single_wave(CascadeContext& ctx, const StateMatrix& L, const Vec& xi, double lam, const PhysicalField& h,
                                 double advance) {
    const Construction& c = *ctx.c;
    const ConstructionParams& p = c.params;
    LatticeFrequency lf = select_frequency(xi, ctx.delta, p.grid.nx);
    double& off = ctx.offsets[lf.k];
    WaveProfile prof = profile_at_order(lam, grid_capped_order(p, lf.k), std::min(p.eps1, 0.999 * std::min(lam, 1 - lam)), 2048);
    WaveSpec ws{L.theta, lf.k, ctx.delta, L.q, -off};
    off += advance;
    return assemble_wave(p.grid, *c.symbol, c.mtab, ws, prof, h, &c.cone_mask, p.scheme);
}

inline void add_into(PhysicalField& acc, const PhysicalField& z) {
    for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += z.data[i];
}

// mollified indicator of {|base + Z - target| < r}, times the parent localizer
inline PhysicalField nested_mask(const ConstructionParams& p, const StateMatrix& base, const PhysicalField& Z,
                                 const StateMatrix& target, double r, const PhysicalField& parent) {
    PhysicalField m(p.grid, 1);
    const Vec b = base.vec(), tv = target.vec();
    const int dim = static_cast<int>(b.size());
    for (int t = 0; t < p.grid.nt; ++t)
        for (std::size_t x = 0; x < m.slice(); ++x) {
            double s2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                double v = b(c) + Z(c, t, x) - tv(c);
                s2 += v * v;
            }
            m(0, t, x) = s2 < r * r ? 1.0 : 0.0;
        }
    PhysicalField mm = mollify_time(mollify(m, p.mollifier), p.mollifier_t);
    for (std::size_t i = 0; i < mm.data.size(); ++i) mm.data[i] = std::clamp(mm.data[i], 0.0, 1.0) * parent.data[i];
    return mm;
}

inline PhysicalField t4_cascade(CascadeContext& ctx, const T4Configuration& cfg, const PhysicalField& h, CascadeReport& rep,
                                std::vector<std::pair<StateMatrix, StateMatrix>>* segments) {
    const ConstructionParams& p = ctx.c->params;
    Arms ar = perturbed_arms(cfg, p.s, p.eta);
    PhysicalField Z(p.grid, 2 * p.grid.n + 1);
    PhysicalField hcur = h;
    for (int i = 1; i <= p.N; ++i) {
        const int jj = 4 - ((i - 1) % 4);
        const int j0 = jj - 1;
        StateMatrix L = ar.Tbar[j0] - ar.A[jj - 1];
        const double lw = 1.0 - p.eta * cfg.lambda[j0];
        add_into(Z, single_wave(ctx, L, cfg.xi[j0], lw, hcur, p.eta * cfg.lambda[j0]));
        ++rep.waves;
        if (p.nested_masks) hcur = nested_mask(p, cfg.A, Z, ar.A[jj - 1], p.nest_radius, h);
    }
    if (segments)
        for (int i = 0; i < 4; ++i) segments->push_back({ar.A[i], ar.Tbar[i]});
    return Z;
}

inline double distance_to_segments(const Vec& z, const std::vector<std::pair<StateMatrix, StateMatrix>>& segs) {
    double best = 1e300;
    for (const auto& s : segs) best = std::min(best, distance_to_segment(z, s.first.vec(), s.second.vec()));
    return best;
}

// Z for one region; region_mask marks the cells of the region (for the measured bounds)
inline PhysicalField cascade_once(CascadeContext& ctx, const StateMatrix& A, const PhysicalField& h,
                                  const std::vector<char>& region_mask, CascadeReport& rep) {
    const Construction& c = *ctx.c;
    const ConstructionParams& p = c.params;
    const Screens& sc = c.screens;
    rep.dist_A = dist_to_K(A);
    std::vector<std::pair<StateMatrix, StateMatrix>> segs;
    PhysicalField Z;
    auto try_t4 = [&](const StateMatrix& B, bool certified) -> std::optional<T4Configuration> {
        try {
            return certified ? t4_of(B, sc) : t4_construct(B, sc);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    std::optional<T4Configuration> cfg;
    if ((A - sc.A0()).norm() < sc.delta) {
        cfg = try_t4(A, true);
        rep.branch = CascadeBranch::t4_certified;
    } else if ((cfg = try_t4(A, false))) {
        rep.branch = CascadeBranch::t4_extended;
    }
    if (cfg) {
        Z = t4_cascade(ctx, *cfg, h, rep, &segs);
    } else {
        MembershipWitness w = membership_U(A, sc, p.seed);
        if (!w.member || w.in_ball) {
            rep.branch = CascadeBranch::none;
            return PhysicalField(p.grid, 2 * p.grid.n + 1);
        }
        StateMatrix L = w.T - w.Aprime;
        Z = single_wave(ctx, L, w.xi, w.t, h, 0.0);
        ++rep.waves;
        segs.push_back({w.Aprime, w.T});
        if (w.t < 0.5) {
            rep.branch = CascadeBranch::single_wave;
        } else {
            rep.branch = CascadeBranch::two_level;
            auto inner = try_t4(w.Aprime, true);
            if (inner) {
                PhysicalField hm = nested_mask(p, A, Z, w.Aprime, p.nest_radius, h);
                PhysicalField Zi = t4_cascade(ctx, *inner, hm, rep, &segs);
                add_into(Z, Zi);
            }
        }
    }
    // measured bounds on the region
    const int dim = 2 * p.grid.n + 1;
    const Vec a = A.vec();
    std::size_t inside = 0, dwell = 0;
    Vec z(dim);
    for (int t = 0; t < p.grid.nt; ++t)
        for (std::size_t x = 0; x < Z.slice(); ++x) {
            for (int ch = 0; ch < dim; ++ch) z(ch) = Z(ch, t, x);
            const std::size_t idx = static_cast<std::size_t>(t) * Z.slice() + x;
            if (region_mask[idx]) {
                ++inside;
                if (z.norm() >= 0.5 * rep.dist_A) ++dwell;
                rep.embed_max = std::max(rep.embed_max, distance_to_segments(a + z, segs));
            } else if (h(0, t, x) == 0.0) {
                rep.sup_outside = std::max(rep.sup_outside, z.norm());
            }
        }
    rep.dwell_mass = inside ? double(dwell) / inside : 0.0;
    return Z;
}

// cheap checks first; the membership witness solve is costly, so callers ration it
inline bool cascade_feasible(const Construction& c, const StateMatrix& A, bool try_witness = true) {
    const Screens& sc = c.screens;
    try {
        if ((A - sc.A0()).norm() < sc.delta) {
            perturbed_arms(t4_of(A, sc), c.params.s, c.params.eta);
            return true;
        }
        perturbed_arms(t4_construct(A, sc), c.params.s, c.params.eta);
        return true;
    } catch (const Error&) {
    }
    if (!try_witness) return false;
    MembershipWitness w = membership_U(A, sc, c.params.seed);
    return w.member && !w.in_ball;
}

// ---- stage -----------------------------------------------------------------------------

struct Region2 {
    std::size_t center = 0;
    StateMatrix A;
    std::vector<char> mask;
    std::size_t cells = 0;
    double mass = 0.0;  // dist(A)^2 * |R| / |Omega_T|
};

struct StageReport {
    int stage = 0;
    double delta = 0.0;
    double energy = 0.0;          // mean |U|^2
    double delta_energy = 0.0;
    double int_dist2_before = 0.0;
    double gain_ratio = 0.0;      // delta_energy / int_dist2_before
    double mean_dist = 0.0, max_dist = 0.0, int_dist2 = 0.0;
    double median_theta_gap = 0.0;  // median ||theta| - 1|
    double frac_theta_near1 = 0.0;  // fraction with ||theta| - 1| < 0.25
    double weak_residual = 0.0;
    double cone_fraction = 1.0;
    double temporal_leak = 0.0;     // sup |theta|, |u| outside the temporal window
    double div_residual = 0.0;
    double sup_theta = 0.0, sup_q = 0.0, sup_u = 0.0;
    double dwell_mass = 0.0;        // region-weighted cascade dwell mass
    double cover_fraction = 0.0;    // captured dist^2 mass / dist^2 mass inside the temporal window
    int regions = 0;
    int skipped = 0;
    std::string branches;
    double wall_seconds = 0.0;
};

inline std::vector<double> dist_field(const StateField& U) {
    const GridSpec& g = U.grid();
    const int dim = 2 * g.n + 1;
    std::vector<double> d(static_cast<std::size_t>(g.nt) * g.spatial());
    Vec v(dim);
    for (int t = 0; t < g.nt; ++t)
        for (std::size_t x = 0; x < g.spatial(); ++x) {
            for (int c = 0; c < dim; ++c) v(c) = U.data(c, t, x);
            d[static_cast<std::size_t>(t) * g.spatial() + x] = dist_to_K(v);
        }
    return d;
}

inline double mean_energy(const StateField& U) {
    double e = 0.0;
    for (double v : U.data.data) e += v * v;
    return e / (static_cast<double>(U.grid().nt) * U.grid().spatial());
}

// greedy disjoint cover by level sets of U, descending dist^2, ties by index.
// The cover domain is the support of the temporal window; total is the dist^2 mass there
// (normalized by the full cell count, like the region masses).
// feasible(A) says whether a cascade can be built around A; infeasible centers are skipped
// together with their half-radius level set
inline std::vector<Region2> greedy_cover(const Construction& c, const StateField& U, const std::vector<double>& d,
                                         double& captured, double& total, int& skipped,
                                         const std::function<bool(const StateMatrix&)>& feasible = {}) {
    const ConstructionParams& p = c.params;
    const GridSpec& g = p.grid;
    const std::size_t S = g.spatial(), cells = d.size();
    std::vector<char> taken(cells, 0);
    const TemporalBump win = p.window();
    for (std::size_t i = 0; i < cells; ++i)
        if (win(g.time(static_cast<int>(i / S))) == 0.0) taken[i] = 1;
    total = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
        if (!taken[i]) total += d[i] * d[i];
    total /= cells;
    captured = 0.0;
    skipped = 0;
    std::vector<Region2> out;
    if (total <= 1e-16) return out;
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
    std::vector<Vec> vals(cells);
    for (std::size_t i = 0; i < cells; ++i) vals[i] = U.value(static_cast<int>(i / S), i % S);
    const std::size_t min_cells = std::max<std::size_t>(1, static_cast<std::size_t>(p.min_region_fraction * cells));
    int probes = 0;
    for (std::size_t y : order) {
        if (static_cast<int>(out.size()) >= p.max_regions || (!p.cover_beyond_half && 2.0 * captured > total)) break;
        if (taken[y] || d[y] * d[y] <= 1e-16) continue;
        const int ty = static_cast<int>(y / S);
        if (feasible && !feasible(StateMatrix::from(vals[y]))) {
            ++skipped;
            for (std::size_t i = 0; i < cells; ++i)
                if ((vals[i] - vals[y]).norm() < 0.5 * p.rho) taken[i] = 1;
            if (++probes >= p.max_probes) break;
            continue;
        }
        Region2 r;
        r.center = y;
        r.A = StateMatrix::from(vals[y]);
        r.mask.assign(cells, 0);
        Vec xy = position(g, y % S);
        for (std::size_t i = 0; i < cells; ++i) {
            if (taken[i]) continue;
            if ((vals[i] - vals[y]).norm() >= p.rho) continue;
            const int ti = static_cast<int>(i / S);
            double dt = g.time(ti) - g.time(ty);
            double st = std::sqrt(dt * dt + std::pow(Region::periodic_distance(position(g, i % S), xy), 2));
            if (st >= p.r0) continue;
            r.mask[i] = 1;
            ++r.cells;
        }
        if (r.cells < min_cells) {
            taken[y] = 1;
            continue;
        }
        r.mass = d[y] * d[y] * r.cells / cells;
        for (std::size_t i = 0; i < cells; ++i)
            if (r.mask[i]) taken[i] = 1;
        captured += r.mass;
        out.push_back(std::move(r));
    }
    return out;
}

inline PhysicalField region_localizer(const ConstructionParams& p, const std::vector<char>& mask) {
    const GridSpec& g = p.grid;
    PhysicalField m(g, 1);
    bool all = true;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        m.data[i] = mask[i] ? 1.0 : 0.0;
        all = all && mask[i];
    }
    PhysicalField h = all ? m : mollify_time(mollify(m, p.mollifier), p.mollifier_t);
    const TemporalBump win = p.window();
    for (int t = 0; t < g.nt; ++t) {
        double w = win(g.time(t));
        double* row = h.at(0, t);
        for (std::size_t x = 0; x < h.slice(); ++x) row[x] = std::clamp(row[x], 0.0, 1.0) * w;
    }
    return h;
}

struct StageResult {
    StateField U;
    StageReport report;
    std::vector<CascadeReport> cascades;
};

inline void observe(const Construction& c, const StateField& U, StageReport& r) {
    const GridSpec& g = U.grid();
    const int n = g.n;
    auto d = dist_field(U);
    r.energy = mean_energy(U);
    double s = 0.0, s2 = 0.0, mx = 0.0;
    for (double v : d) {
        s += v;
        s2 += v * v;
        mx = std::max(mx, v);
    }
    r.mean_dist = s / d.size();
    r.int_dist2 = s2 / d.size();
    r.max_dist = mx;
    std::vector<double> gap;
    gap.reserve(d.size());
    std::size_t near1 = 0;
    const double* th = U.data.at(0, 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        double v = std::abs(std::abs(th[i]) - 1.0);
        gap.push_back(v);
        if (v < 0.25) ++near1;
    }
    std::nth_element(gap.begin(), gap.begin() + gap.size() / 2, gap.end());
    r.median_theta_gap = gap[gap.size() / 2];
    r.frac_theta_near1 = double(near1) / d.size();
    PhysicalField thf = channel(U.data, 0);
    PhysicalField uf(g, n);
    for (int k = 0; k < n; ++k) {
        const double* src = U.data.at(U.u_channel(k), 0);
        std::copy(src, src + U.data.slice() * g.nt, uf.at(k, 0));
    }
    r.weak_residual = weak_form_residual(thf, uf, c.params.basket, c.params.seed);
    SpectralField ts = to_spectral(thf), us = to_spectral(uf);
    SpectralField both(g, 1 + n);
    std::copy(ts.data.begin(), ts.data.end(), both.data.begin());
    std::copy(us.data.begin(), us.data.end(), both.data.begin() + ts.data.size());
    r.cone_fraction = support_cone_check(both, c.cones).fraction_inside;
    const TemporalBump win = c.params.window();
    r.temporal_leak = 0.0;
    for (int t = 0; t < g.nt; ++t) {
        if (win(g.time(t)) != 0.0) continue;
        for (std::size_t x = 0; x < U.data.slice(); ++x) {
            r.temporal_leak = std::max(r.temporal_leak, std::abs(U.data(0, t, x)));
            for (int k = 0; k < n; ++k) r.temporal_leak = std::max(r.temporal_leak, std::abs(U.data(U.u_channel(k), t, x)));
        }
    }
    r.div_residual = divergence_residual_relative(U, c.params.scheme);
    r.sup_theta = sup_norm(U.data, 0);
    r.sup_q = r.sup_u = 0.0;
    for (int k = 0; k < n; ++k) {
        r.sup_q = std::max(r.sup_q, sup_norm(U.data, U.q_channel(k)));
        r.sup_u = std::max(r.sup_u, sup_norm(U.data, U.u_channel(k)));
    }
}

inline StageResult perturb_stage(const Construction& c, const StateField& U, int stage) {
    auto t0 = std::chrono::steady_clock::now();
    const ConstructionParams& p = c.params;
    StageResult res;
    res.U = U;
    StageReport& r = res.report;
    r.stage = stage;
    r.delta = p.stage_delta(stage);
    auto d = dist_field(U);
    double captured = 0.0, total = 0.0;
    int skipped = 0;
    int witness_budget = p.witness_probes;
    auto regions = greedy_cover(c, U, d, captured, total, skipped,
                                [&](const StateMatrix& A) { return cascade_feasible(c, A, witness_budget-- > 0); });
    for (double v : d) r.int_dist2_before += v * v;
    r.int_dist2_before /= d.size();
    const double e0 = mean_energy(U);
    if (total > 1e-16) {
        PhysicalField Z(p.grid, 2 * p.grid.n + 1);
        double accepted_mass = 0.0, dwell_weighted = 0.0;
        for (auto& reg : regions) {
            CascadeContext ctx{&c, r.delta, {}};
            CascadeReport cr;
            PhysicalField h = region_localizer(p, reg.mask);
            PhysicalField z = cascade_once(ctx, reg.A, h, reg.mask, cr);
            res.cascades.push_back(cr);
            if (!r.branches.empty()) r.branches += ";";
            r.branches += branch_name(cr.branch);
            if (cr.branch == CascadeBranch::none) {
                ++skipped;
                continue;
            }
            add_into(Z, z);
            accepted_mass += reg.mass;
            dwell_weighted += cr.dwell_mass * reg.cells;
            ++r.regions;
        }
        std::size_t cells_used = 0;
        for (std::size_t i = 0; i < regions.size(); ++i)
            if (res.cascades[i].branch != CascadeBranch::none) cells_used += regions[i].cells;
        r.dwell_mass = cells_used ? dwell_weighted / cells_used : 0.0;
        r.cover_fraction = accepted_mass / total;
        if (2.0 * accepted_mass <= total)
            throw Error(ErrorKind::CoverFailure, "cover captures " + std::to_string(r.cover_fraction) + " of the dist^2 mass");
        add_into(res.U.data, Z);
    }
    r.skipped = skipped;
    observe(c, res.U, r);
    r.delta_energy = r.energy - e0;
    r.gain_ratio = r.int_dist2_before > 0 ? r.delta_energy / r.int_dist2_before : 0.0;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct RunResult {
    StateField U;
    std::vector<StageReport> reports;  // reports[0] describes the initial state
};

inline RunResult run(const ConstructionParams& params) {
    Construction c = prepare(params);
    RunResult out;
    out.U = init_state(c);
    StageReport r0;
    observe(c, out.U, r0);
    out.reports.push_back(r0);
    for (int k = 1; k <= params.stages; ++k) {
        StageResult sr = perturb_stage(c, out.U, k);
        out.U = std::move(sr.U);
        out.reports.push_back(sr.report);
    }
    return out;
}

inline std::string stage_csv_header() {
    return "stage,delta,energy,delta_energy,int_dist2_before,gain_ratio,mean_dist,max_dist,int_dist2,"
           "median_theta_gap,frac_theta_near1,weak_residual,cone_fraction,temporal_leak,div_residual,"
           "sup_theta,sup_q,sup_u,dwell_mass,cover_fraction,regions,skipped,branches";
}

inline std::string stage_csv_row(const StageReport& r) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                  "%.10g,%.10g,%d,%d,%s",
                  r.stage, r.delta, r.energy, r.delta_energy, r.int_dist2_before, r.gain_ratio, r.mean_dist, r.max_dist,
                  r.int_dist2, r.median_theta_gap, r.frac_theta_near1, r.weak_residual, r.cone_fraction, r.temporal_leak,
                  r.div_residual, r.sup_theta, r.sup_q, r.sup_u, r.dwell_mass, r.cover_fraction, r.regions, r.skipped,
                  r.branches.empty() ? "-" : r.branches.c_str());
    return buf;
}

}
