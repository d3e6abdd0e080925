#pragma once

#include "torus_field.hpp"

#include <optional>

namespace wildscalar {

// ---- sawtooth profile ----------------------------------------------------------------

struct WaveProfile {
    double lambda = 0.5;
    int order = 0;
    std::vector<cplx> c;  // c[m-1] for m = 1..order; f = sum_{m != 0} c_m e^{2 pi i m s}
    double measure_plus = 0.0;   // |{|f - lambda| < eps1}|
    double measure_minus = 0.0;  // |{|f + 1 - lambda| < eps1}|
    double eps1 = 0.0;
    bool conditions_met = false;

    // deriv 0: f, -1: F', -2: F (F'' = f, both 1-periodic and mean zero)
    double eval(double s, int deriv = 0) const {
        cplx z = std::polar(1.0, two_pi * s), zm = 1.0;
        double out = 0.0;
        for (int m = 1; m <= order; ++m) {
            zm *= z;
            out += 2.0 * std::real(coefficient(m, deriv) * zm);
        }
        return out;
    }

    cplx coefficient(int m, int deriv) const {
        const double w = two_pi * m;
        cplx a = c[m - 1];
        if (deriv == -1) return a / cplx(0.0, w);
        if (deriv == -2) return -a / (w * w);
        return a;
    }
};

inline std::vector<cplx> sawtooth_coefficients(double lambda, int order) {
    std::vector<cplx> c(order);
    for (int m = 1; m <= order; ++m) {
        const double w = two_pi * m;
        c[m - 1] = (1.0 - std::polar(1.0, -w * (1.0 - lambda))) / cplx(0.0, w);
    }
    return c;
}

inline void measure_profile(WaveProfile& p, int samples) {
    int plus = 0, minus = 0;
    for (int i = 0; i < samples; ++i) {
        double v = p.eval((i + 0.5) / samples);
        if (std::abs(v - p.lambda) < p.eps1) ++plus;
        if (std::abs(v + 1.0 - p.lambda) < p.eps1) ++minus;
    }
    p.measure_plus = double(plus) / samples;
    p.measure_minus = double(minus) / samples;
    p.conditions_met = p.measure_plus > (1.0 - p.lambda) * (1.0 - p.eps1) && p.measure_minus > p.lambda * (1.0 - p.eps1);
}

// fixed truncation order; measures reported, conditions not enforced
inline WaveProfile profile_at_order(double lambda, int order, double eps1, int samples = 4096) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::PreconditionViolation, "lambda must lie in (0,1)");
    if (order < 1) throw Error(ErrorKind::PreconditionViolation, "truncation order must be >= 1");
    WaveProfile p;
    p.lambda = lambda;
    p.order = order;
    p.eps1 = eps1;
    p.c = sawtooth_coefficients(lambda, order);
    measure_profile(p, samples);
    return p;
}

inline WaveProfile build_profile(double lambda, double eps1, int samples = 100000, int cap = 256) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::PreconditionViolation, "lambda must lie in (0,1)");
    if (!(eps1 > 0.0 && eps1 < std::min(lambda, 1.0 - lambda)))
        throw Error(ErrorKind::PreconditionViolation, "eps1 must lie in (0, min(lambda, 1 - lambda))");
    for (int m = 1; m <= cap; ++m) {
        WaveProfile p = profile_at_order(lambda, m, eps1, samples);
        if (p.conditions_met) return p;
    }
    throw Error(ErrorKind::TruncationSearchExhausted,
                "no truncation order <= " + std::to_string(cap) + " meets the plateau measures for eps1 = " + std::to_string(eps1));
}

// ---- regions and localizers ----------------------------------------------------------

// time interval times a spatial shape (whole torus, periodic box, or periodic ball)
struct Region {
    enum class Shape { full, box, ball };
    double t0 = 0.0, t1 = 1.0;
    Shape shape = Shape::full;
    Vec lo, hi;
    Vec center;
    double radius = 0.0;

    static Region full_space(double t0, double t1) {
        Region r;
        r.t0 = t0;
        r.t1 = t1;
        return r;
    }
    static Region ball(double t0, double t1, Vec c, double radius) {
        Region r = full_space(t0, t1);
        r.shape = Shape::ball;
        r.center = std::move(c);
        r.radius = radius;
        return r;
    }
    static Region box(double t0, double t1, Vec lo, Vec hi) {
        Region r = full_space(t0, t1);
        r.shape = Shape::box;
        r.lo = std::move(lo);
        r.hi = std::move(hi);
        return r;
    }

    bool contains_time(double t) const { return t >= t0 && t <= t1; }
    bool contains_space(const Vec& x) const {
        if (shape == Shape::full) return true;
        if (shape == Shape::ball) return periodic_distance(x, center) < radius;
        for (int d = 0; d < x.size(); ++d)
            if (wrap_from(x(d), lo(d)) > hi(d) - lo(d)) return false;
        return true;
    }
    bool contains(double t, const Vec& x) const { return contains_time(t) && contains_space(x); }

    static double wrap_from(double x, double base) {
        double v = std::fmod(x - base, two_pi);
        return v < 0 ? v + two_pi : v;
    }
    static double periodic_distance(const Vec& a, const Vec& b) {
        double s = 0.0;
        for (int d = 0; d < a.size(); ++d) {
            double v = std::abs(std::remainder(a(d) - b(d), two_pi));
            s += v * v;
        }
        return std::sqrt(s);
    }
};

// polynomial smoothstep of continuity order p: S(z) = z^{p+1} sum_j C(p+j,j) C(2p+1,p-j) (-z)^j
class Smoothstep {
public:
    explicit Smoothstep(int p = 4) {
        coef_.assign(2 * p + 2, 0.0);
        for (int j = 0; j <= p; ++j) coef_[p + 1 + j] = binom(p + j, j) * binom(2 * p + 1, p - j) * (j % 2 ? -1.0 : 1.0);
    }

    double operator()(double z, int deriv = 0) const {
        if (z <= 0.0) return 0.0;
        if (z >= 1.0) return deriv == 0 ? 1.0 : 0.0;
        double out = 0.0;
        for (int i = static_cast<int>(coef_.size()) - 1; i >= deriv; --i) {
            double f = coef_[i];
            for (int k = 0; k < deriv; ++k) f *= (i - k);
            out = out * z + f;
        }
        return out;
    }

private:
    static double binom(int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    }
    std::vector<double> coef_;
};

// temporal bump on [a, b] with ramp r, smoothstep order 2 (C^2), plus its derivatives
struct TemporalBump {
    double a = 0.0, b = 1.0, ramp = 0.1;

    double operator()(double t, int deriv = 0) const {
        double z1 = (t - a) / ramp, z2 = (b - t) / ramp;
        double s1 = smoothstep(z1), s2 = smoothstep(z2);
        if (deriv == 0) return s1 * s2;
        double d1 = smoothstep_d1(z1) / ramp, d2 = -smoothstep_d1(z2) / ramp;
        if (deriv == 1) return d1 * s2 + s1 * d2;
        double e1 = smoothstep_d2(z1) / (ramp * ramp), e2 = smoothstep_d2(z2) / (ramp * ramp);
        return e1 * s2 + 2.0 * d1 * d2 + s1 * e2;
    }
};

struct LocalizerBounds {
    double min = 0.0, max = 0.0;
    double plateau_fraction = 0.0;
    double exterior_h = 0.0, exterior_dh = 0.0, exterior_d2h = 0.0;

    bool holds(double eps2) const {
        return min >= -eps2 && max <= 1.0 + eps2 && plateau_fraction > 1.0 - eps2 && exterior_h < eps2 &&
               exterior_dh < eps2 && exterior_d2h < eps2;
    }
};

struct Localizer {
    Region omega;
    double eps2 = 0.0;
    PhysicalField h;  // one channel on the full space-time grid
    int truncation_order = 0;
    double spatial_ramp = 0.0;
    LocalizerBounds bounds;
};

namespace detail {

inline std::vector<double> spatial_bump(const GridSpec& g, const Region& r, double ramp, const Smoothstep& S) {
    std::vector<double> out(g.spatial(), 1.0);
    if (r.shape == Region::Shape::full) return out;
    for (std::size_t p = 0; p < out.size(); ++p) {
        Vec x = position(g, p);
        if (r.shape == Region::Shape::ball) {
            double d = Region::periodic_distance(x, r.center);
            out[p] = 1.0 - S((d - (r.radius - ramp)) / ramp);
        } else {
            double v = 1.0;
            for (int d = 0; d < g.n; ++d) {
                double u = Region::wrap_from(x(d), r.lo(d));
                double w = r.hi(d) - r.lo(d);
                v *= S(u / ramp) * S((w - u) / ramp);
            }
            out[p] = v;
        }
    }
    return out;
}

struct SliceDerivatives {
    std::vector<double> h;
    std::vector<std::vector<double>> grad;  // n
    std::vector<std::vector<double>> hess;  // n*n
};

// truncate the spatial Fourier series at |k|_inf <= order and differentiate spectrally
inline SliceDerivatives truncated_slice(const GridSpec& g, const std::vector<double>& bump, int order) {
    GridSpec g1 = g;
    g1.nt = 1;
    PhysicalField f(g1, 1);
    std::copy(bump.begin(), bump.end(), f.data.begin());
    SpectralField s = to_spectral(f);
    const auto& mt = modes(g);
    multiply_modes(s, [&](std::size_t i) {
        bool keep = mt.retained[i];
        for (int d = 0; d < g.n; ++d)
            if (std::abs(mt.k[i][d]) > order) keep = false;
        return cplx(keep ? 1.0 : 0.0);
    });
    SliceDerivatives out;
    out.h = to_physical(s).data;
    for (int d = 0; d < g.n; ++d) out.grad.push_back(to_physical(spatial_derivative(s, d)).data);
    for (int a = 0; a < g.n; ++a)
        for (int b = 0; b < g.n; ++b) out.hess.push_back(to_physical(spatial_derivative(spatial_derivative(s, a), b)).data);
    return out;
}

}

// bounds of h(t,x) = tau(t) * hx(x), temporal derivatives analytic, spatial ones spectral
inline LocalizerBounds measure_separable(const GridSpec& g, const Region& r, const TemporalBump& tau,
                                         const detail::SliceDerivatives& sx, double eps2) {
    LocalizerBounds b;
    b.min = 1e300;
    b.max = -1e300;
    std::size_t inside = 0, plateau = 0;
    std::vector<char> in_space(g.spatial());
    for (std::size_t p = 0; p < in_space.size(); ++p) in_space[p] = r.contains_space(position(g, p));
    for (int t = 0; t < g.nt; ++t) {
        const double tt = g.time(t);
        const double a0 = tau(tt), a1 = tau(tt, 1), a2 = tau(tt, 2);
        const bool tin = r.contains_time(tt);
        for (std::size_t p = 0; p < in_space.size(); ++p) {
            double hv = a0 * sx.h[p];
            b.min = std::min(b.min, hv);
            b.max = std::max(b.max, hv);
            if (tin && in_space[p]) {
                ++inside;
                if (std::abs(hv - 1.0) < eps2) ++plateau;
                continue;
            }
            double g2 = a1 * sx.h[p] * a1 * sx.h[p];
            for (int d = 0; d < g.n; ++d) g2 += a0 * sx.grad[d][p] * a0 * sx.grad[d][p];
            double h2 = a2 * sx.h[p] * a2 * sx.h[p];
            for (int d = 0; d < g.n; ++d) h2 += 2.0 * std::pow(a1 * sx.grad[d][p], 2);
            for (int k = 0; k < g.n * g.n; ++k) h2 += std::pow(a0 * sx.hess[k][p], 2);
            b.exterior_h = std::max(b.exterior_h, std::abs(hv));
            b.exterior_dh = std::max(b.exterior_dh, std::sqrt(g2));
            b.exterior_d2h = std::max(b.exterior_d2h, std::sqrt(h2));
        }
    }
    b.plateau_fraction = inside ? double(plateau) / inside : 0.0;
    return b;
}

struct LocalizerOptions {
    // temporal ramp as a fraction of one time step; < 1 keeps every sample inside [t0, t1] on the plateau
    double temporal_ramp_cells = 0.5;
    std::vector<double> spatial_ramps;  // radians; empty -> automatic ladder
    int smoothstep_order = 4;
};

// candidate localizer without invariant enforcement
inline Localizer make_localizer(const Region& r, const GridSpec& g, double spatial_ramp, int order,
                                double eps2 = 0.1, const LocalizerOptions& opt = {}) {
    Smoothstep S(opt.smoothstep_order);
    TemporalBump tau{r.t0, r.t1, opt.temporal_ramp_cells * g.dt()};
    auto bump = detail::spatial_bump(g, r, spatial_ramp, S);
    auto sx = detail::truncated_slice(g, bump, order);
    Localizer L;
    L.omega = r;
    L.eps2 = eps2;
    L.truncation_order = order;
    L.spatial_ramp = spatial_ramp;
    L.bounds = measure_separable(g, r, tau, sx, eps2);
    L.h = PhysicalField(g, 1);
    for (int t = 0; t < g.nt; ++t) {
        double a0 = tau(g.time(t));
        double* row = L.h.at(0, t);
        for (std::size_t p = 0; p < sx.h.size(); ++p) row[p] = a0 * sx.h[p];
    }
    return L;
}

inline Localizer build_localizer(const Region& r, double eps2, const GridSpec& g, const LocalizerOptions& opt = {}) {
    g.validate();
    if (!(eps2 > 0.0 && eps2 < 0.25)) throw Error(ErrorKind::PreconditionViolation, "eps2 must lie in (0, 1/4)");
    const double margin = 2.0 * g.dt();
    if (r.t0 < margin || r.t1 > g.T - margin || r.t1 <= r.t0)
        throw Error(ErrorKind::PreconditionViolation, "region must sit inside (0,T) with a two-cell margin");
    if (r.shape == Region::Shape::full) {
        Localizer L = make_localizer(r, g, 0.0, 0, eps2, opt);
        if (!L.bounds.holds(eps2))
            throw Error(ErrorKind::TruncationSearchExhausted, "temporal profile alone violates the localizer bounds");
        return L;
    }
    std::vector<double> ramps = opt.spatial_ramps;
    if (ramps.empty()) {
        double size = r.shape == Region::Shape::ball ? r.radius : 0.5 * (r.hi - r.lo).minCoeff();
        for (int i = 1; i <= 12; ++i) ramps.push_back(size * i / 12.0);
    }
    LocalizerBounds best;
    double best_score = 1e300;
    for (double w : ramps) {
        for (int order = 1; order < g.nx / 2; ++order) {
            Localizer L = make_localizer(r, g, w, order, eps2, opt);
            if (L.bounds.holds(eps2)) return L;
            const auto& b = L.bounds;
            double score = std::max({(1.0 - eps2) - b.plateau_fraction, b.exterior_h - eps2, b.exterior_dh - eps2,
                                     b.exterior_d2h - eps2, -eps2 - b.min, b.max - 1.0 - eps2});
            if (score < best_score) {
                best_score = score;
                best = b;
            }
        }
    }
    throw Error(ErrorKind::TruncationSearchExhausted,
                "closest candidate: plateau " + std::to_string(best.plateau_fraction) + ", exterior |h| " +
                    std::to_string(best.exterior_h) + ", |Dh| " + std::to_string(best.exterior_dh) + ", |D2h| " +
                    std::to_string(best.exterior_d2h));
}

// ---- directions, lattice frequencies, coefficients -----------------------------------

struct WaveDirection {
    double theta0 = 1.0;
    Vec xi0;
    Vec q0;
    RegularPatch patch;
};

struct LatticeFrequency {
    Vec xi;
    std::vector<int> k;
    double error = 0.0;
};

inline LatticeFrequency select_frequency(const Vec& xi0, double delta, int nx) {
    if (!(delta > 0.0)) throw Error(ErrorKind::PreconditionViolation, "delta must be positive");
    LatticeFrequency lf;
    const int n = static_cast<int>(xi0.size());
    lf.k.resize(n);
    lf.xi.resize(n);
    bool nonzero = false;
    for (int i = 0; i < n; ++i) {
        double v = std::round(xi0(i) / delta * two_pi);
        if (std::abs(v) >= nx / 2) throw Error(ErrorKind::GridOverflow, "mode exceeds N_x/2; delta too small for the grid");
        lf.k[i] = static_cast<int>(v);
        nonzero = nonzero || lf.k[i] != 0;
        lf.xi(i) = delta * v / two_pi;
    }
    if (!nonzero) throw Error(ErrorKind::DegenerateDirection, "delta too large: frequency rounds to zero");
    lf.error = (lf.xi - xi0).norm();
    return lf;
}

struct CoefficientSolution {
    Vec d;                 // d(0) = d_1 multiplies the time phase; d(i) for the D_i potentials
    std::vector<int> perm; // perm[0] is the coordinate playing x_1
    double determinant = 0.0;
    double closed_form = 0.0;
    double residual = 0.0;
    Mat system;
};

// columns: (-theta0 kappa_i)_i and -kappa_i e_1 + kappa_1 e_i, in permuted coordinates
inline CoefficientSolution solve_coefficients(double theta0, const Vec& xi, const Vec& q0) {
    if (theta0 == 0.0) throw Error(ErrorKind::PreconditionViolation, "theta0 must be nonzero");
    const int n = static_cast<int>(xi.size());
    CoefficientSolution sol;
    sol.perm.resize(n);
    for (int i = 0; i < n; ++i) sol.perm[i] = i;
    int lead = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(xi(i)) > std::abs(xi(lead))) lead = i;
    std::swap(sol.perm[0], sol.perm[lead]);
    Vec kap(n), q(n);
    for (int i = 0; i < n; ++i) {
        kap(i) = xi(sol.perm[i]);
        q(i) = q0(sol.perm[i]);
    }
    if (kap(0) == 0.0) throw Error(ErrorKind::DegenerateDirection, "kappa_1 = 0 after permutation");
    Mat A = Mat::Zero(n, n);
    A.col(0) = -theta0 * kap;
    for (int i = 1; i < n; ++i) {
        A(0, i) = -kap(i);
        A(i, i) = kap(0);
    }
    sol.system = A;
    sol.d = A.partialPivLu().solve(q);
    sol.residual = (A * sol.d - q).norm();
    sol.determinant = A.determinant();
    sol.closed_form = -theta0 * std::pow(kap(0), n - 2) * xi.squaredNorm();
    return sol;
}

// ---- wave assembly -------------------------------------------------------------------

struct WaveSpec {
    double theta0 = 1.0;
    std::vector<int> k;  // integer lattice mode
    double delta = 1.0;
    Vec q0;
    double phase_offset = 0.0;
};

// exact discrete assembly: Z = theta' D_1(psi) + sum d_i D_i(phi), u = m(k) theta-hat.
// cone != nullptr confines the potentials' spectra before differentiation.
inline PhysicalField assemble_wave(const GridSpec& g, const MultiplierSymbol& sym, const MultiplierTable& mtab,
                                   const WaveSpec& w, const WaveProfile& prof, const PhysicalField& h,
                                   const std::vector<char>* cone, TimeScheme scheme, CoefficientSolution* sol_out = nullptr) {
    const int n = g.n;
    Vec kv(n);
    for (int i = 0; i < n; ++i) kv(i) = w.k[i];
    Vec xi = w.delta * kv / two_pi;
    const double thp = w.theta0 / xi.squaredNorm();
    CoefficientSolution sol = solve_coefficients(thp, xi, w.q0);
    if (sol_out) *sol_out = sol;
    const double d1 = sol.d(0);

    const std::size_t S = g.spatial();
    std::vector<cplx> xphase(S);
    for (std::size_t p = 0; p < S; ++p) xphase[p] = std::polar(1.0, kv.dot(position(g, p)));
    std::vector<cplx> cF(prof.order), cFp(prof.order);
    for (int m = 1; m <= prof.order; ++m) {
        cF[m - 1] = prof.coefficient(m, -2);
        cFp[m - 1] = prof.coefficient(m, -1);
    }
    PhysicalField pot(g, 2);
    for (int t = 0; t < g.nt; ++t) {
        cplx tphase = std::polar(1.0, two_pi * (d1 * g.time(t) / w.delta + w.phase_offset));
        const double* hr = h.at(0, t);
        double* ps = pot.at(0, t);
        double* ph = pot.at(1, t);
        for (std::size_t p = 0; p < S; ++p) {
            if (hr[p] == 0.0) {
                ps[p] = ph[p] = 0.0;
                continue;
            }
            cplx z = tphase * xphase[p], zm = 1.0;
            double F = 0.0, Fp = 0.0;
            for (int m = 0; m < prof.order; ++m) {
                zm *= z;
                F += std::real(cF[m] * zm);
                Fp += std::real(cFp[m] * zm);
            }
            ps[p] = 2.0 * w.delta * w.delta * F * hr[p];
            ph[p] = 2.0 * w.delta * Fp * hr[p];
        }
    }
    SpectralField ps = to_spectral(pot);
    const auto& mt = modes(g);
    multiply_modes(ps, [&](std::size_t f) {
        bool keep = mt.retained[f] && f != 0 && (!cone || (*cone)[f]);
        return cplx(keep ? 1.0 : 0.0);
    });
    SpectralField dps = time_derivative(channel(ps, 0), scheme);

    SpectralField out(g, 2 * n + 1);
    const std::size_t H = g.half();
    const int p1 = sol.perm[0];
    const cplx unit_factor = sym.imaginary ? cplx(0.0, 1.0) : cplx(1.0, 0.0);
    for (int t = 0; t < g.nt; ++t) {
        const cplx* psi = ps.at(0, t);
        const cplx* phi = ps.at(1, t);
        const cplx* dpsi = dps.at(0, t);
        cplx* th = out.at(0, t);
        for (std::size_t f = 0; f < H; ++f) {
            double k2 = 0.0;
            for (int d = 0; d < n; ++d) k2 += double(mt.k[f][d]) * mt.k[f][d];
            th[f] = -thp * k2 * psi[f];
            for (int d = 0; d < n; ++d) out.at(1 + d, t)[f] = -thp * cplx(0.0, mt.k[f][d]) * dpsi[f];
            for (int i = 1; i < n; ++i) {
                const int pi_ = sol.perm[i];
                out.at(1 + p1, t)[f] += sol.d(i) * (-cplx(0.0, mt.k[f][pi_])) * phi[f];
                out.at(1 + pi_, t)[f] += sol.d(i) * cplx(0.0, mt.k[f][p1]) * phi[f];
            }
            if (f != 0 && mtab.singular[f] && std::abs(th[f]) > 0.0)
                throw Error(ErrorKind::SingularSupport, "wave spectrum touches the singular set of " + sym.name);
            for (int d = 0; d < n; ++d) out.at(1 + n + d, t)[f] = f == 0 ? cplx(0.0) : unit_factor * mtab.m[f * n + d] * th[f];
        }
    }
    return to_physical(out);
}

struct WaveOptions {
    TimeScheme scheme = TimeScheme::fourth_order;
    int truncation_order = 0;        // 0: smallest order meeting the plateau measures (build_profile)
    double eps1 = 0.0;               // 0: eps / 2
    double cone_width = 0.2;         // half-width (radians) of the confinement cone around +-xi0
    bool confine = true;
    double phase_offset = 0.0;
    bool enforce = true;
    double tol_div = 1e-8;
    double dwell_slack = 0.0;        // relative slack on the dwell bounds
};

struct WaveReport {
    double delta = 0.0;
    std::vector<int> k;
    int truncation_order = 0;
    double dwell_plus = 0.0;   // fraction of Omega near lambda L
    double dwell_minus = 0.0;  // fraction of Omega near -(1 - lambda) L
    double dwell_plus_bound = 0.0, dwell_minus_bound = 0.0;
    double segment_distance = 0.0;
    double sup_outside = 0.0;
    double div_residual = 0.0;
    double cone_fraction = 0.0;
    double frozen_error = 0.0;
    double determinant = 0.0, determinant_closed = 0.0;
    Vec d;
};

struct WaveResult {
    StateField Z;
    WaveReport report;
};

inline double distance_to_segment(const Vec& z, const Vec& a, const Vec& b) {
    Vec ab = b - a;
    double s = ab.squaredNorm() > 0 ? std::clamp((z - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.0;
    return (z - a - s * ab).norm();
}

inline WaveResult build_wave(const WaveDirection& L, const Localizer& loc, double lambda, double eps, double delta,
                             const GridSpec& g, SymbolPtr sym, const WaveOptions& opt = {}) {
    g.validate();
    if (L.theta0 == 0.0) throw Error(ErrorKind::PreconditionViolation, "wave cone requires theta0 != 0");
    if (!(lambda > 0.0 && lambda < 1.0) || !(eps > 0.0 && eps < 1.0))
        throw Error(ErrorKind::PreconditionViolation, "lambda and eps must lie in (0,1)");
    if (!in_patch(L.patch, L.xi0, 1e-12)) throw Error(ErrorKind::PreconditionViolation, "xi0 outside its patch");
    const int n = g.n;
    LatticeFrequency lf = select_frequency(L.xi0, delta, g.nx);
    int kmax = 0;
    for (int v : lf.k) kmax = std::max(kmax, std::abs(v));

    WaveProfile prof;
    const double eps1 = opt.eps1 > 0.0 ? opt.eps1 : 0.5 * eps;
    if (opt.truncation_order > 0) prof = profile_at_order(lambda, opt.truncation_order, std::min(eps1, 0.999 * std::min(lambda, 1 - lambda)));
    else prof = build_profile(lambda, std::min(eps1, 0.999 * std::min(lambda, 1 - lambda)));
    if (prof.order * kmax >= g.nx / 2)
        throw Error(ErrorKind::GridOverflow, "truncation order times mode exceeds N_x/2");

    std::vector<RegularPatch> cones{{unit(L.xi0), opt.cone_width, 0.0}};
    std::vector<char> cmask = cone_mask(g, cones);
    MultiplierTable mtab = multiplier_table(g, *sym);
    WaveSpec ws{L.theta0, lf.k, delta, L.q0, opt.phase_offset};
    CoefficientSolution sol;
    WaveResult res;
    res.Z = StateField(g, sym);
    res.Z.data = assemble_wave(g, *sym, mtab, ws, prof, loc.h, opt.confine ? &cmask : nullptr, opt.scheme, &sol);

    WaveReport& r = res.report;
    r.delta = delta;
    r.k = lf.k;
    r.truncation_order = prof.order;
    r.d = sol.d;
    r.determinant = sol.determinant;
    r.determinant_closed = sol.closed_form;
    Vec m0 = sym->eval(L.xi0);
    Vec Lv(2 * n + 1);
    Lv(0) = L.theta0;
    Lv.segment(1, n) = L.q0;
    Lv.segment(1 + n, n) = L.theta0 * m0;
    const Vec plus = lambda * Lv, minus = -(1.0 - lambda) * Lv;

    Vec kv(n);
    for (int i = 0; i < n; ++i) kv(i) = lf.k[i];
    std::size_t inside = 0, np = 0, nm = 0;
    for (int t = 0; t < g.nt; ++t) {
        const double tt = g.time(t);
        const double phase_t = sol.d(0) * tt / delta + opt.phase_offset;
        for (std::size_t p = 0; p < g.spatial(); ++p) {
            Vec x = position(g, p);
            Vec z = res.Z.value(t, p);
            double hv = loc.h(0, t, p);
            double fv = prof.eval(phase_t + kv.dot(x) / two_pi);
            for (int d = 0; d < n; ++d)
                r.frozen_error = std::max(r.frozen_error, std::abs(z(1 + n + d) - L.theta0 * m0(d) * fv * hv));
            if (loc.omega.contains(tt, x)) {
                ++inside;
                if ((z - plus).norm() < eps) ++np;
                if ((z - minus).norm() < eps) ++nm;
                r.segment_distance = std::max(r.segment_distance, distance_to_segment(z, minus, plus));
            } else {
                r.sup_outside = std::max(r.sup_outside, z.norm());
            }
        }
    }
    r.dwell_plus = inside ? double(np) / inside : 0.0;
    r.dwell_minus = inside ? double(nm) / inside : 0.0;
    r.dwell_plus_bound = (1.0 - lambda) * (1.0 - eps) * (1.0 - opt.dwell_slack);
    r.dwell_minus_bound = lambda * (1.0 - eps) * (1.0 - opt.dwell_slack);
    r.div_residual = divergence_residual_relative(res.Z, opt.scheme);
    SpectralField zs = to_spectral(res.Z.data);
    SpectralField thu(g, 1 + n);
    for (int c = 0; c < 1 + n; ++c) {
        int src = c == 0 ? 0 : 1 + n + (c - 1);
        std::copy(zs.at(src, 0), zs.at(src, 0) + zs.slice() * g.nt, thu.at(c, 0));
    }
    r.cone_fraction = support_cone_check(thu, cones).fraction_inside;

    if (opt.enforce) {
        if (r.div_residual > opt.tol_div) throw PropertyError("divergence", r.div_residual, opt.tol_div);
        if (r.sup_outside > eps) throw PropertyError("sup_outside", r.sup_outside, eps);
        if (r.segment_distance > eps) throw PropertyError("segment_distance", r.segment_distance, eps);
        if (r.dwell_plus < r.dwell_plus_bound) throw PropertyError("dwell_plus", r.dwell_plus, r.dwell_plus_bound);
        if (r.dwell_minus < r.dwell_minus_bound) throw PropertyError("dwell_minus", r.dwell_minus, r.dwell_minus_bound);
        if (opt.confine && r.cone_fraction < 1.0 - 1e-9) throw PropertyError("cone_fraction", r.cone_fraction, 1.0 - 1e-9);
    }
    return res;
}

inline std::string wave_csv_header() { return "delta,dwell_plus,dwell_minus,div_residual,frozen_error,cone_fraction"; }

inline std::string wave_csv_row(const WaveReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.delta, r.dwell_plus, r.dwell_minus,
                  r.div_residual, r.frozen_error, r.cone_fraction);
    return buf;
}

}
