#pragma once

#include "symbols.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>

namespace wildscalar {

using cplx = std::complex<double>;

struct GridSpec {
    int n = 2;
    int nx = 64;
    int nt = 64;
    double T = 1.0;
    bool dealias = false;

    void validate() const {
        if (n < 2 || n > 3) throw Error(ErrorKind::ShapeMismatch, "grid dimension must be 2 or 3");
        if (nx < 4 || nx % 2 != 0 || (nx & (nx - 1)) != 0)
            throw Error(ErrorKind::ShapeMismatch, "N_x must be a power of two >= 4");
        if (nt < 2) throw Error(ErrorKind::ShapeMismatch, "N_t must be >= 2");
        if (!(T > 0.0)) throw Error(ErrorKind::ShapeMismatch, "T must be positive");
    }

    // transforms also run on single-slice scratch grids
    void validate_layout() const {
        if (n < 2 || n > 3 || nx < 4 || (nx & (nx - 1)) != 0 || nt < 1)
            throw Error(ErrorKind::ShapeMismatch, "grid layout not transformable");
    }

    std::size_t spatial() const {
        std::size_t s = 1;
        for (int i = 0; i < n; ++i) s *= nx;
        return s;
    }
    std::size_t half() const { return spatial() / nx * (nx / 2 + 1); }
    double dt() const { return T / nt; }
    double time(int j) const { return (j + 0.5) * dt(); }
    double dx() const { return two_pi / nx; }

    bool operator==(const GridSpec& o) const {
        return n == o.n && nx == o.nx && nt == o.nt && T == o.T && dealias == o.dealias;
    }
};

enum class TimeScheme { spectral, fourth_order };

// integer wavevectors of the r2c layout plus the Hermitian weight of each stored mode
struct ModeTable {
    std::vector<std::array<int, 3>> k;
    std::vector<double> weight;
    std::vector<char> retained;
};

inline const ModeTable& modes(const GridSpec& g) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, bool>, std::unique_ptr<ModeTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(g.n, g.nx, g.dealias);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto t = std::make_unique<ModeTable>();
    const int nx = g.nx, nh = nx / 2 + 1;
    const std::size_t H = g.half();
    t->k.resize(H);
    t->weight.resize(H);
    t->retained.resize(H);
    auto wrap = [nx](int i) { return i < nx / 2 ? i : i - nx; };
    for (std::size_t f = 0; f < H; ++f) {
        std::array<int, 3> k{0, 0, 0};
        int j = static_cast<int>(f % nh);
        std::size_t rest = f / nh;
        k[g.n - 1] = j;
        for (int d = g.n - 2; d >= 0; --d) {
            k[d] = wrap(static_cast<int>(rest % nx));
            rest /= nx;
        }
        t->k[f] = k;
        t->weight[f] = (j == 0 || j == nx / 2) ? 1.0 : 2.0;
        bool keep = true;
        for (int d = 0; d < g.n; ++d) {
            if (std::abs(k[d]) >= nx / 2) keep = false;
            if (g.dealias && 3 * std::abs(k[d]) > nx) keep = false;
        }
        t->retained[f] = keep;
    }
    return *(cache[key] = std::move(t));
}

inline Vec mode_vec(const ModeTable& mt, std::size_t f, int n) {
    Vec v(n);
    for (int d = 0; d < n; ++d) v(d) = mt.k[f][d];
    return v;
}

// cached FFTW plans; execution through the new-array interface is thread safe
class FftPlans {
public:
    static FftPlans& get(const GridSpec& g) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<FftPlans>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(g.n, g.nx);
        auto it = cache.find(key);
        if (it != cache.end()) return *it->second;
        return *(cache[key] = std::unique_ptr<FftPlans>(new FftPlans(g)));
    }

    void forward(const double* in, cplx* out) const {
        // r2c plans may not overwrite the input, but FFTW wants non-const pointers
        fftw_execute_dft_r2c(r2c_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
    }
    void backward(cplx* in, double* out) const {
        fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(in), out);
    }

    ~FftPlans() {
        fftw_destroy_plan(r2c_);
        fftw_destroy_plan(c2r_);
    }

private:
    explicit FftPlans(const GridSpec& g) {
        std::vector<int> dims(g.n, g.nx);
        double* r = fftw_alloc_real(g.spatial());
        fftw_complex* c = fftw_alloc_complex(g.half());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        r2c_ = fftw_plan_dft_r2c(g.n, dims.data(), r, c, flags);
        c2r_ = fftw_plan_dft_c2r(g.n, dims.data(), c, r, flags | FFTW_PRESERVE_INPUT);
        if (!c2r_) c2r_ = fftw_plan_dft_c2r(g.n, dims.data(), c, r, flags);
        fftw_free(r);
        fftw_free(c);
    }

    fftw_plan r2c_ = nullptr;
    fftw_plan c2r_ = nullptr;
};

// complex transform along time for `howmany` interleaved series (stride howmany)
class TimePlans {
public:
    static TimePlans& get(int nt, int howmany) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<TimePlans>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(nt, howmany);
        auto it = cache.find(key);
        if (it != cache.end()) return *it->second;
        return *(cache[key] = std::unique_ptr<TimePlans>(new TimePlans(nt, howmany)));
    }

    void forward(cplx* in, cplx* out) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(in), reinterpret_cast<fftw_complex*>(out));
    }
    void backward(cplx* in, cplx* out) const {
        fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(in), reinterpret_cast<fftw_complex*>(out));
    }

    ~TimePlans() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

private:
    TimePlans(int nt, int howmany) {
        fftw_complex* a = fftw_alloc_complex(static_cast<std::size_t>(nt) * howmany);
        fftw_complex* b = fftw_alloc_complex(static_cast<std::size_t>(nt) * howmany);
        int dims[1] = {nt};
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_many_dft(1, dims, howmany, a, nullptr, howmany, 1, b, nullptr, howmany, 1, FFTW_FORWARD, flags);
        bwd_ = fftw_plan_many_dft(1, dims, howmany, a, nullptr, howmany, 1, b, nullptr, howmany, 1, FFTW_BACKWARD, flags);
        fftw_free(a);
        fftw_free(b);
    }

    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

// real samples, channel-major: data[((c * nt + t) * S) + x]
struct PhysicalField {
    GridSpec grid;
    int channels = 1;
    std::vector<double> data;

    PhysicalField() = default;
    PhysicalField(const GridSpec& g, int c, double fill = 0.0)
        : grid(g), channels(c), data(static_cast<std::size_t>(c) * g.nt * g.spatial(), fill) {}

    std::size_t slice() const { return grid.spatial(); }
    double* at(int c, int t) { return data.data() + (static_cast<std::size_t>(c) * grid.nt + t) * slice(); }
    const double* at(int c, int t) const { return data.data() + (static_cast<std::size_t>(c) * grid.nt + t) * slice(); }
    double& operator()(int c, int t, std::size_t x) { return at(c, t)[x]; }
    double operator()(int c, int t, std::size_t x) const { return at(c, t)[x]; }
};

// spatial Fourier coefficients per time sample, same channel-major layout over the r2c half grid
struct SpectralField {
    GridSpec grid;
    int channels = 1;
    std::vector<cplx> data;

    SpectralField() = default;
    SpectralField(const GridSpec& g, int c) : grid(g), channels(c), data(static_cast<std::size_t>(c) * g.nt * g.half()) {}

    std::size_t slice() const { return grid.half(); }
    cplx* at(int c, int t) { return data.data() + (static_cast<std::size_t>(c) * grid.nt + t) * slice(); }
    const cplx* at(int c, int t) const { return data.data() + (static_cast<std::size_t>(c) * grid.nt + t) * slice(); }
};

// physical position of flat index p
inline Vec position(const GridSpec& g, std::size_t p) {
    Vec x(g.n);
    for (int d = g.n - 1; d >= 0; --d) {
        x(d) = g.dx() * static_cast<double>(p % g.nx);
        p /= g.nx;
    }
    return x;
}

inline SpectralField to_spectral(const PhysicalField& f) {
    f.grid.validate_layout();
    if (f.data.size() != static_cast<std::size_t>(f.channels) * f.grid.nt * f.grid.spatial())
        throw Error(ErrorKind::ShapeMismatch, "physical array does not match grid");
    SpectralField s(f.grid, f.channels);
    const auto& plans = FftPlans::get(f.grid);
    const double norm = 1.0 / static_cast<double>(f.grid.spatial());
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < f.grid.nt; ++t) {
            plans.forward(f.at(c, t), s.at(c, t));
            cplx* row = s.at(c, t);
            for (std::size_t k = 0; k < s.slice(); ++k) row[k] *= norm;
        }
    return s;
}

inline PhysicalField to_physical(const SpectralField& s) {
    s.grid.validate_layout();
    if (s.data.size() != static_cast<std::size_t>(s.channels) * s.grid.nt * s.grid.half())
        throw Error(ErrorKind::ShapeMismatch, "spectral array does not match grid");
    PhysicalField f(s.grid, s.channels);
    const auto& plans = FftPlans::get(s.grid);
    std::vector<cplx> buf(s.slice());
    for (int c = 0; c < s.channels; ++c)
        for (int t = 0; t < s.grid.nt; ++t) {
            std::copy(s.at(c, t), s.at(c, t) + s.slice(), buf.begin());
            plans.backward(buf.data(), f.at(c, t));
        }
    return f;
}

// multiply every channel by g(f) where f is the flat mode index
template <class Fn>
void multiply_modes(SpectralField& s, Fn&& fn) {
    const std::size_t H = s.slice();
    std::vector<cplx> factor(H);
    for (std::size_t f = 0; f < H; ++f) factor[f] = fn(f);
    for (int c = 0; c < s.channels; ++c)
        for (int t = 0; t < s.grid.nt; ++t) {
            cplx* row = s.at(c, t);
            for (std::size_t f = 0; f < H; ++f) row[f] *= factor[f];
        }
}

inline void drop_unretained(SpectralField& s) {
    const auto& mt = modes(s.grid);
    multiply_modes(s, [&](std::size_t f) { return cplx(mt.retained[f] ? 1.0 : 0.0); });
}

inline SpectralField enforce_zero_mean(SpectralField s) {
    for (int c = 0; c < s.channels; ++c)
        for (int t = 0; t < s.grid.nt; ++t) s.at(c, t)[0] = 0.0;
    return s;
}

inline SpectralField channel(const SpectralField& s, int c) {
    SpectralField out(s.grid, 1);
    std::copy(s.at(c, 0), s.at(c, 0) + s.slice() * s.grid.nt, out.data.begin());
    return out;
}

inline PhysicalField channel(const PhysicalField& s, int c) {
    PhysicalField out(s.grid, 1);
    std::copy(s.at(c, 0), s.at(c, 0) + s.slice() * s.grid.nt, out.data.begin());
    return out;
}

// Hermitian-weighted energy sum |c|^2 over stored modes, equals mean of |f|^2 (Parseval)
inline double spectral_energy(const SpectralField& s) {
    const auto& mt = modes(s.grid);
    double e = 0.0;
    for (int c = 0; c < s.channels; ++c)
        for (int t = 0; t < s.grid.nt; ++t) {
            const cplx* row = s.at(c, t);
            for (std::size_t f = 0; f < s.slice(); ++f) e += mt.weight[f] * std::norm(row[f]);
        }
    return e;
}

// m(k) for every stored mode; singular or unretained modes flagged
struct MultiplierTable {
    std::vector<double> m;  // H * n
    std::vector<char> singular;
};

inline MultiplierTable multiplier_table(const GridSpec& g, const MultiplierSymbol& sym) {
    if (sym.dim != g.n) throw Error(ErrorKind::ShapeMismatch, "symbol dimension differs from grid dimension");
    const auto& mt = modes(g);
    const std::size_t H = g.half();
    MultiplierTable tab;
    tab.m.assign(H * g.n, 0.0);
    tab.singular.assign(H, 0);
    for (std::size_t f = 1; f < H; ++f) {
        Vec k = mode_vec(mt, f, g.n);
        if (sym.is_singular(k)) {
            tab.singular[f] = 1;
            continue;
        }
        Vec v = sym.raw(k);
        for (int d = 0; d < g.n; ++d) tab.m[f * g.n + d] = v(d);
    }
    return tab;
}

// u-hat = m(k) theta-hat; theta must be a single channel
inline SpectralField apply_multiplier(const SpectralField& theta, const MultiplierSymbol& sym,
                                      const MultiplierTable* table = nullptr) {
    if (theta.channels != 1) throw Error(ErrorKind::ShapeMismatch, "apply_multiplier expects one channel");
    MultiplierTable local;
    if (!table) {
        local = multiplier_table(theta.grid, sym);
        table = &local;
    }
    const auto& mt = modes(theta.grid);
    const int n = theta.grid.n;
    const std::size_t H = theta.slice();
    double total = 0.0, bad = 0.0;
    for (int t = 0; t < theta.grid.nt; ++t) {
        const cplx* row = theta.at(0, t);
        for (std::size_t f = 0; f < H; ++f) {
            double e = mt.weight[f] * std::norm(row[f]);
            total += e;
            if (table->singular[f]) bad += e;
        }
    }
    if (bad > 1e-12 * std::max(total, 1e-300) && bad > 0.0)
        throw Error(ErrorKind::SingularSupport, "theta carries energy on the singular set of " + sym.name);
    SpectralField u(theta.grid, n);
    const cplx unit_factor = sym.imaginary ? cplx(0.0, 1.0) : cplx(1.0, 0.0);
    for (int d = 0; d < n; ++d)
        for (int t = 0; t < theta.grid.nt; ++t) {
            const cplx* in = theta.at(0, t);
            cplx* out = u.at(d, t);
            // Nyquist modes have no well-defined sign of k on the grid: dropped
            for (std::size_t f = 1; f < H; ++f) out[f] = mt.retained[f] ? unit_factor * table->m[f * n + d] * in[f] : 0.0;
            out[0] = 0.0;
        }
    return u;
}

// i k_d applied to every channel
inline SpectralField spatial_derivative(const SpectralField& s, int d) {
    SpectralField out = s;
    const auto& mt = modes(s.grid);
    multiply_modes(out, [&](std::size_t f) { return cplx(0.0, mt.k[f][d]); });
    return out;
}

// time derivative of sampled data, applied along axis t of every (channel, mode) series
inline void time_derivative_inplace(SpectralField& s, TimeScheme scheme) {
    const int nt = s.grid.nt;
    const std::size_t H = s.slice();
    const double dt = s.grid.dt();
    if (scheme == TimeScheme::spectral) {
        const auto& plans = TimePlans::get(nt, static_cast<int>(H));
        std::vector<cplx> buf(static_cast<std::size_t>(nt) * H);
        for (int c = 0; c < s.channels; ++c) {
            cplx* base = s.at(c, 0);
            plans.forward(base, buf.data());
            for (int m = 0; m < nt; ++m) {
                int w = m <= nt / 2 ? m : m - nt;
                double omega = (2 * w == nt) ? 0.0 : two_pi * w / s.grid.T;
                cplx fac(0.0, omega / nt);
                for (std::size_t f = 0; f < H; ++f) buf[m * H + f] *= fac;
            }
            plans.backward(buf.data(), base);
        }
        return;
    }
    if (nt < 5) throw Error(ErrorKind::PreconditionViolation, "fourth-order time differences need N_t >= 5");
    static const double c0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
    static const double c1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};
    std::vector<cplx> in(nt), out(nt);
    for (int c = 0; c < s.channels; ++c) {
        cplx* base = s.at(c, 0);
        for (std::size_t f = 0; f < H; ++f) {
            for (int t = 0; t < nt; ++t) in[t] = base[t * H + f];
            for (int t = 2; t < nt - 2; ++t) out[t] = (-in[t + 2] + 8.0 * in[t + 1] - 8.0 * in[t - 1] + in[t - 2]) / 12.0;
            out[0] = out[1] = out[nt - 1] = out[nt - 2] = 0.0;
            for (int i = 0; i < 5; ++i) {
                out[0] += c0[i] * in[i] / 12.0;
                out[1] += c1[i] * in[i] / 12.0;
                out[nt - 1] -= c0[i] * in[nt - 1 - i] / 12.0;
                out[nt - 2] -= c1[i] * in[nt - 1 - i] / 12.0;
            }
            for (int t = 0; t < nt; ++t) base[t * H + f] = out[t] / dt;
        }
    }
}

inline SpectralField time_derivative(SpectralField s, TimeScheme scheme) {
    time_derivative_inplace(s, scheme);
    return s;
}

// channel layout of a state: theta, q_1..q_n, u_1..u_n
struct StateField {
    SymbolPtr symbol;
    PhysicalField data;

    StateField() = default;
    StateField(const GridSpec& g, SymbolPtr sym) : symbol(std::move(sym)), data(g, 2 * g.n + 1) {}

    const GridSpec& grid() const { return data.grid; }
    int n() const { return data.grid.n; }
    static int theta_channel() { return 0; }
    int q_channel(int d) const { return 1 + d; }
    int u_channel(int d) const { return 1 + n() + d; }

    Vec value(int t, std::size_t x) const {
        Vec v(2 * n() + 1);
        for (int c = 0; c < v.size(); ++c) v(c) = data(c, t, x);
        return v;
    }
};

// row 1: d_t theta + div_x q; row 2: div_x u
inline PhysicalField spacetime_divergence(const StateField& U, TimeScheme scheme) {
    const GridSpec& g = U.grid();
    if (g.nt < 4) throw Error(ErrorKind::PreconditionViolation, "time differentiation needs N_t >= 4");
    SpectralField s = to_spectral(U.data);
    const auto& mt = modes(g);
    const std::size_t H = g.half();
    SpectralField dth = time_derivative(channel(s, 0), scheme);
    SpectralField res(g, 2);
    for (int t = 0; t < g.nt; ++t) {
        cplx* r1 = res.at(0, t);
        cplx* r2 = res.at(1, t);
        const cplx* th = dth.at(0, t);
        for (std::size_t f = 0; f < H; ++f) {
            cplx a = th[f], b = 0.0;
            for (int d = 0; d < g.n; ++d) {
                cplx ik(0.0, mt.k[f][d]);
                a += ik * s.at(U.q_channel(d), t)[f];
                b += ik * s.at(U.u_channel(d), t)[f];
            }
            r1[f] = a;
            r2[f] = b;
        }
    }
    return to_physical(res);
}

inline double sup_norm(const PhysicalField& f, int c = -1) {
    double m = 0.0;
    if (c < 0) {
        for (double v : f.data) m = std::max(m, std::abs(v));
        return m;
    }
    const double* p = f.at(c, 0);
    for (std::size_t i = 0; i < f.slice() * f.grid.nt; ++i) m = std::max(m, std::abs(p[i]));
    return m;
}

// divergence residual relative to the size of the terms it balances
inline double divergence_residual_relative(const StateField& U, TimeScheme scheme) {
    PhysicalField r = spacetime_divergence(U, scheme);
    const GridSpec& g = U.grid();
    SpectralField s = to_spectral(U.data);
    double scale = sup_norm(to_physical(time_derivative(channel(s, 0), scheme)));
    for (int d = 0; d < g.n; ++d) {
        scale = std::max(scale, sup_norm(to_physical(spatial_derivative(channel(s, U.q_channel(d)), d))));
        scale = std::max(scale, sup_norm(to_physical(spatial_derivative(channel(s, U.u_channel(d)), d))));
    }
    double res = sup_norm(r);
    if (scale == 0.0) return res;
    return res / scale;
}

inline bool direction_in_cones(const Vec& k, const std::vector<RegularPatch>& cones) {
    for (const auto& p : cones) {
        double a = angle_between(p.center, k);
        if (a <= p.angular_radius || pi - a <= p.angular_radius) return true;
    }
    return false;
}

struct ConeReport {
    double fraction_inside = 1.0;
    double energy = 0.0;
};

// energy_floor is relative to the field's total energy
inline ConeReport support_cone_check(const SpectralField& s, const std::vector<RegularPatch>& cones,
                                     double energy_floor = 1e-12) {
    const auto& mt = modes(s.grid);
    const std::size_t H = s.slice();
    std::vector<char> inside(H, 0);
    for (std::size_t f = 1; f < H; ++f) inside[f] = direction_in_cones(mode_vec(mt, f, s.grid.n), cones);
    double total = 0.0;
    for (int c = 0; c < s.channels; ++c)
        for (int t = 0; t < s.grid.nt; ++t) {
            const cplx* row = s.at(c, t);
            for (std::size_t f = 1; f < H; ++f) total += mt.weight[f] * std::norm(row[f]);
        }
    ConeReport rep;
    rep.energy = total;
    if (total == 0.0) return rep;
    const double floor = energy_floor * total;
    double counted = 0.0, in = 0.0;
    for (int c = 0; c < s.channels; ++c)
        for (int t = 0; t < s.grid.nt; ++t) {
            const cplx* row = s.at(c, t);
            for (std::size_t f = 1; f < H; ++f) {
                double e = mt.weight[f] * std::norm(row[f]);
                if (e <= floor) continue;
                counted += e;
                if (inside[f]) in += e;
            }
        }
    rep.fraction_inside = counted > 0.0 ? in / counted : 1.0;
    return rep;
}

inline std::vector<char> cone_mask(const GridSpec& g, const std::vector<RegularPatch>& cones) {
    const auto& mt = modes(g);
    std::vector<char> m(g.half(), 0);
    for (std::size_t f = 1; f < m.size(); ++f) m[f] = direction_in_cones(mode_vec(mt, f, g.n), cones);
    return m;
}

// spatial Gaussian smoothing exp(-sigma^2 |k|^2 / 2), sigma in radians
inline PhysicalField mollify(const PhysicalField& f, double sigma) {
    SpectralField s = to_spectral(f);
    const auto& mt = modes(f.grid);
    multiply_modes(s, [&](std::size_t i) {
        double k2 = 0.0;
        for (int d = 0; d < f.grid.n; ++d) k2 += double(mt.k[i][d]) * mt.k[i][d];
        return cplx(std::exp(-0.5 * sigma * sigma * k2));
    });
    return to_physical(s);
}

// Gaussian smoothing along t (width in time units), zero beyond the sampled interval
inline PhysicalField mollify_time(const PhysicalField& f, double sigma) {
    if (!(sigma > 0.0)) return f;
    const GridSpec& g = f.grid;
    const int r = static_cast<int>(std::ceil(4.0 * sigma / g.dt()));
    std::vector<double> w(2 * r + 1);
    double sum = 0.0;
    for (int j = -r; j <= r; ++j) sum += w[j + r] = std::exp(-0.5 * std::pow(j * g.dt() / sigma, 2));
    for (double& v : w) v /= sum;
    PhysicalField out(g, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < g.nt; ++t) {
            double* o = out.at(c, t);
            for (int j = -r; j <= r; ++j) {
                const int tt = t + j;
                if (tt < 0 || tt >= g.nt) continue;
                const double* src = f.at(c, tt);
                for (std::size_t x = 0; x < f.slice(); ++x) o[x] += w[j + r] * src[x];
            }
        }
    return out;
}

// ---- WSF1 field files ------------------------------------------------------------------
// "WSF1", u32 n, u32 N_x, u32 N_t, f64 T, u32 channels, then f64 samples ordered (t, x_1..x_n, channel)

inline void write_wsf1(const PhysicalField& f, const std::string& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error(ErrorKind::IoError, "cannot write " + path);
    o.write("WSF1", 4);
    detail::put_u32(o, f.grid.n);
    detail::put_u32(o, f.grid.nx);
    detail::put_u32(o, f.grid.nt);
    detail::put_f64(o, f.grid.T);
    detail::put_u32(o, f.channels);
    for (int t = 0; t < f.grid.nt; ++t)
        for (std::size_t x = 0; x < f.slice(); ++x)
            for (int c = 0; c < f.channels; ++c) detail::put_f64(o, f(c, t, x));
    if (!o) throw Error(ErrorKind::IoError, "write failed: " + path);
}

inline PhysicalField read_wsf1(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "WSF1") throw Error(ErrorKind::IoError, "not a WSF1 file: " + path);
    GridSpec g;
    g.n = static_cast<int>(detail::get_u32(in));
    g.nx = static_cast<int>(detail::get_u32(in));
    g.nt = static_cast<int>(detail::get_u32(in));
    g.T = detail::get_f64(in);
    int channels = static_cast<int>(detail::get_u32(in));
    g.validate();
    PhysicalField f(g, channels);
    for (int t = 0; t < g.nt; ++t)
        for (std::size_t x = 0; x < f.slice(); ++x)
            for (int c = 0; c < channels; ++c) f(c, t, x) = detail::get_f64(in);
    return f;
}

}
