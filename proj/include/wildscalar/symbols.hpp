#pragma once

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>

namespace wildscalar {

// m : R^n \ {0} -> R^n. For sqg the true symbol is i times `raw`; `imaginary` marks that.
struct MultiplierSymbol {
    std::string name;
    int dim = 2;
    std::function<Vec(const Vec&)> raw;
    // angular distance-like measure to the singular set; <= 0 means singular
    std::function<double(const Vec&)> singular_gap;
    std::string singular_set_description = "none";
    bool declared_even = true;
    bool imaginary = false;

    bool is_singular(const Vec& xi) const {
        return singular_gap && singular_gap(xi) <= 1e-14;
    }

    Vec eval(const Vec& xi) const {
        if (xi.size() != dim) throw Error(ErrorKind::ShapeMismatch, name + ": frequency has wrong dimension");
        if (xi.norm() == 0.0) throw Error(ErrorKind::ZeroFrequency, name + ": xi = 0");
        if (is_singular(xi)) throw Error(ErrorKind::SingularFrequency, name + ": xi in " + singular_set_description);
        return raw(xi);
    }

    double gap(const Vec& xi) const { return singular_gap ? singular_gap(xi) : 1.0; }
};

using SymbolPtr = std::shared_ptr<const MultiplierSymbol>;

inline MultiplierSymbol make_pm2d() {
    MultiplierSymbol s;
    s.name = "pm2d";
    s.dim = 2;
    s.raw = [](const Vec& x) {
        double r = x.squaredNorm();
        Vec m(2);
        m << x(0) * x(1) / r, -x(0) * x(0) / r;
        return m;
    };
    return s;
}

inline MultiplierSymbol make_pm3d() {
    MultiplierSymbol s;
    s.name = "pm3d";
    s.dim = 3;
    s.raw = [](const Vec& x) {
        double r = x.squaredNorm();
        Vec m(3);
        m << x(0) * x(2) / r, x(1) * x(2) / r, -(x(0) * x(0) + x(1) * x(1)) / r;
        return m;
    };
    return s;
}

inline MultiplierSymbol make_mg() {
    MultiplierSymbol s;
    s.name = "mg";
    s.dim = 3;
    s.raw = [](const Vec& x) {
        const double x1 = x(0), x2 = x(1), x3 = x(2);
        const double r = x.squaredNorm();
        const double D = x3 * x3 * r + x2 * x2 * x2 * x2;
        Vec m(3);
        m << (x2 * x3 * r + x1 * x2 * x2 * x3) / D,
             (-x1 * x3 * r + x2 * x2 * x2 * x3) / D,
             -x2 * x2 * (x1 * x1 + x2 * x2) / D;
        return m;
    };
    s.singular_gap = [](const Vec& x) { return std::hypot(x(1), x(2)) / x.norm(); };
    s.singular_set_description = "xi2 = xi3 = 0 (the xi1-axis)";
    return s;
}

inline MultiplierSymbol make_sqg() {
    MultiplierSymbol s;
    s.name = "sqg";
    s.dim = 2;
    s.raw = [](const Vec& x) {
        double r = x.norm();
        Vec m(2);
        m << -x(1) / r, x(0) / r;
        return m;
    };
    s.declared_even = false;
    s.imaginary = true;
    return s;
}

inline SymbolPtr builtin(const std::string& name) {
    if (name == "pm2d") return std::make_shared<MultiplierSymbol>(make_pm2d());
    if (name == "pm3d") return std::make_shared<MultiplierSymbol>(make_pm3d());
    if (name == "mg") return std::make_shared<MultiplierSymbol>(make_mg());
    if (name == "sqg") return std::make_shared<MultiplierSymbol>(make_sqg());
    throw Error(ErrorKind::UnknownSymbol, "'" + name + "' (known: pm2d, pm3d, mg, sqg)");
}

// Halton radical inverse
inline double radical_inverse(std::uint64_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

// deterministic quasi-random points on S^{n-1}; n in {2,3}, higher n falls back to a seeded Gaussian
inline std::vector<Vec> sphere_samples(int n, int count, double skip_phase = 0.0) {
    std::vector<Vec> out;
    out.reserve(count);
    std::mt19937_64 rng(0x5eed);
    for (int i = 0; i < count; ++i) {
        Vec v(n);
        if (n == 2) {
            double a = two_pi * std::fmod(radical_inverse(i + 1, 2) + skip_phase, 1.0);
            v << std::cos(a), std::sin(a);
        } else if (n == 3) {
            double z = 1.0 - 2.0 * radical_inverse(i + 1, 2);
            double a = two_pi * radical_inverse(i + 1, 3);
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            v << r * std::cos(a), r * std::sin(a), z;
        } else {
            v = random_unit(n, rng);
        }
        out.push_back(v);
    }
    return out;
}

struct AdmissibilityReport {
    bool even = false;
    bool zero_homogeneous = false;
    bool tangent = false;
    double even_violation = 0.0;
    double homogeneity_violation = 0.0;
    double tangency_violation = 0.0;
    int samples_used = 0;

    bool admissible() const { return even && zero_homogeneous && tangent; }
};

inline AdmissibilityReport check_admissibility(const MultiplierSymbol& s, int sample_count, double tol,
                                               double singular_margin = 0.05) {
    AdmissibilityReport rep;
    auto pts = sphere_samples(s.dim, std::max(sample_count, 1) * 2);
    for (const Vec& xi : pts) {
        if (rep.samples_used >= sample_count) break;
        if (s.gap(xi) < singular_margin) continue;
        Vec m = s.eval(xi);
        Vec mneg = s.eval(-xi);
        rep.even_violation = std::max(rep.even_violation, (m - mneg).norm());
        for (double c : {3.7, 0.31, 17.0}) {
            rep.homogeneity_violation = std::max(rep.homogeneity_violation, (s.eval(c * xi) - m).norm());
        }
        rep.tangency_violation = std::max(rep.tangency_violation, std::abs(m.dot(xi)));
        ++rep.samples_used;
    }
    rep.even = rep.even_violation <= tol && s.declared_even;
    rep.zero_homogeneous = rep.homogeneity_violation <= tol;
    rep.tangent = rep.tangency_violation <= tol;
    return rep;
}

// n x (n-1) Jacobian of m restricted to the sphere, central differences in the tangent frame
inline Mat sphere_jacobian(const MultiplierSymbol& s, const Vec& xi, double h = 1e-4) {
    Vec c = unit(xi);
    Mat E = sphere_tangent_basis(c);
    Mat J(s.dim, s.dim - 1);
    for (int i = 0; i < s.dim - 1; ++i) {
        Vec p = unit(c + h * E.col(i));
        Vec q = unit(c - h * E.col(i));
        J.col(i) = (s.eval(p) - s.eval(q)) / (2.0 * h);
    }
    return J;
}

struct RegularPatch {
    Vec center;
    double angular_radius = 0.0;
    double jacobian_min_singular_value = 0.0;
};

inline double angle_between(const Vec& a, const Vec& b) {
    double c = a.dot(b) / (a.norm() * b.norm());
    return std::acos(std::clamp(c, -1.0, 1.0));
}

inline bool in_patch(const RegularPatch& p, const Vec& xi, double pad = 0.0) {
    return angle_between(p.center, xi) <= p.angular_radius + pad;
}

struct ImmersionSample {
    double smin = 0.0;
    double smax = 0.0;
};

inline ImmersionSample immersion_at(const MultiplierSymbol& s, const Vec& xi, double h) {
    Mat J = sphere_jacobian(s, xi, h);
    Eigen::JacobiSVD<Mat> svd(J);
    auto sv = svd.singularValues();
    return {sv(sv.size() - 1), sv(0)};
}

// grid of directions on the sphere (half of it for even symbols would suffice; we keep all)
inline std::vector<Vec> sphere_grid(int n, double resolution) {
    std::vector<Vec> out;
    if (n == 2) {
        int count = std::max(4, static_cast<int>(std::ceil(two_pi / resolution)));
        for (int i = 0; i < count; ++i) {
            double a = two_pi * i / count;
            Vec v(2);
            v << std::cos(a), std::sin(a);
            out.push_back(v);
        }
    } else if (n == 3) {
        int rings = std::max(2, static_cast<int>(std::ceil(pi / resolution)));
        for (int i = 0; i < rings; ++i) {
            double pol = pi * (i + 0.5) / rings;
            int count = std::max(1, static_cast<int>(std::ceil(two_pi * std::sin(pol) / resolution)));
            for (int j = 0; j < count; ++j) {
                double a = two_pi * (j + 0.5 * (i % 2)) / count;
                Vec v(3);
                v << std::sin(pol) * std::cos(a), std::sin(pol) * std::sin(a), std::cos(pol);
                out.push_back(v);
            }
        }
    } else {
        throw Error(ErrorKind::PreconditionViolation, "sphere grid only for n = 2, 3");
    }
    return out;
}

// Patch = cap of radius resolution/2 around a grid direction; accepted when the immersion
// floor holds at the center and at the cap's boundary probes. Unbounded derivatives
// (blow-up near a singular set) are rejected through the ceiling.
inline std::vector<RegularPatch> find_regular_patches(const MultiplierSymbol& s, double resolution,
                                                      double svd_floor = 1e-3, double h = 1e-4,
                                                      double svd_ceiling = 1e3) {
    std::vector<RegularPatch> out;
    const double rad = 0.5 * resolution;
    for (const Vec& c : sphere_grid(s.dim, resolution)) {
        if (s.gap(c) < 2.0 * rad + 10.0 * h) continue;
        std::vector<Vec> probes{c};
        Mat E = sphere_tangent_basis(c);
        for (int i = 0; i < s.dim - 1; ++i) {
            probes.push_back(unit(std::cos(rad) * c + std::sin(rad) * E.col(i)));
            probes.push_back(unit(std::cos(rad) * c - std::sin(rad) * E.col(i)));
        }
        double smin = 1e300, smax = 0.0;
        for (const Vec& p : probes) {
            auto im = immersion_at(s, p, h);
            smin = std::min(smin, im.smin);
            smax = std::max(smax, im.smax);
        }
        if (smin >= svd_floor && smax <= svd_ceiling) out.push_back({c, rad, smin});
    }
    if (out.empty()) throw Error(ErrorKind::NoRegularPoints, s.name + ": no sampled direction is an immersion point");
    return out;
}

struct SpanResult {
    bool spans = false;
    std::vector<Vec> witness;
};

inline SpanResult check_span_condition(const MultiplierSymbol& s, const std::vector<RegularPatch>& patches,
                                       double tol = 1e-6) {
    SpanResult res;
    std::vector<Vec> basis;
    for (const auto& p : patches) {
        std::vector<Vec> probes{p.center};
        Mat E = sphere_tangent_basis(p.center);
        for (int i = 0; i < s.dim - 1; ++i) probes.push_back(unit(p.center + p.angular_radius * E.col(i)));
        for (const Vec& xi : probes) {
            Vec r = s.eval(xi);
            for (const Vec& b : basis) r -= b.dot(r) * b;
            if (r.norm() > tol) {
                basis.push_back(unit(r));
                res.witness.push_back(xi);
                if (static_cast<int>(basis.size()) == s.dim) {
                    res.spans = true;
                    return res;
                }
            }
        }
    }
    res.witness.clear();
    return res;
}

// ---- tabulated symbols -------------------------------------------------------------
// Layout (little-endian): u32 n; u32 counts[n-1]; u32 interp_order (0 nearest, 1 linear);
// f64 values[prod(counts) * n]. n = 2: angle phi_i = 2 pi i / c0.
// n = 3: polar p_i = pi (i + 1/2) / c0, azimuth a_j = 2 pi j / c1, index i * c1 + j.

namespace detail {
inline void put_u32(std::ostream& o, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    o.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::IoError, "truncated file");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline void put_f64(std::ostream& o, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    o.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error(ErrorKind::IoError, "truncated file");
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) u = (u << 8) | b[i];
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}
}

struct SymbolTable {
    int n = 2;
    std::vector<std::uint32_t> counts;
    std::uint32_t order = 1;
    std::vector<double> values;

    Vec node(std::size_t i, std::size_t j = 0) const {
        Vec v(n);
        if (n == 2) {
            double a = two_pi * i / counts[0];
            v << std::cos(a), std::sin(a);
        } else {
            double p = pi * (i + 0.5) / counts[0];
            double a = two_pi * j / counts[1];
            v << std::sin(p) * std::cos(a), std::sin(p) * std::sin(a), std::cos(p);
        }
        return v;
    }

    Vec at(std::size_t flat) const {
        Vec v(n);
        for (int c = 0; c < n; ++c) v(c) = values[flat * n + c];
        return v;
    }

    Vec interpolate(const Vec& xi) const {
        Vec x = unit(xi);
        if (n == 2) {
            double a = std::atan2(x(1), x(0));
            if (a < 0) a += two_pi;
            double g = a / two_pi * counts[0];
            std::size_t i0 = static_cast<std::size_t>(std::floor(g)) % counts[0];
            std::size_t i1 = (i0 + 1) % counts[0];
            double w = g - std::floor(g);
            if (order == 0) return at(w < 0.5 ? i0 : i1);
            return (1.0 - w) * at(i0) + w * at(i1);
        }
        double p = std::acos(std::clamp(x(2), -1.0, 1.0));
        double a = std::atan2(x(1), x(0));
        if (a < 0) a += two_pi;
        double gp = std::clamp(p / pi * counts[0] - 0.5, 0.0, counts[0] - 1.0);
        double ga = a / two_pi * counts[1];
        std::size_t p0 = static_cast<std::size_t>(std::floor(gp));
        std::size_t p1 = std::min<std::size_t>(p0 + 1, counts[0] - 1);
        std::size_t a0 = static_cast<std::size_t>(std::floor(ga)) % counts[1];
        std::size_t a1 = (a0 + 1) % counts[1];
        double wp = gp - std::floor(gp), wa = ga - std::floor(ga);
        auto idx = [&](std::size_t i, std::size_t j) { return i * counts[1] + j; };
        if (order == 0) return at(idx(wp < 0.5 ? p0 : p1, wa < 0.5 ? a0 : a1));
        return (1 - wp) * ((1 - wa) * at(idx(p0, a0)) + wa * at(idx(p0, a1))) +
               wp * ((1 - wa) * at(idx(p1, a0)) + wa * at(idx(p1, a1)));
    }
};

inline SymbolTable tabulate(const MultiplierSymbol& s, std::vector<std::uint32_t> counts, std::uint32_t order = 1) {
    SymbolTable t;
    t.n = s.dim;
    t.counts = std::move(counts);
    t.order = order;
    if (static_cast<int>(t.counts.size()) != t.n - 1) throw Error(ErrorKind::ShapeMismatch, "counts must have n-1 entries");
    std::size_t total = 1;
    for (auto c : t.counts) total *= c;
    t.values.resize(total * t.n);
    for (std::size_t f = 0; f < total; ++f) {
        Vec xi = t.n == 2 ? t.node(f) : t.node(f / t.counts[1], f % t.counts[1]);
        Vec m = s.is_singular(xi) ? Vec::Zero(t.n) : s.raw(xi);
        for (int c = 0; c < t.n; ++c) t.values[f * t.n + c] = m(c);
    }
    return t;
}

inline void write_symbol_table(const SymbolTable& t, const std::string& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error(ErrorKind::IoError, "cannot write " + path);
    detail::put_u32(o, t.n);
    for (auto c : t.counts) detail::put_u32(o, c);
    detail::put_u32(o, t.order);
    for (double v : t.values) detail::put_f64(o, v);
}

inline SymbolTable read_symbol_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
    SymbolTable t;
    t.n = static_cast<int>(detail::get_u32(in));
    if (t.n != 2 && t.n != 3) throw Error(ErrorKind::ShapeMismatch, "tabulated symbol must have n = 2 or 3");
    std::size_t total = 1;
    for (int i = 0; i < t.n - 1; ++i) {
        t.counts.push_back(detail::get_u32(in));
        if (t.counts.back() == 0) throw Error(ErrorKind::ShapeMismatch, "empty grid axis");
        total *= t.counts.back();
    }
    t.order = detail::get_u32(in);
    if (t.order > 1) throw Error(ErrorKind::ShapeMismatch, "interpolation order must be 0 or 1");
    t.values.resize(total * t.n);
    for (auto& v : t.values) v = detail::get_f64(in);
    return t;
}

inline SymbolPtr tabulated_symbol(SymbolTable table, const std::string& name = "tabulated") {
    auto s = std::make_shared<MultiplierSymbol>();
    s->name = name;
    s->dim = table.n;
    auto shared = std::make_shared<SymbolTable>(std::move(table));
    s->raw = [shared](const Vec& xi) { return shared->interpolate(xi); };
    return s;
}

// name or path to a tabulated file
inline SymbolPtr resolve_symbol(const std::string& spec) {
    if (spec == "pm2d" || spec == "pm3d" || spec == "mg" || spec == "sqg") return builtin(spec);
    std::ifstream probe(spec, std::ios::binary);
    if (probe) return tabulated_symbol(read_symbol_table(spec), spec);
    return builtin(spec);
}

}
