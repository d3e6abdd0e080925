#pragma once

#include "symbols.hpp"

#include <array>

namespace wildscalar {

struct StateMatrix {
    double theta = 0.0;
    Vec q, u;

    StateMatrix() = default;
    StateMatrix(double th, Vec q_, Vec u_) : theta(th), q(std::move(q_)), u(std::move(u_)) {}

    int n() const { return static_cast<int>(q.size()); }

    Vec vec() const {
        Vec v(2 * n() + 1);
        v(0) = theta;
        v.segment(1, n()) = q;
        v.segment(1 + n(), n()) = u;
        return v;
    }

    static StateMatrix from(const Vec& v) {
        const int n = static_cast<int>((v.size() - 1) / 2);
        return {v(0), v.segment(1, n), v.segment(1 + n, n)};
    }

    StateMatrix operator+(const StateMatrix& o) const { return from(vec() + o.vec()); }
    StateMatrix operator-(const StateMatrix& o) const { return from(vec() - o.vec()); }
    StateMatrix operator*(double s) const { return from(s * vec()); }
    double norm() const { return vec().norm(); }
};

inline StateMatrix operator*(double s, const StateMatrix& A) { return A * s; }

// K = {(s, s v, v) : s = +-1}; for fixed s the nearest v is (u + s q) / 2
inline double dist_to_K(const StateMatrix& A) {
    double best = 1e300;
    for (double s : {1.0, -1.0}) {
        double d2 = (A.theta - s) * (A.theta - s) + 0.5 * (A.q - s * A.u).squaredNorm();
        best = std::min(best, d2);
    }
    return std::sqrt(best);
}

inline double dist_to_K(const Vec& v) { return dist_to_K(StateMatrix::from(v)); }

inline StateMatrix nearest_in_K(const StateMatrix& A) {
    double best = 1e300;
    StateMatrix out;
    for (double s : {1.0, -1.0}) {
        double d2 = (A.theta - s) * (A.theta - s) + 0.5 * (A.q - s * A.u).squaredNorm();
        if (d2 < best) {
            best = d2;
            Vec v = 0.5 * (A.u + s * A.q);
            out = {s, s * v, v};
        }
    }
    return out;
}

// ---- screens --------------------------------------------------------------------------

inline Vec chart_point(const RegularPatch& W, const Mat& E, const Vec& w) { return unit(W.center + E * w); }

struct ScreenPatch {
    RegularPatch W;
    Mat frame;                      // tangent basis of the sphere at the center
    std::vector<Vec> xi_samples;
    std::vector<Vec> points;        // m(xi)
    std::vector<Mat> tangents;      // n x (n-1) Jacobian columns in the chart
};

struct Screens {
    SymbolPtr symbol;
    std::array<ScreenPatch, 2> S;
    Vec m1, m2, a, q0;
    double delta0 = 0.0;
    double delta = 0.0;  // certified radius of the T4 split around A0
    double angle_floor = 0.2;

    int n() const { return static_cast<int>(a.size()); }
    StateMatrix A0() const { return {0.0, q0, Vec::Zero(n())}; }
};

struct ProjectionHit {
    Vec point;  // on the screen (unshifted)
    Vec xi;
    double tau = 0.0;
    double angle = 0.0;
};

namespace detail {

inline Mat chart_jacobian(const MultiplierSymbol& s, const RegularPatch& W, const Mat& E, const Vec& w, double h = 1e-7) {
    const int k = static_cast<int>(w.size());
    Mat J(s.dim, k);
    for (int i = 0; i < k; ++i) {
        Vec wp = w, wm = w;
        wp(i) += h;
        wm(i) -= h;
        J.col(i) = (s.eval(chart_point(W, E, wp)) - s.eval(chart_point(W, E, wm))) / (2 * h);
    }
    return J;
}

// angle between a direction and the tangent space spanned by J's columns
inline double crossing_angle(const Mat& J, const Vec& dir) {
    Eigen::HouseholderQR<Mat> qr(J);
    Mat Q = qr.householderQ() * Mat::Identity(J.rows(), J.cols());
    Vec e = unit(dir);
    Vec normal = e - Q * (Q.transpose() * e);
    return std::asin(std::clamp(normal.norm(), 0.0, 1.0));
}

inline double chart_limit(const RegularPatch& W) { return std::tan(W.angular_radius); }

// Newton on (w, tau) for m(chart(w)) = a + tau e
inline bool newton_line(const MultiplierSymbol& s, const ScreenPatch& P, const Vec& a, const Vec& e, Vec& w, double& tau) {
    const int n = s.dim;
    auto residual = [&](const Vec& ww, double tt) { return Vec(s.eval(chart_point(P.W, P.frame, ww)) - a - tt * e); };
    Vec r = residual(w, tau);
    for (int it = 0; it < 60; ++it) {
        if (r.norm() < 1e-14) return true;
        Mat J(n, n);
        J.leftCols(n - 1) = chart_jacobian(s, P.W, P.frame, w);
        J.col(n - 1) = -e;
        Vec step = J.fullPivLu().solve(-r);
        double lam = 1.0;
        bool moved = false;
        for (int b = 0; b < 30; ++b) {
            Vec w2 = w + lam * step.head(n - 1);
            double t2 = tau + lam * step(n - 1);
            if (w2.norm() < 4.0 * chart_limit(P.W) + 1.0) {
                Vec r2 = residual(w2, t2);
                if (r2.norm() < r.norm()) {
                    w = w2;
                    tau = t2;
                    r = r2;
                    moved = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if (!moved) break;
    }
    return r.norm() < 1e-11;
}

inline std::vector<Vec> chart_grid(int k, double limit, int per_axis) {
    std::vector<Vec> out;
    int total = 1;
    for (int i = 0; i < k; ++i) total *= per_axis;
    for (int idx = 0; idx < total; ++idx) {
        Vec w(k);
        int rest = idx;
        for (int i = 0; i < k; ++i) {
            w(i) = limit * (2.0 * (rest % per_axis) / (per_axis - 1) - 1.0);
            rest /= per_axis;
        }
        if (w.norm() <= limit * (1 + 1e-12)) out.push_back(w);
    }
    return out;
}

}

// intersection of the line through a with direction e and screen j
inline ProjectionHit intersect_screen(const Screens& sc, int j, const Vec& a, const Vec& e) {
    const MultiplierSymbol& s = *sc.symbol;
    const ScreenPatch& P = sc.S[j];
    const int n = s.dim;
    const double limit = detail::chart_limit(P.W);
    auto accept = [&](const Vec& w, double tau, ProjectionHit& hit) {
        if (w.norm() > limit * (1.0 + 1e-9)) return false;
        hit.xi = chart_point(P.W, P.frame, w);
        hit.point = s.eval(hit.xi);
        hit.tau = tau;
        hit.angle = detail::crossing_angle(detail::chart_jacobian(s, P.W, P.frame, w), e);
        return true;
    };
    ProjectionHit hit;
    Vec w = Vec::Zero(n - 1);
    double tau = (s.eval(P.W.center) - a).dot(e) / e.squaredNorm();
    if (detail::newton_line(s, P, a, e, w, tau) && accept(w, tau, hit)) return hit;
    // fallback: restart from the sample nearest to the line
    double best = 1e300;
    Vec wb = Vec::Zero(n - 1);
    for (const Vec& wc : detail::chart_grid(n - 1, limit, n == 2 ? 41 : 15)) {
        Vec p = s.eval(chart_point(P.W, P.frame, wc)) - a;
        double t = p.dot(e) / e.squaredNorm();
        double d = (p - t * e).norm();
        if (d < best) {
            best = d;
            wb = wc;
        }
    }
    w = wb;
    tau = (s.eval(chart_point(P.W, P.frame, w)) - a).dot(e) / e.squaredNorm();
    if (detail::newton_line(s, P, a, e, w, tau) && accept(w, tau, hit)) return hit;
    throw Error(ErrorKind::NoIntersection, "line misses screen " + std::to_string(j + 1));
}

// x in u + c B_delta0(q0); returns the two hits mapped back to u + c S_j
inline std::array<ProjectionHit, 2> screen_project(const Vec& x, const Screens& sc, const Vec& u, double c) {
    if (!(c > 0.0)) throw Error(ErrorKind::PreconditionViolation, "scale must be positive");
    Vec xt = (x - u) / c;
    if ((xt - sc.q0).norm() > sc.delta0) throw Error(ErrorKind::OutsideBall, "normalized point outside B_delta0(q0)");
    Vec e = xt - sc.a;
    std::array<ProjectionHit, 2> out;
    for (int j = 0; j < 2; ++j) {
        ProjectionHit h = intersect_screen(sc, j, sc.a, e);
        if (h.angle < sc.angle_floor)
            throw Error(ErrorKind::TransversalityFailure, "crossing angle " + std::to_string(h.angle) + " below floor");
        h.point = u + c * h.point;
        out[j] = h;
    }
    return out;
}

struct ScreenOptions {
    double angle_floor = 0.2;
    int samples_per_axis = 9;
    int probes = 64;
    int certify_probes = 200;
    std::uint64_t seed = 7;
};

inline void sample_screen(const MultiplierSymbol& s, ScreenPatch& P, int per_axis) {
    const int k = s.dim - 1;
    for (const Vec& w : detail::chart_grid(k, detail::chart_limit(P.W), per_axis)) {
        Vec xi = chart_point(P.W, P.frame, w);
        P.xi_samples.push_back(xi);
        P.points.push_back(s.eval(xi));
        P.tangents.push_back(detail::chart_jacobian(s, P.W, P.frame, w));
    }
}

struct T4Configuration {
    StateMatrix A;
    std::array<StateMatrix, 4> T;
    std::array<double, 4> lambda{};
    std::array<Vec, 4> xi;
    std::array<int, 4> patch{};
    double residual = 0.0;
};

inline bool lambda_w_member(const Screens& sc, const StateMatrix& D, double tol = 1e-8, Vec* xi_out = nullptr);
inline T4Configuration t4_construct(const StateMatrix& A, const Screens& sc);

inline Screens build_screens(SymbolPtr sym, const RegularPatch& W1, const RegularPatch& W2, const ScreenOptions& opt = {}) {
    const MultiplierSymbol& s = *sym;
    Screens sc;
    sc.symbol = sym;
    sc.angle_floor = opt.angle_floor;
    const RegularPatch Ws[2] = {W1, W2};
    for (int j = 0; j < 2; ++j) {
        ScreenPatch P;
        P.W = Ws[j];
        P.W.center = unit(P.W.center);
        if (s.gap(P.W.center) <= P.W.angular_radius)
            throw Error(ErrorKind::SpanFailure, "patch " + std::to_string(j + 1) + " touches the singular set");
        auto im = immersion_at(s, P.W.center, 1e-4);
        if (im.smin < 1e-3) throw Error(ErrorKind::SpanFailure, "patch " + std::to_string(j + 1) + " is not an immersion point");
        P.frame = sphere_tangent_basis(P.W.center);
        sample_screen(s, P, opt.samples_per_axis);
        sc.S[j] = std::move(P);
    }
    sc.m1 = s.eval(sc.S[0].W.center);
    sc.m2 = s.eval(sc.S[1].W.center);
    Vec seg = sc.m2 - sc.m1;
    if (seg.norm() < 1e-9) throw Error(ErrorKind::TransversalityFailure, "segment between the screen centers has zero length");
    for (int j = 0; j < 2; ++j) {
        double ang = detail::crossing_angle(sphere_jacobian(s, sc.S[j].W.center), seg);
        if (ang < opt.angle_floor)
            throw Error(ErrorKind::TransversalityFailure,
                        "segment meets screen " + std::to_string(j + 1) + " at angle " + std::to_string(ang));
    }
    sc.a = sc.m1 + seg / 3.0;
    sc.q0 = sc.m1 + 2.0 * seg / 3.0;

    // unique-projection radius by bisection
    std::mt19937_64 rng(opt.seed);
    const int n = s.dim;
    std::vector<Vec> dirs;
    for (int i = 0; i < n; ++i) {
        Vec e = Vec::Zero(n);
        e(i) = 1.0;
        dirs.push_back(e);
        dirs.push_back(-e);
    }
    while (static_cast<int>(dirs.size()) < opt.probes) dirs.push_back(random_unit(n, rng));
    auto ok = [&](double r) {
        Screens trial = sc;
        trial.delta0 = r * (1.0 + 1e-9);
        for (const Vec& d : dirs)
            for (double f : {1.0, 0.5}) {
                try {
                    screen_project(sc.q0 + f * r * d, trial, Vec::Zero(n), 1.0);
                } catch (const Error&) {
                    return false;
                }
            }
        return true;
    };
    double lo = 0.0, hi = 0.999 * (sc.q0 - sc.a).norm();
    if (ok(hi)) lo = hi;
    else
        for (int it = 0; it < 30; ++it) {
            double mid = 0.5 * (lo + hi);
            (ok(mid) ? lo : hi) = mid;
        }
    if (lo <= 0.0) throw Error(ErrorKind::TransversalityFailure, "no projection ball around q0");
    sc.delta0 = lo;

    // certified radius for the T4 split: shrink from delta0/4 until every probe succeeds
    const int dim = 2 * n + 1;
    double r = sc.delta0 / 4.0;
    for (int attempt = 0; attempt < 40; ++attempt, r *= 0.8) {
        bool all = true;
        std::mt19937_64 prng(opt.seed + 1);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int p = 0; p < opt.certify_probes && all; ++p) {
            Vec v = sc.A0().vec() + r * std::pow(U(prng), 1.0 / dim) * random_unit(dim, prng);
            try {
                t4_construct(StateMatrix::from(v), sc);
            } catch (const Error&) {
                all = false;
            }
        }
        if (all) {
            sc.delta = r;
            return sc;
        }
    }
    throw Error(ErrorKind::TransversalityFailure, "could not certify a T4 radius");
}

struct Decomposition {
    StateMatrix X, Y;
    Vec x, y;
    double weight = 0.5;  // (1 + theta) / 2
};

inline Decomposition decompose(const StateMatrix& A) {
    if (std::abs(A.theta) >= 1.0 - 1e-9) throw Error(ErrorKind::DegenerateTheta, "|theta| too close to 1");
    Decomposition d;
    d.x = (A.u + A.q) / (1.0 + A.theta);
    d.y = (A.u - A.q) / (1.0 - A.theta);
    d.X = {1.0, d.x, d.x};
    d.Y = {-1.0, -d.y, d.y};
    d.weight = 0.5 * (1.0 + A.theta);
    return d;
}

inline bool lambda_w_member(const Screens& sc, const StateMatrix& D, double tol, Vec* xi_out) {
    if (std::abs(D.theta) < 1e-12) return false;
    const MultiplierSymbol& s = *sc.symbol;
    Vec v = D.u / D.theta;
    for (int j = 0; j < 2; ++j) {
        const ScreenPatch& P = sc.S[j];
        double best = 1e300;
        Vec w = Vec::Zero(s.dim - 1);
        for (const Vec& wc : detail::chart_grid(s.dim - 1, detail::chart_limit(P.W), s.dim == 2 ? 21 : 9)) {
            double d = (s.eval(chart_point(P.W, P.frame, wc)) - v).norm();
            if (d < best) {
                best = d;
                w = wc;
            }
        }
        for (int it = 0; it < 40 && best > 1e-15; ++it) {
            Mat J = detail::chart_jacobian(s, P.W, P.frame, w);
            Vec r = s.eval(chart_point(P.W, P.frame, w)) - v;
            Vec step = J.colPivHouseholderQr().solve(-r);
            Vec w2 = w + step;
            double d2 = (s.eval(chart_point(P.W, P.frame, w2)) - v).norm();
            if (d2 >= best) break;
            best = d2;
            w = w2;
        }
        if (best <= tol && w.norm() <= detail::chart_limit(P.W) * (1 + 1e-9)) {
            if (xi_out) *xi_out = chart_point(P.W, P.frame, w);
            return true;
        }
    }
    return false;
}

// same split without the ball precondition; throws if any step fails
inline T4Configuration t4_construct(const StateMatrix& A, const Screens& sc) {
    const int n = sc.n();
    Decomposition d = decompose(A);
    auto hx = screen_project(d.x, sc, A.u, 1.0 - A.theta);
    auto hy = screen_project(-d.y, sc, -A.u, 1.0 + A.theta);
    T4Configuration cfg;
    cfg.A = A;
    for (int j = 0; j < 2; ++j) {
        Vec xj = hx[j].point;
        Vec yj = -hy[j].point;
        cfg.T[j] = {1.0, xj, xj};
        cfg.T[j + 2] = {-1.0, -yj, yj};
        cfg.xi[j] = hx[j].xi;
        cfg.xi[j + 2] = hy[j].xi;
        cfg.patch[j] = cfg.patch[j + 2] = j;
    }
    Mat M(2 * n + 2, 4);
    Vec rhs(2 * n + 2);
    for (int j = 0; j < 4; ++j) {
        M.col(j).head(2 * n + 1) = cfg.T[j].vec();
        M(2 * n + 1, j) = 1.0;
    }
    rhs.head(2 * n + 1) = A.vec();
    rhs(2 * n + 1) = 1.0;
    Vec lam = M.colPivHouseholderQr().solve(rhs);
    cfg.residual = (M * lam - rhs).norm();
    if (cfg.residual > 1e-10) throw Error(ErrorKind::NoIntersection, "weights do not reconstruct A");
    for (int j = 0; j < 4; ++j) {
        cfg.lambda[j] = lam(j);
        if (!(lam(j) > 0.0 && lam(j) < 1.0))
            throw Error(ErrorKind::WeightOutOfRange, "lambda_" + std::to_string(j + 1) + " = " + std::to_string(lam(j)));
    }
    for (int j = 0; j < 4; ++j) {
        Vec xi;
        if (!lambda_w_member(sc, cfg.T[j] - A, 1e-8, &xi))
            throw Error(ErrorKind::PropertyFailure, "T_j - A not in the restricted cone");
    }
    return cfg;
}

inline T4Configuration t4_of(const StateMatrix& A, const Screens& sc) {
    if ((A - sc.A0()).norm() >= sc.delta)
        throw Error(ErrorKind::PreconditionViolation, "A outside the certified ball B_delta(A0)");
    return t4_construct(A, sc);
}

// ---- perturbed arms ---------------------------------------------------------------------

inline void check_eta(double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorKind::EtaTooLarge, "eta must lie in (0,1)");
    if (std::pow(1.0 - eta, 3) <= 0.5) throw Error(ErrorKind::EtaTooLarge, "(1 - eta)^3 <= 1/2");
}

inline bool steps_admissible(double eta, int N) { return N >= 4 && N % 4 == 0 && std::pow(1.0 - eta, N - 4) < 0.5; }

inline int minimal_steps(double eta) {
    check_eta(eta);
    for (int N = 4;; N += 4)
        if (steps_admissible(eta, N)) return N;
}

struct Arms {
    double s = 0.05, eta = 0.15;
    std::array<StateMatrix, 5> A;     // A_0 .. A_4, A_0 = A_4 = base
    std::array<StateMatrix, 4> Tbar;  // Tbar_1 .. Tbar_4
    std::array<StateMatrix, 4> Ts;
    double closure = 0.0;
    double min_separation = 0.0;
};

inline Arms perturbed_arms(const T4Configuration& cfg, double s, double eta) {
    if (!(s > 0.0 && s <= 0.25)) throw Error(ErrorKind::PreconditionViolation, "s must lie in (0, 1/4]");
    check_eta(eta);
    Arms ar;
    ar.s = s;
    ar.eta = eta;
    const StateMatrix& A = cfg.A;
    ar.A[0] = A;
    Vec acc = Vec::Zero(A.vec().size());
    for (int j = 0; j < 4; ++j) {
        ar.Ts[j] = (1.0 - s) * cfg.T[j] + s * A;
        acc += eta * cfg.lambda[j] * (ar.Ts[j] - A).vec();
        ar.A[j + 1] = A + StateMatrix::from(acc);
    }
    for (int j = 0; j < 4; ++j) ar.Tbar[j] = ar.Ts[j] + ar.A[j] - A;
    ar.closure = (ar.A[4] - A).norm();
    ar.min_separation = 1e300;
    for (int j = 0; j < 4; ++j) ar.min_separation = std::min(ar.min_separation, (ar.Tbar[j] - A).norm());
    const double dk = dist_to_K(A);
    if (ar.min_separation < 0.5 * dk)
        throw PropertyError("arm_separation", ar.min_separation, 0.5 * dk);
    return ar;
}

// ---- membership in U -----------------------------------------------------------------

struct MembershipWitness {
    bool member = false;
    bool in_ball = false;
    int j = -1;
    double t = 0.0;
    StateMatrix Aprime, Adouble, T;
    Vec xi;
};

namespace detail {

struct WitnessEval {
    StateMatrix T, Aprime;
    Vec xi;
    double t = 0.0;
    Vec cone;  // u-row of A - T minus theta-row times m(xi)
};

inline WitnessEval witness_eval(const StateMatrix& A, const Screens& sc, const Vec& z, int j) {
    T4Configuration cfg = t4_construct(StateMatrix::from(z), sc);
    WitnessEval e;
    e.T = cfg.T[j];
    e.xi = cfg.xi[j];
    StateMatrix D = A - e.T;
    e.cone = D.u - D.theta * sc.symbol->eval(e.xi);
    const StateMatrix A0 = sc.A0();
    double s_star = std::max(1.0 + 1e-9, (A0 - e.T).vec().dot(D.vec()) / D.vec().squaredNorm());
    e.Aprime = e.T + s_star * D;
    e.t = 1.0 / s_star;
    return e;
}

}

// A = t A' + (1 - t) T_j(A''), T_j(A'') - A' in the restricted cone, A', A'' in B_delta(A0).
// Levenberg-Marquardt on a penalized objective, then min-norm Newton on the cone condition alone.
inline MembershipWitness membership_U(const StateMatrix& A, const Screens& sc, std::uint64_t seed = 11, int restarts = 3) {
    MembershipWitness w;
    const StateMatrix A0 = sc.A0();
    if ((A - A0).norm() < sc.delta) {
        w.member = true;
        w.in_ball = true;
        return w;
    }
    if (dist_to_K(A) < 1e-12 || (A - A0).norm() > 10.0) return w;
    const int n = sc.n();
    const int dim = 2 * n + 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto objective = [&](const Vec& z, int j) {
        detail::WitnessEval e = detail::witness_eval(A, sc, z, j);
        Vec r(n + 2 * dim);
        r.head(n) = 10.0 * e.cone;
        r.segment(n, dim) = (e.Aprime - A0).vec() / sc.delta;
        r.tail(dim) = (StateMatrix::from(z) - A0).vec() / sc.delta;
        return r;
    };
    for (int j = 0; j < 4; ++j) {
        for (int r = 0; r < restarts; ++r) {
            Vec z = A0.vec();
            if (r > 0) z += 0.5 * sc.delta * std::pow(U(rng), 1.0 / dim) * random_unit(dim, rng);
            try {
                double mu = 1e-3;
                Vec res = objective(z, j);
                for (int it = 0; it < 30; ++it) {
                    Mat J(res.size(), dim);
                    for (int i = 0; i < dim; ++i) {
                        Vec zp = z;
                        zp(i) += 1e-7;
                        J.col(i) = (objective(zp, j) - res) / 1e-7;
                    }
                    Mat JtJ = J.transpose() * J;
                    Vec g = J.transpose() * res;
                    bool improved = false;
                    for (int b = 0; b < 8 && !improved; ++b) {
                        Vec z2 = z + (JtJ + mu * Mat::Identity(dim, dim)).ldlt().solve(-g);
                        try {
                            Vec r2 = objective(z2, j);
                            if (r2.norm() < res.norm()) {
                                z = z2;
                                res = r2;
                                mu = std::max(mu * 0.3, 1e-12);
                                improved = true;
                            }
                        } catch (const Error&) {
                        }
                        if (!improved) mu *= 10.0;
                    }
                    if (!improved) break;
                }
                for (int it = 0; it < 20; ++it) {
                    detail::WitnessEval e = detail::witness_eval(A, sc, z, j);
                    if (e.cone.norm() < 1e-13) break;
                    Mat J(n, dim);
                    for (int i = 0; i < dim; ++i) {
                        Vec zp = z;
                        zp(i) += 1e-7;
                        J.col(i) = (detail::witness_eval(A, sc, zp, j).cone - e.cone) / 1e-7;
                    }
                    z -= J.completeOrthogonalDecomposition().solve(e.cone);
                }
                detail::WitnessEval e = detail::witness_eval(A, sc, z, j);
                StateMatrix Ad = StateMatrix::from(z);
                bool ok = e.cone.norm() <= 1e-9 && e.t > 0.0 && e.t < 1.0 && (e.Aprime - A0).norm() < sc.delta &&
                          (Ad - A0).norm() < sc.delta;
                if (ok) {
                    w.member = true;
                    w.j = j;
                    w.t = e.t;
                    w.T = e.T;
                    w.Aprime = e.Aprime;
                    w.Adouble = Ad;
                    w.xi = e.xi;
                    return w;
                }
            } catch (const Error&) {
            }
        }
    }
    return w;
}

// ---- openness ----------------------------------------------------------------------------

inline double openness_jacobian(double theta, double t, int n) {
    return (theta - 1.0) * std::pow(1.0 - t, n) * std::pow(t, n);
}

// determinant of the linearization (dt, dq, dx) -> dA of
// A = (t + dt)(A' + dA') + (1 - t - dt)(T + dT), A' = (theta, q, x), T = (1, x, x),
// dA' = (0, dq, dx), dT = (0, dx, dx); computed by central differences
inline double openness_linearization_det(double theta, const Vec& q, const Vec& x, double t, double h = 1e-6) {
    const int n = static_cast<int>(q.size());
    const int dim = 2 * n + 1;
    auto map = [&](const Vec& p) {
        double dt = p(0);
        Vec dq = p.segment(1, n), dx = p.segment(1 + n, n);
        StateMatrix Ap{theta, q + dq, x + dx};
        StateMatrix T{1.0, x + dx, x + dx};
        return Vec(((t + dt) * Ap + (1.0 - t - dt) * T).vec());
    };
    Mat J(dim, dim);
    for (int i = 0; i < dim; ++i) {
        Vec p = Vec::Zero(dim), m = Vec::Zero(dim);
        p(i) = h;
        m(i) = -h;
        J.col(i) = (map(p) - map(m)) / (2 * h);
    }
    return J.determinant();
}

// ---- screen serialization ("WSC1") ----------------------------------------------------

inline void write_screens(const Screens& sc, const std::string& path) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error(ErrorKind::IoError, "cannot write " + path);
    o.write("WSC1", 4);
    const int n = sc.n();
    detail::put_u32(o, n);
    auto vec = [&](const Vec& v) {
        for (int i = 0; i < v.size(); ++i) detail::put_f64(o, v(i));
    };
    vec(sc.a);
    vec(sc.q0);
    detail::put_f64(o, sc.delta0);
    detail::put_f64(o, sc.delta);
    detail::put_f64(o, sc.angle_floor);
    for (const auto& P : sc.S) {
        vec(P.W.center);
        detail::put_f64(o, P.W.angular_radius);
        detail::put_u32(o, static_cast<std::uint32_t>(P.points.size()));
        for (std::size_t i = 0; i < P.points.size(); ++i) {
            vec(P.xi_samples[i]);
            vec(P.points[i]);
            for (int c = 0; c < n - 1; ++c) vec(P.tangents[i].col(c));
        }
    }
}

inline Screens read_screens(const std::string& path, SymbolPtr sym) {
    std::ifstream in(path, std::ios::binary);
    char magic[4];
    if (!in || !in.read(magic, 4) || std::string(magic, 4) != "WSC1") throw Error(ErrorKind::IoError, "not a WSC1 file: " + path);
    Screens sc;
    sc.symbol = sym;
    const int n = static_cast<int>(detail::get_u32(in));
    if (n != sym->dim) throw Error(ErrorKind::ShapeMismatch, "screen file dimension differs from symbol");
    auto vec = [&]() {
        Vec v(n);
        for (int i = 0; i < n; ++i) v(i) = detail::get_f64(in);
        return v;
    };
    sc.a = vec();
    sc.q0 = vec();
    sc.delta0 = detail::get_f64(in);
    sc.delta = detail::get_f64(in);
    sc.angle_floor = detail::get_f64(in);
    for (auto& P : sc.S) {
        P.W.center = vec();
        P.W.angular_radius = detail::get_f64(in);
        P.frame = sphere_tangent_basis(P.W.center);
        std::uint32_t count = detail::get_u32(in);
        for (std::uint32_t i = 0; i < count; ++i) {
            P.xi_samples.push_back(vec());
            P.points.push_back(vec());
            Mat T(n, n - 1);
            for (int c = 0; c < n - 1; ++c) T.col(c) = vec();
            P.tangents.push_back(T);
        }
    }
    sc.m1 = sym->eval(sc.S[0].W.center);
    sc.m2 = sym->eval(sc.S[1].W.center);
    return sc;
}

}
