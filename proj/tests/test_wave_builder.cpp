#include <wildscalar/wave_builder.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace wildscalar;

namespace {

// exact sawtooth: lambda on [0, 1 - lambda), lambda - 1 on [1 - lambda, 1)
double sawtooth(double lambda, double s) {
    s -= std::floor(s);
    return s < 1.0 - lambda ? lambda : lambda - 1.0;
}

double det_cofactor(const Mat& A) {
    if (A.rows() == 2) return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) - A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
           A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
}

}

TEST(WaveBuilder, SawtoothCoefficientsMatchQuadrature) {
    for (double lam : {0.3, 0.5, 0.85}) {
        auto c = sawtooth_coefficients(lam, 6);
        const int S = 200000;
        for (int m = 1; m <= 6; ++m) {
            cplx q = 0.0;
            for (int i = 0; i < S; ++i) {
                double s = (i + 0.5) / S;
                q += sawtooth(lam, s) * std::polar(1.0, -two_pi * m * s);
            }
            q /= double(S);
            EXPECT_NEAR(std::abs(q - c[m - 1]), 0.0, 1e-5) << lam << " " << m;
        }
    }
}

TEST(WaveBuilder, ProfileAntiderivatives) {
    WaveProfile p = profile_at_order(0.4, 9, 0.1);
    const double h = 1e-4;
    for (double s : {0.05, 0.3, 0.71}) {
        double d2 = (p.eval(s + h, -2) - 2 * p.eval(s, -2) + p.eval(s - h, -2)) / (h * h);
        double d1 = (p.eval(s + h, -1) - p.eval(s - h, -1)) / (2 * h);
        EXPECT_NEAR(d2, p.eval(s), 1e-5);
        EXPECT_NEAR(d1, p.eval(s), 1e-6);
    }
    // mean zero
    double m = 0.0;
    for (int i = 0; i < 1000; ++i) m += p.eval((i + 0.5) / 1000.0);
    EXPECT_NEAR(m / 1000.0, 0.0, 1e-12);
}

TEST(WaveBuilder, BuildProfileFindsSmallestOrder) {
    WaveProfile p = build_profile(0.5, 0.1, 20000);
    EXPECT_TRUE(p.conditions_met);
    EXPECT_GT(p.measure_plus, 0.5 * 0.9);
    EXPECT_GT(p.measure_minus, 0.5 * 0.9);
    EXPECT_FALSE(profile_at_order(0.5, p.order - 1, 0.1, 20000).conditions_met);
    EXPECT_THROW(build_profile(0.5, 0.6), Error);
    try {
        build_profile(0.5, 0.001, 20000, 8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TruncationSearchExhausted);
    }
}

TEST(WaveBuilder, SmoothstepShape) {
    for (int p : {2, 4}) {
        Smoothstep S(p);
        EXPECT_DOUBLE_EQ(S(0.0), 0.0);
        EXPECT_DOUBLE_EQ(S(1.0), 1.0);
        EXPECT_NEAR(S(0.5), 0.5, 1e-14);
        for (int d = 1; d <= p; ++d) {
            EXPECT_NEAR(S(1e-12, d), 0.0, 1e-6);
            EXPECT_NEAR(S(1 - 1e-12, d), 0.0, 1e-6);
        }
        const double h = 1e-6;
        for (double z : {0.2, 0.6}) EXPECT_NEAR((S(z + h) - S(z - h)) / (2 * h), S(z, 1), 1e-7);
    }
}

TEST(WaveBuilder, TemporalBumpDerivatives) {
    TemporalBump b{1.0, 3.0, 0.5};
    EXPECT_EQ(b(0.9), 0.0);
    EXPECT_EQ(b(2.0), 1.0);
    const double h = 1e-5;
    for (double t : {1.1, 1.3, 2.7}) {
        EXPECT_NEAR((b(t + h) - b(t - h)) / (2 * h), b(t, 1), 1e-6);
        EXPECT_NEAR((b(t + h, 1) - b(t - h, 1)) / (2 * h), b(t, 2), 1e-4);
    }
}

TEST(WaveBuilder, DeterminantIdentity) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int n : {2, 3})
        for (int i = 0; i < 100; ++i) {
            double th = u(rng);
            if (std::abs(th) < 1e-3) th = 1.0;
            Vec xi(n), q(n);
            for (int d = 0; d < n; ++d) {
                xi(d) = u(rng);
                q(d) = u(rng);
            }
            CoefficientSolution s = solve_coefficients(th, xi, q);
            double kap1 = xi(s.perm[0]);
            double closed = -th * std::pow(kap1, n - 2) * xi.squaredNorm();
            EXPECT_NEAR(det_cofactor(s.system), closed, 1e-10 * std::max(1.0, std::abs(closed)));
            EXPECT_LT(s.residual, 1e-10);
        }
}

TEST(WaveBuilder, LatticeFrequency) {
    Vec xi(2);
    xi << 1, 0;
    auto lf = select_frequency(xi, two_pi / 3, 64);
    EXPECT_EQ(lf.k, (std::vector<int>{3, 0}));
    EXPECT_NEAR(lf.error, 0.0, 1e-15);
    try {
        select_frequency(xi, two_pi / 40, 64);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridOverflow);
    }
    try {
        select_frequency(xi, 100.0, 64);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateDirection);
    }
}

TEST(WaveBuilder, LocalizerFullSpaceAndBallExhaustion) {
    GridSpec g{2, 32, 32, 1.0};
    Localizer L = build_localizer(Region::full_space(0.25, 0.75), 0.1, g);
    EXPECT_TRUE(L.bounds.holds(0.1));
    for (int t = 0; t < g.nt; ++t) EXPECT_EQ(L.h(0, t, 5), (g.time(t) >= 0.25 && g.time(t) <= 0.75) ? 1.0 : 0.0);
    Vec c(2);
    c << pi, pi;
    try {
        build_localizer(Region::ball(0.25, 0.75, c, 1.5), 0.05, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TruncationSearchExhausted);
    }
    EXPECT_THROW(build_localizer(Region::full_space(0.0, 0.5), 0.1, g), Error);
}

TEST(WaveBuilder, SingleWaveProperties) {
    GridSpec g{2, 32, 32, 32.0};
    auto sym = builtin("pm2d");
    Vec xi(2), q0(2);
    xi << 1, 0;
    q0 << 0.3, -1.0;
    LocalizerOptions lo;
    lo.temporal_ramp_cells = 3;
    Localizer loc = make_localizer(Region::full_space(2.0, 30.0), g, 0.0, 0, 0.1, lo);
    WaveDirection L{1.0, xi, q0, {xi, 0.3, 0.0}};
    WaveOptions opt;
    opt.truncation_order = 15;
    opt.enforce = false;
    opt.scheme = TimeScheme::spectral;
    WaveResult w = build_wave(L, loc, 0.5, 0.25, two_pi, g, sym, opt);
    EXPECT_LT(w.report.div_residual, 1e-10);
    EXPECT_GT(w.report.cone_fraction, 1 - 1e-9);
    // spatially constant localizer: u = theta0 m(xi0) f h exactly
    EXPECT_LT(w.report.frozen_error, 1e-10);
    EXPECT_NEAR(w.report.determinant, w.report.determinant_closed, 1e-12);
    // the time phase moves with d_1 != 0 here
    EXPECT_GT(std::abs(w.report.d(0)), 0.1);

    opt.enforce = true;
    EXPECT_THROW(build_wave(L, loc, 0.5, 0.02, two_pi, g, sym, opt), PropertyError);
}

TEST(WaveBuilder, WaveRejectsBadInput) {
    GridSpec g{2, 16, 8, 1.0};
    Localizer loc = make_localizer(Region::full_space(0.2, 0.8), g, 0.0, 0);
    Vec xi(2), q0(2);
    xi << 1, 0;
    q0 << 0, 1;
    WaveDirection L{0.0, xi, q0, {xi, 0.3, 0.0}};
    EXPECT_THROW(build_wave(L, loc, 0.5, 0.1, two_pi, g, builtin("pm2d")), Error);
    L.theta0 = 1.0;
    WaveOptions opt;
    opt.truncation_order = 10;
    try {
        build_wave(L, loc, 0.5, 0.1, two_pi / 2, g, builtin("pm2d"), opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridOverflow);
    }
}

TEST(WaveBuilder, DistanceToSegment) {
    Vec a(2), b(2), z(2);
    a << 0, 0;
    b << 2, 0;
    z << 1, 3;
    EXPECT_DOUBLE_EQ(distance_to_segment(z, a, b), 3.0);
    z << 5, 4;
    EXPECT_DOUBLE_EQ(distance_to_segment(z, a, b), 5.0);
    EXPECT_DOUBLE_EQ(distance_to_segment(z, a, a), std::sqrt(41.0));
}
