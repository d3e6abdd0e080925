#include <wildscalar/geometry.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <filesystem>
#include <random>

using namespace wildscalar;

namespace {

StateMatrix random_state(int n, std::mt19937_64& rng, double scale = 1.5) {
    std::normal_distribution<double> nd;
    Vec v(2 * n + 1);
    for (auto& x : v) x = scale * nd(rng);
    return StateMatrix::from(v);
}

Screens pm2d_screens() {
    Vec a(2), b(2);
    a << 1, 0;
    b << 0, 1;
    return build_screens(builtin("pm2d"), {a, 0.35, 0.0}, {b, 0.35, 0.0});
}

}

TEST(Geometry, DistToKMatchesGridSearch) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        int n = i % 2 ? 3 : 2;
        StateMatrix A = random_state(n, rng);
        EXPECT_NEAR(dist_to_K(A), oracle::dist_grid(A), 1e-6) << i;
    }
}

TEST(Geometry, NearestInK) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        StateMatrix A = random_state(2, rng);
        StateMatrix P = nearest_in_K(A);
        EXPECT_NEAR(dist_to_K(P), 0.0, 1e-14);
        EXPECT_NEAR((A - P).norm(), dist_to_K(A), 1e-12);
    }
    Vec v(2);
    v << 0.3, -0.7;
    EXPECT_NEAR(dist_to_K(StateMatrix{-1.0, -v, v}), 0.0, 1e-15);
}

TEST(Geometry, ScreensAndCertifiedSplit) {
    Screens sc = pm2d_screens();
    EXPECT_GT(sc.delta, 0.0);
    EXPECT_GE(sc.delta0, sc.delta);
    // a and q0 split the chord m1 m2 in thirds
    EXPECT_NEAR((sc.a - sc.m1).norm(), (sc.m2 - sc.m1).norm() / 3, 1e-14);
    T4Configuration cfg = t4_of(sc.A0(), sc);
    Vec acc = Vec::Zero(5);
    double lsum = 0.0;
    for (int j = 0; j < 4; ++j) {
        acc += cfg.lambda[j] * cfg.T[j].vec();
        lsum += cfg.lambda[j];
        EXPECT_GT(cfg.lambda[j], 0.0);
        EXPECT_LT(cfg.lambda[j], 1.0);
        EXPECT_NEAR(dist_to_K(cfg.T[j]), 0.0, 1e-12);
        EXPECT_TRUE(lambda_w_member(sc, cfg.T[j] - sc.A0()));
    }
    EXPECT_NEAR((acc - sc.A0().vec()).norm(), 0.0, 1e-12);
    EXPECT_NEAR(lsum, 1.0, 1e-12);
}

TEST(Geometry, T4OutsideBallRejected) {
    Screens sc = pm2d_screens();
    StateMatrix A = sc.A0();
    A.theta += 2.0 * sc.delta;
    try {
        t4_of(A, sc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolation);
    }
    A.theta = 1.0;
    EXPECT_THROW(t4_construct(A, sc), Error);
}

TEST(Geometry, Pm3dEquatorPairRejected) {
    Vec a(3), b(3);
    a << 1, 0, 0;
    b << 0, 1, 0;
    EXPECT_THROW(build_screens(builtin("pm3d"), {a, 0.3, 0.0}, {b, 0.3, 0.0}), Error);
    Vec c(3), d(3);
    c << 0, 0, 1;
    d << 1, 0, 1;
    Screens sc = build_screens(builtin("pm3d"), {c, 0.3, 0.0}, {d, 0.3, 0.0});
    EXPECT_NO_THROW(t4_of(sc.A0(), sc));
}

TEST(Geometry, EtaAndSteps) {
    EXPECT_NO_THROW(check_eta(0.15));
    try {
        check_eta(0.25);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EtaTooLarge);
    }
    EXPECT_EQ(minimal_steps(0.15), 12);
    EXPECT_FALSE(steps_admissible(0.15, 8));
    EXPECT_TRUE(steps_admissible(0.15, 12));
    EXPECT_FALSE(steps_admissible(0.15, 14));
    // (1 - eta)^4 and (1 - eta)^8 either side of 1/2
    EXPECT_GT(std::pow(0.85, 4), 0.5);
    EXPECT_LT(std::pow(0.85, 8), 0.5);
}

TEST(Geometry, PerturbedArmsClose) {
    Screens sc = pm2d_screens();
    T4Configuration cfg = t4_of(sc.A0(), sc);
    Arms ar = perturbed_arms(cfg, 0.05, 0.15);
    // sum lambda_j T_j = A makes the staged walk return to A
    EXPECT_LT(ar.closure, 1e-12);
    for (int j = 0; j < 4; ++j) {
        EXPECT_NEAR((ar.Ts[j] - (0.95 * cfg.T[j] + 0.05 * cfg.A)).norm(), 0.0, 1e-14);
        EXPECT_NEAR((ar.Tbar[j] - (ar.Ts[j] + ar.A[j] - cfg.A)).norm(), 0.0, 1e-14);
    }
    EXPECT_GE(ar.min_separation, 0.5 * dist_to_K(cfg.A));
    EXPECT_THROW(perturbed_arms(cfg, 0.5, 0.15), Error);
    EXPECT_THROW(perturbed_arms(cfg, 0.05, 0.3), Error);
}

TEST(Geometry, MembershipWitnessRecoversConstruction) {
    Screens sc = pm2d_screens();
    // A = t A' + (1 - t) T_j(A'') with A', A'' inside the ball
    StateMatrix A2 = sc.A0();
    A2.theta += 0.2 * sc.delta;
    T4Configuration cfg = t4_of(A2, sc);
    // A' on the segment from A'' toward T_1, so T_1 - A' stays in Lambda_W
    StateMatrix D = cfg.T[0] - A2;
    StateMatrix Ap = A2 + 0.3 * sc.delta / D.norm() * D;
    const double t = 0.6;
    StateMatrix A = t * Ap + (1 - t) * cfg.T[0];
    ASSERT_GT((A - sc.A0()).norm(), sc.delta);
    MembershipWitness w = membership_U(A, sc);
    ASSERT_TRUE(w.member);
    EXPECT_FALSE(w.in_ball);
    EXPECT_GT(w.t, 0.0);
    EXPECT_LT(w.t, 1.0);
    EXPECT_NEAR((w.t * w.Aprime + (1 - w.t) * w.T - A).norm(), 0.0, 1e-8);
    EXPECT_LT((w.Aprime - sc.A0()).norm(), sc.delta);
    EXPECT_LT((w.Adouble - sc.A0()).norm(), sc.delta);
    EXPECT_TRUE(membership_U(sc.A0(), sc).in_ball);
    StateMatrix far = sc.A0();
    far.theta = 0.999;
    far.q = far.u = Vec::Zero(2);
    EXPECT_FALSE(membership_U(far, sc, 11, 1).member);
}

TEST(Geometry, OpennessDeterminant) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.05, 0.95);
    for (int n : {2, 3})
        for (int i = 0; i < 20; ++i) {
            double th = u(rng), t = ut(rng);
            Vec q(n), x(n);
            for (int d = 0; d < n; ++d) {
                q(d) = u(rng);
                x(d) = u(rng);
            }
            EXPECT_NEAR(openness_linearization_det(th, q, x, t), (th - 1.0) * std::pow(t, n), 1e-6);
            EXPECT_NEAR(openness_jacobian(th, t, n), (th - 1.0) * std::pow(1 - t, n) * std::pow(t, n), 1e-15);
        }
    Vec q = Vec::Ones(2), x = Vec::Zero(2);
    EXPECT_NEAR(openness_linearization_det(1.0, q, x, 0.4), 0.0, 1e-8);
    EXPECT_NEAR(openness_linearization_det(0.3, q, x, 0.0), 0.0, 1e-8);
}

TEST(Geometry, ScreensRoundTrip) {
    Screens sc = pm2d_screens();
    auto path = (std::filesystem::temp_directory_path() / "ws_screens.wsc").string();
    write_screens(sc, path);
    Screens r = read_screens(path, builtin("pm2d"));
    EXPECT_EQ(r.delta, sc.delta);
    EXPECT_EQ(r.q0, sc.q0);
    EXPECT_EQ(r.S[1].points.size(), sc.S[1].points.size());
    EXPECT_EQ(r.S[1].points.back(), sc.S[1].points.back());
    T4Configuration a = t4_of(sc.A0(), sc), b = t4_of(r.A0(), r);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(a.lambda[j], b.lambda[j], 1e-14);
    EXPECT_THROW(read_screens(path, builtin("pm3d")), Error);
    std::filesystem::remove(path);
}
