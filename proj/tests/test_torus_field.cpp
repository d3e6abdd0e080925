#include <wildscalar/torus_field.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <filesystem>
#include <random>

using namespace wildscalar;

namespace {

PhysicalField random_field(const GridSpec& g, int channels, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    PhysicalField f(g, channels);
    for (double& v : f.data) v = nd(rng);
    return f;
}

double max_diff(const PhysicalField& a, const PhysicalField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}

TEST(TorusField, GridValidation) {
    EXPECT_THROW((GridSpec{2, 6, 8, 1.0}.validate()), Error);
    EXPECT_THROW((GridSpec{4, 8, 8, 1.0}.validate()), Error);
    EXPECT_THROW((GridSpec{2, 8, 1, 1.0}.validate()), Error);
    EXPECT_THROW((GridSpec{2, 8, 8, 0.0}.validate()), Error);
    EXPECT_NO_THROW((GridSpec{3, 8, 8, 1.0}.validate()));
    EXPECT_NO_THROW((GridSpec{2, 8, 1, 1.0}.validate_layout()));
}

TEST(TorusField, RoundTripAndParseval) {
    GridSpec g{2, 16, 4, 1.0};
    PhysicalField f = random_field(g, 2, 3);
    SpectralField s = to_spectral(f);
    EXPECT_LT(max_diff(to_physical(s), f), 1e-13);
    double mean_sq = 0.0;
    for (double v : f.data) mean_sq += v * v;
    mean_sq /= double(g.spatial());
    EXPECT_NEAR(spectral_energy(s), mean_sq, 1e-10 * mean_sq);
}

TEST(TorusField, ApplyMultiplierMatchesDftSum3d) {
    GridSpec g{3, 8, 2, 1.0};
    PhysicalField th = random_field(g, 1, 11);
    auto sym = builtin("pm3d");
    PhysicalField u = to_physical(apply_multiplier(to_spectral(th), *sym));
    PhysicalField ref = oracle::dft_oracle(th, *sym);
    EXPECT_LT(max_diff(u, ref), 1e-10 * std::max(1.0, sup_norm(ref)));
}

TEST(TorusField, ApplyMultiplierMatchesDftSumMgAndSqg) {
    GridSpec g3{3, 8, 1, 1.0};
    PhysicalField th3 = random_field(g3, 1, 5);
    // remove energy on the singular axis of mg before comparing
    SpectralField s3 = to_spectral(th3);
    auto mg = builtin("mg");
    MultiplierTable tab = multiplier_table(g3, *mg);
    multiply_modes(s3, [&](std::size_t f) { return cplx(tab.singular[f] ? 0.0 : 1.0); });
    th3 = to_physical(s3);
    EXPECT_LT(max_diff(to_physical(apply_multiplier(to_spectral(th3), *mg)), oracle::dft_oracle(th3, *mg)), 1e-10);

    GridSpec g2{2, 8, 3, 1.0};
    PhysicalField th2 = random_field(g2, 1, 6);
    auto sqg = builtin("sqg");
    EXPECT_LT(max_diff(to_physical(apply_multiplier(to_spectral(th2), *sqg)), oracle::dft_oracle(th2, *sqg)), 1e-10);
}

TEST(TorusField, SingularSupportRejected) {
    GridSpec g{3, 8, 1, 1.0};
    PhysicalField th(g, 1);
    for (std::size_t p = 0; p < g.spatial(); ++p) th(0, 0, p) = std::cos(2.0 * position(g, p)(0));
    try {
        apply_multiplier(to_spectral(th), *builtin("mg"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularSupport);
    }
}

TEST(TorusField, SpatialDerivative) {
    GridSpec g{2, 32, 1, 1.0};
    PhysicalField f(g, 1), ref(g, 1);
    for (std::size_t p = 0; p < g.spatial(); ++p) {
        Vec x = position(g, p);
        f(0, 0, p) = std::sin(3 * x(0) + 2 * x(1));
        ref(0, 0, p) = 2 * std::cos(3 * x(0) + 2 * x(1));
    }
    EXPECT_LT(max_diff(to_physical(spatial_derivative(to_spectral(f), 1)), ref), 1e-12);
}

TEST(TorusField, TimeDerivativeSchemes) {
    GridSpec g{2, 4, 32, 2.0};
    PhysicalField per(g, 1), cub(g, 1);
    for (int t = 0; t < g.nt; ++t) {
        double tt = g.time(t);
        for (std::size_t p = 0; p < g.spatial(); ++p) {
            per(0, t, p) = std::sin(two_pi * 3 * tt / g.T);
            cub(0, t, p) = tt * tt * tt - 2 * tt;
        }
    }
    PhysicalField dp = to_physical(time_derivative(to_spectral(per), TimeScheme::spectral));
    PhysicalField dc = to_physical(time_derivative(to_spectral(cub), TimeScheme::fourth_order));
    for (int t = 0; t < g.nt; ++t) {
        double tt = g.time(t);
        EXPECT_NEAR(dp(0, t, 0), two_pi * 3 / g.T * std::cos(two_pi * 3 * tt / g.T), 1e-11);
        // five-point stencils are exact on cubics, closures included
        EXPECT_NEAR(dc(0, t, 0), 3 * tt * tt - 2, 1e-10);
    }
}

TEST(TorusField, DivergenceFreeState) {
    GridSpec g{2, 16, 8, 1.0};
    auto sym = builtin("pm2d");
    StateField U(g, sym);
    PhysicalField th = random_field(g, 1, 9);
    // theta constant in time, q = 0, u = T(theta): both rows vanish
    for (int t = 1; t < g.nt; ++t) std::copy(th.at(0, 0), th.at(0, 0) + g.spatial(), th.at(0, t));
    SpectralField ts = to_spectral(th);
    drop_unretained(ts);
    th = to_physical(ts);
    PhysicalField u = to_physical(apply_multiplier(ts, *sym));
    std::copy(th.data.begin(), th.data.end(), U.data.at(0, 0));
    for (int d = 0; d < 2; ++d) std::copy(u.at(d, 0), u.at(d, 0) + g.spatial() * g.nt, U.data.at(U.u_channel(d), 0));
    EXPECT_LT(divergence_residual_relative(U, TimeScheme::spectral), 1e-13);
    EXPECT_LT(divergence_residual_relative(U, TimeScheme::fourth_order), 1e-13);
    // a q that is not divergence free shows up
    for (std::size_t p = 0; p < g.spatial(); ++p) U.data(U.q_channel(0), 3, p) = std::sin(position(g, p)(0));
    EXPECT_GT(divergence_residual_relative(U, TimeScheme::spectral), 0.1);
}

TEST(TorusField, ConeCheck) {
    GridSpec g{2, 16, 1, 1.0};
    PhysicalField f(g, 1);
    for (std::size_t p = 0; p < g.spatial(); ++p) {
        Vec x = position(g, p);
        f(0, 0, p) = 3 * std::cos(4 * x(0)) + std::cos(4 * x(1));
    }
    Vec c(2);
    c << 1, 0;
    std::vector<RegularPatch> cones{{c, 0.2, 0.0}};
    auto rep = support_cone_check(to_spectral(f), cones);
    EXPECT_NEAR(rep.fraction_inside, 0.9, 1e-12);
    auto mask = cone_mask(g, cones);
    const auto& mt = modes(g);
    for (std::size_t i = 1; i < mask.size(); ++i) {
        double a = std::abs(std::atan2(double(mt.k[i][1]), double(mt.k[i][0])));
        EXPECT_EQ(bool(mask[i]), std::min(a, pi - a) <= 0.2) << i;
    }
}

TEST(TorusField, Mollifiers) {
    GridSpec g{2, 16, 16, 1.0};
    PhysicalField f = random_field(g, 1, 2);
    double m0 = 0.0, m1 = 0.0;
    PhysicalField s = mollify(f, 0.3);
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        m0 += f.data[i];
        m1 += s.data[i];
    }
    EXPECT_NEAR(m0, m1, 1e-9);
    EXPECT_LT(sup_norm(s), sup_norm(f));
    PhysicalField one(g, 1, 1.0);
    PhysicalField ot = mollify_time(one, 0.5 * g.dt());
    EXPECT_NEAR(ot(0, g.nt / 2, 0), 1.0, 1e-14);
    EXPECT_LT(ot(0, 0, 0), 1.0);
}

TEST(TorusField, Wsf1RoundTrip) {
    GridSpec g{3, 4, 3, 2.5};
    PhysicalField f = random_field(g, 7, 4);
    auto path = (std::filesystem::temp_directory_path() / "ws_field.wsf1").string();
    write_wsf1(f, path);
    PhysicalField r = read_wsf1(path);
    EXPECT_TRUE(r.grid == g);
    EXPECT_EQ(r.channels, 7);
    EXPECT_EQ(r.data, f.data);
    {
        std::ofstream o(path, std::ios::binary);
        o << "XXXX";
    }
    try {
        read_wsf1(path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IoError);
    }
    std::filesystem::remove(path);
}
