#include <wildscalar/symbols.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace wildscalar;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

}

TEST(Symbols, Pm2dMatchesTrigForm) {
    auto s = builtin("pm2d");
    for (int i = 0; i < 37; ++i) {
        double a = 0.17 * i;
        // m(cos a, sin a) = (sin 2a / 2, -(1 + cos 2a) / 2)
        Vec m = s->eval(v2(3.0 * std::cos(a), 3.0 * std::sin(a)));
        EXPECT_NEAR(m(0), 0.5 * std::sin(2 * a), 1e-14);
        EXPECT_NEAR(m(1), -0.5 * (1 + std::cos(2 * a)), 1e-14);
    }
}

TEST(Symbols, BuiltinsPassGate) {
    for (const char* name : {"pm2d", "pm3d", "mg"}) {
        auto rep = check_admissibility(*builtin(name), 1000, 1e-12);
        EXPECT_TRUE(rep.admissible()) << name;
        EXPECT_EQ(rep.samples_used, 1000) << name;
        EXPECT_LE(rep.even_violation, 1e-12);
        EXPECT_LE(rep.homogeneity_violation, 1e-12);
        EXPECT_LE(rep.tangency_violation, 1e-12);
    }
}

TEST(Symbols, SqgIsOdd) {
    auto rep = check_admissibility(*builtin("sqg"), 1000, 1e-12);
    EXPECT_FALSE(rep.even);
    EXPECT_TRUE(rep.tangent);
    EXPECT_FALSE(rep.admissible());
    auto s = builtin("sqg");
    Vec x = v2(0.3, -0.8);
    EXPECT_NEAR((s->eval(x) + s->eval(-x)).norm(), 0.0, 1e-15);
}

TEST(Symbols, RangesLieOnSpheres) {
    auto p2 = builtin("pm2d");
    auto p3 = builtin("pm3d");
    for (const Vec& xi : sphere_samples(2, 500)) EXPECT_NEAR((p2->eval(xi) - v2(0, -0.5)).norm(), 0.5, 1e-12);
    for (const Vec& xi : sphere_samples(3, 500)) EXPECT_NEAR((p3->eval(xi) - v3(0, 0, -0.5)).norm(), 0.5, 1e-12);
}

TEST(Symbols, EvalErrors) {
    auto s = builtin("pm2d");
    try {
        s->eval(Vec::Zero(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ZeroFrequency);
    }
    try {
        s->eval(Vec::Ones(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    }
    try {
        builtin("mg")->eval(v3(2.0, 0.0, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularFrequency);
    }
    try {
        builtin("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownSymbol);
    }
}

TEST(Symbols, RadicalInverse) {
    EXPECT_DOUBLE_EQ(radical_inverse(1, 2), 0.5);
    EXPECT_DOUBLE_EQ(radical_inverse(2, 2), 0.25);
    EXPECT_DOUBLE_EQ(radical_inverse(3, 2), 0.75);
    EXPECT_NEAR(radical_inverse(5, 3), 7.0 / 9.0, 1e-15);
}

TEST(Symbols, SphereSamplesAreUnitAndDeterministic) {
    auto a = sphere_samples(3, 64), b = sphere_samples(3, 64);
    ASSERT_EQ(a.size(), 64u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i].norm(), 1.0, 1e-14);
        EXPECT_EQ(a[i], b[i]);
    }
}

TEST(Symbols, ImmersionPm2dUnitSpeed) {
    // |d m / d angle| = 1 for the circle parametrization above
    auto s = builtin("pm2d");
    for (double a : {0.1, 1.0, 2.5}) {
        auto im = immersion_at(*s, v2(std::cos(a), std::sin(a)), 1e-4);
        EXPECT_NEAR(im.smin, 1.0, 1e-7);
    }
}

TEST(Symbols, Pm3dEquatorNotImmersed) {
    auto im = immersion_at(*builtin("pm3d"), v3(1, 0, 0), 1e-4);
    EXPECT_LT(im.smin, 1e-3);
    auto ok = immersion_at(*builtin("pm3d"), unit(v3(1, 0, 1)), 1e-4);
    EXPECT_GT(ok.smin, 0.1);
}

TEST(Symbols, RegularPatchesAndSpan) {
    auto s = builtin("pm2d");
    auto patches = find_regular_patches(*s, 0.3);
    EXPECT_FALSE(patches.empty());
    for (const auto& p : patches) EXPECT_GE(p.jacobian_min_singular_value, 1e-3);
    auto span = check_span_condition(*s, patches);
    EXPECT_TRUE(span.spans);
    EXPECT_EQ(span.witness.size(), 2u);

    auto mg = builtin("mg");
    auto mp = find_regular_patches(*mg, 0.4);
    for (const auto& p : mp) EXPECT_GT(mg->gap(p.center), p.angular_radius);
}

TEST(Symbols, TableRoundTripAndInterpolation) {
    auto s = builtin("pm3d");
    SymbolTable t = tabulate(*s, {90, 180}, 1);
    auto path = (std::filesystem::temp_directory_path() / "ws_sym_table.bin").string();
    write_symbol_table(t, path);
    SymbolTable r = read_symbol_table(path);
    EXPECT_EQ(r.n, 3);
    EXPECT_EQ(r.counts, t.counts);
    EXPECT_EQ(r.values, t.values);
    auto ts = resolve_symbol(path);
    // nodes are exact, off-node error is second order
    Vec node = t.node(10, 20);
    EXPECT_NEAR((ts->eval(node) - s->eval(node)).norm(), 0.0, 1e-12);
    double worst = 0.0;
    for (const Vec& xi : sphere_samples(3, 200)) worst = std::max(worst, (ts->eval(xi) - s->eval(xi)).norm());
    EXPECT_LT(worst, 2e-3);
    std::filesystem::remove(path);
}

TEST(Symbols, TableRejectsBadHeader) {
    auto path = (std::filesystem::temp_directory_path() / "ws_sym_bad.bin").string();
    {
        std::ofstream o(path, std::ios::binary);
        std::uint32_t n = 5;
        o.write(reinterpret_cast<const char*>(&n), 4);
    }
    EXPECT_THROW(read_symbol_table(path), Error);
    std::filesystem::remove(path);
}
