#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "epap/mesh.hpp"

using namespace epap;

namespace {

ScalarField field1d(const Mesh& m, std::initializer_list<double> v) {
    ScalarField f(m);
    std::copy(v.begin(), v.end(), f.v.begin());
    return f;
}

}  // namespace

TEST(Mesh, ConstructionInvariants) {
    auto m = Mesh::make_2d(8, 16, 1.0, 2.0);
    EXPECT_EQ(m.size(), 128u);
    EXPECT_DOUBLE_EQ(m.dx[0], 1.0 / 8);
    EXPECT_DOUBLE_EQ(m.dx[1], 2.0 / 16);
    EXPECT_THROW(Mesh::make_1d(3, 1.0), std::invalid_argument);
    EXPECT_THROW(Mesh::make(3, {4, 4}, {1, 1}, {PhiBc::Periodic, PhiBc::Periodic}), std::invalid_argument);
}

TEST(Mesh, CentralDiffOfConstantIsZero) {
    auto m = Mesh::make_2d(5, 6, 1.0, 1.0);
    ScalarField c(m, 3.25);
    for (int d = 0; d < 2; ++d)
        for (double x : central_diff(c, d).v) EXPECT_EQ(x, 0.0);
}

TEST(Mesh, CentralDiffSine) {
    auto m = Mesh::make_1d(8, 1.0);
    auto f = ScalarField::from_function(m, [](double x) { return std::sin(2 * std::numbers::pi * x); });
    auto d = central_diff(f, 0);
    for (int k = 0; k < 8; ++k) {
        const double want = (std::sin(2 * std::numbers::pi * (k + 1) / 8) - std::sin(2 * std::numbers::pi * (k - 1) / 8)) * 4;
        EXPECT_NEAR(d[k], want, 1e-14);
    }
}

TEST(Mesh, CentralDiffHandStencilWithWrap) {
    // (f[k+1] - f[k-1]) / (2 dx) by hand on (0, 1, 0, -1).
    auto quarter = Mesh::make_1d(4, 1.0);
    auto d = central_diff(field1d(quarter, {0, 1, 0, -1}), 0);
    EXPECT_DOUBLE_EQ(d[0], 4.0);
    EXPECT_DOUBLE_EQ(d[1], 0.0);
    EXPECT_DOUBLE_EQ(d[2], -4.0);
    EXPECT_DOUBLE_EQ(d[3], 0.0);
    auto half = Mesh::make_1d(4, 2.0);
    auto e = central_diff(field1d(half, {0, 1, 0, -1}), 0);
    EXPECT_DOUBLE_EQ(e[0], 2.0);
    EXPECT_DOUBLE_EQ(e[2], -2.0);
}

TEST(Mesh, SecondDiffHandStencil) {
    auto m = Mesh::make_1d(4, 4.0);  // dx = 1
    auto a = second_diff(field1d(m, {1, 0, 1, 0}), 0);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(a[k], k % 2 == 0 ? -2.0 : 2.0);
    auto b = second_diff(field1d(m, {1, -1, 1, -1}), 0);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(b[k], k % 2 == 0 ? -4.0 : 4.0);
    for (double x : second_diff(ScalarField(m, 7.0), 0).v) EXPECT_EQ(x, 0.0);
}

TEST(Mesh, SecondDiffFourierEigenvalue) {
    for (int N : {8, 13, 32})
        for (int K = 1; K < N / 2; ++K) {
            auto m = Mesh::make_1d(N, 1.0);
            auto f = ScalarField::from_function(m, [K](double x) { return std::cos(2 * std::numbers::pi * K * x); });
            auto g = second_diff(f, 0);
            const double h = m.dx[0];
            const double ev = -(4.0 / (h * h)) * std::pow(std::sin(std::numbers::pi * K * h), 2);
            for (int k = 0; k < N; ++k) EXPECT_NEAR(g[k], ev * f[k], 1e-12 * std::fabs(ev));
        }
}

TEST(Mesh, DirectionOutOfRange) {
    auto m = Mesh::make_1d(8, 1.0);
    ScalarField f(m);
    EXPECT_THROW(central_diff(f, 1), std::invalid_argument);
    EXPECT_THROW(second_diff(f, -1), std::invalid_argument);
}

TEST(Mesh, LinearityAndTelescoping) {
    auto m = Mesh::make_2d(9, 7, 1.0, 1.3);
    auto f = ScalarField::from_function(m, [](double x, double y) { return std::sin(3 * x) * std::exp(y); });
    auto g = ScalarField::from_function(m, [](double x, double y) { return x * x - y; });
    ScalarField h(m);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = 2.5 * f[k] - 0.75 * g[k];
    for (int d = 0; d < 2; ++d) {
        auto a = central_diff(h, d), fa = central_diff(f, d), ga = central_diff(g, d);
        auto b = second_diff(h, d), fb = second_diff(f, d), gb = second_diff(g, d);
        double sa = 0, sb = 0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            EXPECT_NEAR(a[k], 2.5 * fa[k] - 0.75 * ga[k], 1e-12);
            EXPECT_NEAR(b[k], 2.5 * fb[k] - 0.75 * gb[k], 1e-9);
            sa += fa[k];
            sb += fb[k];
        }
        EXPECT_NEAR(sa, 0.0, 1e-11);
        EXPECT_NEAR(sb, 0.0, 1e-9);
    }
}

TEST(Mesh, CentralDivergenceSecondOrder1D) {
    double prev = 0;
    for (int N : {64, 128, 256}) {
        auto m = Mesh::make_1d(N, 1.0);
        VectorField v(m);
        v[0] = ScalarField::from_function(m, [](double x) { return std::sin(2 * std::numbers::pi * x); });
        auto d = central_divergence(v);
        double err = 0;
        for (int k = 0; k < N; ++k)
            err = std::fmax(err, std::fabs(d[k] - 2 * std::numbers::pi * std::cos(2 * std::numbers::pi * k * m.dx[0])));
        if (prev > 0) EXPECT_NEAR(prev / err, 4.0, 0.05);
        prev = err;
    }
}

TEST(Mesh, CentralDivergenceOfCurlField2D) {
    // v = (d psi/dy, -d psi/dx) for psi = sin(2 pi (x + 2y)), sampled exactly.
    const double tp = 2 * std::numbers::pi;
    double prev = 0;
    for (int N : {32, 64, 128}) {
        auto m = Mesh::make_2d(N, N, 1.0, 1.0);
        VectorField v(m);
        v[0] = ScalarField::from_function(m, [&](double x, double y) { return 2 * tp * std::cos(tp * (x + 2 * y)); });
        v[1] = ScalarField::from_function(m, [&](double x, double y) { return -tp * std::cos(tp * (x + 2 * y)); });
        const double err = max_abs(central_divergence(v));
        EXPECT_GT(err, 1e-8);
        if (prev > 0) EXPECT_NEAR(prev / err, 4.0, 0.1);
        prev = err;
    }
    VectorField c(Mesh::make_2d(6, 6, 1.0, 1.0), 2.0);
    EXPECT_EQ(max_abs(central_divergence(c)), 0.0);
}

TEST(Mesh, Mean) {
    auto m = Mesh::make_1d(4, 1.0);
    EXPECT_DOUBLE_EQ(mean(ScalarField(m, 3.0)), 3.0);
    EXPECT_DOUBLE_EQ(mean(field1d(m, {1, -1, 1, -1})), 0.0);
    EXPECT_DOUBLE_EQ(mean(field1d(m, {1, 1, 2, 1})), 1.25);
}

TEST(Mesh, NonFiniteInputIsReported) {
    auto m = Mesh::make_1d(4, 1.0);
    auto f = field1d(m, {0, NAN, 0, 0});
    EXPECT_THROW(central_diff(f, 0), NonFiniteError);
    EXPECT_THROW(second_diff(f, 0), NonFiniteError);
}
