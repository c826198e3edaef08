#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stokes/convolved.hpp"
#include "stokes/kernels.hpp"
#include "stokes/special.hpp"

using namespace stokes;

namespace {

QuadratureSpec tight() {
    QuadratureSpec s;
    s.abs_tol = 1e-14;
    s.rel_tol = 1e-12;
    return s;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

MultiIndexDeriv D(int m, std::vector<int> l) { return MultiIndexDeriv(m, std::move(l)); }

// Raw two-fold definition of the I/J kernels at n = 2 with the y'-integral done by the
// closed-form convolution: outer z, inner y_n.
double raw_double(const std::function<double(double, double)>& f, double alpha, double xn, double t) {
    QuadratureSpec s;
    s.abs_tol = 1e-13;
    s.rel_tol = 1e-10;
    double st = std::sqrt(t);
    double Z = 60.0 / std::max(alpha, 0.1) + xn;
    auto outer = [&](double z) {
        auto inner = [&](double yn) { return f(yn, z); };
        double Y = xn + z + 40.0 * st;
        std::vector<double> bp{xn + z, z, st};
        for (double k : {1.0, 4.0}) {
            bp.push_back(xn + z - k * st);
            bp.push_back(xn + z + k * st);
            bp.push_back(z + k * st);
            bp.push_back(z - k * st);
        }
        return std::exp(-alpha * z) * integrate_checked(inner, 0.0, Y, s, bp).value;
    };
    std::vector<double> bp{st, xn, 1.0, 2.0, 4.0, 8.0, 16.0};
    return integrate_checked(outer, 0.0, Z, s, bp).value;
}

}  // namespace

TEST_CASE("I1 against the error-function closed form") {
    auto spec = tight();
    for (double x1 : {0.0, 0.3, 1.7})
        for (double xn : {0.0, 0.2, 1.1})
            for (double t : {0.01, 0.5, 3.0}) {
                SpaceTimePoint p({x1}, xn, t);
                double ref = heat1(x1, t) * 0.5 * std::erfc(xn / (2.0 * std::sqrt(t)));
                CHECK(rel_diff(I_kernel(1, p, 0.0, spec).value, ref) < 1e-9);
            }
    // alpha > 0 against direct quadrature of the half-line integral
    SpaceTimePoint p({0.4}, 0.3, 0.2);
    double alpha = 1.5;
    auto f = [&](double z) { return std::exp(-alpha * z) * heat_kernel({0.4, 0.3 + z}, 0.2); };
    double ref = integrate_checked(f, 0.0, 40.0, spec, {1.0, 2.0, 4.0}).value;
    CHECK(rel_diff(I_kernel(1, p, alpha, spec).value, ref) < 1e-10);
    // derivatives by finite differences
    double h = 1e-4;
    auto at = [&](double xn, double t) { return I_kernel(1, SpaceTimePoint({0.4}, xn, t), alpha, spec).value; };
    double dn = (at(0.3 + h, 0.2) - at(0.3 - h, 0.2)) / (2 * h);
    double dt = (at(0.3, 0.2 + h) - at(0.3, 0.2 - h)) / (2 * h);
    CHECK(rel_diff(I_kernel(1, p, alpha, spec, D(0, {0, 1})).value, dn) < 1e-6);
    CHECK(rel_diff(I_kernel(1, p, alpha, spec, D(1, {})).value, dt) < 1e-6);
}

TEST_CASE("u-substituted kernels match the raw two-fold definitions at n = 2") {
    auto spec = tight();
    double x1 = 0.7, xn = 0.4, t = 0.3, alpha = 1.0;
    SpaceTimePoint p({x1}, xn, t);
    auto G = [&](double s) { return heat1(s, t); };
    auto Gp = [&](double s) { return heat1_deriv(s, t, 1); };
    auto Q = [&](int b, int q, double h) { return convolved_e2(b, q, x1, h, t); };

    double i3 = raw_double([&](double yn, double z) { return Q(2, 0, yn + z) * (G(xn + z - yn) + G(xn + z + yn)); },
                           alpha, xn, t);
    CHECK(rel_diff(I_kernel(3, p, alpha, spec, D(0, {2})).value, i3) < 1e-7);

    double i4 = raw_double(
        [&](double yn, double z) { return Q(2, 0, xn + yn + z) * (G(z - yn) - G(z + yn)); }, alpha, xn, t);
    CHECK(rel_diff(I_kernel(4, p, alpha, spec, D(0, {2})).value, i4) < 1e-7);

    double j2 = raw_double([&](double yn, double z) { return Q(1, 1, yn + z) * (G(xn + z - yn) + G(xn + z + yn)); },
                           alpha, xn, t);
    CHECK(rel_diff(J_kernel(2, p, alpha, spec, D(0, {1})).value, j2) < 1e-7);

    double j3 = raw_double(
        [&](double yn, double z) { return Q(1, 0, xn + yn + z) * (Gp(z - yn) - Gp(z + yn)); }, alpha, xn, t);
    CHECK(rel_diff(J_kernel(3, p, alpha, spec, D(0, {1})).value, j3) < 1e-7);

    // I2 has the extra w-integral: inner variable plays the role of w
    double i2 = raw_double([&](double w, double z) { return std::exp(-alpha * w) * Q(2, 0, z) * G(xn + w + z); },
                           alpha, xn, t);
    CHECK(rel_diff(I_kernel(2, p, alpha, spec, D(0, {2})).value, i2) < 1e-7);
}

TEST_CASE("integration-by-parts form of the J3 kernel") {
    // J3 = int int dE(x_n+y_n+z)[G(z-y_n) + G(z+y_n)] + 2 int E(x_n+z) G(z), here with d_1 applied
    auto spec = tight();
    double x1 = -0.5, xn = 0.25, t = 0.2, alpha = 0.7;
    auto G = [&](double s) { return heat1(s, t); };
    auto Q = [&](int b, int q, double h) { return convolved_e2(b, q, x1, h, t); };
    double a = raw_double([&](double yn, double z) { return Q(1, 1, xn + yn + z) * (G(z - yn) + G(z + yn)); }, alpha,
                          xn, t);
    auto f = [&](double z) { return std::exp(-alpha * z) * Q(1, 0, xn + z) * G(z); };
    double b = 2.0 * integrate_checked(f, 0.0, 40.0, spec, {std::sqrt(t), 1.0, 4.0}).value;
    CHECK(rel_diff(J_kernel(3, SpaceTimePoint({x1}, xn, t), alpha, spec, D(0, {1})).value, a + b) < 1e-7);
}

TEST_CASE("decompositions of the normal derivatives of J1 and K2") {
    auto spec = tight();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), un(0.0, 1.5), ut(0.05, 2.0);
    double alpha = 1.0;
    double worst1 = 0.0, worst2 = 0.0;
    for (int s = 0; s < 20; ++s) {
        SpaceTimePoint p({ux(rng)}, un(rng), ut(rng));
        // d_1 applied to both sides
        double lhs1 = J_kernel(1, p, alpha, spec, D(0, {1, 1})).value;
        double rhs1 = -K_kernel(1, p, alpha, spec, D(0, {1})).value + alpha * J_kernel(1, p, alpha, spec, D(0, {1})).value -
                      K_kernel(2, p, alpha, spec, D(0, {1})).value;
        worst1 = std::max(worst1, std::abs(lhs1 - rhs1) / std::max(std::abs(lhs1), 1e-12));
        double lhs2 = K_kernel(2, p, alpha, spec, D(0, {1, 1})).value;
        double rhs2 = 0.5 * heat_kernel_deriv(p.full(), p.t, D(0, {1, 0})) +
                      alpha * K_kernel(2, p, alpha, spec, D(0, {1})).value - K_kernel(3, p, alpha, spec, D(0, {1})).value;
        worst2 = std::max(worst2, std::abs(lhs2 - rhs2) / std::max(std::abs(lhs2), 1e-12));
    }
    CHECK(worst1 < 1e-6);
    CHECK(worst2 < 1e-6);
}

TEST_CASE("principal-value form of K1 agrees with the closed form") {
    auto spec = tight();
    for (double x1 : {-1.3, 0.2, 0.9})
        for (double t : {0.05, 1.0}) {
            SpaceTimePoint p({x1}, 0.3, t);
            for (auto d : {D(0, {1, 2}), D(0, {1}), D(1, {2, 0}), D(0, {3, 1})}) {
                double a = K_kernel(1, p, 0.0, spec, d).value;
                double b = K1_principal_value(p, spec, d).value;
                CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
            }
        }
}

TEST_CASE("normal second derivative of J2 reduces to tangential ones") {
    // d_n^2 J2 = -Laplace' J2 - 2 Laplace' J1, d_1 applied
    auto spec = tight();
    double alpha = 0.8;
    for (auto xs : {std::array<double, 3>{0.4, 0.3, 0.2}, std::array<double, 3>{-1.1, 0.05, 0.7}}) {
        SpaceTimePoint p({xs[0]}, xs[1], xs[2]);
        double lhs = J_kernel(2, p, alpha, spec, D(0, {1, 2})).value;
        double rhs = -J_kernel(2, p, alpha, spec, D(0, {3})).value - 2.0 * J_kernel(1, p, alpha, spec, D(0, {3})).value;
        CHECK(rel_diff(lhs, rhs) < 1e-7);
    }
}

TEST_CASE("time derivatives agree with finite differences") {
    auto spec = tight();
    double alpha = 1.2, h = 1e-4;
    SpaceTimePoint p({0.6}, 0.35, 0.4);
    auto fd = [&](auto&& f) {
        return (f(SpaceTimePoint({0.6}, 0.35, 0.4 + h)) - f(SpaceTimePoint({0.6}, 0.35, 0.4 - h))) / (2 * h);
    };
    for (int idx = 2; idx <= 4; ++idx) {
        auto f = [&](const SpaceTimePoint& q) { return I_kernel(idx, q, alpha, spec, D(0, {2})).value; };
        CHECK(rel_diff(I_kernel(idx, p, alpha, spec, D(1, {2})).value, fd(f)) < 1e-6);
    }
    for (int idx = 1; idx <= 3; ++idx) {
        auto f = [&](const SpaceTimePoint& q) { return J_kernel(idx, q, alpha, spec, D(0, {1, 1})).value; };
        CHECK(rel_diff(J_kernel(idx, p, alpha, spec, D(1, {1, 1})).value, fd(f)) < 1e-6);
    }
}

TEST_CASE("kernels vanish for t <= 0") {
    auto spec = tight();
    for (double t : {0.0, -1.0}) {
        SpaceTimePoint p({0.3}, 0.2, t);
        for (int k = 1; k <= 2; ++k)
            for (int j = 1; j <= 2; ++j) {
                KernelId id{k, j, KernelPart::zero, D(0, {1})};
                CHECK(P0(id, p, spec).value == 0.0);
                CHECK(P_alpha(id, p, 1.0, spec).value == 0.0);
                CHECK(P_total(id, p, 1.0, spec).value == 0.0);
            }
        for (int i = 1; i <= 4; ++i) CHECK(I_kernel(i, p, 1.0, spec).value == 0.0);
        for (int i = 1; i <= 3; ++i) CHECK(J_kernel(i, p, 1.0, spec).value == 0.0);
        CHECK(g_alpha(1, p, 1.0, spec).value == 0.0);
    }
}

TEST_CASE("n = 2 kernels with an underived logarithmic E are rejected") {
    auto spec = tight();
    SpaceTimePoint p({0.3}, 0.2, 0.5);
    CHECK_THROWS_AS(J_kernel(1, p, 1.0, spec), DomainError);
    CHECK_THROWS_AS(I_kernel(2, p, 1.0, spec), DomainError);
    CHECK_THROWS_AS(K_kernel(1, p, 1.0, spec), DomainError);
    CHECK_NOTHROW(J_kernel(1, p, 1.0, spec, D(0, {1})));
    CHECK_THROWS_AS(J_kernel(4, p, 1.0, spec), DomainError);
    CHECK_THROWS_AS(KernelId({3, 1}).validate(2), DomainError);
}

TEST_CASE("P0 cross-checks and tangential isotropy") {
    auto spec = tight();
    SpaceTimePoint p({0.3, -0.7}, 0.4, 0.25);
    KernelId id12{1, 2, KernelPart::zero, {}};
    double ref = -2.0 * heat_time_tail(p.full(), p.t, D(0, {1, 1, 0}), spec);
    CHECK(rel_diff(P0(id12, p, spec).value, ref) < 1e-10);
    ref = -2.0 * heat_time_tail(p.full(), p.t, D(0, {1, 1, 0}), spec, TailMethod::quadrature);
    CHECK(rel_diff(P0(id12, p, spec).value, ref) < 1e-8);

    SpaceTimePoint q({-0.7, 0.3}, 0.4, 0.25);
    for (auto [k, j] : {std::pair{1, 1}, std::pair{1, 2}, std::pair{2, 2}}) {
        KernelId a{k, j, KernelPart::zero, {}};
        KernelId b{3 - k, 3 - j, KernelPart::zero, {}};
        CHECK(rel_diff(P0(a, p, spec).value, P0(b, q, spec).value) < 1e-10);
    }
    KernelId kn{1, 3, KernelPart::zero, {}};
    CHECK_THROWS_AS(P0(kn, SpaceTimePoint({0.0, 0.0}, 0.0, 1.0), spec), SingularityError);
    KernelId ok{1, 2, KernelPart::zero, {}};
    CHECK(std::isfinite(P0(ok, SpaceTimePoint({0.0, 0.0}, 0.0, 1.0), spec).value));
}

TEST_CASE("P0 satisfies the heat equation away from the atom") {
    auto spec = tight();
    SpaceTimePoint p({0.5}, 0.6, 0.3);
    for (int k = 1; k <= 2; ++k)
        for (int j = 1; j <= 2; ++j) {
            KernelId dt{k, j, KernelPart::zero, D(1, {})};
            KernelId dxx{k, j, KernelPart::zero, D(0, {2, 0})};
            KernelId dyy{k, j, KernelPart::zero, D(0, {0, 2})};
            double r = P0(dt, p, spec).value - P0(dxx, p, spec).value - P0(dyy, p, spec).value;
            CHECK(std::abs(r) < 1e-10 * std::abs(P0(dt, p, spec).value) + 1e-12);
        }
}

TEST_CASE("delta atoms") {
    auto a = delta_atom(KernelId{1, 2, KernelPart::zero, {}}, 2);
    REQUIRE(a.size() == 1);
    CHECK(a[0].order == 0);
    CHECK(a[0].coeff == -2.0);
    CHECK(a[0].l == std::vector<int>{1, 0});
    CHECK(delta_atom(KernelId{1, 1, KernelPart::zero, {}}, 2).empty());
    CHECK(delta_atom(KernelId{2, 2, KernelPart::alpha, {}}, 2).empty());

    KernelId pj{1, 1, KernelPart::zero, {}, Tensor::pressure};
    auto b = delta_atom(pj, 3);
    REQUIRE(b.size() == 1);
    CHECK(b[0].coeff == 2.0);
    CHECK(b[0].l == std::vector<int>{1, 0, 0});

    KernelId pn{1, 2, KernelPart::zero, {}, Tensor::pressure};
    auto c = delta_atom(pn, 2);
    REQUIRE(c.size() == 2);
    CHECK(c[0].order == 1);
    CHECK(c[0].l == std::vector<int>{0, 0});
    CHECK(c[1].order == 0);
    CHECK(c[1].l == std::vector<int>{0, 2});
    CHECK(c[1].spatial({0.3, 0.4}) == doctest::Approx(2.0 * fundamental_solution_deriv({0.3, 0.4}, {0, 2})));
}

TEST_CASE("assembled kernel is linear in alpha") {
    auto spec = tight();
    SpaceTimePoint p({0.4}, 0.3, 0.5);
    for (double alpha : {0.5, 2.0})
        for (int k = 1; k <= 2; ++k)
            for (int j = 1; j <= 2; ++j) {
                KernelId id{k, j, KernelPart::zero, D(0, {1})};
                double tot = P_total(id, p, alpha, spec).value;
                double a = P0(id, p, spec).value, b = P_alpha(id, p, alpha, spec).value;
                CHECK(std::abs(tot - a - alpha * b) <= 1e-12 * std::max(1.0, std::abs(tot)));
            }
}

TEST_CASE("pressure kernel is harmonic and continuous in alpha") {
    auto spec = tight();
    double h = 1e-3;
    for (int j = 1; j <= 2; ++j)
        for (auto xs : {std::array<double, 3>{0.4, 0.5, 0.3}, std::array<double, 3>{-1.0, 0.8, 1.0}}) {
            auto g = [&](double a, double b) { return g_alpha(j, SpaceTimePoint({a}, b, xs[2]), 1.0, spec).value; };
            double c = g(xs[0], xs[1]);
            double lap = (g(xs[0] + h, xs[1]) + g(xs[0] - h, xs[1]) + g(xs[0], xs[1] + h) + g(xs[0], xs[1] - h) - 4 * c) /
                         (h * h);
            double scale = std::abs(g_alpha(j, SpaceTimePoint({xs[0]}, xs[1], xs[2]), 1.0, spec, D(0, {2})).value);
            CHECK(std::abs(lap) <= 1e-4 * scale);
        }
    SpaceTimePoint p({0.3}, 0.4, 0.5);
    double prev = g_alpha(1, p, 0.0, spec).value;
    CHECK(std::isfinite(prev));
    for (int s = 1; s <= 200; ++s) {
        double v = g_alpha(1, p, 0.01 * s, spec).value;
        CHECK(std::abs(v - prev) < 1e-2 * std::abs(prev));
        prev = v;
    }
}

TEST_CASE("I2 is invariant under rotations of x' at n = 3") {
    QuadratureSpec spec;
    spec.abs_tol = 1e-12;
    spec.rel_tol = 1e-9;
    double a = I_kernel(2, SpaceTimePoint({1.0, 0.0}, 0.3, 0.4), 1.0, spec).value;
    double b = I_kernel(2, SpaceTimePoint({0.6, 0.8}, 0.3, 0.4), 1.0, spec).value;
    double c = I_kernel(2, SpaceTimePoint({-std::sqrt(0.5), std::sqrt(0.5)}, 0.3, 0.4), 1.0, spec).value;
    CHECK(rel_diff(b, a) < 1e-6);
    CHECK(rel_diff(c, a) < 1e-6);
}
