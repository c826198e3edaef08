#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "stokes/errors.hpp"
#include "stokes/field.hpp"
#include "stokes/special.hpp"

using namespace stokes;

namespace {

double bump(double x, double c, double r, int p) {
    double u = (x - c) / r;
    return std::abs(u) >= 1.0 ? 0.0 : std::pow(1.0 - u * u, p);
}

// Smooth datum on [-1, 1] x [0, 1]; component weights c1, c2.
BoundaryData smooth_datum(double c1, double c2, double t_shift = 0.0) {
    auto f = [=](int j, const double* xp, double t) {
        double s = bump(xp[0], 0.0, 1.0, 6) * bump(t, 0.5 + t_shift, 0.5, 6);
        return j == 0 ? c1 * s : c2 * s;
    };
    return BoundaryData::sample(2, {Axis{-1.2, 0.1, 25}}, Axis{-0.2 + t_shift, 0.1, 15}, {{-1.0, 1.0}},
                                {t_shift, 1.0 + t_shift}, f);
}

// Coarse rule settings so unit tests stay fast.
FieldSpec quick_spec() {
    FieldSpec s;
    s.time_cap = 0.5;
    s.space_cap = 1.0;
    s.time_floor = 1.0 / 16;
    s.space_floor = 1.0 / 4;
    return s;
}

FieldLattice small_lattice(double t0 = 1.1) {
    FieldLattice L;
    L.space = {{-0.5, 0.0, 0.5}};
    L.xn = {0.4, 0.6};
    L.t = {t0, t0 + 0.2};
    return L;
}

}  // namespace

TEST_CASE("boundary data: validation, interpolation and file round trip") {
    auto cubic = [](int j, const double* xp, double t) {
        return (j + 1.0) * (xp[0] * xp[0] * xp[0] - 0.5 * xp[0] + 0.25) * (t * t - t + 2.0);
    };
    auto a = BoundaryData::sample(2, {Axis{-1.0, 0.25, 9}}, Axis{0.0, 0.25, 9}, {{-1.0, 1.0}}, {0.0, 2.0}, cubic,
                                  Smoothness::smooth, false);
    double xp[1] = {0.37};
    // cubic interpolation reproduces cubics away from the grid ends
    CHECK(a.eval(1, xp, 0.81) == doctest::Approx(cubic(1, xp, 0.81)).epsilon(1e-12));
    xp[0] = 1.5;
    CHECK(a.eval(0, xp, 0.81) == 0.0);

    auto lin = a;
    lin.smoothness = Smoothness::lq_only;
    xp[0] = 0.1;
    double w = 0.4;  // 0.1 sits at 0.4 of the cell [0, 0.25]
    double expect = (1 - w) * lin.values[0][lin.index(std::vector<int>{4}.data(), 2)] +
                    w * lin.values[0][lin.index(std::vector<int>{5}.data(), 2)];
    CHECK(lin.eval(0, xp, 0.5) == doctest::Approx(expect).epsilon(1e-14));
    CHECK_THROWS_AS(lin.eval_dt(0, xp, 0.5), SmoothnessError);

    // grid time derivative is fourth order
    auto smooth = [](int, const double*, double t) { return std::sin(3.0 * t); };
    for (double h : {0.02, 0.01}) {
        int nt = static_cast<int>(std::round(2.0 / h)) + 1;
        auto b = BoundaryData::sample(2, {Axis{0.0, 1.0, 1}}, Axis{0.0, h, nt}, {{-0.5, 0.5}}, {0.0, 2.0}, smooth,
                                      Smoothness::smooth, false);
        double x0[1] = {0.0};
        double err = std::abs(b.eval_dt(0, x0, 1.0) - 3.0 * std::cos(3.0));
        CHECK(err < 2e-6 * std::pow(h / 0.02, 4) + 1e-12);
    }

    auto bad = a;
    bad.values[0][0] = 1.0;
    bad.support_space = {{-0.5, 0.5}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    auto path = std::filesystem::temp_directory_path() / "stokes_bd_roundtrip.csv";
    a.save(path);
    auto r = BoundaryData::load(path);
    CHECK(r.n == 2);
    CHECK(r.values == a.values);
    CHECK(r.time.count == a.time.count);
    CHECK(r.support_time.b == a.support_time.b);
    std::filesystem::remove(path);

    // L^q norm of a constant block
    auto one = [](int j, const double*, double) { return j == 1 ? 2.0 : 0.0; };
    auto c = BoundaryData::sample(2, {Axis{0.0, 0.5, 3}}, Axis{0.0, 0.5, 3}, {{0.0, 1.0}}, {0.0, 1.0}, one);
    CHECK(c.lq_norm(2.0, 1) == doctest::Approx(std::sqrt(4.0 * 9 * 0.25)));
    CHECK(c.lq_norm(2.0, 0) == 0.0);
}

TEST_CASE("lag rules integrate constants over the lag box") {
    auto a = smooth_datum(1.0, 0.0);
    auto lat = small_lattice();
    auto box = lag_box(a, lat);
    CHECK(box.z[0].a == doctest::Approx(-1.5));
    CHECK(box.z[0].b == doctest::Approx(1.5));
    CHECK(box.tau.a == doctest::Approx(0.1));
    CHECK(box.tau.b == doctest::Approx(1.3));
    FieldSpec s;
    auto r = lag_rule(box, 0.1, s);
    double sum = 0.0, zt = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
        sum += r.w[q];
        zt += r.w[q] * r.z[q] * r.tau[q] * r.tau[q];
    }
    CHECK(sum == doctest::Approx(3.0 * 1.2).epsilon(1e-12));
    CHECK(std::abs(zt) < 1e-12);
    auto ir = instant_rule(box, 0.1, s);
    double isum = 0.0;
    for (double w : ir.w) isum += w;
    CHECK(isum == doctest::Approx(3.0).epsilon(1e-12));
    for (double t : ir.tau) CHECK(t == 0.0);
    CHECK(fnv1a("") == 14695981039346656037ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("velocity: zero data, linearity and causality") {
    auto sp = quick_spec();
    auto lat = small_lattice();
    auto zero = smooth_datum(0.0, 0.0);
    auto z = build_velocity(zero, 1.0, lat, sp);
    for (const auto& c : z.u)
        for (double v : c) CHECK(v == 0.0);

    auto a1 = smooth_datum(1.0, 0.0), a2 = smooth_datum(0.0, 1.0), a12 = smooth_datum(1.0, 1.0);
    auto u1 = build_velocity(a1, 1.0, lat, sp), u2 = build_velocity(a2, 1.0, lat, sp);
    auto u12 = build_velocity(a12, 1.0, lat, sp);
    auto u3 = build_velocity(a12.scaled(3.0), 1.0, lat, sp);
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < lat.size(); ++i) {
            double scale = 1e-10 * (1.0 + std::abs(u12.u[k][i]));
            CHECK(std::abs(u12.u[k][i] - u1.u[k][i] - u2.u[k][i]) < scale);
            CHECK(std::abs(u3.u[k][i] - 3.0 * u12.u[k][i]) < 1e-12 * (1.0 + std::abs(u3.u[k][i])));
        }
    double mag = 0.0;
    for (double v : u12.u[0]) mag = std::max(mag, std::abs(v));
    CHECK(mag > 1e-3);

    // before the data switches on nothing moves
    FieldLattice early = lat;
    early.t = {-0.5, 0.0};
    auto e = build_velocity(a12, 1.0, early, sp);
    for (const auto& c : e.u)
        for (double v : c) CHECK(v == 0.0);

    // shifting data and lattice by the same aligned time step reproduces the field
    auto shifted = smooth_datum(1.0, 1.0, 0.5);
    auto us = build_velocity(shifted, 1.0, small_lattice(1.6), sp);
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < lat.size(); ++i)
            CHECK(std::abs(us.u[k][i] - u12.u[k][i]) < 1e-12 * (1.0 + std::abs(u12.u[k][i])));
}

TEST_CASE("velocity at alpha = 0 equals the direct P0 convolution") {
    auto sp = quick_spec();
    auto lat = small_lattice();
    auto a = smooth_datum(1.0, 0.0);
    auto u = build_velocity(a, 0.0, lat, sp);
    auto rule = lag_rule(lag_box(a, lat), lat.xn.front(), sp);
    for (std::size_t ix = 0; ix < lat.xn.size(); ++ix)
        for (std::size_t is = 0; is < lat.space[0].size(); ++is)
            for (std::size_t it = 0; it < lat.t.size(); ++it) {
                double x = lat.space[0][is], t = lat.t[it];
                for (int k = 1; k <= 2; ++k) {
                    double s = 0.0;
                    for (std::size_t q = 0; q < rule.size(); ++q) {
                        double y[1] = {x - rule.z[q]};
                        double av = a.exact(0, y, t - rule.tau[q]);
                        if (std::abs(y[0]) > 1.0 || t - rule.tau[q] < 0.0 || t - rule.tau[q] > 1.0) av = 0.0;
                        if (av == 0.0) continue;
                        SpaceTimePoint p({rule.z[q]}, lat.xn[ix], rule.tau[q]);
                        s += rule.w[q] * P0(KernelId{k, 1}, p, sp.kernel).value * av;
                    }
                    std::size_t i = (ix * lat.space[0].size() + is) * lat.t.size() + it;
                    CHECK(std::abs(u.u[k - 1][i] - s) < 1e-10 * (1.0 + std::abs(s)));
                }
            }
}

TEST_CASE("pressure: zero data, two-path assembly, harmonicity") {
    auto sp = quick_spec();
    auto lat = small_lattice();
    auto zero = smooth_datum(0.0, 0.0);
    for (double v : build_pressure(zero, 1.0, lat, sp).p) CHECK(v == 0.0);

    // tangential data at n = 2: p = 2 d_1E *_{x'} a_1 + alpha g^alpha_1 * a_1
    double alpha = 0.7;
    lat = small_lattice(0.5);
    auto a = smooth_datum(1.0, 0.0);
    auto p = build_pressure(a, alpha, lat, sp).p;
    auto box = lag_box(a, lat);
    double xr = lat.xn.front();
    auto rule = lag_rule(box, xr, sp);
    auto irule = instant_rule(box, xr, sp);
    for (std::size_t ix = 0; ix < lat.xn.size(); ++ix)
        for (std::size_t is = 0; is < lat.space[0].size(); ++is)
            for (std::size_t it = 0; it < lat.t.size(); ++it) {
                double x = lat.space[0][is], t = lat.t[it], xn = lat.xn[ix];
                double s = 0.0;
                for (std::size_t q = 0; q < irule.size(); ++q) {
                    double y[1] = {x - irule.z[q]};
                    if (std::abs(y[0]) > 1.0 || t > 1.0) continue;
                    double z = irule.z[q];
                    s += irule.w[q] * 2.0 * (-z / (2.0 * std::numbers::pi * (z * z + xn * xn))) * a.exact(0, y, t);
                }
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    double y[1] = {x - rule.z[q]};
                    double ts = t - rule.tau[q];
                    if (std::abs(y[0]) > 1.0 || ts < 0.0 || ts > 1.0) continue;
                    SpaceTimePoint pt({rule.z[q]}, xn, rule.tau[q]);
                    s += rule.w[q] * alpha * g_alpha(1, pt, alpha, sp.kernel).value * a.exact(0, y, ts);
                }
                std::size_t i = (ix * lat.space[0].size() + is) * lat.t.size() + it;
                CHECK(std::abs(p[i] - s) < 1e-8 * (1.0 + std::abs(s)));
            }

    // harmonic in x at fixed t
    auto b = smooth_datum(1.0, -0.5);
    FieldLattice L = FieldLattice::uniform({0.0}, 0.6, 0.7, 0.1, 0.1, 2);
    L.t = {0.7};
    auto pv = build_pressure(b, 1.0, L, sp).p;
    auto at = [&](int ix, int is) { return pv[static_cast<std::size_t>(ix) * 5 + is]; };
    double lap = (-at(2, 0) + 16 * at(2, 1) - 30 * at(2, 2) + 16 * at(2, 3) - at(2, 4) - at(0, 2) + 16 * at(1, 2) -
                  30 * at(2, 2) + 16 * at(3, 2) - at(4, 2)) /
                 (12.0 * 0.01);
    double d2 = std::abs((at(2, 3) - 2 * at(2, 2) + at(2, 1)) / 0.01);
    CHECK(std::abs(lap) <= 1e-3 * std::max(d2, std::abs(at(2, 2))));
}

TEST_CASE("L^q-only data: finite field, delta' atoms rejected") {
    auto box = [](int j, const double* xp, double t) {
        return j == 0 && std::abs(xp[0]) <= 0.5 && t >= 0.2 && t <= 0.8 ? 1.0 : 0.0;
    };
    auto a = BoundaryData::sample(2, {Axis{-1.0, 0.1, 21}}, Axis{0.0, 0.1, 11}, {{-0.5, 0.5}}, {0.2, 0.8}, box,
                                  Smoothness::lq_only, false);
    auto sp = quick_spec();
    auto u = build_velocity(a, 1.0, small_lattice(0.9), sp);
    for (const auto& c : u.u)
        for (double v : c) CHECK(std::isfinite(v));
    auto normal = [](int j, const double* xp, double t) {
        return j == 1 && std::abs(xp[0]) <= 0.5 && t >= 0.2 && t <= 0.8 ? 1.0 : 0.0;
    };
    auto b = BoundaryData::sample(2, {Axis{-1.0, 0.1, 21}}, Axis{0.0, 0.1, 11}, {{-0.5, 0.5}}, {0.2, 0.8}, normal,
                                  Smoothness::lq_only, false);
    CHECK_THROWS_AS(build_pressure(b, 1.0, small_lattice(0.5), sp), SmoothnessError);
}

TEST_CASE("residual checks: zero fields and negative controls") {
    FieldLattice L = FieldLattice::uniform({0.0}, 1.0, 1.0, 0.1, 0.1, 3);
    Field u;
    u.lattice = L;
    u.u.assign(2, std::vector<double>(L.size(), 0.0));
    Field p = u;
    p.u.clear();
    p.p.assign(L.size(), 0.0);
    auto d = verify_divergence(u);
    CHECK(d.max_total == 0.0);
    CHECK(d.interior_points == 27);
    CHECK(verify_stokes_residual(u, p).max_total == 0.0);

    // p = x_1 gives residual (1, 0)
    std::size_t nt = L.t.size(), ns = L.space[0].size();
    for (std::size_t i = 0; i < L.size(); ++i) p.p[i] = L.space[0][(i / nt) % ns];
    auto r = verify_stokes_residual(u, p);
    CHECK(r.max_abs[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.max_abs[1] < 1e-12);

    // random lattice field is far from solenoidal
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& c : u.u)
        for (double& v : c) v = uni(rng);
    CHECK(verify_divergence(u).max_total > 1.0);

    Field wrong = p;
    wrong.lattice.t[0] += 1e-3;
    CHECK_THROWS_AS(verify_stokes_residual(u, wrong), DomainError);
    FieldLattice thin = L;
    thin.t = {1.0, 1.1};
    Field v;
    v.lattice = thin;
    v.u.assign(2, std::vector<double>(thin.size(), 0.0));
    CHECK_THROWS_AS(verify_divergence(v), DomainError);
}

TEST_CASE("kernel tables persist to the disk cache") {
    auto dir = std::filesystem::temp_directory_path() / "stokes_cache_test";
    std::filesystem::remove_all(dir);
    auto sp = quick_spec();
    sp.cache_dir = dir.string();
    auto a = smooth_datum(1.0, 0.5);
    auto lat = small_lattice();
    auto first = build_velocity(a, 1.0, lat, sp);
    std::size_t bins = 0, manifests = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".bin") ++bins;
        if (e.path().extension() == ".json") {
            ++manifests;
            std::ifstream f(e.path());
            auto j = nlohmann::json::parse(f);
            CHECK(j.contains("key"));
            CHECK(j.at("entries").get<int>() == 4);
        }
    }
    CHECK(bins == lat.xn.size());
    CHECK(manifests == lat.xn.size());
    auto second = build_velocity(a, 1.0, lat, sp);
    CHECK(first.u == second.u);
    std::filesystem::remove_all(dir);
}

TEST_CASE("Navier trace report") {
    auto sp = quick_spec();
    auto zero = smooth_datum(0.0, 0.0);
    auto z = verify_navier_trace(zero, 1.0, {0.25, 0.125}, sp);
    for (const auto& e : z.l2_errors)
        for (double v : e) CHECK(v == 0.0);
    CHECK_THROWS_AS(verify_navier_trace(zero, 1.0, {0.125, 0.25}, sp), ConfigError);

    // alpha = 0, normal data only: the tangential error is the size of d_n u_1 and decays
    auto a = smooth_datum(0.0, 1.0);
    auto r = verify_navier_trace(a, 0.0, {0.25, 0.125, 0.0625}, sp);
    CHECK(r.l2_errors[0][1] < r.l2_errors[0][0]);
    CHECK(r.l2_errors[0][2] < r.l2_errors[0][1]);
    CHECK(r.l2_errors[1][2] < r.l2_errors[1][0]);
    CHECK(r.l2_errors[1][2] < 0.2 * r.data_l2);
}

TEST_CASE("P0_kn operator ratios: parabolic rescaling") {
    auto sp = quick_spec();
    auto make = [](double lam) {
        auto f = [lam](int j, const double* xp, double t) {
            return j == 1 ? bump(lam * xp[0], 0.0, 1.0, 4) * bump(lam * lam * t, 0.5, 0.5, 4) : 0.0;
        };
        double L = 1.0 / lam, T = 1.0 / (lam * lam);
        return BoundaryData::sample(2, {Axis{-L, L / 10, 21}}, Axis{0.0, T / 10, 11}, {{-L, L}}, {0.0, T}, f);
    };
    double lam = 2.0;
    auto a1 = make(1.0), a2 = make(lam);
    auto r1 = p0kn_operator_bound({a1}, {0.25}, {2.0}, {Axis{-2.0, 0.1, 41}}, Axis{0.05, 0.1, 20}, sp);
    auto r2 = p0kn_operator_bound({a2}, {0.25 / lam}, {2.0}, {Axis{-2.0 / lam, 0.1 / lam, 41}},
                                  Axis{0.05 / (lam * lam), 0.1 / (lam * lam), 20}, sp);
    REQUIRE(r1.rows.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r1.rows[i].ratio > 0.0);
        CHECK(r2.rows[i].ratio == doctest::Approx(r1.rows[i].ratio).epsilon(0.05));
    }
    auto zero = make(1.0);
    for (auto& v : zero.values) std::fill(v.begin(), v.end(), 0.0);
    zero.exact = nullptr;
    CHECK_THROWS_AS(p0kn_operator_bound({zero}, {0.25}, {2.0}, {Axis{-2.0, 0.1, 41}}, Axis{0.05, 0.1, 20}, sp),
                    DomainError);
    CHECK_THROWS_AS(p0kn_operator_bound({a1}, {0.25}, {1.0}, {Axis{-2.0, 0.1, 41}}, Axis{0.05, 0.1, 20}, sp),
                    ConfigError);
}
