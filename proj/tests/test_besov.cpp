#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stokes/besov.hpp"
#include "stokes/special.hpp"

using namespace stokes;

namespace {

constexpr double kPi = std::numbers::pi;

// Gaussian wave packet with carrier w, width sigma, centred at tc, cut at 8 sigma.
Signal packet(double w, double sigma, double tc, double dt, std::size_t len) {
    Interval supp{tc - 8.0 * sigma, tc + 8.0 * sigma};
    return Signal::sample(
        [&](double t) {
            double u = (t - tc) / sigma;
            return std::cos(w * (t - tc)) * std::exp(-0.5 * u * u);
        },
        0.0, dt, len, supp);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("dyadic partition sums to one") {
    LPProfile p;
    for (int k = 0; k <= 200; ++k) {
        double s = std::pow(10.0, -8.0 + 16.0 * k / 200.0);
        double sum = 0.0;
        for (int j = -60; j <= 60; ++j) sum += p.phi(std::ldexp(s, -j));
        CHECK(std::abs(sum - 1.0) <= 1e-10);
        CHECK(p.phi(s) >= 0.0);
    }
    CHECK(p.phi(0.74) == 0.0);
    CHECK(p.phi(2.67) == 0.0);
    CHECK(p.phi(1.4) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("block of a packet inside the plateau reproduces it") {
    // plateau of level j is [4/3, 3/2] 2^j
    int j = 10;
    double w = 1.4166 * std::ldexp(1.0, j);
    auto g = packet(w, 0.12, 1.0, 1.0 / 16384, 1 << 15);
    auto b = lp_block(g, j);
    CHECK(b.size() >= g.size());
    CHECK(max_abs_diff(b.samples, g.samples, g.size()) <= 1e-10);
    double tail = 0.0;
    for (std::size_t i = g.size(); i < b.size(); ++i) tail = std::max(tail, std::abs(b.samples[i]));
    CHECK(tail <= 1e-10);
    auto b3 = lp_block(g, j + 3);
    double m = 0.0;
    for (double v : b3.samples) m = std::max(m, std::abs(v));
    CHECK(m <= 1e-10);
}

TEST_CASE("blocks over the resolvable band sum to a band-limited signal") {
    double dt = 1.0 / 8192;
    std::size_t len = 1 << 14;
    auto a = packet(300.0, 0.05, 0.7, dt, len);
    auto c = packet(4000.0, 0.02, 1.1, dt, len);
    Signal g = a;
    for (std::size_t i = 0; i < len; ++i) g.samples[i] += c.samples[i];
    g.support = {a.support.a, c.support.b};
    auto band = resolvable_band(g);
    REQUIRE(band.jmax - band.jmin >= 6);
    auto blocks = lp_blocks(g, band.jmin, band.jmax);
    std::vector<double> sum(blocks.front().size(), 0.0);
    for (const auto& b : blocks)
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b.samples[i];
    CHECK(max_abs_diff(sum, g.samples, g.size()) <= 1e-8);
}

TEST_CASE("out-of-band levels raise a resolution error") {
    auto g = construct_gT(GTKind::box, 2.0);
    auto band = resolvable_band(g);
    CHECK_THROWS_AS(lp_block(g, band.jmax + 1), ResolutionError);
    CHECK_THROWS_AS(lp_block(g, band.jmin - 1), ResolutionError);
    try {
        lp_block(g, band.jmax + 1);
    } catch (const ResolutionError& e) {
        CHECK(e.jmin_ok == band.jmin);
        CHECK(e.jmax_ok == band.jmax);
    }
}

TEST_CASE("dyadic covariance of block norms") {
    auto g = construct_gT(GTKind::box, 2.0);
    auto g2 = g.dilated(2.0);
    auto band = resolvable_band(g);
    for (double q : {1.5, 2.0, 4.0}) {
        for (int j = band.jmin + 1; j <= band.jmax; j += 3) {
            double a = lq_norm(lp_block(g2, j), q);
            double b = std::pow(2.0, -1.0 / q) * lq_norm(lp_block(g, j - 1), q);
            CHECK(std::abs(a - b) <= 1e-9 * b);
        }
    }
}

TEST_CASE("dyadic covariance with both signals sampled on one grid") {
    // band-limited packet; g(2.) resampled on the same spacing
    double dt = 1.0 / 8192, sigma = 0.04, w = 900.0;
    std::size_t len = 1 << 14;
    auto g = packet(w, sigma, 0.8, dt, len);
    auto g2 = packet(2.0 * w, 0.5 * sigma, 0.4, dt, len);
    int j = 10;
    for (double q : {2.0, 4.0}) {
        double a = lq_norm(lp_block(g2, j), q);
        double b = std::pow(2.0, -1.0 / q) * lq_norm(lp_block(g, j - 1), q);
        CHECK(std::abs(a - b) <= 1e-8 * b);
    }
}

TEST_CASE("truncated norm: zero, scaling, window monotonicity") {
    auto g = construct_gT(GTKind::box, 2.0);
    auto band = resolvable_band(g);
    Signal z = g;
    std::fill(z.samples.begin(), z.samples.end(), 0.0);
    auto p = BesovParams::critical(2.0);
    CHECK(besov_norm_truncated(z, p, band.jmin, band.jmax) == 0.0);
    for (double q : {1.5, 2.0, 4.0}) {
        auto pq = BesovParams::critical(q);
        double a = besov_norm_truncated(g.dilated(2.0), pq, band.jmin + 1, band.jmax + 1);
        double b = besov_norm_truncated(g, pq, band.jmin, band.jmax);
        CHECK(a / b == doctest::Approx(std::pow(2.0, pq.s - 1.0 / q)).epsilon(1e-8));
        double prev = 0.0;
        for (int hi = band.jmin; hi <= band.jmax; ++hi) {
            double v = besov_norm_truncated(g, pq, band.jmin, hi);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("box data has a finite norm that settles as the window grows") {
    auto g = construct_gT(GTKind::box, 2.0);
    auto band = resolvable_band(g);
    auto p = BesovParams::critical(2.0);
    auto terms = besov_terms(g, p, band.jmin, band.jmax);
    double total = 0.0;
    for (double t : terms) total += t;
    CHECK(std::isfinite(total));
    CHECK(terms.back() <= 1e-10 * total);
}

TEST_CASE("lacunary data: bounded with harmonic growth of the truncated norm") {
    GTParams gp;
    gp.J = 12;
    auto g12 = construct_gT(GTKind::lacunary, 2.0, gp);
    double bound = 0.0;
    for (int j = 1; j <= 12; ++j) bound += std::pow(2.0, -j / 4.0) / std::sqrt(double(j));
    double sup = 0.0;
    for (double v : g12.samples) sup = std::max(sup, std::abs(v));
    CHECK(sup <= bound * (1.0 + 1e-12));
    CHECK(sup > 0.2 * bound);

    gp.J = 16;
    auto g = construct_gT(GTKind::lacunary, 2.0, gp);
    auto band = resolvable_band(g);
    REQUIRE(band.jmax == 16 + 5);
    auto p = BesovParams::critical(2.0);
    auto terms = besov_terms(g, p, band.jmin, band.jmax);
    // component j sits at level j + 5 (and j + 4)
    auto upto = [&](int J) {
        double s = 0.0;
        for (int k = band.jmin; k <= J + 5; ++k) s += terms[k - band.jmin];
        return std::sqrt(s);
    };
    auto harmonic = [](int J) {
        double h = 0.0;
        for (int j = 1; j <= J; ++j) h += 1.0 / j;
        return h;
    };
    double ratio = upto(16) / upto(8);
    double target = std::sqrt(harmonic(16) / harmonic(8));
    CHECK(std::abs(ratio / target - 1.0) <= 0.10);

    // norm^q affine in log J
    std::vector<double> xs, ys;
    for (int J = 4; J <= 16; ++J) {
        xs.push_back(std::log(double(J)));
        ys.push_back(std::pow(upto(J), 2.0));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    CHECK(sxy * sxy / (sxx * syy) >= 0.98);
}

TEST_CASE("holder data") {
    GTParams gp;
    gp.beta = 0.5;
    CHECK(gT_value(GTKind::holder_beta, 2.0, gp, 1.0) == 0.0);
    CHECK(gT_value(GTKind::holder_beta, 2.0, gp, 1.0 - 1e-8) == doctest::Approx(1e-4).epsilon(1e-6));
    CHECK(gT_value(GTKind::holder_beta, 2.0, gp, 0.75) == doctest::Approx(0.5));
    CHECK(gT_value(GTKind::holder_beta, 2.0, gp, 0.2) == 0.0);
    auto g = construct_gT(GTKind::holder_beta, 2.0, gp);
    CHECK_NOTHROW(g.validate());
    gp.beta = 0.6;
    CHECK_THROWS_AS(construct_gT(GTKind::holder_beta, 2.0, gp), ParameterError);
    gp.beta = 0.25;
    CHECK_THROWS_AS(construct_gT(GTKind::holder_beta, 1.0, gp), ParameterError);
    CHECK_THROWS_AS(BesovParams::critical(1.0), ParameterError);
}

TEST_CASE("signal invariants are enforced") {
    Signal g;
    g.samples = {0.0, 1.0, 0.0, 0.5};
    g.dt = 0.1;
    g.support = {0.05, 0.15};
    CHECK_THROWS_AS(g.validate(), ParameterError);
    g.samples[3] = 0.0;
    CHECK_NOTHROW(g.validate());
    g.dt = 0.0;
    CHECK_THROWS_AS(g.validate(), ParameterError);
}

TEST_CASE("time integral of the 1D heat kernel") {
    QuadratureSpec s;
    s.abs_tol = 0.0;
    s.rel_tol = 1e-13;
    for (double x : {0.01, 0.3, 1.0, 3.0})
        for (double T : {0.001, 0.1, 1.0, 10.0}) {
            auto f = [&](double tau) { return tau > 0.0 ? heat1(x, tau) : 0.0; };
            double ref = integrate(f, 0.0, T, s, {0.25 * x * x}).value;
            CHECK(heat1_time_integral(x, T) == doctest::Approx(ref).epsilon(1e-10).scale(1e-300));
        }
}

TEST_CASE("half-space extension") {
    double dt = 1.0 / 4096;
    std::size_t len = 8192;
    auto bump = [](double t) {
        double u = (t - 0.5) / 0.05;
        return std::abs(u) < 1.0 ? std::pow(1.0 - u * u, 4) : 0.0;
    };
    auto g = Signal::sample(bump, 0.0, dt, len, {0.45, 0.55});

    Signal z = g;
    std::fill(z.samples.begin(), z.samples.end(), 0.0);
    for (double v : half_space_extension(z, 0.3).samples) CHECK(v == 0.0);

    for (double v : half_space_extension(g, 50.0).samples) CHECK(std::abs(v) <= 1e-50);

    double x = 0.1;
    auto f = half_space_extension(g, x);
    auto g_fine = Signal::sample(bump, 0.0, 0.5 * dt, 2 * len, {0.45, 0.55});
    auto f_fine = half_space_extension(g_fine, x);
    QuadratureSpec s;
    s.abs_tol = 1e-14;
    s.rel_tol = 1e-12;
    for (double t : {0.48, 0.5, 0.6, 1.0, 1.9}) {
        auto k = static_cast<std::size_t>(std::lround(t / dt));
        double tk = g.time(k);
        auto integrand = [&](double u) { return tk - u > 0.0 ? heat1(x, tk - u) * bump(u) : 0.0; };
        double ref = integrate(integrand, 0.45, std::min(0.55, tk), s, {tk - 0.0025}).value;
        double e1 = std::abs(f.samples[k] - ref), e2 = std::abs(f_fine.samples[2 * k] - ref);
        // piecewise-linear data: second order in dt
        CHECK(e1 <= 1e-4 * std::max(std::abs(ref), 1e-3));
        CHECK(e2 <= e1 / 3.0);
    }
    // int_0^T f dt = int g(s) F(T - s) ds
    double T = g.t_end();
    std::vector<double> tr(len);
    for (std::size_t i = 0; i < len; ++i) tr[i] = (i == 0 || i + 1 == len ? 0.5 : 1.0) * f.samples[i] * dt;
    double mass = 0.0;
    for (double v : tr) mass += v;
    auto oracle = [&](double u) { return bump(u) * heat1_time_integral(x, T - u); };
    double ref = integrate(oracle, 0.45, 0.55, s).value;
    CHECK(mass == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("equivalence ratio: positivity and dilation covariance") {
    auto g = construct_gT(GTKind::box, 2.0);
    for (double q : {1.5, 2.0, 4.0}) {
        auto p = BesovParams::critical(q);
        auto r = equivalence_ratio(g, p, default_x_grid(g));
        CHECK(r.lower > 0.0);
        CHECK(std::isfinite(r.upper));
        CHECK(r.lower <= r.upper);
        auto g2 = g.dilated(2.0);
        auto r2 = equivalence_ratio(g2, p, default_x_grid(g2));
        CHECK(std::abs(r2.lower / r.lower - 1.0) <= 0.05);
        CHECK(std::abs(r2.upper / r.upper - 1.0) <= 0.05);
    }
}

TEST_CASE("equivalence ratio: separated blocks stay near the single-block value") {
    double dt = 1.0 / 8192;
    std::size_t len = 1 << 14;
    auto p = BesovParams::critical(2.0);
    auto one = packet(1.4166 * 256, 0.12, 1.0, dt, len);
    auto r1 = equivalence_ratio(one, p, default_x_grid(one));
    auto far = packet(1.4166 * 4096, 0.0075, 1.0, dt, len);
    Signal two = one;
    for (std::size_t i = 0; i < len; ++i) two.samples[i] += far.samples[i];
    auto r2 = equivalence_ratio(two, p, default_x_grid(two));
    CHECK(r2.lower >= r1.lower / 1.2);
    CHECK(r2.upper <= r1.upper * 1.2);
}
