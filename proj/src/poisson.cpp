#include "stokes/poisson.hpp"

#include <algorithm>
#include <cmath>

#include "stokes/errors.hpp"
#include "stokes/parallel.hpp"
#include "stokes/quadrature.hpp"

namespace stokes {

namespace {

constexpr double kPi = 3.14159265358979323846;

double bump4(double r) {
    double b = 1.0 - r * r;
    return b > 0.0 ? b * b * b * b : 0.0;
}

double bump4_deriv(double r) {
    double b = 1.0 - r * r;
    return b > 0.0 ? -8.0 * r * b * b * b : 0.0;
}

// Trapezoid weights for sorted points.
std::vector<double> trapezoid(const std::vector<double>& x) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        double h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    return w;
}

// Weights of the trapezoid rule over the points inside [lo, hi]; zero elsewhere.
std::vector<double> region_weights(const std::vector<double>& x, double lo, double hi) {
    std::vector<double> sub;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= lo - 1e-15 && x[i] <= hi + 1e-15) {
            sub.push_back(x[i]);
            idx.push_back(i);
        }
    std::vector<double> w(x.size(), 0.0);
    auto ws = trapezoid(sub);
    for (std::size_t i = 0; i < idx.size(); ++i) w[idx[i]] = ws[i];
    return w;
}

const std::vector<FieldOutput>& outputs() {
    static const std::vector<FieldOutput> o{
        {1, MultiIndexDeriv(0, {0, 2})}, {1, MultiIndexDeriv(0, {0, 0})}, {2, MultiIndexDeriv(0, {0, 0})},
        {1, MultiIndexDeriv(0, {1, 0})}, {1, MultiIndexDeriv(0, {0, 1})}, {2, MultiIndexDeriv(0, {1, 0})},
        {2, MultiIndexDeriv(0, {0, 1})}};
    return o;
}

// |u| + |grad u| from outputs 1..6 at one point.
double size_at(const std::vector<std::vector<double>>& v, std::size_t p) {
    double u = std::hypot(v[1][p], v[2][p]);
    double g = std::sqrt(v[3][p] * v[3][p] + v[4][p] * v[4][p] + v[5][p] * v[5][p] + v[6][p] * v[6][p]);
    return u + g;
}

}  // namespace

void PoissonConfig::validate() const {
    if (n != 2) throw ConfigError("the Poisson blow-up experiment supports n = 2 only");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
    if (!(q > 1.0) || !std::isfinite(q)) throw ConfigError("q must lie in (1, inf)");
    if (!(beta > 0.0 && beta <= 0.5)) throw ConfigError("beta must lie in (0, 1/2]");
    if (!(x0 + 1.0 < -1.0)) throw ConfigError("data support must lie left of x_1 = -1");
    if (k_min < 1 || k_max < k_min + 2 || k_max > 20) throw ConfigError("need 1 <= k_min, k_min + 2 <= k_max <= 20");
    if (xn_per_octave < 2 || xn_per_octave % 2) throw ConfigError("xn_per_octave must be even and >= 2");
    if (s_per_octave < 2 || s_per_octave % 2) throw ConfigError("s_per_octave must be even and >= 2");
    if (nx < 5 || nx % 2 == 0 || (nx - 1) % 4) throw ConfigError("nx must be 1 + 4m with m >= 1");
    if (nt_uniform < 3 || nt_uniform % 2 == 0) throw ConfigError("nt_uniform must be odd and >= 3");
    if (!(s_min > 0.0 && s_min < 0.01)) throw ConfigError("s_min must lie in (0, 0.01)");
    for (double r : far_radii)
        if (!(r > 2.0 - x0)) throw ConfigError("far-field radii must exceed the data distance");
    field.validate();
}

PoissonLattice poisson_lattice(const PoissonConfig& cfg) {
    cfg.validate();
    PoissonLattice L;
    std::vector<double> x(cfg.nx);
    for (int i = 0; i < cfg.nx; ++i) {
        x[i] = -1.0 + 2.0 * i / (cfg.nx - 1);
        L.coarse_x.push_back(i % 2 == 0);
    }
    L.lattice.space = {x};
    int m = cfg.xn_per_octave * cfg.k_max;
    for (int i = m; i >= 0; --i) {
        L.lattice.xn.push_back(std::exp2(-double(i) / cfg.xn_per_octave));
        L.coarse_xn.push_back(i % 2 == 0);
    }
    for (int i = 0; i < cfg.nt_uniform; ++i) {
        L.lattice.t.push_back(0.75 * i / (cfg.nt_uniform - 1));
        L.coarse_t.push_back(i % 2 == 0);
    }
    // odd count of graded points so that t = 1 keeps an even index
    int g = static_cast<int>(std::ceil(cfg.s_per_octave * std::log2(0.25 / cfg.s_min)));
    if (g % 2 == 0) ++g;
    for (int i = 1; i <= g; ++i) {
        L.lattice.t.push_back(1.0 - 0.25 * std::exp2(-double(i) / cfg.s_per_octave));
        L.coarse_t.push_back(i % 2 == 0);
    }
    L.lattice.t.push_back(1.0);
    L.coarse_t.push_back(true);
    L.lattice.validate();
    return L;
}

Forcing poisson_forcing(const PoissonConfig& cfg) {
    GTParams p;
    p.beta = cfg.beta;
    return Forcing::from_gT(GTKind::holder_beta, cfg.q, p);
}

BoundaryData poisson_data(const PoissonConfig& cfg) {
    cfg.validate();
    Forcing g = poisson_forcing(cfg);
    double x0 = cfg.x0;
    DataFunction f = [x0, g](int j, const double* xp, double t) {
        if (j != 1) return 0.0;
        double s = bump4_deriv(xp[0] - x0);
        return s == 0.0 ? 0.0 : s * g(t);
    };
    Axis space{x0 - 1.25, 0.025, 101};
    Axis time{0.2, 1.0 / 256, 218};
    return BoundaryData::sample(2, {space}, time, {Interval{x0 - 1.0, x0 + 1.0}}, g.support, f,
                                Smoothness::lq_only);
}

double poisson_psi(const PoissonConfig& cfg, double x1) {
    double x0 = cfg.x0;
    if (std::abs(x1 - x0) <= 1.0) throw DomainError("psi is evaluated off the data support only");
    auto f = [&](double xi) {
        double d = x1 - xi;
        return bump4(xi - x0) / (d * d);
    };
    return integrate_checked(f, x0 - 1.0, x0 + 1.0, cfg.quad, {x0}).value / (2.0 * kPi);
}

double poisson_h1(const PoissonConfig& cfg, const Forcing& g, double x1, double xn, double t) {
    if (t <= g.support.a) return 0.0;
    return poisson_psi(cfg, x1) * theta_eval(xn, t, g, cfg.quad);
}

double PoissonReport::remainder_ratio() const {
    if (rows.empty() || rows.front().remainder <= 0.0) return 0.0;
    return rows.back().remainder / rows.front().remainder;
}

PoissonReport poisson_blowup(const PoissonConfig& cfg) {
    cfg.validate();
    PoissonReport rep;
    rep.c_predicted = 4.0 * cfg.alpha;
    BoundaryData a = poisson_data(cfg);
    Forcing g = poisson_forcing(cfg);
    PoissonLattice PL = poisson_lattice(cfg);
    const FieldLattice& lat = PL.lattice;
    FieldSpec spec = cfg.field;
    spec.per_xn = true;
    auto v = build_velocity_outputs(a, cfg.alpha, lat, outputs(), spec);

    const auto& x = lat.space[0];
    std::size_t nx = x.size(), nt = lat.t.size(), nxn = lat.xn.size();
    auto at = [&](std::size_t ixn, std::size_t ix, std::size_t it) { return (ixn * nx + ix) * nt + it; };

    // predicted singular part on the lattice
    std::vector<double> psi(nx), H(lat.size(), 0.0);
    for (std::size_t ix = 0; ix < nx; ++ix) psi[ix] = poisson_psi(cfg, x[ix]);
    std::vector<double> theta(nxn * nt, 0.0);
    parallel_for(nxn * nt, [&](std::size_t i) {
        double t = lat.t[i % nt];
        if (t > g.support.a) theta[i] = theta_eval(lat.xn[i / nt], t, g, cfg.quad);
    });
    for (std::size_t ixn = 0; ixn < nxn; ++ixn)
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t it = 0; it < nt; ++it) H[at(ixn, ix, it)] = psi[ix] * theta[ixn * nt + it];

    auto wx = region_weights(x, -0.5, 0.5);
    auto wt = region_weights(lat.t, 0.75, 1.0);
    const auto& D = v[0];

    // least squares D = c H + b over the points where |H| exceeds a quarter of its maximum
    double hmax = 0.0;
    for (std::size_t ixn = 0; ixn < nxn; ++ixn)
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t it = 0; it < nt; ++it)
                if (wx[ix] > 0.0 && wt[it] > 0.0) hmax = std::max(hmax, std::abs(H[at(ixn, ix, it)]));
    if (!(hmax > 0.0)) throw DomainError("predicted singular part vanishes on the lattice");
    double m = 0.0, sh = 0.0, sd = 0.0, shh = 0.0, sdh = 0.0;
    for (std::size_t ixn = 0; ixn < nxn; ++ixn)
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t it = 0; it < nt; ++it) {
                std::size_t p = at(ixn, ix, it);
                if (wx[ix] == 0.0 || wt[it] == 0.0 || std::abs(H[p]) < 0.25 * hmax) continue;
                m += 1.0;
                sh += H[p];
                sd += D[p];
                shh += H[p] * H[p];
                sdh += D[p] * H[p];
            }
    double det = m * shh - sh * sh;
    if (m < 3.0 || !(det > 1e-12 * m * shh)) throw DomainError("singular-part fit is degenerate");
    rep.c_fit = (m * sdh - sh * sd) / det;

    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        double eps = std::exp2(-k);
        auto wn = region_weights(lat.xn, eps, 0.5);
        double sd = 0.0, sh = 0.0, rem = 0.0;
        for (std::size_t ixn = 0; ixn < nxn; ++ixn) {
            if (wn[ixn] == 0.0) continue;
            for (std::size_t ix = 0; ix < nx; ++ix) {
                if (wx[ix] == 0.0) continue;
                for (std::size_t it = 0; it < nt; ++it) {
                    if (wt[it] == 0.0) continue;
                    std::size_t p = at(ixn, ix, it);
                    double w = wn[ixn] * wx[ix] * wt[it];
                    sd += w * std::pow(std::abs(D[p]), cfg.q);
                    sh += w * std::pow(std::abs(H[p]), cfg.q);
                    rem = std::max(rem, std::abs(D[p] - rep.c_fit * H[p]));
                }
            }
        }
        PoissonRow r;
        r.eps = eps;
        r.norm_d2 = std::pow(sd, 1.0 / cfg.q);
        r.norm_h1 = std::pow(sh, 1.0 / cfg.q);
        r.growth = rep.rows.empty() ? 0.0 : r.norm_d2 / rep.rows.back().norm_d2;
        r.remainder = rem;
        rep.rows.push_back(r);
    }
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        rep.monotone = rep.monotone && rep.rows[i].norm_d2 > rep.rows[i - 1].norm_d2;
    {
        std::size_t m = rep.rows.size();
        double lo = rep.rows[m - 3].norm_d2, hi = lo;
        for (std::size_t i = m - 3; i < m; ++i) {
            lo = std::min(lo, rep.rows[i].norm_d2);
            hi = std::max(hi, rep.rows[i].norm_d2);
        }
        rep.plateau = hi / lo - 1.0 <= 0.05;
    }

    for (std::size_t ixn = 0; ixn < nxn; ++ixn)
        for (std::size_t ix = 0; ix < nx; ++ix)
            for (std::size_t it = 0; it < nt; ++it) {
                double s = size_at(v, at(ixn, ix, it));
                rep.sup_fine = std::max(rep.sup_fine, s);
                if (PL.coarse_xn[ixn] && PL.coarse_x[ix] && PL.coarse_t[it]) rep.sup_coarse = std::max(rep.sup_coarse, s);
            }

    // far field along the normal and the diagonal at t = 1
    std::vector<double> slopes;
    for (int dir = 0; dir < 2; ++dir) {
        std::vector<double> rs, vals;
        for (double R : cfg.far_radii) {
            FarFieldRow f;
            f.radius = R;
            f.x1 = dir == 0 ? 0.0 : R / std::sqrt(2.0);
            f.xn = dir == 0 ? R : R / std::sqrt(2.0);
            FieldLattice fl;
            fl.space = {{f.x1}};
            fl.xn = {f.xn};
            fl.t = {1.0};
            auto fv = build_velocity_outputs(a, cfg.alpha, fl, outputs(), spec);
            f.value = size_at(fv, 0);
            f.scaled = R * R * f.value;
            rep.far.push_back(f);
            rs.push_back(R);
            vals.push_back(f.value);
        }
        if (rs.size() >= 2) slopes.push_back(loglog_slope(rs, vals));
    }
    for (double s : slopes) rep.far_slope += s / slopes.size();
    return rep;
}

}  // namespace stokes
