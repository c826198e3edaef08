#include "stokes/shear.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "stokes/errors.hpp"
#include "stokes/faddeeva.hpp"
#include "stokes/parallel.hpp"
#include "stokes/special.hpp"
#include "stokes/sum.hpp"

namespace stokes {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Kernels convolved in time against the forcing.
enum Kern { kErf = 0, kG0, kG1, kG2, kG3, kG4, kG5, kM, kKernCount };

using KernVals = std::array<double, kKernCount>;

double smooth_step_deriv(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    double s = a + b;
    return a * b * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))) / (s * s);
}

// int_0^t w(tau) K(y, tau) dtau for the kernels in `ks`, with tau = sigma^2; w takes the lag.
KernVals time_conv(const std::function<double(double)>& w, const Interval& supp, const std::vector<double>& knots,
                   double y, double t, double alpha, const std::vector<Kern>& ks, const QuadratureSpec& spec) {
    KernVals out{};
    double ta = std::max(0.0, t - supp.b), tb = t - supp.a;
    if (!(tb > 0.0) || ks.empty()) return out;
    double sa = std::sqrt(ta), sb = std::sqrt(tb);
    std::vector<double> bp;
    auto add = [&](double s) {
        if (s > sa && s < sb) bp.push_back(s);
    };
    if (y > 0.0)
        for (int k = -3; k <= 3; ++k) add(std::ldexp(y, k));
    for (double kn : knots)
        if (kn != supp.a && kn != supp.b) add(std::sqrt(std::abs(t - kn)));
    std::sort(bp.begin(), bp.end());
    int top = 0;
    for (Kern k : ks)
        if (k >= kG0 && k <= kG5) top = std::max(top, k - kG0);
    auto f = [&](double s, double* val, double* mag) {
        double tau = s * s;
        double wt = 2.0 * s * w(tau);
        double d[6] = {0, 0, 0, 0, 0, 0};
        if (tau > 0.0) heat1_derivs(y, tau, top, d);
        for (std::size_t c = 0; c < ks.size(); ++c) {
            double kv = 0.0;
            switch (ks[c]) {
                case kErf: kv = tau > 0.0 ? std::erf(y / (2.0 * s)) : (y > 0.0 ? 1.0 : 0.0); break;
                case kM: kv = tau > 0.0 ? exp_tail(y, tau, alpha) : 0.0; break;
                default: kv = d[ks[c] - kG0]; break;
            }
            val[c] = wt * kv;
            mag[c] = std::abs(val[c]);
        }
    };
    auto res = integrate_vec(f, ks.size(), sa, sb, spec, bp);
    for (std::size_t c = 0; c < ks.size(); ++c) {
        if (!res[c].converged) throw ToleranceError("shear time convolution did not converge", res[c].error);
        out[ks[c]] = res[c].value;
    }
    return out;
}

KernVals conv_g(const Forcing& f, double y, double t, double alpha, const std::vector<Kern>& ks,
                const QuadratureSpec& spec) {
    return time_conv([&](double tau) { return f.lagged(t, tau, false); }, f.support, f.knots, y, t, alpha, ks,
                     spec);
}

KernVals conv_dg(const Forcing& f, double y, double t, double alpha, const std::vector<Kern>& ks,
                 const QuadratureSpec& spec) {
    return time_conv([&](double tau) { return f.lagged(t, tau, true); }, f.support, f.knots, y, t, alpha, ks,
                     spec);
}

constexpr double kLacA = 0.75, kLacB = 0.875, kRamp = 1.0 / 32.0;

double gT_deriv(GTKind kind, double q, const GTParams& p, double t) {
    if (kind == GTKind::holder_beta) {
        if (t <= 0.25 || t >= 1.0) return 0.0;
        double x = (t - 0.25) / 0.25, r = std::pow(1.0 - t, p.beta);
        return 4.0 * smooth_step_deriv(x) * r - smooth_step(x) * p.beta * r / (1.0 - t);
    }
    if (t <= kLacA || t >= kLacB) return 0.0;
    double u = (t - kLacA) / kRamp, v = (kLacB - t) / kRamp;
    double w = smooth_step(u) * smooth_step(v);
    double dw = (smooth_step_deriv(u) * smooth_step(v) - smooth_step(u) * smooth_step_deriv(v)) / kRamp;
    if (kind == GTKind::box) return dw;
    double s = 0.5 - 0.5 / q;
    std::vector<double> c, d;
    for (int j = 1; j <= p.J; ++j) {
        double a = std::exp2(-j * s) * std::pow(double(j), -1.0 / q), om = std::ldexp(p.omega0, j);
        c.push_back(a * std::cos(om * t));
        d.push_back(-a * om * std::sin(om * t));
    }
    return dw * pairwise_sum(c) + w * pairwise_sum(d);
}

std::vector<double> geometric_nodes(double lo, double hi, int per_octave) {
    int n = static_cast<int>(std::ceil(std::log2(hi / lo) * per_octave - 1e-9)) + 1;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
    return v;
}

}  // namespace

double Forcing::derivative(double t, double h) const {
    if (dg) return (t < support.a || t > support.b) ? 0.0 : dg(t);
    return (-(*this)(t + 2 * h) + 8.0 * (*this)(t + h) - 8.0 * (*this)(t - h) + (*this)(t - 2 * h)) / (12.0 * h);
}

double Forcing::lagged(double t, double tau, bool deriv) const {
    double r = (support.b - t) + tau;
    if (r > 0.0 && r < 0.5 * support.length()) {
        if (!deriv && g_end) return g_end(r);
        if (deriv && dg_end) return dg_end(r);
    }
    double u = t - tau;
    if (u < support.a || u > support.b) return 0.0;
    return deriv ? derivative(u) : g(u);
}

void Forcing::validate() const {
    if (!g) throw ConfigError("forcing profile is missing");
    if (!(support.a > 0.0) || !(support.b > support.a))
        throw ConfigError("forcing support must be a nonempty interval in t > 0");
}

Forcing Forcing::from_gT(GTKind kind, double q, const GTParams& params) {
    gT_value(kind, q, params, 0.5);  // parameter validation
    Forcing f;
    f.g = [=](double t) { return gT_value(kind, q, params, t); };
    f.dg = [=](double t) { return gT_deriv(kind, q, params, t); };
    if (kind == GTKind::holder_beta) {
        f.support = {0.25, 1.0};
        f.knots = {0.25, 0.5, 1.0};
        double beta = params.beta;
        f.g_end = [beta](double r) { return smooth_step((0.75 - r) / 0.25) * std::pow(r, beta); };
        f.dg_end = [beta](double r) {
            double x = (0.75 - r) / 0.25, p = std::pow(r, beta);
            return 4.0 * smooth_step_deriv(x) * p - smooth_step(x) * beta * p / r;
        };
    } else {
        f.support = {0.75, 0.875};
        f.knots = {kLacA, kLacA + kRamp, kLacB - kRamp, kLacB};
    }
    return f;
}

Forcing Forcing::from_signal(const Signal& s) {
    s.validate();
    Forcing f;
    f.support = s.support;
    if (!(f.support.a > 0.0)) f.support.a = std::max(s.t0, 1e-300);
    f.g = [s](double t) {
        double x = (t - s.t0) / s.dt;
        if (x <= 0.0 || x >= double(s.size() - 1)) return 0.0;
        auto i = static_cast<std::size_t>(x);
        double r = x - double(i);
        return (1.0 - r) * s.samples[i] + r * s.samples[i + 1];
    };
    return f;
}

void ShearConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
    forcing.validate();
}

double ShearValues::of_order(int k) const {
    switch (k) {
        case 0: return v;
        case 1: return v_y;
        case 2: return v_yy;
        case 3: return v_yyy;
        case 4: return v_yyyy;
    }
    throw DomainError("derivative order must be in 0..4");
}

double exp_tail(double y, double t, double alpha) {
    if (!(t > 0.0)) throw DomainError("exp_tail requires t > 0");
    double st = std::sqrt(t);
    double r = (y + 2.0 * alpha * t) / (2.0 * st);
    return 0.5 * std::exp(-y * y / (4.0 * t)) * erfcx(r);
}

double robin_green(double y, double xi, double t, double alpha) {
    if (y < 0.0 || xi < 0.0) throw DomainError("Green function needs y, xi >= 0");
    if (!(t > 0.0)) return 0.0;
    // Gamma(y - xi) - Gamma(y + xi) - 2 d_xi M(y + xi) with d_xi M = -Gamma + alpha M
    return heat1(y - xi, t) + heat1(y + xi, t) - 2.0 * alpha * exp_tail(y + xi, t, alpha);
}

double dirichlet_green(double y, double xi, double t) {
    if (y < 0.0 || xi < 0.0) throw DomainError("Green function needs y, xi >= 0");
    if (!(t > 0.0)) return 0.0;
    return heat1(y - xi, t) - heat1(y + xi, t);
}

double green_mass(double y, double t, double alpha) {
    if (y < 0.0) throw DomainError("green_mass needs y >= 0");
    if (!(t > 0.0)) throw DomainError("green_mass needs t > 0");
    return std::erf(y / (2.0 * std::sqrt(t))) + 2.0 * exp_tail(y, t, alpha);
}

double green_mass_dy(double y, double t, double alpha) { return 2.0 * alpha * exp_tail(y, t, alpha); }

double v_eval(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec) {
    cfg.validate();
    if (y < 0.0) throw DomainError("v needs y >= 0");
    const Forcing& f = cfg.forcing;
    double a = cfg.alpha;
    if (t <= f.support.a) return 0.0;
    if (cfg.bc == BcKind::navier) {
        if (cfg.pressure == PressureMode::gprime) {
            if (a == 0.0) return f(t);
            auto K = conv_g(f, y, t, a, {kG0, kM}, spec);
            return f(t) - 2.0 * a * K[kG0] + 2.0 * a * a * K[kM];
        }
        auto K = conv_g(f, y, t, a, {kErf, kM}, spec);
        return K[kErf] + 2.0 * K[kM];
    }
    if (y == 0.0) return 0.0;
    if (cfg.pressure == PressureMode::gprime) return f(t) + 2.0 * conv_g(f, y, t, a, {kG1}, spec)[kG1];
    return conv_g(f, y, t, a, {kErf}, spec)[kErf];
}

namespace {

ShearValues derivs_impl(const ShearConfig& cfg, double y, double t, int max_order, const QuadratureSpec& spec) {
    const Forcing& f = cfg.forcing;
    double a = cfg.alpha, g = f(t);
    ShearValues r;
    r.v_yyyy = r.v_yyy = r.v_yy = kNaN;
    if (max_order < 1) r.v_y = kNaN;
    if (t <= f.support.a) {
        r = ShearValues{};
        return r;
    }
    auto ord = [&](int k) { return k <= max_order; };
    std::vector<Kern> ks;
    auto need = [&](Kern k, bool on) {
        if (on) ks.push_back(k);
    };
    if (cfg.bc == BcKind::navier && cfg.pressure == PressureMode::gprime) {
        if (a == 0.0) {
            r = ShearValues{g, 0.0, 0.0, 0.0, 0.0};
            return r;
        }
        need(kG0, true);
        need(kM, true);
        need(kG1, ord(1));
        need(kG2, ord(2));
        need(kG3, ord(3));
        need(kG4, ord(4));
        auto K = conv_g(f, y, t, a, ks, spec);
        r.v = g - 2.0 * a * K[kG0] + 2.0 * a * a * K[kM];
        if (ord(1)) r.v_y = -2.0 * a * K[kG1] + a * (r.v - g);
        if (ord(2)) r.v_yy = -2.0 * a * K[kG2] + a * r.v_y;
        if (ord(3)) r.v_yyy = -2.0 * a * K[kG3] + a * r.v_yy;
        if (ord(4)) r.v_yyyy = -2.0 * a * K[kG4] + a * r.v_yyy;
    } else if (cfg.bc == BcKind::navier) {
        need(kErf, true);
        need(kM, true);
        need(kG0, ord(2));
        need(kG1, ord(3));
        need(kG2, ord(4));
        auto K = conv_g(f, y, t, a, ks, spec);
        r.v = K[kErf] + 2.0 * K[kM];
        if (ord(1)) r.v_y = 2.0 * a * K[kM];
        if (ord(2)) r.v_yy = -2.0 * a * K[kG0] + a * r.v_y;
        if (ord(3)) r.v_yyy = -2.0 * a * K[kG1] + a * r.v_yy;
        if (ord(4)) r.v_yyyy = -2.0 * a * K[kG2] + a * r.v_yyy;
    } else if (cfg.pressure == PressureMode::gprime) {
        need(kG1, true);
        need(kG2, ord(1));
        need(kG3, ord(2));
        need(kG4, ord(3));
        need(kG5, ord(4));
        auto K = conv_g(f, y, t, a, ks, spec);
        r.v = g + 2.0 * K[kG1];
        if (ord(1)) r.v_y = 2.0 * K[kG2];
        if (ord(2)) r.v_yy = 2.0 * K[kG3];
        if (ord(3)) r.v_yyy = 2.0 * K[kG4];
        if (ord(4)) r.v_yyyy = 2.0 * K[kG5];
    } else {
        need(kErf, true);
        need(kG0, ord(1));
        need(kG1, ord(2));
        need(kG2, ord(3));
        need(kG3, ord(4));
        auto K = conv_g(f, y, t, a, ks, spec);
        r.v = K[kErf];
        if (ord(1)) r.v_y = 2.0 * K[kG0];
        if (ord(2)) r.v_yy = 2.0 * K[kG1];
        if (ord(3)) r.v_yyy = 2.0 * K[kG2];
        if (ord(4)) r.v_yyyy = 2.0 * K[kG3];
    }
    return r;
}

}  // namespace

ShearValues v_derivs(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec) {
    cfg.validate();
    if (!(y > 0.0)) throw DomainError("y-derivatives of v need y > 0");
    return derivs_impl(cfg, y, t, 4, spec);
}

double v_green_path(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec) {
    cfg.validate();
    if (y < 0.0) throw DomainError("v needs y >= 0");
    const Forcing& f = cfg.forcing;
    double a = cfg.alpha;
    std::vector<Kern> ks{kErf};
    if (cfg.bc == BcKind::navier) ks.push_back(kM);
    auto K = cfg.pressure == PressureMode::gprime ? conv_dg(f, y, t, a, ks, spec) : conv_g(f, y, t, a, ks, spec);
    return K[kErf] + (cfg.bc == BcKind::navier ? 2.0 * K[kM] : 0.0);
}

double robin_residual(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec) {
    auto r = v_derivs(cfg, y, t, spec);
    return r.v_y - cfg.alpha * r.v;
}

double robin_residual_direct(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec) {
    cfg.validate();
    if (cfg.bc != BcKind::navier || cfg.pressure != PressureMode::gprime)
        throw ConfigError("the Robin residual representation applies to the Navier, g' configuration");
    return -cfg.alpha * conv_dg(cfg.forcing, y, t, cfg.alpha, {kErf}, spec)[kErf];
}

double theta_eval(double y, double t, const Forcing& g, const QuadratureSpec& spec) {
    g.validate();
    if (!(y > 0.0)) throw DomainError("theta needs y > 0");
    return conv_g(g, y, t, 0.0, {kG2}, spec)[kG2];
}

double theta_scaling_constant(double beta) {
    if (!(beta > 0.0 && beta < 0.5)) throw ParameterError("scaling constant needs beta in (0, 1/2)");
    // int_0^inf s^beta d_y^2 Gamma(1, s) ds = -beta int s^{beta-1} Gamma(1, s) ds
    return -beta * std::pow(4.0, -beta) * boost::math::tgamma(0.5 - beta) / std::sqrt(kPi);
}

int blowup_order(const ShearConfig& cfg) {
    if (cfg.bc == BcKind::navier) return cfg.pressure == PressureMode::gprime ? 2 : 4;
    return cfg.pressure == PressureMode::gprime ? 1 : 3;
}

void ShearLattice::validate() const {
    if (k_min < 2 || k_max <= k_min) throw ConfigError("need 2 <= k_min < k_max");
    if (k_max > 30) throw ConfigError("k_max too large");
    if (y_per_octave < 1 || s_per_octave < 1) throw ConfigError("nodes per octave must be >= 1");
    if (!(t_lo < t_hi)) throw ConfigError("need t_lo < t_hi");
    if (graded && !(s_min > 0.0 && s_min < t_hi - t_lo)) throw ConfigError("s_min must lie in (0, t_hi - t_lo)");
    if (!graded && n_t_uniform < 3) throw ConfigError("uniform time grid needs >= 3 nodes");
}

std::vector<double> ShearLattice::y_nodes() const {
    int m = (k_max - 1) * y_per_octave;
    std::vector<double> y(m + 1);
    for (int i = 0; i <= m; ++i) y[i] = std::exp2(-1.0 - double(i) / y_per_octave);
    return y;
}

std::vector<double> ShearLattice::t_nodes() const {
    std::vector<double> t;
    if (graded) {
        auto s = geometric_nodes(s_min, t_hi - t_lo, s_per_octave);
        for (auto it = s.rbegin(); it != s.rend(); ++it) t.push_back(t_hi - *it);
        t.front() = t_lo;
        t.push_back(t_hi);
    } else {
        for (int i = 0; i < n_t_uniform; ++i) t.push_back(t_lo + (t_hi - t_lo) * i / (n_t_uniform - 1));
    }
    return t;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope fit needs matching data of length >= 2");
    double n = double(x.size()), mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(std::abs(y[i]));
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::log(x[i]) - mx, b = std::log(std::abs(y[i])) - my;
        sxy += a * b;
        sxx += a * a;
    }
    return sxy / sxx;
}

PowerFit fit_power_with_background(const std::vector<double>& y, const std::vector<double>& v) {
    if (y.size() != v.size() || y.size() < 4) throw ParameterError("power fit needs at least four points");
    // least squares in (A, c) for fixed p, relative to |v| so every point counts
    auto solve = [&](double p, double& A, double& c) {
        double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double w = 1.0 / (v[i] * v[i]);
            double phi = std::pow(y[i], p);
            s11 += w * phi * phi;
            s12 += w * phi;
            s22 += w;
            b1 += w * phi * v[i];
            b2 += w * v[i];
        }
        double det = s11 * s22 - s12 * s12;
        A = (b1 * s22 - b2 * s12) / det;
        c = (s11 * b2 - s12 * b1) / det;
        double r = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double e = (A * std::pow(y[i], p) + c - v[i]) / v[i];
            r += e * e;
        }
        return r;
    };
    double A, c;
    double best_p = -1.0, best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 300; ++k) {
        double p = -3.0 + 2.99 * k / 300.0;
        double r = solve(p, A, c);
        if (r < best) {
            best = r;
            best_p = p;
        }
    }
    auto m = boost::math::tools::brent_find_minima([&](double p) { return solve(p, A, c); }, best_p - 0.01,
                                                   std::min(best_p + 0.01, -1e-3), 50);
    PowerFit f;
    f.exponent = m.first;
    solve(f.exponent, f.amplitude, f.background);
    f.plain_slope = loglog_slope(y, v);
    return f;
}

ShearBlowup shear_blowup(const ShearConfig& cfg, double q, const ShearLattice& lat, const QuadratureSpec& spec) {
    cfg.validate();
    lat.validate();
    if (!(q > 1.0) || !std::isfinite(q)) throw ConfigError("q must lie in (1, inf)");
    ShearBlowup out;
    out.q = q;
    out.order = blowup_order(cfg);
    out.y = lat.y_nodes();
    out.t = lat.t_nodes();
    std::size_t ny = out.y.size(), nt = out.t.size();
    out.lattice.resize(ny * nt);
    int top = std::max(out.order, 1);
    parallel_for(ny * nt, [&](std::size_t idx) {
        out.lattice[idx] = derivs_impl(cfg, out.y[idx / nt], out.t[idx % nt], top, spec);
    });

    // time weights: trapezoid in log(t_hi - t) (graded) or in t (uniform)
    std::vector<double> wt(nt, 0.0);
    if (lat.graded) {
        // nodes t[0..nt-2] have s = t_hi - t decreasing to s_min; t[nt-1] has s = 0
        std::size_t last = nt - 2;
        for (std::size_t i = 0; i < last; ++i) {
            double s0 = lat.t_hi - out.t[i], s1 = lat.t_hi - out.t[i + 1];
            double h = std::log(s0 / s1);
            wt[i] += 0.5 * h * s0;
            wt[i + 1] += 0.5 * h * s1;
        }
        double smin = lat.t_hi - out.t[last];
        wt[last] += 0.5 * smin;
        wt[nt - 1] += 0.5 * smin;
    } else {
        double h = (lat.t_hi - lat.t_lo) / double(nt - 1);
        for (std::size_t i = 0; i < nt; ++i) wt[i] = (i == 0 || i + 1 == nt) ? 0.5 * h : h;
    }
    std::vector<double> row(ny);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        std::vector<double> terms(nt);
        for (std::size_t it = 0; it < nt; ++it)
            terms[it] = wt[it] * std::pow(std::abs(out.lattice[iy * nt + it].of_order(out.order)), q);
        row[iy] = pairwise_sum(terms);
    }
    double hy = std::log(2.0) / lat.y_per_octave;
    std::vector<double> lx, ly;
    for (int k = lat.k_min; k <= lat.k_max; ++k) {
        std::size_t last = static_cast<std::size_t>((k - 1) * lat.y_per_octave);
        std::vector<double> terms(last + 1);
        BlowupRow r;
        r.eps = std::exp2(-k);
        for (std::size_t iy = 0; iy <= last; ++iy) {
            double w = (iy == 0 || iy == last) ? 0.5 * hy : hy;
            terms[iy] = w * out.y[iy] * row[iy];
            for (std::size_t it = 0; it < nt; ++it) {
                r.sup_v = std::max(r.sup_v, std::abs(out.lattice[iy * nt + it].v));
                r.sup_vy = std::max(r.sup_vy, std::abs(out.lattice[iy * nt + it].v_y));
            }
        }
        r.norm = std::pow(pairwise_sum(terms), 1.0 / q);
        r.growth = out.rows.empty() ? 0.0 : r.norm / out.rows.back().norm;
        lx.push_back(1.0 / r.eps);
        ly.push_back(r.norm);
        r.slope = lx.size() >= 2 ? loglog_slope(lx, ly) : 0.0;
        out.rows.push_back(r);
    }
    return out;
}

BcKind parse_bc(const std::string& s) {
    if (s == "navier") return BcKind::navier;
    if (s == "dirichlet") return BcKind::dirichlet;
    throw ConfigError("unknown boundary condition '" + s + "'");
}

PressureMode parse_pressure(const std::string& s) {
    if (s == "gprime") return PressureMode::gprime;
    if (s == "g") return PressureMode::g;
    throw ConfigError("unknown pressure mode '" + s + "'");
}

}  // namespace stokes
