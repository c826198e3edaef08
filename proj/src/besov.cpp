#include "stokes/besov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include "stokes/errors.hpp"
#include "stokes/faddeeva.hpp"
#include "stokes/parallel.hpp"
#include "stokes/special.hpp"
#include "stokes/sum.hpp"

namespace stokes {

namespace {

constexpr double kPi = std::numbers::pi;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using CplxBuf = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuf real_buf(std::size_t n) { return RealBuf(fftw_alloc_real(n)); }
CplxBuf cplx_buf(std::size_t n) { return CplxBuf(fftw_alloc_complex(n)); }

// Planning is not thread-safe in FFTW; execution with fresh arrays is.
struct Plans {
    fftw_plan fwd = nullptr, inv = nullptr;
};

Plans plans_for(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, Plans> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto r = real_buf(n);
    auto c = cplx_buf(n / 2 + 1);
    Plans p;
    int ni = static_cast<int>(n);
    p.fwd = fftw_plan_dft_r2c_1d(ni, r.get(), c.get(), FFTW_ESTIMATE);
    p.inv = fftw_plan_dft_c2r_1d(ni, c.get(), r.get(), FFTW_ESTIMATE);
    cache[n] = p;
    return p;
}

std::size_t next_pow2(double v) {
    std::size_t n = 2;
    while (static_cast<double>(n) < v) n *= 2;
    return n;
}

// Zero-padded forward transform of g on a grid of length n.
CplxBuf spectrum(const Signal& g, std::size_t n) {
    auto r = real_buf(n);
    std::fill(r.get(), r.get() + n, 0.0);
    std::copy(g.samples.begin(), g.samples.end(), r.get());
    auto c = cplx_buf(n / 2 + 1);
    fftw_execute_dft_r2c(plans_for(n).fwd, r.get(), c.get());
    return c;
}

double omega(std::size_t k, std::size_t n, double dt) {
    return 2.0 * kPi * static_cast<double>(k) / (static_cast<double>(n) * dt);
}

// Inverse transform of spec * mult(w_k), normalised, into out (length n).
template <class Mult>
void filtered(const fftw_complex* spec, std::size_t n, double dt, Mult mult, double* out) {
    std::size_t m = n / 2 + 1;
    auto c = cplx_buf(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::complex<double> z(spec[k][0], spec[k][1]);
        z *= mult(omega(k, n, dt));
        c[k][0] = z.real();
        c[k][1] = z.imag();
    }
    fftw_execute_dft_c2r(plans_for(n).inv, c.get(), out);
    double s = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] *= s;
}

double power_sum(const double* v, std::size_t n, double q) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::pow(std::abs(v[i]), q);
    return pairwise_sum(a);
}

void check_band(const Signal& g, int jmin, int jmax, const LPProfile& profile) {
    BandRange b = resolvable_band(g, profile);
    if (jmin > jmax) throw ParameterError("empty level window");
    if (jmin < b.jmin || jmax > b.jmax)
        throw ResolutionError("levels [" + std::to_string(jmin) + ", " + std::to_string(jmax) +
                                  "] are not resolvable on this grid",
                              b.jmin, b.jmax);
}

}  // namespace

double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

void Signal::validate() const {
    if (samples.size() < 2) throw ParameterError("signal needs at least two samples");
    if (!(dt > 0.0)) throw ParameterError("signal spacing must be positive");
    double slack = 1e-9 * dt;
    if (support.a > support.b || support.a < t0 - slack || support.b > t_end() + slack)
        throw ParameterError("signal support must lie inside the sample grid");
    double big = 0.0;
    for (double v : samples) big = std::max(big, std::abs(v));
    double lim = 1e-12 * std::max(1.0, big);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double t = time(i);
        if ((t < support.a - slack || t > support.b + slack) && std::abs(samples[i]) > lim)
            throw ParameterError("signal does not vanish outside its support");
    }
}

Signal Signal::sample(const std::function<double(double)>& f, double t0, double dt, std::size_t len,
                      Interval support) {
    Signal g;
    g.t0 = t0;
    g.dt = dt;
    g.support = support;
    g.samples.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        double t = g.time(i);
        g.samples[i] = (t < support.a || t > support.b) ? 0.0 : f(t);
    }
    g.validate();
    return g;
}

Signal Signal::dilated(double factor) const {
    if (!(factor > 0.0)) throw ParameterError("dilation factor must be positive");
    Signal g = *this;
    g.dt = dt / factor;
    g.t0 = t0 / factor;
    g.support = {support.a / factor, support.b / factor};
    return g;
}

std::string Signal::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "t,value\n";
    for (std::size_t i = 0; i < samples.size(); ++i) os << time(i) << ',' << samples[i] << '\n';
    return os.str();
}

void BesovParams::validate() const {
    if (!(q > 1.0) || !std::isfinite(q)) throw ParameterError("q must lie in (1, inf)");
    if (!std::isfinite(s)) throw ParameterError("s must be finite");
}

BesovParams BesovParams::critical(double q) {
    BesovParams p{q, 0.5 - 0.5 / q};
    p.validate();
    return p;
}

double LPProfile::chi(double w) const {
    double a = std::abs(w);
    return smooth_step((4.0 / 3.0 - a) / (4.0 / 3.0 - c1));
}

double LPProfile::phi(double w) const { return chi(0.5 * w) - chi(w); }

BandRange resolvable_band(const Signal& g, const LPProfile& profile) {
    double len = static_cast<double>(g.size());
    BandRange b;
    b.jmin = static_cast<int>(std::ceil(std::log2(2.0 * kPi / (len * g.dt * profile.c1)) - 1e-12));
    b.jmax = static_cast<int>(std::floor(std::log2(kPi / (g.dt * profile.c2)) + 1e-12));
    return b;
}

std::size_t transform_length(const Signal& g) {
    return next_pow2(std::max(static_cast<double>(g.size()), 8.0 * g.support.length() / g.dt));
}

std::vector<Signal> lp_blocks(const Signal& g, int jmin, int jmax, const LPProfile& profile) {
    g.validate();
    check_band(g, jmin, jmax, profile);
    std::size_t n = transform_length(g);
    auto spec = spectrum(g, n);
    std::vector<Signal> out(static_cast<std::size_t>(jmax - jmin + 1));
    parallel_for(out.size(), [&](std::size_t idx) {
        int j = jmin + static_cast<int>(idx);
        Signal b;
        b.dt = g.dt;
        b.t0 = g.t0;
        b.samples.resize(n);
        b.support = {g.t0, b.time(n - 1)};
        auto r = real_buf(n);
        filtered(spec.get(), n, g.dt, [&](double w) { return profile.phi(std::ldexp(w, -j)); }, r.get());
        std::copy(r.get(), r.get() + n, b.samples.begin());
        out[idx] = std::move(b);
    });
    return out;
}

Signal lp_block(const Signal& g, int j, const LPProfile& profile) { return lp_blocks(g, j, j, profile).front(); }

double lq_norm(const Signal& g, double q) {
    if (!(q > 0.0)) throw ParameterError("norm exponent must be positive");
    return std::pow(power_sum(g.samples.data(), g.size(), q) * g.dt, 1.0 / q);
}

std::vector<double> besov_terms(const Signal& g, const BesovParams& p, int jmin, int jmax,
                                const LPProfile& profile) {
    p.validate();
    g.validate();
    check_band(g, jmin, jmax, profile);
    std::size_t n = transform_length(g);
    auto spec = spectrum(g, n);
    std::vector<double> terms(static_cast<std::size_t>(jmax - jmin + 1));
    parallel_for(terms.size(), [&](std::size_t idx) {
        int j = jmin + static_cast<int>(idx);
        auto r = real_buf(n);
        filtered(spec.get(), n, g.dt, [&](double w) { return profile.phi(std::ldexp(w, -j)); }, r.get());
        terms[idx] = std::exp2(j * p.s * p.q) * power_sum(r.get(), n, p.q) * g.dt;
    });
    return terms;
}

double besov_norm_truncated(const Signal& g, const BesovParams& p, int jmin, int jmax, const LPProfile& profile) {
    return std::pow(pairwise_sum(besov_terms(g, p, jmin, jmax, profile)), 1.0 / p.q);
}

double heat1_time_integral(double x, double T) {
    if (!(T > 0.0)) return 0.0;
    double ax = std::abs(x);
    double r = ax / (2.0 * std::sqrt(T));
    if (r < 1.0) return std::sqrt(T / kPi) * std::exp(-r * r) - 0.5 * ax * std::erfc(r);
    // (x/2) e^{-r^2} (1/(r sqrt(pi)) - erfcx(r)); the bracket cancels for large r
    double bracket;
    if (r < 8.0) {
        bracket = 1.0 / (r * std::sqrt(kPi)) - erfcx(r);
    } else {
        double term = 1.0, sum = 0.0, inv = 1.0 / (2.0 * r * r);
        for (int k = 1; k < 40; ++k) {
            term *= -(2.0 * k - 1.0) * inv;
            sum -= term;
            if (std::abs(term) < 1e-17 * std::abs(sum)) break;
        }
        bracket = sum / (r * std::sqrt(kPi));
    }
    return 0.5 * ax * std::exp(-r * r) * bracket;
}

Signal half_space_extension(const Signal& g, double x, const QuadratureSpec& spec) {
    if (!(x > 0.0)) throw DomainError("half-space extension needs x > 0");
    g.validate();
    std::size_t len = g.size();
    double dt = g.dt;
    // w_d = int hat_d(tau) Gamma_1(x, tau) dtau, hat_d centred at tau = d dt
    std::vector<double> w(len);
    double peak = 0.25 * x * x;
    QuadratureSpec s = spec;
    s.abs_tol = 0.0;
    parallel_for(len, [&](std::size_t d) {
        double c = dt * static_cast<double>(d);
        double a = d == 0 ? 0.0 : c - dt, b = c + dt;
        auto f = [&](double tau) {
            if (tau <= 0.0) return 0.0;
            return (1.0 - std::abs(tau - c) / dt) * heat1(x, tau);
        };
        std::vector<double> bp{c};
        for (double k : {0.25, 1.0, 4.0}) bp.push_back(k * peak);
        w[d] = integrate(f, a, b, s, bp).value;
    });
    std::vector<std::size_t> nz;
    for (std::size_t i = 0; i < len; ++i)
        if (g.samples[i] != 0.0) nz.push_back(i);
    Signal f = g;
    f.support = {g.t0, g.t_end()};
    parallel_for(len, [&](std::size_t k) {
        std::vector<double> terms;
        for (std::size_t i : nz) {
            if (i > k) break;
            terms.push_back(g.samples[i] * w[k - i]);
        }
        f.samples[k] = pairwise_sum(terms);
    });
    return f;
}

std::vector<double> default_x_grid(const Signal& g, int per_decade) {
    if (per_decade < 2) throw ParameterError("x grid needs at least two nodes per decade");
    double period = static_cast<double>(transform_length(g)) * g.dt;
    double lo = 0.05 * std::sqrt(g.dt), hi = 20.0 * std::sqrt(period);
    int n = static_cast<int>(std::ceil(per_decade * std::log10(hi / lo))) + 1;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
    return x;
}

EquivalenceRatio equivalence_ratio(const Signal& g, const BesovParams& p, const std::vector<double>& x_grid,
                                   const LPProfile& profile) {
    p.validate();
    g.validate();
    if (x_grid.size() < 2) throw ParameterError("x grid needs at least two nodes");
    for (std::size_t i = 0; i < x_grid.size(); ++i)
        if (!(x_grid[i] > 0.0) || (i > 0 && !(x_grid[i] > x_grid[i - 1])))
            throw ParameterError("x grid must be positive and increasing");
    EquivalenceRatio r;
    r.band = resolvable_band(g, profile);
    if (r.band.jmax - r.band.jmin < 2) throw ResolutionError("too few resolvable levels", r.band.jmin, r.band.jmax);

    std::size_t n = transform_length(g);
    auto spec = spectrum(g, n);
    std::vector<double> h(x_grid.size());
    parallel_for(x_grid.size(), [&](std::size_t i) {
        double x = x_grid[i];
        auto buf = real_buf(n);
        filtered(
            spec.get(), n, g.dt,
            [&](double w) {
                std::complex<double> root = std::sqrt(std::complex<double>(0.0, w));
                return 0.5 * root * std::exp(-x * root);
            },
            buf.get());
        h[i] = power_sum(buf.get(), n, p.q) * g.dt;
    });
    // int_0^inf h dx: h roughly constant below the first node, trapezoid in log x above
    std::vector<double> parts{h.front() * x_grid.front()};
    for (std::size_t i = 1; i < x_grid.size(); ++i) {
        double dl = std::log(x_grid[i] / x_grid[i - 1]);
        parts.push_back(0.5 * dl * (h[i] * x_grid[i] + h[i - 1] * x_grid[i - 1]));
    }
    r.N = std::pow(pairwise_sum(parts), 1.0 / p.q);
    auto terms = besov_terms(g, p, r.band.jmin, r.band.jmax, profile);
    r.B_hi = std::pow(pairwise_sum(terms), 1.0 / p.q);
    r.B_lo = std::pow(pairwise_sum(terms.data() + 1, terms.size() - 2), 1.0 / p.q);
    r.lower = r.N / r.B_hi;
    r.upper = r.N / r.B_lo;
    return r;
}

namespace {

double window(double t, double a, double b, double w) {
    return smooth_step((t - a) / w) * smooth_step((b - t) / w);
}

constexpr double kLacA = 0.75, kLacB = 0.875, kRamp = 1.0 / 32.0;

void check_gt(GTKind kind, double q, const GTParams& p) {
    if (!(q > 1.0) || !std::isfinite(q)) throw ParameterError("q must lie in (1, inf)");
    if (p.dt < 0.0) throw ParameterError("dt must be non-negative");
    if (kind == GTKind::lacunary && (p.J < 1 || p.J > 30 || !(p.omega0 > 0.0)))
        throw ParameterError("lacunary data needs 1 <= J <= 30 and omega0 > 0");
    if (kind == GTKind::holder_beta && !(p.beta > 0.0 && p.beta <= 0.5))
        throw ParameterError("holder exponent beta must lie in (0, 1/2]");
}

}  // namespace

double gT_value(GTKind kind, double q, const GTParams& p, double t) {
    check_gt(kind, q, p);
    switch (kind) {
        case GTKind::box:
            return window(t, kLacA, kLacB, kRamp);
        case GTKind::holder_beta:
            if (t <= 0.25 || t >= 1.0) return 0.0;
            return smooth_step((t - 0.25) / 0.25) * std::pow(1.0 - t, p.beta);
        case GTKind::lacunary: {
            double c = window(t, kLacA, kLacB, kRamp);
            if (c == 0.0) return 0.0;
            double s = 0.5 - 0.5 / q;
            std::vector<double> terms;
            for (int j = 1; j <= p.J; ++j)
                terms.push_back(std::exp2(-j * s) * std::pow(double(j), -1.0 / q) *
                                std::cos(std::ldexp(p.omega0, j) * t));
            return c * pairwise_sum(terms);
        }
    }
    return 0.0;
}

Signal construct_gT(GTKind kind, double q, const GTParams& p) {
    check_gt(kind, q, p);
    Interval supp = kind == GTKind::holder_beta ? Interval{0.25, 1.0} : Interval{kLacA, kLacB};
    double dt = p.dt;
    if (dt == 0.0) {
        // top lacunary component must sit inside the highest resolvable level
        dt = kind == GTKind::lacunary ? kPi / (3.0 * std::ldexp(p.omega0, p.J)) : 1.0 / 4096.0;
    }
    double span = std::max(supp.b, 8.0 * supp.length());
    std::size_t len = next_pow2(span / dt);
    return Signal::sample([&](double t) { return gT_value(kind, q, p, t); }, 0.0, dt, len, supp);
}

GTKind parse_gt_kind(const std::string& s) {
    if (s == "lacunary") return GTKind::lacunary;
    if (s == "holder_beta") return GTKind::holder_beta;
    if (s == "box") return GTKind::box;
    throw ParameterError("unknown data kind '" + s + "'");
}

std::string to_string(GTKind k) {
    switch (k) {
        case GTKind::lacunary: return "lacunary";
        case GTKind::holder_beta: return "holder_beta";
        case GTKind::box: return "box";
    }
    return "";
}

}  // namespace stokes
