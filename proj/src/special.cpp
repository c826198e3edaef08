#include "stokes/special.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace stokes {

namespace {

constexpr double kPi = std::numbers::pi;

using Mono = std::array<int, 3>;
using Poly = std::map<Mono, double>;

// Polynomials P_r of the radial chain rule for a given derivative multi-index.
const std::vector<Poly>& radial_polys(const std::vector<int>& l) {
    thread_local std::map<std::vector<int>, std::vector<Poly>> cache;
    std::vector<int> key(l);
    while (!key.empty() && key.back() == 0) key.pop_back();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<Poly> P(1);
    P[0][{0, 0, 0}] = 1.0;
    for (std::size_t i = 0; i < key.size(); ++i) {
        for (int rep = 0; rep < key[i]; ++rep) {
            std::vector<Poly> Q(P.size() + 1);
            for (std::size_t r = 0; r < P.size(); ++r) {
                for (const auto& [mono, c] : P[r]) {
                    if (mono[i] > 0) {
                        Mono d = mono;
                        d[i] -= 1;
                        Q[r][d] += c * mono[i];
                    }
                    Mono u = mono;
                    u[i] += 1;
                    Q[r + 1][u] += 2.0 * c;
                }
            }
            P.swap(Q);
        }
    }
    return cache.emplace(key, std::move(P)).first->second;
}

double eval_poly(const Poly& p, const std::vector<double>& x) {
    double s = 0.0;
    for (const auto& [mono, c] : p) {
        double term = c;
        for (std::size_t i = 0; i < 3; ++i)
            for (int k = 0; k < mono[i]; ++k) term *= (i < x.size() ? x[i] : 0.0);
        s += term;
    }
    return s;
}

double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

void hermite_upto(double s, int kmax, double* H) {
    H[0] = 1.0;
    if (kmax >= 1) H[1] = 2.0 * s;
    for (int k = 1; k < kmax; ++k) H[k + 1] = 2.0 * s * H[k] - 2.0 * k * H[k - 1];
}

// v^{-s} * lower_gamma(s, v), continuous at v = 0.
double scaled_lower_gamma(double s, double v) {
    if (v < 1e-2) {
        double sum = 0.0, term = 1.0;
        for (int k = 0; k < 40; ++k) {
            double add = term / (s + k);
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
            term *= -v / (k + 1);
        }
        return sum;
    }
    return boost::math::tgamma_lower(s, v) / std::pow(v, s);
}

double spatial_only_heat_deriv(const std::vector<double>& x, double t, const std::vector<int>& l) {
    double g = heat_kernel(x, t);
    double c = 1.0 / (2.0 * std::sqrt(t));
    double H[64];
    for (std::size_t i = 0; i < x.size(); ++i) {
        int k = i < l.size() ? l[i] : 0;
        if (k == 0) continue;
        hermite_upto(x[i] * c, k, H);
        g *= ((k % 2) ? -1.0 : 1.0) * std::pow(c, k) * H[k];
    }
    return g;
}

}  // namespace

std::vector<double> radial_coefficients(const std::vector<double>& x, const std::vector<int>& l) {
    const auto& P = radial_polys(l);
    std::vector<double> out(P.size());
    for (std::size_t r = 0; r < P.size(); ++r) out[r] = eval_poly(P[r], x);
    return out;
}

std::vector<LaplacePowerTerm> laplace_power(const std::vector<int>& l, int m, int dim) {
    std::vector<LaplacePowerTerm> out;
    std::vector<int> base(dim, 0);
    for (int i = 0; i < dim && i < static_cast<int>(l.size()); ++i) base[i] = l[i];
    // Enumerate gamma with |gamma| = m, coefficient m!/gamma!.
    std::vector<int> g(dim, 0);
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == dim - 1) {
            g[i] = left;
            double c = boost::math::factorial<double>(m);
            std::vector<int> li(base);
            for (int k = 0; k < dim; ++k) {
                c /= boost::math::factorial<double>(g[k]);
                li[k] += 2 * g[k];
            }
            out.push_back({c, li});
            return;
        }
        for (int v = 0; v <= left; ++v) {
            g[i] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, m);
    return out;
}

double heat_kernel(const std::vector<double>& x, double t) {
    if (t <= 0.0) return 0.0;
    double n = static_cast<double>(x.size());
    return std::pow(4.0 * kPi * t, -0.5 * n) * std::exp(-norm2(x) / (4.0 * t));
}

double heat_kernel(const SpaceTimePoint& p) { return heat_kernel(p.full(), p.t); }

double heat1(double x, double t) {
    if (t <= 0.0) return 0.0;
    return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
}

void heat1_derivs(double x, double t, int kmax, double* out) {
    double g = heat1(x, t);
    double c = 1.0 / (2.0 * std::sqrt(t));
    double H[64];
    hermite_upto(x * c, kmax, H);
    double f = g;
    for (int k = 0; k <= kmax; ++k) {
        out[k] = f * H[k];
        f *= -c;
    }
}

double heat1_deriv(double x, double t, int k) {
    if (t <= 0.0) return 0.0;
    double buf[64];
    heat1_derivs(x, t, k, buf);
    return buf[k];
}

double heat_kernel_deriv(const std::vector<double>& x, double t, const MultiIndexDeriv& d) {
    if (t <= 0.0) throw DomainError("heat kernel derivative requires t > 0");
    d.validate();
    int dim = static_cast<int>(x.size());
    if (d.m == 0) return spatial_only_heat_deriv(x, t, d.l);
    double s = 0.0;
    for (const auto& term : laplace_power(d.l, d.m, dim))
        s += term.coeff * spatial_only_heat_deriv(x, t, term.l);
    return s;
}

double heat_kernel_deriv(const SpaceTimePoint& p, const MultiIndexDeriv& d) {
    return heat_kernel_deriv(p.full(), p.t, d);
}

double fundamental_solution(const std::vector<double>& x, int n) {
    if (static_cast<int>(x.size()) != n) throw DomainError("point dimension does not match n");
    double r2 = norm2(x);
    if (r2 == 0.0) throw SingularityError("fundamental solution is singular at the origin");
    if (n == 2) return -std::log(r2) / (4.0 * kPi);
    double area = 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);  // |S^{n-1}| = n |B_1|
    return std::pow(r2, 0.5 * (2.0 - n)) / ((n - 2.0) * area);
}

double fundamental_solution_deriv(const std::vector<double>& x, const std::vector<int>& l) {
    int n = static_cast<int>(x.size());
    double rho = norm2(x);
    if (rho == 0.0) throw SingularityError("fundamental solution is singular at the origin");
    auto P = radial_coefficients(x, l);
    double s = 0.0;
    if (n == 2) {
        s = P[0] * (-std::log(rho) / (4.0 * kPi));
        for (std::size_t r = 1; r < P.size(); ++r) {
            double fr = -(1.0 / (4.0 * kPi)) * ((r % 2) ? 1.0 : -1.0) *
                        boost::math::factorial<double>(static_cast<unsigned>(r - 1)) * std::pow(rho, -double(r));
            s += P[r] * fr;
        }
        return s;
    }
    double area = 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
    double c = 1.0 / ((n - 2.0) * area);
    double e = -0.5 * (n - 2.0);
    double falling = 1.0;
    for (std::size_t r = 0; r < P.size(); ++r) {
        s += P[r] * c * falling * std::pow(rho, e - double(r));
        falling *= (e - double(r));
    }
    return s;
}

namespace detail {

// Closed form of d^l of int_t^inf Gamma(x, s) ds, valid also at x = 0 when finite.
double time_tail_spatial(const std::vector<double>& x, double t, const std::vector<int>& l) {
    int n = static_cast<int>(x.size());
    double rho = norm2(x);
    double v = rho / (4.0 * t);
    auto P = radial_coefficients(x, l);
    double pref = std::pow(4.0 * kPi, -0.5 * n);
    double s = 0.0;
    double quarter = 1.0;
    for (std::size_t r = 0; r < P.size(); ++r) {
        double a = 0.5 * n + double(r);
        if (P[r] != 0.0) {
            if (a <= 1.0) throw DomainError("time tail diverges without a spatial derivative at n = 2");
            double G = std::pow(t, 1.0 - a) * scaled_lower_gamma(a - 1.0, v);
            s += P[r] * pref * quarter * G;
        }
        quarter *= -0.25;
    }
    return s;
}

}  // namespace detail

double heat_time_tail(const std::vector<double>& x, double t, const MultiIndexDeriv& d,
                      const QuadratureSpec& spec, TailMethod method) {
    int n = static_cast<int>(x.size());
    d.validate();
    if (!(t > 0.0)) throw DomainError("time tail requires t > 0");
    if (norm2(x) == 0.0) throw SingularityError("time tail evaluated at x = 0");
    if (2 * d.m + d.spatial_order() + n < 3) throw DomainError("derivative order too low: need 2m + l + n >= 3");
    if (d.m >= 1) return -heat_kernel_deriv(x, t, MultiIndexDeriv(d.m - 1, d.l));
    if (method == TailMethod::closed_form) return detail::time_tail_spatial(x, t, d.l);
    double e = fundamental_solution_deriv(x, d.l);
    double rho = norm2(x);
    auto f = [&](double s) { return s <= 0.0 ? 0.0 : heat_kernel_deriv(x, s, d); };
    std::vector<double> bp;
    for (double s = rho / 64.0; s < t; s *= 2.0) bp.push_back(s);
    QuadResult q = integrate_checked(f, 0.0, t, spec, bp);
    return e - q.value;
}

}  // namespace stokes
