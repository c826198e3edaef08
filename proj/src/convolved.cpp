#include "stokes/convolved.hpp"

#include <cmath>
#include <numbers>

#include <gsl/gsl_sf_bessel.h>

#include "stokes/special.hpp"

namespace stokes {

namespace {
constexpr double kPi = std::numbers::pi;
}

ConvolvedE2::ConvolvedE2(double x1, double h, double t, int max_order) : max_order_(max_order) {
    if (!(t > 0.0)) throw DomainError("convolved E requires t > 0");
    if (h < 0.0) throw DomainError("convolved E requires h >= 0");
    if (max_order < 1 || max_order > kMaxOrder) throw DomainError("convolved E derivative order out of range");
    double st = 2.0 * std::sqrt(t);
    faddeeva_derivs(cplx(x1 / st, h / st), max_order - 1, wd_);
    double s = 1.0 / (2.0 * std::sqrt(kPi));
    for (int m = 0; m <= max_order; ++m) {
        scale_[m] = s;
        s /= st;
    }
}

double ConvolvedE2::operator()(int p, int q) const {
    int m = p + q;
    if (p < 0 || q < 0 || m < 1 || m > max_order_)
        throw DomainError("convolved E at n = 2 needs 1 <= p + q <= max order");
    cplx w = wd_[m - 1];
    double v;
    switch ((q + 1) % 4) {
        case 0: v = w.real(); break;
        case 1: v = -w.imag(); break;
        case 2: v = -w.real(); break;
        default: v = w.imag(); break;
    }
    return v * scale_[m];
}

double convolved_e2(int p, int q, double x1, double h, double t) {
    ConvolvedE2 c(x1, h, t, p + q);
    return c(p, q);
}

double convolved_e3(int b1, int b2, int q, double x1, double x2, double h, double t, const QuadratureSpec& spec) {
    if (!(t > 0.0)) throw DomainError("convolved E requires t > 0");
    if (h < 0.0) throw DomainError("convolved E requires h >= 0");
    if (q >= 2)
        return -(convolved_e3(b1 + 2, b2, q - 2, x1, x2, h, t, spec) +
                 convolved_e3(b1, b2 + 2, q - 2, x1, x2, h, t, spec));
    MultiIndexDeriv db(0, {b1, b2});
    if (h == 0.0 && q == 1) return -0.5 * heat_kernel_deriv({x1, x2}, t, db);
    double rho = std::hypot(x1, x2);
    double phix = std::atan2(x2, x1);
    double st = std::sqrt(t);
    auto radial = [&](double r) {
        if (r == 0.0 && h == 0.0) return 1.0 / (4.0 * kPi);
        return r * fundamental_solution_deriv({r, 0.0, h}, {0, 0, q});
    };
    auto angular = [&](double r) {
        auto g = [&](double phi) {
            return heat_kernel_deriv({x1 - r * std::cos(phi), x2 - r * std::sin(phi)}, t, db);
        };
        QuadratureSpec s = spec;
        s.abs_tol = spec.abs_tol * 1e-2;
        return integrate_checked(g, phix - kPi, phix + kPi, s, {phix}).value;
    };
    double R = rho + 24.0 * st;
    std::vector<double> bp{rho, h, 2.0 * h, 0.5 * h};
    for (double k : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        bp.push_back(rho - 2.0 * k * st);
        bp.push_back(rho + 2.0 * k * st);
    }
    auto f = [&](double r) { return radial(r) * angular(r); };
    return integrate_checked(f, 0.0, R, spec, bp).value;
}

double convolved_e(const std::vector<int>& b, int q, const std::vector<double>& xprime, double h, double t,
                   const QuadratureSpec& spec) {
    if (xprime.size() == 1) return convolved_e2(b.empty() ? 0 : b[0], q, xprime[0], h, t);
    if (xprime.size() == 2) {
        int b1 = b.size() > 0 ? b[0] : 0, b2 = b.size() > 1 ? b[1] : 0;
        return convolved_e3(b1, b2, q, xprime[0], xprime[1], h, t, spec);
    }
    throw DomainError("convolved E supports n = 2 and n = 3 only");
}

double A_function(const std::vector<double>& xprime, double w, double z, double t, int n, const QuadratureSpec& spec,
                  const std::vector<int>& lx, int jw, int kz) {
    if (n < 2 || n > 3) throw DomainError("A_function supports n = 2 and n = 3 only");
    if (static_cast<int>(xprime.size()) != n - 1) throw DomainError("xprime must have n-1 entries");
    if (!(t > 0.0)) throw DomainError("A_function requires t > 0");
    double xn2 = 0.0;
    for (double v : xprime) xn2 += v * v;
    if (xn2 == 0.0 && w == 0.0) throw SingularityError("A_function requires (x', w) != (0, 0)");
    if (w == 0.0 && jw > 0) throw SingularityError("w-derivatives of A need w > 0");
    double gz = heat1_deriv(z, t, kz);
    if (n == 3) {
        int b1 = lx.size() > 0 ? lx[0] : 0, b2 = lx.size() > 1 ? lx[1] : 0;
        return gz * convolved_e3(b1, b2, jw, xprime[0], xprime[1], std::abs(w), t, spec) *
               ((jw % 2 && w < 0.0) ? -1.0 : 1.0);
    }
    double x1 = xprime[0];
    int l1 = lx.empty() ? 0 : lx[0];
    double st = std::sqrt(t);
    auto f = [&](double y) {
        if (y == 0.0 && w == 0.0) return 0.0;
        return fundamental_solution_deriv({y, w}, {0, jw}) * heat1_deriv(x1 - y, t, l1);
    };
    std::vector<double> bp{0.0, x1};
    for (double k : {1.0, 2.0, 4.0, 8.0}) {
        bp.push_back(x1 - 2.0 * k * st);
        bp.push_back(x1 + 2.0 * k * st);
        if (w != 0.0) {
            bp.push_back(k * std::abs(w));
            bp.push_back(-k * std::abs(w));
        }
    }
    double a = x1 - 24.0 * st, b = x1 + 24.0 * st;
    return gz * integrate_checked(f, a, b, spec, bp).value;
}

double gaussian_singular_conv_eps(const std::vector<double>& xprime, double t, int n, double eps,
                                  const QuadratureSpec& spec) {
    if (static_cast<int>(xprime.size()) != n - 1) throw DomainError("xprime must have n-1 entries");
    if (!(t > 0.0)) throw DomainError("requires t > 0");
    double st = 2.0 * std::sqrt(t);
    if (n == 2) {
        double x = xprime[0];
        auto g = [&](double y) {
            double a = (x - y) / st, b = (x + y) / st;
            return (std::exp(-a * a) - std::exp(-b * b)) / y;
        };
        double Y = std::abs(x) + 12.0 * st;
        if (eps >= Y) return 0.0;
        std::vector<double> bp{std::abs(x)};
        for (double k : {0.5, 1.0, 2.0, 4.0}) {
            bp.push_back(std::abs(x) - k * st);
            bp.push_back(std::abs(x) + k * st);
        }
        return integrate_checked(g, eps, Y, spec, bp).value;
    }
    if (n == 3) {
        double rho = std::hypot(xprime[0], xprime[1]);
        if (rho == 0.0) throw SingularityError("requires |x'| > 0");
        double c = 2.0 * kPi * xprime[0] / rho;
        auto g = [&](double r) {
            double d = (r - rho) / st;
            return std::exp(-d * d) * gsl_sf_bessel_I1_scaled(r * rho / (2.0 * t)) / r;
        };
        double R = rho + 12.0 * st;
        if (eps >= R) return 0.0;
        std::vector<double> bp{rho};
        for (double k : {0.5, 1.0, 2.0, 4.0}) {
            bp.push_back(rho - k * st);
            bp.push_back(rho + k * st);
        }
        return c * integrate_checked(g, eps, R, spec, bp).value;
    }
    throw DomainError("gaussian_singular_conv supports n = 2 and n = 3 only");
}

double gaussian_singular_conv(const std::vector<double>& xprime, double t, int n, const QuadratureSpec& spec) {
    double r2 = 0.0;
    for (double v : xprime) r2 += v * v;
    if (r2 == 0.0) throw SingularityError("requires |x'| > 0");
    auto I = [&](double e) { return gaussian_singular_conv_eps(xprime, t, n, e, spec); };
    return pv_extrapolate(I, spec).value;
}

}  // namespace stokes
