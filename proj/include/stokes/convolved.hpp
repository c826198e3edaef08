#pragma once

#include <vector>

#include "stokes/faddeeva.hpp"
#include "stokes/quadrature.hpp"
#include "stokes/types.hpp"

namespace stokes {

// Horizontal convolution of the fundamental solution with the tangential heat kernel,
//   C^{(b,q)}(x', h, t) = d_{x'}^b d_h^q  int E(x' - y', h) Gamma_{n-1}(y', t) dy',
// for h >= 0 (values at h = 0 are one-sided limits h -> 0+).

// n = 2: closed form through the Faddeeva function. One instance serves all (p, q)
// with 1 <= p + q <= max_order at a fixed (x1, h, t).
class ConvolvedE2 {
public:
    static constexpr int kMaxOrder = kFaddeevaMaxDeriv + 1;
    ConvolvedE2(double x1, double h, double t, int max_order);
    double operator()(int p, int q) const;

private:
    cplx wd_[kFaddeevaMaxDeriv + 1];
    double scale_[kMaxOrder + 1];
    int max_order_;
};

double convolved_e2(int p, int q, double x1, double h, double t);

// n = 3: polar quadrature about the singular point of E. b = (b1, b2).
double convolved_e3(int b1, int b2, int q, double x1, double x2, double h, double t, const QuadratureSpec& spec);

// Dispatch on n = xprime.size() + 1; b has n-1 entries.
double convolved_e(const std::vector<int>& b, int q, const std::vector<double>& xprime, double h, double t,
                   const QuadratureSpec& spec);

// A(x', w, z, t) = int E(x' - y', w) Gamma(y', z, t) dy' by direct quadrature. Optional
// derivatives: lx on x', jw on w, kz on z.
double A_function(const std::vector<double>& xprime, double w, double z, double t, int n, const QuadratureSpec& spec,
                  const std::vector<int>& lx = {}, int jw = 0, int kz = 0);

// p.v. int y1/|y'|^n exp(-|x'-y'|^2/4t) dy' with Richardson extrapolation in the exclusion radius.
double gaussian_singular_conv(const std::vector<double>& xprime, double t, int n, const QuadratureSpec& spec);

// The same integral with a single exclusion radius eps (no extrapolation).
double gaussian_singular_conv_eps(const std::vector<double>& xprime, double t, int n, double eps,
                                  const QuadratureSpec& spec);

}  // namespace stokes
