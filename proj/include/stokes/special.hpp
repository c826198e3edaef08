#pragma once

#include <vector>

#include "stokes/quadrature.hpp"
#include "stokes/types.hpp"

namespace stokes {

// Heat kernel in R^n, n = x.size(); zero for t <= 0.
double heat_kernel(const std::vector<double>& x, double t);
double heat_kernel(const SpaceTimePoint& p);

// 1D heat kernel and its k-th spatial derivative.
double heat1(double x, double t);
double heat1_deriv(double x, double t, int k);
// Fills out[0..kmax] with the spatial derivatives of the 1D heat kernel.
void heat1_derivs(double x, double t, int kmax, double* out);

// Analytic derivative d_t^m d_x^l of the heat kernel (t > 0).
double heat_kernel_deriv(const std::vector<double>& x, double t, const MultiIndexDeriv& d);
double heat_kernel_deriv(const SpaceTimePoint& p, const MultiIndexDeriv& d);

// Fundamental solution of -Laplace in R^n and its spatial derivatives (|x| > 0).
double fundamental_solution(const std::vector<double>& x, int n);
double fundamental_solution_deriv(const std::vector<double>& x, const std::vector<int>& l);

enum class TailMethod { closed_form, quadrature };

// d^d of the integral of Gamma(x, s) over s in (t, inf). Requires 2m + |l| + n >= 3.
double heat_time_tail(const std::vector<double>& x, double t, const MultiIndexDeriv& d,
                      const QuadratureSpec& spec, TailMethod method = TailMethod::closed_form);

// Expansion of d^l F(|x|^2) = sum_r P_r(x) F^{(r)}(|x|^2). Returns P_r evaluated at x.
std::vector<double> radial_coefficients(const std::vector<double>& x, const std::vector<int>& l);

// Multinomial expansion of Laplace^m applied after l: list of (coefficient, multi-index).
struct LaplacePowerTerm {
    double coeff;
    std::vector<int> l;
};
std::vector<LaplacePowerTerm> laplace_power(const std::vector<int>& l, int m, int dim);

}  // namespace stokes
