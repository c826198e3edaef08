#pragma once

#include <functional>
#include <vector>

#include "stokes/types.hpp"

namespace stokes {

using Integrand = std::function<double(double)>;

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = true;
};

// Gauss-Legendre nodes and weights on [-1, 1] for n in {8, 10, 15, 16, 20, 30, 40}.
const std::vector<double>& gl_nodes(int n);
const std::vector<double>& gl_weights(int n);

// Fixed composite Gauss-Legendre rule over the panels [p_i, p_{i+1}].
double composite_gl(const Integrand& f, const std::vector<double>& panels, int order);

// Global adaptive Gauss-Kronrod (7/15). Interior breakpoints outside (a, b) are ignored.
QuadResult integrate(const Integrand& f, double a, double b, const QuadratureSpec& spec,
                     const std::vector<double>& breakpoints = {});

// Same as integrate() but raises ToleranceError on non-convergence.
QuadResult integrate_checked(const Integrand& f, double a, double b, const QuadratureSpec& spec,
                             const std::vector<double>& breakpoints = {});

// Vector-valued integrand: writes dim values into val and, when mag is non-null, dim
// magnitudes (sum of absolute values of the parts) used to recognise cancellation noise.
using VecIntegrand = std::function<void(double, double* val, double* mag)>;

// Adaptive GK15 on all components at once; refines the segment with the largest error
// relative to the tolerance of a not yet converged component. A component is also accepted
// when its error is below cancel_rel times the integral of its magnitude.
std::vector<QuadResult> integrate_vec(const VecIntegrand& f, std::size_t dim, double a, double b,
                                      const QuadratureSpec& spec, const std::vector<double>& breakpoints = {},
                                      double cancel_rel = 1e-13);

// Integral of e^{-alpha z} f(z) over (0, inf). f must decay on the declared scale
// (or be bounded when alpha > 0); the truncated tail is bounded from the last panel.
QuadResult semi_infinite_quad(const Integrand& f, double alpha, double decay_scale,
                              const QuadratureSpec& spec, const std::vector<double>& breakpoints = {});

// Richardson extrapolation of I(eps) -> I(0) when I(eps) - I(0) expands in odd powers of eps.
// Returns the extrapolated value; throws ToleranceError when successive extrapolants
// fail to settle within spec.abs_tol (relative to spec.rel_tol * |value| as well).
QuadResult pv_extrapolate(const std::function<double(double)>& I_eps, const QuadratureSpec& spec);

}  // namespace stokes
