#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stokes/besov.hpp"
#include "stokes/quadrature.hpp"

namespace stokes {

// Time profile driving the shear flow. `knots` lists points where g is not smooth
// (support ends, ramp ends, singular points); they become quadrature breakpoints.
struct Forcing {
    std::function<double(double)> g;
    std::function<double(double)> dg;  // optional exact derivative
    // Optional g(b - r) and g'(b - r) with b = support.b, for profiles singular at b;
    // lags near b then keep full relative precision.
    std::function<double(double)> g_end, dg_end;
    Interval support{};
    std::vector<double> knots;

    double operator()(double t) const { return (t < support.a || t > support.b) ? 0.0 : g(t); }
    // dg when set, else a fourth-order central difference.
    double derivative(double t, double h = 1e-3) const;
    void validate() const;
    // g(t - tau) (or g'), through g_end near the end of the support.
    double lagged(double t, double tau, bool deriv) const;

    static Forcing from_gT(GTKind kind, double q, const GTParams& params = {});
    // Piecewise-linear interpolant of a sampled signal.
    static Forcing from_signal(const Signal& s);
};

enum class BcKind { navier, dirichlet };
// gprime: forcing g'(t) with pressure -g' x_1; g: forcing g(t) with pressure -g x_1.
enum class PressureMode { gprime, g };

struct ShearConfig {
    double alpha = 1.0;
    Forcing forcing;
    BcKind bc = BcKind::navier;
    PressureMode pressure = PressureMode::gprime;
    void validate() const;
};

struct ShearValues {
    double v = 0.0, v_y = 0.0, v_yy = 0.0, v_yyy = 0.0, v_yyyy = 0.0;
    double of_order(int k) const;
};

// int_0^inf e^{-alpha z} Gamma_1(y + z, t) dz
double exp_tail(double y, double t, double alpha);

double robin_green(double y, double xi, double t, double alpha);
double dirichlet_green(double y, double xi, double t);

// int_0^inf G(y, xi, t) dxi for the Robin Green function, and its y-derivative.
double green_mass(double y, double t, double alpha);
double green_mass_dy(double y, double t, double alpha);

// v(y, t), y >= 0, by the by-parts representation (no derivative of g needed).
double v_eval(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec = {});
// v and its y-derivatives up to order four, y > 0.
ShearValues v_derivs(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec = {});
// v(y, t) = int_0^t f(t - tau) M(y, tau) dtau with M the Green-function mass and f = g' (or g).
double v_green_path(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec = {});

// Robin residual v_y - alpha v at y > 0 from the solution, and its closed representation
// -alpha int_0^t g'(t - tau) erf(y / 2 sqrt(tau)) dtau.
double robin_residual(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec = {});
double robin_residual_direct(const ShearConfig& cfg, double y, double t, const QuadratureSpec& spec = {});

// theta(y, t) = int_0^t g(t - s) d_y^2 Gamma_1(y, s) ds, y > 0.
double theta_eval(double y, double t, const Forcing& g, const QuadratureSpec& spec = {});

// Leading constant of theta(y, 1) ~ L y^{2 beta - 1} for g = (1 - t)^beta near t = 1.
double theta_scaling_constant(double beta);

// Order of the y-derivative whose L^q norm blows up: 2 (Navier, g'), 4 (Navier, g),
// 1 (Dirichlet, g'), 3 (Dirichlet, g).
int blowup_order(const ShearConfig& cfg);

struct ShearLattice {
    int k_min = 2, k_max = 10;  // eps = 2^{-k}
    int y_per_octave = 8;
    double t_lo = 0.75, t_hi = 1.0;
    bool graded = true;  // geometric in t_hi - t, else uniform
    double s_min = 1e-10;
    int s_per_octave = 4;
    int n_t_uniform = 401;
    void validate() const;
    std::vector<double> y_nodes() const;  // decreasing from 1/2
    std::vector<double> t_nodes() const;  // increasing, ends at t_hi
};

struct BlowupRow {
    double eps = 0.0;
    double norm = 0.0;
    double slope = 0.0;  // cumulative fit of log norm against log(1/eps)
    double growth = 0.0; // norm / previous norm
    double sup_v = 0.0, sup_vy = 0.0;
};

struct PowerFit {
    double exponent = 0.0, amplitude = 0.0, background = 0.0;
    double plain_slope = 0.0;  // ordinary log-log regression
};

// Fits values ~ A y^p + c and the plain log-log slope of |values|.
PowerFit fit_power_with_background(const std::vector<double>& y, const std::vector<double>& values);
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ShearBlowup {
    std::vector<BlowupRow> rows;
    std::vector<double> y, t;
    std::vector<ShearValues> lattice;  // [iy * t.size() + it]
    int order = 2;
    double q = 2.0;
};

ShearBlowup shear_blowup(const ShearConfig& cfg, double q, const ShearLattice& lattice,
                         const QuadratureSpec& spec = {});

BcKind parse_bc(const std::string& s);
PressureMode parse_pressure(const std::string& s);

}  // namespace stokes
