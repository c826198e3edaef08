#pragma once

#include <vector>

#include "stokes/field.hpp"
#include "stokes/shear.hpp"

namespace stokes {

// Boundary data a = g^S(x_1) g^T(t) e_2 in the half-plane, with g^S = d/dx_1 (1 - (x_1 - x0)^2)^4
// supported in [x0 - 1, x0 + 1] and g^T the holder profile with exponent beta.
struct PoissonConfig {
    int n = 2;
    double alpha = 1.0;
    double x0 = -4.0;
    double beta = 0.1;
    double q = 6.0;
    int k_min = 2, k_max = 10;  // truncation levels eps = 2^{-k}
    // Fine lattice: x_n = 2^{-i / xn_per_octave} from 1 to 2^{-k_max}, x_1 in [-1, 1] with nx
    // points, t uniform on [0, 3/4] with nt_uniform points then geometric in 1 - t down to s_min.
    // Every other fine point forms the coarse lattice.
    int xn_per_octave = 4;
    int nx = 17;
    int nt_uniform = 25;
    int s_per_octave = 4;
    double s_min = 1e-8;
    std::vector<double> far_radii{12.0, 24.0, 48.0};
    FieldSpec field{};
    QuadratureSpec quad{1e-13, 1e-10};
    void validate() const;
};

struct PoissonLattice {
    FieldLattice lattice;
    std::vector<bool> coarse_x, coarse_xn, coarse_t;  // membership in the coarse lattice
};

PoissonLattice poisson_lattice(const PoissonConfig& cfg);
BoundaryData poisson_data(const PoissonConfig& cfg);
Forcing poisson_forcing(const PoissonConfig& cfg);

// psi(x_1) = (1 / 2 pi) int g^S_1(xi) / (x_1 - xi)^2 dxi, the tangential profile of the
// predicted singular part.
double poisson_psi(const PoissonConfig& cfg, double x1);
// H_1(x, t) = psi(x_1) theta(x_n, t).
double poisson_h1(const PoissonConfig& cfg, const Forcing& g, double x1, double xn, double t);

struct PoissonRow {
    double eps = 0.0;
    double norm_d2 = 0.0;    // ||d_n^2 u_1||_{L^q} over x_n > eps
    double norm_h1 = 0.0;    // ||H_1||_{L^q} over the same set
    double growth = 0.0;     // norm_d2 over the previous row
    double remainder = 0.0;  // sup |d_n^2 u_1 - c H_1| over the same set
};

struct FarFieldRow {
    double radius = 0.0, x1 = 0.0, xn = 0.0;
    double value = 0.0;  // |u| + |grad u| at t = 1
    double scaled = 0.0; // radius^n * value
};

struct PoissonReport {
    std::vector<PoissonRow> rows;
    double c_fit = 0.0, c_predicted = 0.0;
    double sup_coarse = 0.0, sup_fine = 0.0;  // sup |u| + |grad u| on the unit cylinder lattice
    std::vector<FarFieldRow> far;
    double far_slope = 0.0;  // log-log slope of value against radius, per direction averaged
    bool monotone = false, plateau = false;
    double sup_drift() const { return std::abs(sup_fine / sup_coarse - 1.0); }
    double remainder_ratio() const;  // last remainder over the first
};

PoissonReport poisson_blowup(const PoissonConfig& cfg);

}  // namespace stokes
