#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "stokes/besov.hpp"
#include "stokes/kernels.hpp"

namespace stokes {

// Uniform grid lo + i * step, i in [0, count).
struct Axis {
    double lo = 0.0, step = 1.0;
    int count = 1;
    double at(int i) const { return lo + step * i; }
    double hi() const { return at(count - 1); }
    void validate(const std::string& name) const;
};

enum class Smoothness { smooth, lq_only };

// Closed form a_j(x', t) with j 0-based and x' of length n-1.
using DataFunction = std::function<double(int j, const double* xp, double t)>;

// Boundary data a_j(x', t) sampled on a uniform grid over a box; values[j] is row-major
// over (x'_1, ..., x'_{n-1}, t) with t fastest.
struct BoundaryData {
    int n = 2;
    std::vector<Axis> space;
    Axis time;
    std::vector<Interval> support_space;
    Interval support_time;
    Smoothness smoothness = Smoothness::smooth;
    std::vector<std::vector<double>> values;
    // Optional closed forms; they replace interpolation of the samples when set.
    DataFunction exact, exact_dt;

    std::size_t grid_size() const;
    std::size_t index(const int* ispace, int it) const;
    void validate() const;
    bool component_zero(int j) const;
    bool is_zero() const;
    // Tensor cubic interpolation for smooth data, multilinear for lq_only; zero off the support.
    double eval(int j, const double* xp, double t) const;
    // Time derivative: exact_dt, else a fourth-order central difference of the closed form, else
    // interpolated fourth-order central differences of the samples.
    double eval_dt(int j, const double* xp, double t) const;
    // Grid L^q norm (sum of |a_j|^q times the cell volume) of component j, or of all when j < 0.
    double lq_norm(double q, int j = -1) const;
    // Samples of d_t a_j by fourth-order central differences. Filled on first use, which
    // must happen before concurrent calls to eval_dt.
    const std::vector<std::vector<double>>& dt_samples() const;
    BoundaryData scaled(double lambda) const;

    static BoundaryData sample(int n, std::vector<Axis> space, Axis time, std::vector<Interval> support_space,
                               Interval support_time, const DataFunction& f, Smoothness s = Smoothness::smooth,
                               bool keep_exact = true);
    // First line: JSON header; then a CSV table of coordinates and a_1..a_n.
    void save(const std::filesystem::path& path) const;
    static BoundaryData load(const std::filesystem::path& path);

private:
    mutable std::vector<std::vector<double>> dt_values_;
    double interp(const std::vector<double>& v, const double* xp, double t) const;
};

// Tensor lattice of points (x', x_n, t); values are stored [ixn][ix'...][it] with t fastest.
struct FieldLattice {
    std::vector<std::vector<double>> space;  // n-1 coordinate lists
    std::vector<double> xn, t;

    int n() const { return static_cast<int>(space.size()) + 1; }
    std::size_t size() const;
    std::size_t plane_size() const;  // points per x_n
    void validate() const;
    // (2 half + 1) points per axis around the centre with spacing h (space, x_n) and dt.
    static FieldLattice uniform(const std::vector<double>& centre_xp, double centre_xn, double centre_t, double h,
                                double dt, int half);
};

// Output u_k with derivative deriv (applied to x and t).
struct FieldOutput {
    int k = 1;
    MultiIndexDeriv deriv{};
};

struct FieldSpec {
    int gauss_order = 8;
    double time_floor = 1.0 / 64;  // first time panel ends at time_floor * x_ref^2
    double space_floor = 1.0 / 8;  // innermost half-width over max(x_ref, sqrt(tau))
    double time_cap = 0.25;        // longest time panel
    double space_cap = 0.5;        // longest space panel
    // Rule length scale; 0 selects the smallest x_n of the lattice. One rule then serves the
    // whole lattice so quadrature errors vary smoothly in x_n.
    double x_ref = 0.0;
    bool per_xn = false;  // separate rule scaled to each x_n
    QuadratureSpec kernel{1e-13, 1e-8};
    std::string cache_dir;  // empty disables the disk cache
    void validate() const;
};

// Quadrature nodes for the lag (z', tau) = (x' - y', t - s); z has n-1 entries per node.
struct LagRule {
    int dim = 1;
    std::vector<double> z, tau, w;
    std::size_t size() const { return w.size(); }
};

// Box of lags [z_lo, z_hi] x [tau_lo, tau_hi] needed by a lattice and a data support.
struct LagBox {
    std::vector<Interval> z;
    Interval tau;
};

LagBox lag_box(const BoundaryData& a, const FieldLattice& lat);
// Graded rule around z' = 0, tau = 0 scaled to x_ref; instantaneous rules have tau = 0 nodes.
LagRule lag_rule(const LagBox& box, double x_ref, const FieldSpec& spec);
LagRule instant_rule(const LagBox& box, double x_ref, const FieldSpec& spec);

// Kernel values at the nodes of a rule for one x_n; vals[node * ids.size() + e].
struct KernelTable {
    double xn = 0.0;
    std::vector<KernelId> ids;
    std::vector<double> vals;
};

// Smooth part of P^0 + alpha P^alpha (velocity ids) or alpha g^alpha (pressure ids) at every node.
KernelTable kernel_table(const LagRule& rule, double xn, const std::vector<KernelId>& ids, double alpha,
                         const FieldSpec& spec);

// Stable 64-bit FNV-1a hash used for cache keys.
std::uint64_t fnv1a(const std::string& s);

// Velocity outputs on the lattice; result[o][point].
std::vector<std::vector<double>> build_velocity_outputs(const BoundaryData& a, double alpha, const FieldLattice& lat,
                                                        const std::vector<FieldOutput>& outs, const FieldSpec& spec);

struct Field {
    int n = 2;
    FieldLattice lattice;
    std::vector<std::vector<double>> u;  // n components
    std::vector<double> p;               // empty unless the pressure was built
    void save_csv(const std::filesystem::path& path) const;
};

Field build_velocity(const BoundaryData& a, double alpha, const FieldLattice& lat, const FieldSpec& spec);
// Pressure (derivative deriv) on the lattice.
std::vector<double> build_pressure_values(const BoundaryData& a, double alpha, const FieldLattice& lat,
                                          const FieldSpec& spec, const MultiIndexDeriv& deriv = {});
Field build_pressure(const BoundaryData& a, double alpha, const FieldLattice& lat, const FieldSpec& spec);

// Fourth-order central differences; the lattice must be uniform with at least 5 points per axis.
struct ResidualReport {
    std::vector<double> max_abs, rms;  // per component (one entry for the divergence)
    double max_total = 0.0;
    std::size_t interior_points = 0;
};

ResidualReport verify_divergence(const Field& u);
ResidualReport verify_stokes_residual(const Field& u, const Field& p);

struct RefinementReport {
    ResidualReport coarse, fine;
    double order = 0.0;  // log2(coarse max / fine max)
};

// Lattices around the centre with spacing h (and dt = h * dt_over_h), then h / 2.
struct RefinementSetup {
    std::vector<double> centre_xp{0.0};
    double centre_xn = 0.5, centre_t = 1.0;
    double h = 0.1;
    double dt_over_h = 1.0;
    int half = 3;
    void validate() const;
};

struct FieldVerifyReport {
    RefinementReport divergence, stokes;
};

// Builds u and p on both lattices (one quadrature rule scaled to the coarse lattice) and
// measures the divergence and Stokes residual decay.
FieldVerifyReport field_refinement(const BoundaryData& a, double alpha, const RefinementSetup& s,
                                   const FieldSpec& spec);

struct TraceReport {
    std::vector<double> xn;
    std::vector<std::vector<double>> l2_errors;  // [k][ixn], k 0-based
    double data_l2 = 0.0;
};

// L^2(x', t) errors of (d_n u_k - alpha u_k) - a_k (k < n) and u_n - a_n on the data grid.
TraceReport verify_navier_trace(const BoundaryData& a, double alpha, const std::vector<double>& xn_sequence,
                                const FieldSpec& spec);

// P^0_{kn} * a for k = 1..n on a lattice (atom included).
std::vector<std::vector<double>> p0kn_convolution(const BoundaryData& a, const FieldLattice& lat,
                                                  const FieldSpec& spec);

struct P0knRow {
    std::size_t member = 0;
    int k = 1;
    double q = 2.0, xn = 0.0, ratio = 0.0;
};
struct P0knSpread {
    std::size_t member = 0;
    int k = 1;
    double q = 2.0;
    double min_ratio = 0.0, max_ratio = 0.0;
    double spread() const { return max_ratio / min_ratio; }
};
struct P0knReport {
    std::vector<P0knRow> rows;
    std::vector<P0knSpread> spreads;  // over x_n for each (member, k, q)
    double max_ratio = 0.0;
};

// ||P^0_{kn} * a_n||_{L^q(x', t)} / ||a_n||_{L^q} with the output measured on the grid
// out_space x out_time. Members with a_n = 0 are rejected.
P0knReport p0kn_operator_bound(const std::vector<BoundaryData>& family, const std::vector<double>& xn_set,
                               const std::vector<double>& qs, const std::vector<Axis>& out_space,
                               const Axis& out_time, const FieldSpec& spec);

}  // namespace stokes
