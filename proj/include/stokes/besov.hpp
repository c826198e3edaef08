#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stokes/quadrature.hpp"

namespace stokes {

struct Interval {
    double a = 0.0, b = 0.0;
    double length() const { return b - a; }
};

// Uniformly sampled function of time, zero outside `support`.
struct Signal {
    std::vector<double> samples;
    double dt = 1.0;
    double t0 = 0.0;
    Interval support{};

    std::size_t size() const { return samples.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return time(samples.size() - 1); }
    void validate() const;

    static Signal sample(const std::function<double(double)>& f, double t0, double dt, std::size_t len,
                         Interval support);
    // g(factor *): the same samples on a grid contracted by factor.
    Signal dilated(double factor) const;

    // Two columns t,value.
    std::string to_csv() const;
};

struct BesovParams {
    double q = 2.0;
    double s = 0.25;
    void validate() const;
    // s = 1/2 - 1/(2q)
    static BesovParams critical(double q);
};

// Dyadic partition in angular frequency: chi = 1 on |w| <= c1, chi = 0 on |w| >= 4/3,
// phi(w) = chi(w/2) - chi(w) lives on the annulus (c1, c2) = (3/4, 8/3).
struct LPProfile {
    double c1 = 0.75, c2 = 8.0 / 3.0;
    double chi(double w) const;
    double phi(double w) const;
};

struct BandRange {
    int jmin = 0, jmax = -1;
    bool empty() const { return jmax < jmin; }
};

// Levels j with c1 2^j >= 2 pi / (len dt) and c2 2^j <= pi / dt.
BandRange resolvable_band(const Signal& g, const LPProfile& profile = {});

// Length of the periodised transform grid (power of two, >= len and >= 8 x support).
std::size_t transform_length(const Signal& g);

// Delta_j g on the periodised grid starting at g.t0.
Signal lp_block(const Signal& g, int j, const LPProfile& profile = {});
std::vector<Signal> lp_blocks(const Signal& g, int jmin, int jmax, const LPProfile& profile = {});

// Rectangle rule.
double lq_norm(const Signal& g, double q);

double besov_norm_truncated(const Signal& g, const BesovParams& p, int jmin, int jmax,
                            const LPProfile& profile = {});
// Per-level terms 2^{jsq} ||Delta_j g||_q^q for j = jmin..jmax.
std::vector<double> besov_terms(const Signal& g, const BesovParams& p, int jmin, int jmax,
                                const LPProfile& profile = {});

// F(T) = int_0^T Gamma_1(x, tau) dtau.
double heat1_time_integral(double x, double T);

// f(x, t_k) = int Gamma_1(x, t_k - s) g(s) ds with g piecewise linear between samples.
Signal half_space_extension(const Signal& g, double x, const QuadratureSpec& spec = {});

struct EquivalenceRatio {
    double lower = 0.0, upper = 0.0;
    double N = 0.0;  // ||d_x^2 f||_{L^q}
    double B_hi = 0.0, B_lo = 0.0;
    BandRange band{};
};

// Geometric grid from 0.05 sqrt(dt) to 20 sqrt(period), `per_decade` nodes per decade.
std::vector<double> default_x_grid(const Signal& g, int per_decade = 24);

// (N / B_hi, N / B_lo): B_hi over the full resolvable band, B_lo with one level trimmed at
// each end. d_x^2 f is applied spectrally with symbol (1/2) sqrt(i w) exp(-x sqrt(i w)).
EquivalenceRatio equivalence_ratio(const Signal& g, const BesovParams& p, const std::vector<double>& x_grid,
                                   const LPProfile& profile = {});

enum class GTKind { lacunary, holder_beta, box };

struct GTParams {
    int J = 12;             // lacunary terms
    double omega0 = 32.0;   // lacunary base frequency
    double beta = 0.25;     // holder exponent
    double dt = 0.0;        // 0 = automatic
};

// Support (3/4, 7/8) for lacunary and box, [1/4, 1] for holder_beta; the grid starts at 0
// and spans at least 8 support lengths.
Signal construct_gT(GTKind kind, double q, const GTParams& params = {});

// Closed-form value of the profile (no sampling).
double gT_value(GTKind kind, double q, const GTParams& params, double t);

// Smooth step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);

GTKind parse_gt_kind(const std::string& s);
std::string to_string(GTKind k);

}  // namespace stokes
