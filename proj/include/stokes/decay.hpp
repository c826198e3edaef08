#pragma once

#include <string>
#include <vector>

#include "stokes/kernels.hpp"

namespace stokes {

// Sample lattice: geometric times t, and at each time the points |x| = xi sqrt(t) with a
// geometric grid in the similarity variable xi and a uniform grid of polar angles in the
// half plane x_n >= 0 (n = 2). A sparse geometric tail (xi_max, xi_tail] reaches the
// large-xi plateau of the ratios. refine() doubles the density on every axis and keeps
// every old node.
struct DecayLattice {
    double t_min = 0.01, t_max = 1.0;
    double xi_min = 0.03, xi_max = 30.0, xi_tail = 1000.0;
    int n_t = 3, n_xi = 61, n_theta = 33, n_tail = 8;

    std::vector<double> xi_nodes() const;

    std::vector<SpaceTimePoint> points() const;
    DecayLattice refine() const;
    void validate() const;
};

struct DecayDeriv {
    int m = 0, l = 0, i = 0;
};

// Right-hand side of the pointwise decay bound for the kernel component and derivative.
double decay_bound(const KernelId& id, const DecayDeriv& d, const SpaceTimePoint& p);

struct DecayEntry {
    KernelId id;
    DecayDeriv d;
    double C = 0.0;
    double argmax_r = 0.0, argmax_xn = 0.0, argmax_t = 0.0;
    double fraction_within = 0.0;
    std::size_t samples = 0;
};

// id.part selects P^0 or P^alpha; id.deriv is ignored in favour of the DecayDeriv list.
std::vector<DecayEntry> decay_suite(const std::vector<KernelId>& ids, const std::vector<DecayDeriv>& derivs,
                                    const DecayLattice& lattice, double alpha, const QuadratureSpec& spec);

// All (m, l, i) in {0,1,2}^3 with m + l + i <= max_total.
std::vector<DecayDeriv> decay_derivs(int max_total);

std::string kernel_label(const KernelId& id);

}  // namespace stokes
