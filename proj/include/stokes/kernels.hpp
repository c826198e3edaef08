#pragma once

#include <vector>

#include "stokes/quadrature.hpp"
#include "stokes/types.hpp"

namespace stokes {

enum class KernelPart { zero, alpha };
enum class Tensor { velocity, pressure };

struct KernelId {
    int k = 1;  // 1-based component
    int j = 1;  // 1-based data component
    KernelPart part = KernelPart::zero;
    MultiIndexDeriv deriv{};
    Tensor tensor = Tensor::velocity;

    void validate(int n) const;
};

// Time-distributional piece coeff * delta^{(order)}(t) * d^l E(x).
struct DeltaAtom {
    int order = 0;
    double coeff = 0.0;
    std::vector<int> l;  // derivative of E, length n
    double spatial(const std::vector<double>& x) const;
};

// Atoms of the velocity (P^0_{kn}) and pressure (g^0_j) kernels, with id.deriv applied.
std::vector<DeltaAtom> delta_atom(const KernelId& id, int n);

// Derivative request split into tangential / normal parts.
struct SplitDeriv {
    int m = 0;
    std::vector<int> beta;  // n-1 tangential orders
    int i = 0;              // normal order
    static SplitDeriv from(const MultiIndexDeriv& d, int n);
};

// Smooth part of P^0_{kj} (atoms excluded).
KernelValue P0(const KernelId& id, const SpaceTimePoint& p, const QuadratureSpec& spec);

// Auxiliary kernels. idx in 1..4 for I, 1..3 for J and K.
KernelValue I_kernel(int idx, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                     const MultiIndexDeriv& d = {});
KernelValue J_kernel(int idx, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                     const MultiIndexDeriv& d = {});
KernelValue K_kernel(int idx, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                     const MultiIndexDeriv& d = {});

// d_1^{p} d_n^{i} K_1 at n = 2 through a principal-value integral against d_1 E(y', 0).
KernelValue K1_principal_value(const SpaceTimePoint& p, const QuadratureSpec& spec, const MultiIndexDeriv& d);

KernelValue P_alpha(const KernelId& id, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec);
// Several velocity entries or derivatives at one point in a single adaptive pass.
std::vector<KernelValue> P_alpha_batch(const std::vector<KernelId>& ids, const SpaceTimePoint& p, double alpha,
                                       const QuadratureSpec& spec);

KernelValue g_alpha(int j, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                    const MultiIndexDeriv& d = {});

// Smooth part of the full kernel P^0 + alpha P^alpha (velocity) or alpha g^alpha (pressure).
KernelValue P_total(const KernelId& id, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec);

// All velocity kernel entries k, j = 1..n for one derivative at one point; entries are
// row-major [(k-1) * n + (j-1)].
std::vector<KernelValue> P_total_all(const SpaceTimePoint& p, double alpha, const MultiIndexDeriv& d,
                                     const QuadratureSpec& spec);

}  // namespace stokes
