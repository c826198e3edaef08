#pragma once

#include <complex>

namespace stokes {

using cplx = std::complex<double>;

constexpr int kFaddeevaMaxDeriv = 8;

// w(z) = exp(-z^2) erfc(-iz).
cplx faddeeva(cplx z);

// out[k] = w^{(k)}(z) for k = 0..kmax, kmax <= kFaddeevaMaxDeriv.
void faddeeva_derivs(cplx z, int kmax, cplx* out);

// exp(x^2) erfc(x).
double erfcx(double x);

// Dawson's integral via the imaginary part of w on the real axis.
double dawson(double x);

}  // namespace stokes
