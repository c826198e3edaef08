#include "stokes/faddeeva.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "stokes/errors.hpp"

namespace stokes {

namespace {

constexpr double kStep = 0.125;
constexpr double kXMax = 8.25;
constexpr double kRadius = 8.0;
constexpr int kTaylor = 16;  // |h| <= 0.089 makes later terms negligible
constexpr int kStored = kFaddeevaMaxDeriv + kTaylor;  // highest stored derivative
constexpr int kNx = static_cast<int>(2 * kXMax / kStep) + 1;
constexpr int kNy = static_cast<int>(kXMax / kStep) + 1;

// Tabulated derivatives of w on a lattice in the closed upper half plane, from the
// Laplace representation w^{(k)}(z) = pi^{-1/2} int_0^inf (i s)^k exp(i z s - s^2/4) ds
// evaluated in extended precision.
class Table {
public:
    Table() : data_(static_cast<std::size_t>(kNx) * kNy * (kStored + 1)) {
        using G = boost::math::quadrature::gauss<long double, 16>;
        std::vector<long double> gx, gw;
        for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
            long double a = G::abscissa()[i], w = G::weights()[i];
            if (a == 0.0L) {
                gx.push_back(0.0L);
                gw.push_back(w);
            } else {
                gx.push_back(-a);
                gw.push_back(w);
                gx.push_back(a);
                gw.push_back(w);
            }
        }
        const long double width = 0.5L, smax = 26.0L;
        std::vector<long double> nodes, weights;
        for (long double a = 0.0L; a < smax - 1e-9L; a += width) {
            for (std::size_t i = 0; i < gx.size(); ++i) {
                nodes.push_back(a + 0.5L * width * (1.0L + gx[i]));
                weights.push_back(0.5L * width * gw[i]);
            }
        }
        const long double rsqpi = 1.0L / std::sqrt(std::numbers::pi_v<long double>);
        std::vector<long double> re(kStored + 1), im(kStored + 1);
        // w(-conj z) = conj w(z): fill x >= 0 and mirror.
        const int mid = (kNx - 1) / 2;
        for (int ix = mid; ix < kNx; ++ix) {
            long double x = -kXMax + ix * kStep;
            for (int iy = 0; iy < kNy; ++iy) {
                long double y = iy * kStep;
                std::fill(re.begin(), re.end(), 0.0L);
                std::fill(im.begin(), im.end(), 0.0L);
                for (std::size_t q = 0; q < nodes.size(); ++q) {
                    long double s = nodes[q];
                    long double e = -y * s - 0.25L * s * s;
                    if (e + kStored * std::log(std::max(s, 1.0L)) < -80.0L) break;
                    long double mag = weights[q] * std::exp(e);
                    long double c = mag * std::cos(x * s), sn = mag * std::sin(x * s);
                    long double p = 1.0L;
                    for (int k = 0; k <= kStored; ++k) {
                        re[k] += c * p;
                        im[k] += sn * p;
                        p *= s;
                    }
                }
                cplx* out = at(ix, iy);
                for (int k = 0; k <= kStored; ++k) {
                    // multiply by i^k
                    long double a = re[k] * rsqpi, b = im[k] * rsqpi;
                    switch (k % 4) {
                        case 0: out[k] = cplx(double(a), double(b)); break;
                        case 1: out[k] = cplx(double(-b), double(a)); break;
                        case 2: out[k] = cplx(double(-a), double(-b)); break;
                        default: out[k] = cplx(double(b), double(-a)); break;
                    }
                    at(kNx - 1 - ix, iy)[k] = ((k % 2) ? -1.0 : 1.0) * std::conj(out[k]);
                }
            }
        }
    }

    void taylor(cplx z, int kmax, cplx* out) const {
        int ix = static_cast<int>(std::lround((z.real() + kXMax) / kStep));
        int iy = static_cast<int>(std::lround(z.imag() / kStep));
        ix = std::clamp(ix, 0, kNx - 1);
        iy = std::clamp(iy, 0, kNy - 1);
        cplx z0(-kXMax + ix * kStep, iy * kStep);
        cplx h = z - z0;
        const cplx* d = at(ix, iy);
        double hr = h.real(), hi = h.imag();
        double pr[kTaylor + 1], pi[kTaylor + 1];
        pr[0] = 1.0;
        pi[0] = 0.0;
        for (int j = 1; j <= kTaylor; ++j) {
            double inv = 1.0 / double(j);
            pr[j] = (pr[j - 1] * hr - pi[j - 1] * hi) * inv;
            pi[j] = (pr[j - 1] * hi + pi[j - 1] * hr) * inv;
        }
        for (int k = 0; k <= kmax; ++k) {
            double sr = 0.0, si = 0.0;
            for (int j = kTaylor; j >= 0; --j) {
                double dr = d[k + j].real(), di = d[k + j].imag();
                sr += dr * pr[j] - di * pi[j];
                si += dr * pi[j] + di * pr[j];
            }
            out[k] = cplx(sr, si);
        }
    }

private:
    std::vector<cplx> data_;
    cplx* at(int ix, int iy) { return &data_[(static_cast<std::size_t>(ix) * kNy + iy) * (kStored + 1)]; }
    const cplx* at(int ix, int iy) const {
        return &data_[(static_cast<std::size_t>(ix) * kNy + iy) * (kStored + 1)];
    }
};

const Table& table() {
    static const Table t;
    return t;
}

// Large-|z| expansion w(z) ~ (i/sqrt(pi)) sum_j (2j-1)!!/2^j z^{-(2j+1)}, differentiated termwise.
void asymptotic(cplx z, int kmax, cplx* out) {
    const double rsqpi = 1.0 / std::sqrt(std::numbers::pi);
    cplx u = 1.0 / z, u2 = u * u;
    cplx base = u;  // a_j u^{2j+1}
    double a = 1.0;
    cplx sum[kFaddeevaMaxDeriv + 1];
    for (int k = 0; k <= kmax; ++k) sum[k] = 0.0;
    for (int j = 0; j < 80; ++j) {
        cplx term = a * base;
        double rising = 1.0;
        cplx uk = 1.0;
        double biggest = 0.0;
        for (int k = 0; k <= kmax; ++k) {
            cplx tk = rising * term * uk;
            sum[k] += tk;
            biggest = std::max(biggest, std::norm(tk) / std::max(std::norm(sum[k]), 1e-300));
            rising *= (2.0 * j + 1.0 + k);
            uk *= u;
        }
        if (biggest < 1e-34) break;  // squared magnitudes
        a *= (2.0 * j + 1.0) / 2.0;
        base *= u2;
    }
    cplx pref(0.0, rsqpi);
    for (int k = 0; k <= kmax; ++k) out[k] = ((k % 2) ? -1.0 : 1.0) * pref * sum[k];
}

void upper_half(cplx z, int kmax, cplx* out) {
    if (std::norm(z) >= kRadius * kRadius)
        asymptotic(z, kmax, out);
    else
        table().taylor(z, kmax, out);
}

}  // namespace

void faddeeva_derivs(cplx z, int kmax, cplx* out) {
    if (kmax < 0 || kmax > kFaddeevaMaxDeriv) throw DomainError("Faddeeva derivative order out of range");
    if (z.imag() >= 0.0) {
        upper_half(z, kmax, out);
        return;
    }
    // w(z) = 2 exp(-z^2) - w(-z)
    cplx tmp[kFaddeevaMaxDeriv + 1];
    upper_half(-z, kmax, tmp);
    cplx H[kFaddeevaMaxDeriv + 2];
    H[0] = 1.0;
    H[1] = 2.0 * z;
    for (int k = 1; k < kmax; ++k) H[k + 1] = 2.0 * z * H[k] - 2.0 * double(k) * H[k - 1];
    cplx e = std::exp(-z * z);
    for (int k = 0; k <= kmax; ++k) {
        double sg = (k % 2) ? -1.0 : 1.0;
        out[k] = 2.0 * sg * H[k] * e - sg * tmp[k];
    }
}

cplx faddeeva(cplx z) {
    cplx w;
    faddeeva_derivs(z, 0, &w);
    return w;
}

double erfcx(double x) {
    if (x < 8.0) return std::exp(x * x) * boost::math::erfc(x);
    return faddeeva(cplx(0.0, x)).real();
}

double dawson(double x) { return 0.5 * std::sqrt(std::numbers::pi) * faddeeva(cplx(x, 0.0)).imag(); }

}  // namespace stokes
