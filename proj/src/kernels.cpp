#include "stokes/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <tuple>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "stokes/convolved.hpp"
#include "stokes/faddeeva.hpp"
#include "stokes/special.hpp"

namespace stokes {

namespace detail {
double time_tail_spatial(const std::vector<double>& x, double t, const std::vector<int>& l);
}

namespace {

constexpr double kPi = std::numbers::pi;

double binom(int m, int r) {
    return boost::math::binomial_coefficient<double>(static_cast<unsigned>(m), static_cast<unsigned>(r));
}

double norm(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// M(c) = int_0^inf e^{-alpha z} G(c + z) dz with G the 1D heat kernel.
double m_function(double c, double t, double alpha) {
    double st = 2.0 * std::sqrt(t);
    double Y = (c + 2.0 * alpha * t) / st;
    if (Y >= 0.0) return 0.5 * std::exp(-c * c / (st * st)) * erfcx(Y);
    return 0.5 * std::exp(alpha * c + alpha * alpha * t) * boost::math::erfc(Y);
}

// Highest derivative order of the normal factors.
constexpr int kMaxNormalOrder = 24;

// out[k] = M^{(k)}(c), k = 0..kmax, using M' = alpha M - G.
void m_derivs(double c, double t, double alpha, int kmax, double* out) {
    double g[kMaxNormalOrder + 1];
    heat1_derivs(c, t, kmax, g);
    out[0] = m_function(c, t, alpha);
    for (int k = 1; k <= kmax; ++k) out[k] = alpha * out[k - 1] - g[k - 1];
}

// T_0(u; c) = int_0^u e^{-alpha z} G(c + 2z) dz.
double t0_function(double u, double c, double t, double alpha) {
    double st = 2.0 * std::sqrt(t);
    double A = (c + alpha * t) / st, B = (c + 2.0 * u + alpha * t) / st;
    double ec = c / st, eb = (c + 2.0 * u) / st;
    if (A >= 0.0)
        return 0.25 * (std::exp(-ec * ec) * erfcx(A) - std::exp(-alpha * u - eb * eb) * erfcx(B));
    if (B <= 0.0)
        return 0.25 * (std::exp(-alpha * u - eb * eb) * erfcx(-B) - std::exp(-ec * ec) * erfcx(-A));
    return 0.25 * std::exp(0.5 * alpha * c + 0.25 * alpha * alpha * t) * (std::erf(B) - std::erf(A));
}

// out[k] = T_k(u; c) = int_0^u e^{-alpha z} G^{(k)}(c + 2z) dz.
void t_derivs(double u, double c, double t, double alpha, int kmax, double* out) {
    double ga[kMaxNormalOrder + 1], gb[kMaxNormalOrder + 1];
    heat1_derivs(c, t, kmax, ga);
    heat1_derivs(c + 2.0 * u, t, kmax, gb);
    double e = std::exp(-alpha * u);
    out[0] = t0_function(u, c, t, alpha);
    for (int k = 1; k <= kmax; ++k) out[k] = 0.5 * (e * gb[k - 1] - ga[k - 1]) + 0.5 * alpha * out[k - 1];
}

enum class Height { at_u, at_xn_plus_u };

// Normal factors multiplying the convolved E inside the u-integrals.
enum class Normal {
    exp_m,   // e^{-a u} M^{(k)}(x_n + u)
    exp_g,   // e^{-a u} G^{(k)}(x_n + u)
    r,       // T_k(u; x_n - u)
    gw,      // G^{(k)}(x_n + u) W(u)
    s,       // T_k(u; -u)
    gcw,     // G^{(k)}(u) W(u)
    exp_gz,  // e^{-a u} G^{(k)}(u)
};
constexpr int kNormals = 7;

struct UTerm {
    double c;
    Height h;
    std::vector<int> beta;
    int q;
    Normal kind;
    int k;
    std::size_t out = 0;
};

bool depends_on_xn(Normal kind) {
    return kind == Normal::exp_m || kind == Normal::exp_g || kind == Normal::r || kind == Normal::gw;
}

// Applies d_t^m d_{x'}^beta d_{x_n}^i to a base term; x_n acts on the normal factor when it
// carries the x_n dependence, otherwise on the height of the convolved E.
std::vector<UTerm> apply_deriv(const UTerm& base, const SplitDeriv& d, int n) {
    std::vector<UTerm> out;
    std::vector<int> b0(n - 1, 0);
    for (int a = 0; a < n - 1; ++a) b0[a] = (a < static_cast<int>(base.beta.size()) ? base.beta[a] : 0) + d.beta[a];
    for (int r = 0; r <= d.m; ++r) {
        double cb = binom(d.m, r);
        for (const auto& lt : laplace_power(b0, r, n - 1)) {
            UTerm u = base;
            u.c = base.c * cb * lt.coeff;
            u.beta = lt.l;
            int extra = 2 * (d.m - r);
            if (base.h == Height::at_u) {
                if (!depends_on_xn(base.kind)) throw DomainError("normal factor must carry x_n at height u");
                u.k = base.k + d.i + extra;
            } else if (depends_on_xn(base.kind)) {
                throw DomainError("x_n-dependent normal factor at height x_n + u");
            } else {
                u.q = base.q + d.i;
                u.k = base.k + extra;
            }
            out.push_back(u);
        }
    }
    return out;
}


// Integral over u in (0, inf) of sum_terms c * Q(height) * N(u), for one or several outputs.
class UIntegral {
public:
    UIntegral(const SpaceTimePoint& p, double alpha, std::vector<UTerm> terms, const QuadratureSpec& spec,
              std::size_t outputs = 1)
        : p_(p), alpha_(alpha), terms_(std::move(terms)), spec_(spec), outputs_(outputs) {
        n_ = p.n;
        kmax_.fill(-1);
        for (const auto& u : terms_) {
            if (n_ == 2 && u.beta[0] + u.q == 0)
                throw DomainError("n = 2 needs a derivative on E inside the y'-integral");
            if (u.beta[0] + u.q > ConvolvedE2::kMaxOrder && n_ == 2)
                throw DomainError("derivative order too high for the n = 2 convolved E");
            if (u.out >= outputs_) throw DomainError("term output index out of range");
            if (u.k > kMaxNormalOrder) throw DomainError("derivative order too high for the kernel integrand");
            int& k = kmax_[static_cast<int>(u.kind)];
            k = std::max(k, u.k);
            int& o = order_[static_cast<int>(u.h)];
            o = std::max(o, u.beta[0] + u.q);
        }
    }

    KernelValue run() const { return run_all().front(); }

    std::vector<KernelValue> run_all() const {
        std::vector<KernelValue> out(outputs_);
        if (terms_.empty()) return out;
        double st = std::sqrt(p_.t);
        bool slow = kmax_[int(Normal::r)] >= 0 || kmax_[int(Normal::s)] >= 0;
        double xp = norm(p_.xprime);
        double U;
        if (!slow)
            U = spec_.truncation.point(st, 0.0);  // every normal factor is Gaussian in u
        else if (alpha_ > 0.0)
            U = p_.xn + spec_.truncation.point(st, 0.5 * alpha_);
        else
            U = 1e4 * std::max({st, p_.xn, xp});
        std::vector<double> bp;
        double lo = std::min({st, xp > 0.0 ? xp : st, p_.xn > 0.0 ? p_.xn : st}) / 16.0;
        for (double s = lo; s < U; s *= 2.0) bp.push_back(s);
        for (double k : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            bp.push_back(p_.xn - k * st);
            bp.push_back(p_.xn + k * st);
            bp.push_back(k * st);
        }
        bp.push_back(p_.xn);
        bp.push_back(xp);
        auto f = [this](double u, double* val, double* mag) { eval(u, val, mag); };
        auto q = integrate_vec(f, outputs_, 0.0, U, spec_, bp);
        std::vector<double> tail(outputs_, 0.0);
        if (slow && alpha_ == 0.0) {
            eval(U, tail.data(), nullptr);
            for (auto& v : tail) v = std::abs(v) * U;
        }
        for (std::size_t o = 0; o < outputs_; ++o) {
            double err = q[o].error + tail[o];
            if (!q[o].converged || tail[o] > std::max(spec_.abs_tol, spec_.rel_tol * std::abs(q[o].value)))
                throw ToleranceError("kernel u-integral did not converge, value " + ToleranceError::format(q[o].value),
                                     err);
            out[o] = {q[o].value, err};
        }
        return out;
    }

    void eval(double u, double* val, double* mag) const {
        std::fill(val, val + outputs_, 0.0);
        if (mag) std::fill(mag, mag + outputs_, 0.0);
        // Normal factors.
        double N[kNormals][kMaxNormalOrder + 1];
        double t = p_.t, xn = p_.xn, a = alpha_;
        double e = std::exp(-a * u);
        double W = a > 0.0 ? -std::expm1(-a * u) / a : u;
        double gp[kMaxNormalOrder + 1], gu[kMaxNormalOrder + 1];
        int ngp = -1, ngu = -1;
        auto need_gp = [&](int k) {
            if (ngp < k) {
                heat1_derivs(xn + u, t, k, gp);
                ngp = k;
            }
        };
        auto need_gu = [&](int k) {
            if (ngu < k) {
                heat1_derivs(u, t, k, gu);
                ngu = k;
            }
        };
        for (int kind = 0; kind < kNormals; ++kind) {
            int k = kmax_[kind];
            if (k < 0) continue;
            double* v = N[kind];
            switch (static_cast<Normal>(kind)) {
                case Normal::exp_m:
                    m_derivs(xn + u, t, a, k, v);
                    for (int j = 0; j <= k; ++j) v[j] *= e;
                    break;
                case Normal::exp_g:
                    need_gp(k);
                    for (int j = 0; j <= k; ++j) v[j] = e * gp[j];
                    break;
                case Normal::r: t_derivs(u, xn - u, t, a, k, v); break;
                case Normal::gw:
                    need_gp(k);
                    for (int j = 0; j <= k; ++j) v[j] = W * gp[j];
                    break;
                case Normal::s: t_derivs(u, -u, t, a, k, v); break;
                case Normal::gcw:
                    need_gu(k);
                    for (int j = 0; j <= k; ++j) v[j] = W * gu[j];
                    break;
                case Normal::exp_gz:
                    need_gu(k);
                    for (int j = 0; j <= k; ++j) v[j] = e * gu[j];
                    break;
            }
        }
        double heights[2] = {u, xn + u};
        auto add = [&](const UTerm& term, double qv, double nv) {
            double v = term.c * qv * nv;
            val[term.out] += v;
            if (mag) mag[term.out] += std::abs(v);
        };
        if (n_ == 2) {
            std::optional<ConvolvedE2> c[2];
            for (int h = 0; h < 2; ++h)
                if (order_[h] > 0) c[h].emplace(p_.xprime[0], heights[h], t, order_[h]);
            for (const auto& term : terms_) {
                double nv = N[static_cast<int>(term.kind)][term.k];
                if (nv == 0.0) continue;
                add(term, (*c[static_cast<int>(term.h)])(term.beta[0], term.q), nv);
            }
            return;
        }
        std::map<std::tuple<int, int, int, int>, double> cache;
        for (const auto& term : terms_) {
            double nv = N[static_cast<int>(term.kind)][term.k];
            if (nv == 0.0) continue;
            auto key = std::make_tuple(static_cast<int>(term.h), term.beta[0], term.beta[1], term.q);
            auto it = cache.find(key);
            if (it == cache.end()) {
                QuadratureSpec inner = spec_;
                inner.abs_tol = spec_.abs_tol * 1e-2;
                double qv = convolved_e3(term.beta[0], term.beta[1], term.q, p_.xprime[0], p_.xprime[1],
                                         heights[static_cast<int>(term.h)], t, inner);
                it = cache.emplace(key, qv).first;
            }
            add(term, it->second, nv);
        }
    }

private:
    SpaceTimePoint p_;
    double alpha_;
    std::vector<UTerm> terms_;
    QuadratureSpec spec_;
    std::size_t outputs_;
    int n_;
    std::array<int, kNormals> kmax_{};
    int order_[2] = {0, 0};
};

UTerm base(double c, Height h, int q, Normal kind, int k, int n, int tangential = -1) {
    std::vector<int> b(n - 1, 0);
    if (tangential >= 0) b[tangential] = 1;
    return {c, h, b, q, kind, k, 0};
}

std::vector<UTerm> base_terms(char family, int idx, int n) {
    switch (family) {
        case 'I':
            if (idx == 2) return {base(1, Height::at_u, 0, Normal::exp_m, 0, n)};
            if (idx == 3) return {base(1, Height::at_u, 0, Normal::r, 0, n), base(1, Height::at_u, 0, Normal::gw, 0, n)};
            if (idx == 4)
                return {base(1, Height::at_xn_plus_u, 0, Normal::s, 0, n),
                        base(-1, Height::at_xn_plus_u, 0, Normal::gcw, 0, n)};
            break;
        case 'J':
            if (idx == 1) return {base(1, Height::at_u, 0, Normal::exp_g, 0, n)};
            if (idx == 2) return {base(1, Height::at_u, 1, Normal::r, 0, n), base(1, Height::at_u, 1, Normal::gw, 0, n)};
            if (idx == 3)
                return {base(1, Height::at_xn_plus_u, 0, Normal::s, 1, n),
                        base(-1, Height::at_xn_plus_u, 0, Normal::gcw, 1, n)};
            break;
        case 'K':
            if (idx == 2) return {base(1, Height::at_u, 1, Normal::exp_g, 0, n)};
            if (idx == 3) return {base(1, Height::at_u, 2, Normal::exp_g, 0, n)};
            break;
        default: break;
    }
    throw DomainError("unknown auxiliary kernel index");
}

void append(std::vector<UTerm>& out, const std::vector<UTerm>& terms, double c, const SplitDeriv& d, int n) {
    for (const auto& b : terms) {
        UTerm s = b;
        s.c *= c;
        for (const auto& u : apply_deriv(s, d, n)) out.push_back(u);
    }
}

SplitDeriv add(SplitDeriv d, int coord, int n) {
    if (coord == n - 1)
        d.i += 1;
    else
        d.beta[coord] += 1;
    return d;
}

bool causal_zero(const SpaceTimePoint& p) { return !(p.t > 0.0); }

// Gamma'(x') M(x_n) with derivatives.
KernelValue i1_value(const SpaceTimePoint& p, double alpha, const SplitDeriv& d) {
    std::vector<double> mv(d.i + 2 * d.m + 1);
    m_derivs(p.xn, p.t, alpha, d.i + 2 * d.m, mv.data());
    double s = 0.0;
    for (int r = 0; r <= d.m; ++r)
        s += binom(d.m, r) * heat_kernel_deriv(p.xprime, p.t, MultiIndexDeriv(r, d.beta)) * mv[d.i + 2 * (d.m - r)];
    return {s, 1e-15 * std::abs(s)};
}

// Q(x', 0+) G(x_n) with derivatives.
KernelValue k1_value(const SpaceTimePoint& p, const SplitDeriv& d, const QuadratureSpec& spec) {
    int n = p.n;
    std::vector<double> g(d.i + 2 * d.m + 1);
    heat1_derivs(p.xn, p.t, d.i + 2 * d.m, g.data());
    double s = 0.0;
    for (int r = 0; r <= d.m; ++r) {
        double gv = g[d.i + 2 * (d.m - r)];
        for (const auto& lt : laplace_power(d.beta, r, n - 1)) {
            double q;
            if (n == 2) {
                if (lt.l[0] == 0) throw DomainError("n = 2 needs a derivative on E inside the y'-integral");
                q = convolved_e2(lt.l[0], 0, p.xprime[0], 0.0, p.t);
            } else {
                q = convolved_e3(lt.l[0], lt.l[1], 0, p.xprime[0], p.xprime[1], 0.0, p.t, spec);
            }
            s += binom(d.m, r) * lt.coeff * q * gv;
        }
    }
    return {s, 1e-13 * std::abs(s)};
}

}  // namespace

void KernelId::validate(int n) const {
    if (k < 1 || k > n || j < 1 || j > n) throw DomainError("kernel indices must lie in [1, n]");
    deriv.validate();
    if (static_cast<int>(deriv.l.size()) > n) throw DomainError("derivative has more than n spatial entries");
}

SplitDeriv SplitDeriv::from(const MultiIndexDeriv& d, int n) {
    d.validate();
    if (static_cast<int>(d.l.size()) > n) throw DomainError("derivative has more than n spatial entries");
    SplitDeriv s;
    s.m = d.m;
    s.beta.assign(n - 1, 0);
    for (int a = 0; a < n - 1; ++a) s.beta[a] = d.at(a);
    s.i = d.at(n - 1);
    return s;
}

double DeltaAtom::spatial(const std::vector<double>& x) const {
    bool any = false;
    for (int v : l) any = any || v > 0;
    if (!any) return coeff * fundamental_solution(x, static_cast<int>(x.size()));
    return coeff * fundamental_solution_deriv(x, l);
}

std::vector<DeltaAtom> delta_atom(const KernelId& id, int n) {
    id.validate(n);
    std::vector<int> l0(n, 0);
    for (int a = 0; a < n; ++a) l0[a] = id.deriv.at(a);
    int m = id.deriv.m;
    std::vector<DeltaAtom> out;
    if (id.part == KernelPart::alpha) return out;
    auto with = [&](int order, double c, std::vector<int> l) {
        for (int a = 0; a < n; ++a) l[a] += l0[a];
        out.push_back({order + m, c, std::move(l)});
    };
    std::vector<int> z(n, 0);
    if (id.tensor == Tensor::velocity) {
        if (id.j == n) {
            auto l = z;
            l[id.k - 1] = 1;
            with(0, -2.0, l);
        }
    } else if (id.j < n) {
        auto l = z;
        l[id.j - 1] = 1;
        with(0, 2.0, l);
    } else {
        with(1, 2.0, z);
        auto l = z;
        l[n - 1] = 2;
        with(0, 2.0, l);
    }
    return out;
}

KernelValue P0(const KernelId& id, const SpaceTimePoint& p, const QuadratureSpec& spec) {
    (void)spec;
    p.validate();
    int n = p.n;
    id.validate(n);
    if (id.tensor == Tensor::pressure) return {};  // g^0 consists of atoms only
    if (causal_zero(p)) return {};
    auto x = p.full();
    if (id.j == n && norm(x) == 0.0) throw SingularityError("P0_kn evaluated at x = 0");
    std::vector<int> l(n, 0);
    for (int a = 0; a < n; ++a) l[a] = id.deriv.at(a);
    int m = id.deriv.m;
    auto tail = [&](std::vector<int> ll) {
        if (m >= 1) return -heat_kernel_deriv(x, p.t, MultiIndexDeriv(m - 1, ll));
        return detail::time_tail_spatial(x, p.t, ll);
    };
    double v = 0.0;
    auto lt = l;
    lt[id.k - 1] += 1;
    lt[id.j - 1] += 1;
    if (id.j < n) {
        if (id.k == id.j) v += -2.0 * heat_kernel_deriv(x, p.t, MultiIndexDeriv(m, l));
    } else {
        lt[n - 1] += 1;
        if (id.k == n) {
            auto ln = l;
            ln[n - 1] += 1;
            v += -2.0 * heat_kernel_deriv(x, p.t, MultiIndexDeriv(m, ln));
        }
    }
    v += -2.0 * tail(lt);
    return {v, 1e-14 * std::abs(v)};
}

KernelValue I_kernel(int idx, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                     const MultiIndexDeriv& d) {
    p.validate();
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    if (idx < 1 || idx > 4) throw DomainError("I kernel index must be 1..4");
    if (causal_zero(p)) return {};
    auto sd = SplitDeriv::from(d, p.n);
    if (idx == 1) return i1_value(p, alpha, sd);
    std::vector<UTerm> terms;
    append(terms, base_terms('I', idx, p.n), 1.0, sd, p.n);
    return UIntegral(p, alpha, terms, spec).run();
}

KernelValue J_kernel(int idx, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                     const MultiIndexDeriv& d) {
    p.validate();
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    if (idx < 1 || idx > 3) throw DomainError("J kernel index must be 1..3");
    if (causal_zero(p)) return {};
    std::vector<UTerm> terms;
    append(terms, base_terms('J', idx, p.n), 1.0, SplitDeriv::from(d, p.n), p.n);
    return UIntegral(p, alpha, terms, spec).run();
}

KernelValue K_kernel(int idx, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                     const MultiIndexDeriv& d) {
    p.validate();
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    if (idx < 1 || idx > 3) throw DomainError("K kernel index must be 1..3");
    if (causal_zero(p)) return {};
    auto sd = SplitDeriv::from(d, p.n);
    if (idx == 1) return k1_value(p, sd, spec);
    std::vector<UTerm> terms;
    append(terms, base_terms('K', idx, p.n), 1.0, sd, p.n);
    return UIntegral(p, alpha, terms, spec).run();
}

KernelValue K1_principal_value(const SpaceTimePoint& p, const QuadratureSpec& spec, const MultiIndexDeriv& d) {
    p.validate();
    if (p.n != 2) throw DomainError("principal-value form implemented for n = 2");
    if (causal_zero(p)) return {};
    auto sd = SplitDeriv::from(d, 2);
    if (sd.beta[0] < 1) throw DomainError("principal-value form needs a tangential derivative");
    double x = p.xprime[0], t = p.t, st = std::sqrt(t);
    std::vector<double> g(sd.i + 2 * sd.m + 1);
    heat1_derivs(p.xn, t, sd.i + 2 * sd.m, g.data());
    double s = 0.0, err = 0.0;
    for (int r = 0; r <= sd.m; ++r) {
        int order = sd.beta[0] + 2 * r - 1;
        // p.v. int d_1E(y, 0) Gamma^{(order)}(x - y) dy with d_1E(y, 0) = -1/(2 pi y); the odd
        // part of 1/y pairs the points x - y and x + y.
        auto f = [&](double y) {
            if (y == 0.0) return -2.0 * heat1_deriv(x, t, order + 1);
            return (heat1_deriv(x - y, t, order) - heat1_deriv(x + y, t, order)) / y;
        };
        double Y = std::abs(x) + spec.truncation.decay_factor * st;
        std::vector<double> bp{std::abs(x)};
        for (double k : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            bp.push_back(std::abs(x) - 2.0 * k * st);
            bp.push_back(std::abs(x) + 2.0 * k * st);
        }
        QuadResult q = integrate_checked(f, 0.0, Y, spec, bp);
        double c = binom(sd.m, r) * g[sd.i + 2 * (sd.m - r)] * (-1.0 / (2.0 * kPi));
        s += c * q.value;
        err += std::abs(c) * q.error;
    }
    return {s, err};
}

namespace {

// Adds the u-integral terms of P^alpha_{kj} (with derivative) to terms under output o and
// returns the closed-form part.
KernelValue p_alpha_terms(const KernelId& id, const SpaceTimePoint& p, double alpha, std::size_t o,
                          std::vector<UTerm>& terms) {
    int n = p.n;
    auto sd = SplitDeriv::from(id.deriv, n);
    int k = id.k - 1, j = id.j - 1;
    std::vector<UTerm> local;
    KernelValue closed;
    if (id.j < n) {
        auto dkj = add(add(sd, k, n), j, n);
        if (id.k == id.j) {
            auto v = i1_value(p, alpha, sd);
            closed = {2.0 * v.value, 2.0 * v.error_estimate};
        }
        if (id.k < n) append(local, base_terms('I', 2, n), 4.0, dkj, n);
        append(local, base_terms('I', 3, n), 2.0, dkj, n);
        append(local, base_terms('I', 4, n), -2.0, dkj, n);
    } else {
        auto dkn = add(add(sd, k, n), n - 1, n);
        if (id.k < n) append(local, base_terms('J', 1, n), -4.0, dkn, n);
        append(local, base_terms('J', 2, n), -2.0, dkn, n);
        append(local, base_terms('J', 3, n), 2.0, dkn, n);
    }
    for (auto& u : local) {
        u.out = o;
        terms.push_back(std::move(u));
    }
    return closed;
}

}  // namespace

KernelValue P_alpha(const KernelId& id, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec) {
    p.validate();
    id.validate(p.n);
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    if (id.tensor == Tensor::pressure) return g_alpha(id.j, p, alpha, spec, id.deriv);
    if (causal_zero(p)) return {};
    std::vector<UTerm> terms;
    auto closed = p_alpha_terms(id, p, alpha, 0, terms);
    auto v = UIntegral(p, alpha, terms, spec).run();
    return {closed.value + v.value, closed.error_estimate + v.error_estimate};
}

std::vector<KernelValue> P_alpha_batch(const std::vector<KernelId>& ids, const SpaceTimePoint& p, double alpha,
                                       const QuadratureSpec& spec) {
    p.validate();
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    std::vector<KernelValue> out(ids.size());
    if (causal_zero(p)) return out;
    std::vector<UTerm> terms;
    for (std::size_t o = 0; o < ids.size(); ++o) {
        ids[o].validate(p.n);
        if (ids[o].tensor == Tensor::pressure) throw DomainError("batch evaluation covers velocity kernels");
        out[o] = p_alpha_terms(ids[o], p, alpha, o, terms);
    }
    auto v = UIntegral(p, alpha, terms, spec, ids.size()).run_all();
    for (std::size_t o = 0; o < ids.size(); ++o) {
        out[o].value += v[o].value;
        out[o].error_estimate += v[o].error_estimate;
    }
    return out;
}

KernelValue g_alpha(int j, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec,
                    const MultiIndexDeriv& d) {
    p.validate();
    int n = p.n;
    if (j < 1 || j > n) throw DomainError("kernel indices must lie in [1, n]");
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    if (causal_zero(p)) return {};
    if (!(p.xn > 0.0)) throw DomainError("pressure kernel needs x_n > 0");
    auto sd = SplitDeriv::from(d, n);
    std::vector<UTerm> terms;
    if (j < n)
        append(terms, {base(4.0, Height::at_xn_plus_u, 0, Normal::exp_gz, 1, n, j - 1)}, 1.0, sd, n);
    else
        append(terms, {base(-4.0, Height::at_xn_plus_u, 1, Normal::exp_gz, 2, n)}, 1.0, sd, n);
    return UIntegral(p, alpha, terms, spec).run();
}

KernelValue P_total(const KernelId& id, const SpaceTimePoint& p, double alpha, const QuadratureSpec& spec) {
    if (id.tensor == Tensor::pressure) {
        auto g = g_alpha(id.j, p, alpha, spec, id.deriv);
        return {alpha * g.value, alpha * g.error_estimate};
    }
    auto a = P0(id, p, spec);
    auto b = P_alpha(id, p, alpha, spec);
    return {a.value + alpha * b.value, a.error_estimate + alpha * b.error_estimate};
}

std::vector<KernelValue> P_total_all(const SpaceTimePoint& p, double alpha, const MultiIndexDeriv& d,
                                     const QuadratureSpec& spec) {
    int n = p.n;
    std::vector<KernelId> ids;
    for (int k = 1; k <= n; ++k)
        for (int j = 1; j <= n; ++j) ids.push_back(KernelId{k, j, KernelPart::zero, d});
    auto pa = P_alpha_batch(ids, p, alpha, spec);
    std::vector<KernelValue> out(ids.size());
    for (std::size_t o = 0; o < ids.size(); ++o) {
        auto z = P0(ids[o], p, spec);
        out[o] = {z.value + alpha * pa[o].value, z.error_estimate + alpha * pa[o].error_estimate};
    }
    return out;
}

}  // namespace stokes
