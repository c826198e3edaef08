#include "stokes/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stokes/sum.hpp"

namespace stokes {

double TruncationPolicy::point(double decay_scale, double alpha) const {
    double z = decay_factor * decay_scale;
    if (alpha > 0.0) z = std::max(z, alpha_factor / alpha);
    return z;
}

void QuadratureSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw ParameterError("tolerances must be positive");
    if (max_subdivisions < 1) throw ParameterError("max_subdivisions must be >= 1");
    for (std::size_t i = 0; i < pv_epsilon_sequence.size(); ++i) {
        if (!(pv_epsilon_sequence[i] > 0.0)) throw ParameterError("pv epsilons must be positive");
        if (i > 0 && !(pv_epsilon_sequence[i] < pv_epsilon_sequence[i - 1]))
            throw ParameterError("pv epsilon sequence must be strictly decreasing");
    }
}

namespace {

template <int N>
void expand_gauss(std::vector<double>& x, std::vector<double>& w) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& b = G::weights();
    x.clear();
    w.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            x.push_back(0.0);
            w.push_back(b[i]);
        } else {
            x.push_back(-a[i]);
            w.push_back(b[i]);
            x.push_back(a[i]);
            w.push_back(b[i]);
        }
    }
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> xs, ws;
    for (auto i : idx) {
        xs.push_back(x[i]);
        ws.push_back(w[i]);
    }
    x = xs;
    w = ws;
}

struct GLTable {
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> rules;
    GLTable() {
        add<8>();
        add<10>();
        add<15>();
        add<16>();
        add<20>();
        add<30>();
        add<40>();
    }
    template <int N>
    void add() {
        std::vector<double> x, w;
        expand_gauss<N>(x, w);
        rules[N] = {x, w};
    }
};

const GLTable& gl_table() {
    static const GLTable t;
    return t;
}

struct Kronrod {
    std::array<double, 15> x{}, wk{}, wg{};
    Kronrod() {
        using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
        using G = boost::math::quadrature::gauss<double, 7>;
        const auto& a = GK::abscissa();
        const auto& k = GK::weights();
        const auto& g = G::weights();
        // a = {0, pos...}; Gauss nodes of the 7-point rule sit at even positions.
        int c = 7;
        x[c] = 0.0;
        wk[c] = k[0];
        wg[c] = g[0];
        for (int i = 1; i < 8; ++i) {
            x[c - i] = -a[i];
            x[c + i] = a[i];
            wk[c - i] = wk[c + i] = k[i];
            double gw = (i % 2 == 0) ? g[i / 2] : 0.0;
            wg[c - i] = wg[c + i] = gw;
        }
    }
};

const Kronrod& kronrod() {
    static const Kronrod k;
    return k;
}

struct Segment {
    double a, b, value, error;
    double floor;  // roundoff level of this segment
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const Integrand& f, double a, double b) {
    const Kronrod& r = kronrod();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 15; ++i) fv[i] = f(c + h * r.x[i]);
    double k = 0.0, g = 0.0, absk = 0.0;
    for (int i = 0; i < 15; ++i) {
        k += r.wk[i] * fv[i];
        g += r.wg[i] * fv[i];
        absk += r.wk[i] * std::abs(fv[i]);
    }
    double mean = 0.5 * k;
    double asc = 0.0;
    for (int i = 0; i < 15; ++i) asc += r.wk[i] * std::abs(fv[i] - mean);
    k *= h;
    g *= h;
    asc *= std::abs(h);
    absk *= std::abs(h);
    double err = std::abs(k - g);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    double eps = std::numeric_limits<double>::epsilon();
    double floor = 50 * eps * absk;
    if (absk > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(err, floor);
    if (!std::isfinite(k)) err = std::numeric_limits<double>::infinity();
    return {a, b, k, err, floor};
}

}  // namespace

const std::vector<double>& gl_nodes(int n) {
    auto it = gl_table().rules.find(n);
    if (it == gl_table().rules.end()) throw ParameterError("unsupported Gauss-Legendre order");
    return it->second.first;
}

const std::vector<double>& gl_weights(int n) {
    auto it = gl_table().rules.find(n);
    if (it == gl_table().rules.end()) throw ParameterError("unsupported Gauss-Legendre order");
    return it->second.second;
}

double composite_gl(const Integrand& f, const std::vector<double>& panels, int order) {
    const auto& x = gl_nodes(order);
    const auto& w = gl_weights(order);
    std::vector<double> parts;
    parts.reserve(panels.size());
    for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
        double c = 0.5 * (panels[p] + panels[p + 1]), h = 0.5 * (panels[p + 1] - panels[p]);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(c + h * x[i]);
        parts.push_back(s * h);
    }
    return pairwise_sum(parts);
}

QuadResult integrate(const Integrand& f, double a, double b, const QuadratureSpec& spec,
                     const std::vector<double>& breakpoints) {
    QuadResult res;
    if (a == b) return res;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<double> pts{a};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    std::priority_queue<Segment> heap;
    std::vector<Segment> frozen;
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        Segment s = gk15(f, pts[i], pts[i + 1]);
        res.evaluations += 15;
        total += s.value;
        err += s.error;
        heap.push(s);
    }
    int splits = 0;
    const double tiny = 64 * std::numeric_limits<double>::epsilon();
    while (!heap.empty() && err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
        if (splits >= spec.max_subdivisions) break;
        Segment s = heap.top();
        heap.pop();
        double mid = 0.5 * (s.a + s.b);
        // segments at their roundoff level cannot improve by splitting
        if (!(mid > s.a && mid < s.b) || (s.b - s.a) <= tiny * std::max(std::abs(s.a), std::abs(s.b)) ||
            s.error <= s.floor) {
            frozen.push_back(s);
            continue;
        }
        Segment l = gk15(f, s.a, mid), r = gk15(f, mid, s.b);
        res.evaluations += 30;
        ++splits;
        total += l.value + r.value - s.value;
        err += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
    }
    while (!heap.empty()) {
        frozen.push_back(heap.top());
        heap.pop();
    }
    std::sort(frozen.begin(), frozen.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
    std::vector<double> vals, errs, floors;
    for (const auto& s : frozen) {
        vals.push_back(s.value);
        errs.push_back(s.error);
        floors.push_back(s.floor);
    }
    res.value = sign * pairwise_sum(vals);
    res.error = pairwise_sum(errs);
    // Accepted when the tolerance is met or every remaining error is at the roundoff level.
    bool roundoff_limited = true;
    for (const auto& s : frozen) roundoff_limited = roundoff_limited && s.error <= s.floor;
    res.converged = std::isfinite(res.value) &&
                    (res.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(res.value)) || roundoff_limited);
    return res;
}

namespace {

struct VecSegment {
    double a, b;
    std::vector<double> value, error, mag;
};

VecSegment gk15_vec(const VecIntegrand& f, std::size_t dim, double a, double b) {
    const Kronrod& r = kronrod();
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::vector<double> fv(15 * dim), mv(15 * dim);
    for (int i = 0; i < 15; ++i) f(c + h * r.x[i], &fv[i * dim], &mv[i * dim]);
    VecSegment s{a, b, std::vector<double>(dim), std::vector<double>(dim), std::vector<double>(dim)};
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t d = 0; d < dim; ++d) {
        double k = 0.0, g = 0.0, absk = 0.0, m = 0.0;
        for (int i = 0; i < 15; ++i) {
            double v = fv[i * dim + d];
            k += r.wk[i] * v;
            g += r.wg[i] * v;
            absk += r.wk[i] * std::abs(v);
            m += r.wk[i] * std::abs(mv[i * dim + d]);
        }
        double mean = 0.5 * k, asc = 0.0;
        for (int i = 0; i < 15; ++i) asc += r.wk[i] * std::abs(fv[i * dim + d] - mean);
        k *= h;
        g *= h;
        asc *= std::abs(h);
        absk *= std::abs(h);
        double err = std::abs(k - g);
        if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
        if (absk > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(err, 50 * eps * absk);
        if (!std::isfinite(k)) err = std::numeric_limits<double>::infinity();
        s.value[d] = k;
        s.error[d] = err;
        s.mag[d] = std::max(m * std::abs(h), absk);
    }
    return s;
}

}  // namespace

std::vector<QuadResult> integrate_vec(const VecIntegrand& f, std::size_t dim, double a, double b,
                                      const QuadratureSpec& spec, const std::vector<double>& breakpoints,
                                      double cancel_rel) {
    std::vector<QuadResult> res(dim);
    if (a == b || dim == 0) return res;
    if (b < a) throw DomainError("integrate_vec expects a <= b");
    std::vector<double> pts{a};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<VecSegment> segs;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) segs.push_back(gk15_vec(f, dim, pts[i], pts[i + 1]));
    int evaluations = 15 * static_cast<int>(segs.size());
    const double tiny = 64 * std::numeric_limits<double>::epsilon();
    std::vector<double> tol(dim);
    std::vector<char> done(dim);
    int splits = 0;
    for (;;) {
        std::vector<double> tot(dim, 0.0), err(dim, 0.0), mag(dim, 0.0);
        for (const auto& s : segs)
            for (std::size_t d = 0; d < dim; ++d) {
                tot[d] += s.value[d];
                err[d] += s.error[d];
                mag[d] += s.mag[d];
            }
        bool all = true;
        for (std::size_t d = 0; d < dim; ++d) {
            tol[d] = std::max({spec.abs_tol, spec.rel_tol * std::abs(tot[d]), cancel_rel * mag[d]});
            done[d] = err[d] <= tol[d];
            all = all && done[d];
        }
        if (all || splits >= spec.max_subdivisions) break;
        // pick the worst segment over unfinished components
        std::size_t worst = segs.size();
        double wscore = 0.0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto& s = segs[i];
            double mid = 0.5 * (s.a + s.b);
            if (!(mid > s.a && mid < s.b) || (s.b - s.a) <= tiny * std::max(std::abs(s.a), std::abs(s.b))) continue;
            for (std::size_t d = 0; d < dim; ++d) {
                if (done[d]) continue;
                double sc = s.error[d] / tol[d];
                if (sc > wscore) {
                    wscore = sc;
                    worst = i;
                }
            }
        }
        if (worst == segs.size()) break;
        VecSegment s = std::move(segs[worst]);
        double mid = 0.5 * (s.a + s.b);
        segs[worst] = gk15_vec(f, dim, s.a, mid);
        segs.insert(segs.begin() + static_cast<std::ptrdiff_t>(worst) + 1, gk15_vec(f, dim, mid, s.b));
        evaluations += 30;
        ++splits;
    }
    std::vector<double> vals(segs.size()), errs(segs.size()), mags(segs.size());
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < segs.size(); ++i) {
            vals[i] = segs[i].value[d];
            errs[i] = segs[i].error[d];
            mags[i] = segs[i].mag[d];
        }
        res[d].value = pairwise_sum(vals);
        res[d].error = pairwise_sum(errs);
        res[d].evaluations = evaluations;
        double t = std::max({spec.abs_tol, spec.rel_tol * std::abs(res[d].value), cancel_rel * pairwise_sum(mags)});
        res[d].converged = std::isfinite(res[d].value) && res[d].error <= t;
    }
    return res;
}

QuadResult integrate_checked(const Integrand& f, double a, double b, const QuadratureSpec& spec,
                             const std::vector<double>& breakpoints) {
    QuadResult r = integrate(f, a, b, spec, breakpoints);
    if (!r.converged) throw ToleranceError("adaptive quadrature did not converge", r.error);
    return r;
}

QuadResult semi_infinite_quad(const Integrand& f, double alpha, double decay_scale,
                              const QuadratureSpec& spec, const std::vector<double>& breakpoints) {
    if (alpha < 0.0) throw DomainError("alpha must be >= 0");
    if (!(decay_scale > 0.0)) throw DomainError("decay scale must be positive");
    double zs = spec.truncation.point(decay_scale, alpha);
    auto g = [&](double z) { return alpha > 0.0 ? std::exp(-alpha * z) * f(z) : f(z); };
    std::vector<double> bp(breakpoints);
    for (double s = decay_scale; s < zs; s *= 4.0) bp.push_back(s);
    if (alpha > 0.0)
        for (double s = 1.0 / alpha; s < zs; s *= 4.0) bp.push_back(s);
    QuadResult r = integrate(g, 0.0, zs, spec, bp);
    // Tail beyond z*: the integrand decays at least like e^{-z/scale}; bound by the
    // endpoint magnitude times the slower of the two decay lengths.
    double fe = std::abs(g(zs));
    double len = decay_scale;
    if (alpha > 0.0) len = std::max(len, 1.0 / alpha);
    double tail = fe * len;
    r.error += tail;
    r.evaluations += 1;
    r.converged = r.converged && std::isfinite(r.value) &&
                  r.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(r.value));
    if (!r.converged) throw ToleranceError("semi-infinite quadrature did not converge", r.error);
    return r;
}

QuadResult pv_extrapolate(const std::function<double(double)>& I_eps, const QuadratureSpec& spec) {
    const auto& eps = spec.pv_epsilon_sequence;
    if (eps.size() < 2) throw ParameterError("need at least two principal-value radii");
    std::vector<double> vals;
    for (double e : eps) vals.push_back(I_eps(e));
    std::vector<double> ext;
    for (std::size_t K = 2; K <= eps.size(); ++K) {
        // Use the K smallest radii; unknowns I0, c1, c3, ...
        std::size_t off = eps.size() - K;
        Eigen::MatrixXd A(K, K);
        Eigen::VectorXd rhs(K);
        double scale = eps[off];
        for (std::size_t r = 0; r < K; ++r) {
            double e = eps[off + r] / scale;
            A(r, 0) = 1.0;
            for (std::size_t c = 1; c < K; ++c) A(r, c) = std::pow(e, 2.0 * c - 1.0);
            rhs(r) = vals[off + r];
        }
        Eigen::VectorXd sol = A.colPivHouseholderQr().solve(rhs);
        ext.push_back(sol(0));
    }
    QuadResult res;
    res.value = ext.back();
    res.error = ext.size() >= 2 ? std::abs(ext.back() - ext[ext.size() - 2]) : std::abs(vals.back() - vals[0]);
    res.evaluations = static_cast<int>(eps.size());
    res.converged = res.error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(res.value));
    if (!res.converged) throw ToleranceError("principal-value extrapolation did not settle", res.error);
    return res;
}

}  // namespace stokes
