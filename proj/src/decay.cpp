#include "stokes/decay.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "stokes/parallel.hpp"

namespace stokes {

namespace {
std::vector<double> geometric(double a, double b, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[k] = n == 1 ? a : a * std::pow(b / a, double(k) / (n - 1));
    return v;
}
}  // namespace

void DecayLattice::validate() const {
    if (!(t_min > 0.0) || !(xi_min > 0.0)) throw ParameterError("lattice bounds must be positive");
    double r_span = xi_max * std::sqrt(t_max) / (xi_min * std::sqrt(t_min));
    if (t_max < 100.0 * t_min * (1.0 - 1e-12) || r_span < 100.0 * (1.0 - 1e-12))
        throw ParameterError("lattice must span at least two decades in |x| and t");
    if (n_t < 2 || n_xi < 2 || n_theta < 2) throw ParameterError("lattice needs at least two nodes per axis");
    if (n_tail < 0 || (n_tail > 0 && !(xi_tail > xi_max))) throw ParameterError("tail must extend past xi_max");
}

std::vector<double> DecayLattice::xi_nodes() const {
    auto xs = geometric(xi_min, xi_max, n_xi);
    if (n_tail > 0) {
        auto tail = geometric(xi_max, xi_tail, n_tail + 1);
        xs.insert(xs.end(), tail.begin() + 1, tail.end());
    }
    return xs;
}

std::vector<SpaceTimePoint> DecayLattice::points() const {
    validate();
    std::vector<SpaceTimePoint> out;
    for (double t : geometric(t_min, t_max, n_t))
        for (double xi : xi_nodes())
            for (int a = 0; a < n_theta; ++a) {
                double r = xi * std::sqrt(t);
                double th = std::numbers::pi * a / (n_theta - 1);
                double x1 = r * std::cos(th), xn = std::max(0.0, r * std::sin(th));
                out.emplace_back(std::vector<double>{x1}, xn, t);
            }
    return out;
}

DecayLattice DecayLattice::refine() const {
    DecayLattice d = *this;
    d.n_t = 2 * n_t - 1;
    d.n_xi = 2 * n_xi - 1;
    d.n_theta = 2 * n_theta - 1;
    d.n_tail = 2 * n_tail;
    return d;
}

std::vector<DecayDeriv> decay_derivs(int max_total) {
    std::vector<DecayDeriv> out;
    for (int s = 0; s <= max_total; ++s)
        for (int m = 0; m <= 2; ++m)
            for (int l = 0; l <= 2; ++l)
                for (int i = 0; i <= 2; ++i)
                    if (m + l + i == s) out.push_back({m, l, i});
    return out;
}

double decay_bound(const KernelId& id, const DecayDeriv& d, const SpaceTimePoint& p) {
    int n = p.n;
    double r2 = p.xn * p.xn, t = p.t;
    for (double v : p.xprime) r2 += v * v;
    double big = r2 + t, normal = p.xn * p.xn + t;
    if (id.part == KernelPart::zero) {
        int djn = id.j == n ? 1 : 0;
        return std::pow(big, -(0.5 * (n + d.l + d.i + djn) + d.m));
    }
    double tm = std::pow(t, -double(d.m));
    if (id.j < n) {
        double base = std::pow(big, -0.5 * (d.l + n - 1)) * tm;
        if (d.i == 0) return base;
        return base / (std::sqrt(big) * std::pow(normal, 0.5 * (d.i - 1)));
    }
    int sigma = id.k < n ? 1 : 0;
    return std::pow(big, -0.5 * (d.l + n - sigma)) * std::pow(normal, -0.5 * (d.i + sigma)) * tm;
}

std::string kernel_label(const KernelId& id) {
    std::string s = id.part == KernelPart::zero ? "P0_" : "Palpha_";
    return s + std::to_string(id.k) + std::to_string(id.j);
}

std::vector<DecayEntry> decay_suite(const std::vector<KernelId>& ids, const std::vector<DecayDeriv>& derivs,
                                    const DecayLattice& lattice, double alpha, const QuadratureSpec& spec) {
    auto pts = lattice.points();
    int n = pts.front().n;
    // every (id, derivative) pair, evaluated together per point
    std::vector<KernelId> all;
    std::vector<DecayDeriv> dd;
    for (const auto& id0 : ids)
        for (const auto& d : derivs) {
            KernelId id = id0;
            std::vector<int> l(n, 0);
            l[0] = d.l;
            l[n - 1] = d.i;
            id.deriv = MultiIndexDeriv(d.m, l);
            id.validate(n);
            all.push_back(id);
            dd.push_back(d);
        }
    std::vector<std::size_t> alpha_idx;
    std::vector<KernelId> alpha_ids;
    for (std::size_t c = 0; c < all.size(); ++c)
        if (all[c].part == KernelPart::alpha) {
            alpha_idx.push_back(c);
            alpha_ids.push_back(all[c]);
        }
    std::vector<double> ratio(pts.size() * all.size());
    parallel_for(pts.size(), [&](std::size_t q) {
        const auto& p = pts[q];
        double* row = &ratio[q * all.size()];
        // absolute accuracy on the scale of the smallest bound keeps ratios meaningful at far points
        double bmin = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < all.size(); ++c) {
            row[c] = decay_bound(all[c], dd[c], p);
            bmin = std::min(bmin, row[c]);
        }
        QuadratureSpec s = spec;
        s.abs_tol = std::min(spec.abs_tol, 1e-9 * bmin);
        for (std::size_t c = 0; c < all.size(); ++c)
            if (all[c].part == KernelPart::zero) row[c] = std::abs(P0(all[c], p, s).value) / row[c];
        if (!alpha_ids.empty()) {
            auto v = P_alpha_batch(alpha_ids, p, alpha, s);
            for (std::size_t a = 0; a < alpha_ids.size(); ++a) row[alpha_idx[a]] = std::abs(v[a].value) / row[alpha_idx[a]];
        }
    });
    std::vector<DecayEntry> out;
    for (std::size_t c = 0; c < all.size(); ++c) {
        DecayEntry e{all[c], dd[c]};
        std::size_t arg = 0;
        for (std::size_t q = 0; q < pts.size(); ++q)
            if (ratio[q * all.size() + c] > e.C) {
                e.C = ratio[q * all.size() + c];
                arg = q;
            }
        std::size_t within = 0;
        for (std::size_t q = 0; q < pts.size(); ++q) within += ratio[q * all.size() + c] <= 1.1 * e.C ? 1 : 0;
        e.argmax_r = std::hypot(pts[arg].xprime[0], pts[arg].xn);
        e.argmax_xn = pts[arg].xn;
        e.argmax_t = pts[arg].t;
        e.fraction_within = double(within) / double(pts.size());
        e.samples = pts.size();
        out.push_back(e);
    }
    return out;
}

}  // namespace stokes
