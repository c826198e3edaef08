#include "stokes/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <json.hpp>

#include "stokes/errors.hpp"
#include "stokes/parallel.hpp"
#include "stokes/quadrature.hpp"
#include "stokes/sum.hpp"

namespace stokes {

using json = nlohmann::json;

namespace {

constexpr double kSupportTol = 1e-12;

bool inside(const Interval& iv, double x) { return x >= iv.a && x <= iv.b; }

// Interpolation weights along one axis; returns the number of points written.
int axis_weights(const Axis& ax, double x, bool cubic, int* idx, double* w) {
    double u = (x - ax.lo) / ax.step;
    int i0 = static_cast<int>(std::floor(u));
    double f = u - i0;
    int m = 0;
    if (cubic) {
        const double c[4] = {-f * (f - 1.0) * (f - 2.0) / 6.0, (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
                             -(f + 1.0) * f * (f - 2.0) / 2.0, (f + 1.0) * f * (f - 1.0) / 6.0};
        for (int r = 0; r < 4; ++r) {
            int i = i0 - 1 + r;
            if (i < 0 || i >= ax.count) continue;
            idx[m] = i;
            w[m++] = c[r];
        }
    } else {
        const double c[2] = {1.0 - f, f};
        for (int r = 0; r < 2; ++r) {
            int i = i0 + r;
            if (i < 0 || i >= ax.count) continue;
            idx[m] = i;
            w[m++] = c[r];
        }
    }
    return m;
}

json axis_json(const Axis& a) { return {{"lo", a.lo}, {"step", a.step}, {"count", a.count}}; }
Axis axis_from(const json& j) { return Axis{j.at("lo").get<double>(), j.at("step").get<double>(), j.at("count").get<int>()}; }

std::string hex(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

std::string id_label(const KernelId& id) {
    std::ostringstream s;
    s << (id.tensor == Tensor::velocity ? "P" : "g") << id.k << id.j << ":m" << id.deriv.m << ":l";
    for (int v : id.deriv.l) s << v;
    return s.str();
}

std::vector<double> gl_panel(double a, double b, int order, std::vector<double>& w) {
    const auto& x = gl_nodes(order);
    const auto& gw = gl_weights(order);
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::vector<double> out(x.size());
    w.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = c + h * x[i];
        w[i] = h * gw[i];
    }
    return out;
}

// Panel ends 0, first, 2 first, 4 first, ... with lengths capped, until reach.
std::vector<double> graded_ends(double first, double cap, double reach) {
    std::vector<double> e{0.0};
    double x = std::min(first, cap);
    e.push_back(x);
    while (x < reach) {
        x += std::min(x, cap);
        e.push_back(x);
    }
    return e;
}

// Composite Gauss rule on [lo, hi] over the panel ends, clipped.
void clipped_rule(const std::vector<double>& ends, double lo, double hi, int order, std::vector<double>& x,
                  std::vector<double>& w) {
    std::vector<double> pw;
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
        double a = std::max(ends[i], lo), b = std::min(ends[i + 1], hi);
        if (!(b > a)) continue;
        auto px = gl_panel(a, b, order, pw);
        x.insert(x.end(), px.begin(), px.end());
        w.insert(w.end(), pw.begin(), pw.end());
    }
}

// Symmetric graded rule around 0 with central panel [-s0, s0], clipped to [lo, hi].
void space_rule(double s0, const Interval& box, const FieldSpec& spec, std::vector<double>& x,
                std::vector<double>& w) {
    x.clear();
    w.clear();
    s0 = std::min(s0, spec.space_cap);
    double reach = std::max(std::abs(box.a), std::abs(box.b));
    auto pos = graded_ends(s0, spec.space_cap, std::max(reach, s0));
    std::vector<double> ends;
    for (std::size_t i = pos.size(); i-- > 1;) ends.push_back(-pos[i]);
    for (std::size_t i = 1; i < pos.size(); ++i) ends.push_back(pos[i]);
    clipped_rule(ends, box.a, box.b, spec.gauss_order, x, w);
}

// Tensor product of per-axis space rules appended to the rule at lag tau with weight wt.
void append_space(LagRule& r, const LagBox& box, double s0, double tau, double wt, const FieldSpec& spec) {
    int d = r.dim;
    std::vector<std::vector<double>> xs(d), ws(d);
    for (int a = 0; a < d; ++a) space_rule(s0, box.z[a], spec, xs[a], ws[a]);
    std::vector<std::size_t> c(d, 0);
    for (int a = 0; a < d; ++a)
        if (xs[a].empty()) return;
    while (true) {
        double w = wt;
        for (int a = 0; a < d; ++a) {
            r.z.push_back(xs[a][c[a]]);
            w *= ws[a][c[a]];
        }
        r.tau.push_back(tau);
        r.w.push_back(w);
        int a = d - 1;
        while (a >= 0 && ++c[a] == xs[a].size()) c[a--] = 0;
        if (a < 0) break;
    }
}

std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

std::string table_key(const LagRule& rule, double xn, const std::vector<KernelId>& ids, double alpha,
                      const FieldSpec& spec) {
    std::string bytes;
    auto add = [&](const std::vector<double>& v) {
        bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    };
    add(rule.z);
    add(rule.tau);
    add(rule.w);
    std::ostringstream s;
    s << "v1;dim=" << rule.dim << ";alpha=" << hex(alpha) << ";xn=" << hex(xn) << ";rel=" << hex(spec.kernel.rel_tol)
      << ";abs=" << hex(spec.kernel.abs_tol) << ";nodes=" << rule.size()
      << ";rule=" << std::hex << fnv1a(bytes) << std::dec << ";ids=";
    for (const auto& id : ids) s << id_label(id) << ",";
    return s.str();
}

bool load_table(const std::filesystem::path& dir, const std::string& key, std::size_t count, std::vector<double>& out) {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    auto man = dir / (std::string(name) + ".json");
    auto bin = dir / (std::string(name) + ".bin");
    std::error_code ec;
    if (!std::filesystem::exists(man, ec) || !std::filesystem::exists(bin, ec)) return false;
    try {
        std::ifstream mf(man);
        json j = json::parse(mf);
        if (j.at("key").get<std::string>() != key) return false;
        if (std::filesystem::file_size(bin) != count * sizeof(double)) return false;
        out.resize(count);
        std::ifstream bf(bin, std::ios::binary);
        bf.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count * sizeof(double)));
        return static_cast<bool>(bf);
    } catch (const std::exception&) {
        return false;
    }
}

void store_table(const std::filesystem::path& dir, const std::string& key, const KernelTable& t, double alpha,
                 std::size_t nodes) {
    std::lock_guard<std::mutex> lock(cache_mutex());
    std::filesystem::create_directories(dir);
    char name[32];
    std::snprintf(name, sizeof name, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    std::ostringstream tag;
    tag << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    auto bin = dir / (std::string(name) + ".bin");
    auto man = dir / (std::string(name) + ".json");
    {
        std::ofstream bf(bin.string() + tag.str(), std::ios::binary);
        bf.write(reinterpret_cast<const char*>(t.vals.data()),
                 static_cast<std::streamsize>(t.vals.size() * sizeof(double)));
    }
    std::filesystem::rename(bin.string() + tag.str(), bin);
    json ids = json::array();
    for (const auto& id : t.ids) ids.push_back(id_label(id));
    json j = {{"key", key}, {"alpha", alpha}, {"xn", t.xn}, {"nodes", nodes}, {"entries", t.ids.size()},
              {"kernel_ids", ids}, {"layout", "row-major [node][entry], float64"}};
    {
        std::ofstream mf(man.string() + tag.str());
        mf << j.dump(1) << "\n";
    }
    std::filesystem::rename(man.string() + tag.str(), man);
}

KernelTable cached_table(const LagRule& rule, double xn, const std::vector<KernelId>& ids, double alpha,
                         const FieldSpec& spec) {
    if (spec.cache_dir.empty()) return kernel_table(rule, xn, ids, alpha, spec);
    auto key = table_key(rule, xn, ids, alpha, spec);
    KernelTable t;
    t.xn = xn;
    t.ids = ids;
    if (load_table(spec.cache_dir, key, rule.size() * ids.size(), t.vals)) return t;
    t = kernel_table(rule, xn, ids, alpha, spec);
    store_table(spec.cache_dir, key, t, alpha, rule.size());
    return t;
}

// One smooth kernel or atom contribution: output o gets kernel entry e times data component j.
struct Term {
    std::size_t out;
    int j;  // 0-based data component
    KernelId id;
};

struct AtomTerm {
    std::size_t out;
    int j;
    DeltaAtom atom;
};

// Generic assembly of sum_j (K_j * a_j) for the requested kernel ids.
std::vector<std::vector<double>> convolve(const BoundaryData& a, double alpha, const FieldLattice& lat,
                                          const std::vector<Term>& terms, std::size_t nout, const FieldSpec& spec) {
    a.validate();
    lat.validate();
    spec.validate();
    if (alpha < 0.0) throw ParameterError("alpha must be >= 0");
    if (lat.n() != a.n) throw DomainError("lattice and data dimensions differ");
    int n = a.n, d = n - 1;
    std::vector<std::vector<double>> out(nout, std::vector<double>(lat.size(), 0.0));
    std::vector<Term> live;
    for (const auto& t : terms)
        if (!a.component_zero(t.j)) live.push_back(t);
    if (live.empty()) return out;

    std::vector<KernelId> ids;
    std::vector<AtomTerm> atoms;
    for (const auto& t : live) {
        ids.push_back(t.id);
        for (const auto& at : delta_atom(t.id, n)) {
            if (at.order > 1) throw DomainError("time derivatives of order > 1 on delta atoms are not supported");
            if (at.order == 1 && a.smoothness == Smoothness::lq_only)
                throw SmoothnessError("a delta' atom needs time-differentiable data");
            atoms.push_back({t.out, t.j, at});
        }
    }
    bool need_dt = false;
    for (const auto& at : atoms) need_dt = need_dt || at.atom.order == 1;
    if (need_dt && !a.exact_dt && !a.exact) (void)a.dt_samples();

    LagBox box = lag_box(a, lat);
    double xmin = *std::min_element(lat.xn.begin(), lat.xn.end());
    std::size_t plane = lat.plane_size();
    std::size_t nt = lat.t.size();
    std::vector<std::size_t> sizes(d);
    for (int a_ = 0; a_ < d; ++a_) sizes[a_] = lat.space[a_].size();

    LagRule shared, shared_atoms;
    double x_ref = spec.x_ref > 0.0 ? spec.x_ref : xmin;
    if (!spec.per_xn) {
        if (box.tau.b > box.tau.a) shared = lag_rule(box, x_ref, spec);
        if (!atoms.empty()) shared_atoms = instant_rule(box, x_ref, spec);
    }

    for (std::size_t ix = 0; ix < lat.xn.size(); ++ix) {
        double xn = lat.xn[ix];
        LagRule rule_local, atom_local;
        const LagRule* rule = &shared;
        const LagRule* arule = &shared_atoms;
        if (spec.per_xn) {
            if (box.tau.b > box.tau.a) rule_local = lag_rule(box, xn, spec);
            if (!atoms.empty()) atom_local = instant_rule(box, xn, spec);
            rule = &rule_local;
            arule = &atom_local;
        }
        KernelTable table;
        if (rule->size() > 0) table = cached_table(*rule, xn, ids, alpha, spec);
        std::size_t ne = ids.size(), na = atoms.size();
        std::vector<double> avals(arule->size() * na);
        for (std::size_t q = 0; q < arule->size(); ++q) {
            std::vector<double> x(arule->z.begin() + q * d, arule->z.begin() + (q + 1) * d);
            x.push_back(xn);
            for (std::size_t e = 0; e < na; ++e) avals[q * na + e] = arule->w[q] * atoms[e].atom.spatial(x);
        }

        parallel_for(plane, [&](std::size_t pi) {
            std::size_t it = pi % nt, rest = pi / nt;
            double xp[kMaxDim], y[kMaxDim];
            for (int a_ = d - 1; a_ >= 0; --a_) {
                xp[a_] = lat.space[a_][rest % sizes[a_]];
                rest /= sizes[a_];
            }
            double t = lat.t[it];
            std::vector<double> acc(nout, 0.0), data(n);
            std::vector<char> want(n, 0);
            for (const auto& tm : live) want[tm.j] = 1;
            for (std::size_t q = 0; q < rule->size(); ++q) {
                double s = t - rule->tau[q];
                if (!inside(a.support_time, s)) continue;
                bool in = true;
                for (int a_ = 0; a_ < d; ++a_) {
                    y[a_] = xp[a_] - rule->z[q * d + a_];
                    in = in && inside(a.support_space[a_], y[a_]);
                }
                if (!in) continue;
                for (int j = 0; j < n; ++j) data[j] = want[j] ? a.eval(j, y, s) : 0.0;
                double w = rule->w[q];
                const double* kv = &table.vals[q * ne];
                for (std::size_t e = 0; e < ne; ++e) acc[live[e].out] += w * kv[e] * data[live[e].j];
            }
            if (na > 0 && inside(a.support_time, t)) {
                for (std::size_t q = 0; q < arule->size(); ++q) {
                    bool in = true;
                    for (int a_ = 0; a_ < d; ++a_) {
                        y[a_] = xp[a_] - arule->z[q * d + a_];
                        in = in && inside(a.support_space[a_], y[a_]);
                    }
                    if (!in) continue;
                    for (std::size_t e = 0; e < na; ++e) {
                        const auto& at = atoms[e];
                        double v = at.atom.order == 0 ? a.eval(at.j, y, t) : a.eval_dt(at.j, y, t);
                        acc[at.out] += avals[q * na + e] * v;
                    }
                }
            }
            for (std::size_t o = 0; o < nout; ++o) out[o][ix * plane + pi] = acc[o];
        });
    }
    return out;
}

// Storage layout of a lattice: axis 0 = x_n, 1..n-1 = x', n = t.
struct Layout {
    std::vector<std::size_t> count, stride;
    std::vector<double> step;
};

Layout layout(const FieldLattice& lat) {
    int n = lat.n();
    Layout L;
    std::vector<const std::vector<double>*> axes{&lat.xn};
    for (int a = 0; a < n - 1; ++a) axes.push_back(&lat.space[a]);
    axes.push_back(&lat.t);
    L.count.resize(axes.size());
    L.stride.resize(axes.size());
    L.step.resize(axes.size());
    std::size_t s = 1;
    for (std::size_t a = axes.size(); a-- > 0;) {
        const auto& v = *axes[a];
        if (v.size() < 5) throw DomainError("finite differences need at least 5 points per axis");
        double h = v[1] - v[0];
        for (std::size_t i = 1; i < v.size(); ++i)
            if (std::abs(v[i] - v[i - 1] - h) > 1e-9 * std::abs(h)) throw DomainError("lattice is not uniform");
        L.count[a] = v.size();
        L.stride[a] = s;
        L.step[a] = h;
        s *= v.size();
    }
    return L;
}

double d1(const std::vector<double>& f, std::size_t i, std::size_t s, double h) {
    return (f[i - 2 * s] - 8.0 * f[i - s] + 8.0 * f[i + s] - f[i + 2 * s]) / (12.0 * h);
}

double d2(const std::vector<double>& f, std::size_t i, std::size_t s, double h) {
    return (-f[i - 2 * s] + 16.0 * f[i - s] - 30.0 * f[i] + 16.0 * f[i + s] - f[i + 2 * s]) / (12.0 * h * h);
}

// Lattice indices whose stencils stay inside on every axis.
std::vector<std::size_t> interior(const Layout& L) {
    std::vector<std::size_t> out;
    std::size_t total = 1;
    for (auto c : L.count) total *= c;
    for (std::size_t i = 0; i < total; ++i) {
        bool ok = true;
        for (std::size_t a = 0; a < L.count.size() && ok; ++a) {
            std::size_t k = (i / L.stride[a]) % L.count[a];
            ok = k >= 2 && k + 2 < L.count[a];
        }
        if (ok) out.push_back(i);
    }
    return out;
}

// Storage axis of spatial coordinate k (1-based).
std::size_t axis_of(int k, int n) { return k == n ? 0 : static_cast<std::size_t>(k); }

void finish(ResidualReport& r, const std::vector<std::vector<double>>& res) {
    r.max_abs.clear();
    r.rms.clear();
    r.max_total = 0.0;
    for (const auto& v : res) {
        double m = 0.0;
        std::vector<double> sq(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            m = std::max(m, std::abs(v[i]));
            sq[i] = v[i] * v[i];
        }
        r.max_abs.push_back(m);
        r.rms.push_back(v.empty() ? 0.0 : std::sqrt(pairwise_sum(sq) / v.size()));
        r.max_total = std::max(r.max_total, m);
    }
}

bool same_lattice(const FieldLattice& a, const FieldLattice& b) {
    return a.space == b.space && a.xn == b.xn && a.t == b.t;
}

double order_of(double coarse, double fine) {
    if (coarse == 0.0 && fine == 0.0) return 0.0;
    return std::log2(coarse / fine);
}

}  // namespace

void Axis::validate(const std::string& name) const {
    if (count < 1) throw ConfigError("axis " + name + " needs at least one point");
    if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(lo)) throw ConfigError("axis " + name + " has a bad step");
}

std::size_t BoundaryData::grid_size() const {
    std::size_t s = static_cast<std::size_t>(time.count);
    for (const auto& a : space) s *= static_cast<std::size_t>(a.count);
    return s;
}

std::size_t BoundaryData::index(const int* ispace, int it) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < space.size(); ++a) idx = idx * space[a].count + ispace[a];
    return idx * time.count + it;
}

void BoundaryData::validate() const {
    if (n < 2 || n > kMaxDim) throw ConfigError("boundary data dimension must be 2 or 3");
    if (static_cast<int>(space.size()) != n - 1 || static_cast<int>(support_space.size()) != n - 1)
        throw ConfigError("boundary data needs n-1 space axes and support intervals");
    for (std::size_t a = 0; a < space.size(); ++a) {
        space[a].validate("x" + std::to_string(a + 1));
        if (!(support_space[a].b > support_space[a].a)) throw ConfigError("empty spatial support");
    }
    time.validate("t");
    if (!(support_time.b > support_time.a)) throw ConfigError("empty time support");
    if (static_cast<int>(values.size()) != n) throw ConfigError("boundary data needs n components");
    std::size_t g = grid_size();
    for (const auto& v : values)
        if (v.size() != g) throw ConfigError("sample count does not match the grid");
    int d = n - 1;
    for (std::size_t flat = 0; flat < g; ++flat) {
        std::size_t rest = flat / time.count;
        bool in = inside(support_time, time.at(static_cast<int>(flat % time.count)));
        for (int a = d - 1; a >= 0; --a) {
            in = in && inside(support_space[a], space[a].at(static_cast<int>(rest % space[a].count)));
            rest /= space[a].count;
        }
        if (in) continue;
        for (const auto& v : values)
            if (std::abs(v[flat]) > kSupportTol) throw ConfigError("samples must vanish outside the declared support");
    }
}

bool BoundaryData::component_zero(int j) const {
    for (double v : values[j])
        if (v != 0.0) return false;
    return true;
}

bool BoundaryData::is_zero() const {
    for (int j = 0; j < n; ++j)
        if (!component_zero(j)) return false;
    return true;
}

double BoundaryData::interp(const std::vector<double>& v, const double* xp, double t) const {
    bool cubic = smoothness == Smoothness::smooth;
    int d = n - 1;
    int idx[kMaxDim + 1][4], m[kMaxDim + 1];
    double w[kMaxDim + 1][4];
    for (int a = 0; a < d; ++a) m[a] = axis_weights(space[a], xp[a], cubic, idx[a], w[a]);
    m[d] = axis_weights(time, t, cubic, idx[d], w[d]);
    for (int a = 0; a <= d; ++a)
        if (m[a] == 0) return 0.0;
    double s = 0.0;
    int c[kMaxDim + 1] = {0, 0, 0, 0};
    while (true) {
        double wt = 1.0;
        std::size_t flat = 0;
        for (int a = 0; a < d; ++a) {
            flat = flat * space[a].count + idx[a][c[a]];
            wt *= w[a][c[a]];
        }
        flat = flat * time.count + idx[d][c[d]];
        s += wt * w[d][c[d]] * v[flat];
        int a = d;
        while (a >= 0 && ++c[a] == m[a]) c[a--] = 0;
        if (a < 0) break;
    }
    return s;
}

double BoundaryData::eval(int j, const double* xp, double t) const {
    if (!inside(support_time, t)) return 0.0;
    for (int a = 0; a < n - 1; ++a)
        if (!inside(support_space[a], xp[a])) return 0.0;
    if (exact) return exact(j, xp, t);
    return interp(values[j], xp, t);
}

const std::vector<std::vector<double>>& BoundaryData::dt_samples() const {
    if (!dt_values_.empty()) return dt_values_;
    std::vector<std::vector<double>> dv(n, std::vector<double>(grid_size(), 0.0));
    std::size_t nt = time.count, rows = grid_size() / nt;
    double h = time.step;
    for (int j = 0; j < n; ++j)
        for (std::size_t r = 0; r < rows; ++r) {
            const double* f = &values[j][r * nt];
            auto at = [&](long i) { return (i < 0 || i >= static_cast<long>(nt)) ? 0.0 : f[i]; };
            for (long i = 0; i < static_cast<long>(nt); ++i)
                dv[j][r * nt + i] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
        }
    dt_values_ = std::move(dv);
    return dt_values_;
}

double BoundaryData::eval_dt(int j, const double* xp, double t) const {
    if (!inside(support_time, t)) return 0.0;
    for (int a = 0; a < n - 1; ++a)
        if (!inside(support_space[a], xp[a])) return 0.0;
    if (smoothness == Smoothness::lq_only) throw SmoothnessError("time derivative of L^q-only data");
    if (exact_dt) return exact_dt(j, xp, t);
    if (exact) {
        // central difference of the closed form, outside values count as zero
        double h = time.step / 16.0;
        auto f = [&](double s) { return inside(support_time, s) ? exact(j, xp, s) : 0.0; };
        return (f(t - 2 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2 * h)) / (12.0 * h);
    }
    return interp(dt_samples()[j], xp, t);
}

double BoundaryData::lq_norm(double q, int j) const {
    if (!(q >= 1.0)) throw ParameterError("q must be >= 1");
    double vol = time.step;
    for (const auto& a : space) vol *= a.step;
    std::vector<double> parts;
    for (int c = 0; c < n; ++c) {
        if (j >= 0 && c != j) continue;
        for (double v : values[c]) parts.push_back(std::pow(std::abs(v), q));
    }
    return std::pow(pairwise_sum(parts) * vol, 1.0 / q);
}

BoundaryData BoundaryData::scaled(double lambda) const {
    BoundaryData b = *this;
    for (auto& v : b.values)
        for (double& x : v) x *= lambda;
    b.dt_values_.clear();
    if (exact) {
        auto f = exact;
        b.exact = [f, lambda](int j, const double* xp, double t) { return lambda * f(j, xp, t); };
    }
    if (exact_dt) {
        auto f = exact_dt;
        b.exact_dt = [f, lambda](int j, const double* xp, double t) { return lambda * f(j, xp, t); };
    }
    return b;
}

BoundaryData BoundaryData::sample(int n, std::vector<Axis> space, Axis time, std::vector<Interval> support_space,
                                  Interval support_time, const DataFunction& f, Smoothness s, bool keep_exact) {
    BoundaryData b;
    b.n = n;
    b.space = std::move(space);
    b.time = time;
    b.support_space = std::move(support_space);
    b.support_time = support_time;
    b.smoothness = s;
    b.values.assign(n, {});
    if (static_cast<int>(b.space.size()) != n - 1) throw ConfigError("boundary data needs n-1 space axes");
    std::size_t g = b.grid_size();
    for (auto& v : b.values) v.assign(g, 0.0);
    int d = n - 1;
    std::vector<int> c(d, 0);
    double xp[kMaxDim];
    for (std::size_t flat = 0; flat < g; flat += time.count) {
        std::size_t rest = flat / time.count;
        bool in = true;
        for (int a = d - 1; a >= 0; --a) {
            c[a] = static_cast<int>(rest % b.space[a].count);
            rest /= b.space[a].count;
            xp[a] = b.space[a].at(c[a]);
            in = in && inside(b.support_space[a], xp[a]);
        }
        if (!in) continue;
        for (int it = 0; it < time.count; ++it) {
            double t = time.at(it);
            if (!inside(support_time, t)) continue;
            for (int j = 0; j < n; ++j) b.values[j][flat + it] = f(j, xp, t);
        }
    }
    if (keep_exact) b.exact = f;
    b.validate();
    return b;
}

void BoundaryData::save(const std::filesystem::path& path) const {
    validate();
    json h;
    h["n"] = n;
    h["space"] = json::array();
    for (const auto& a : space) h["space"].push_back(axis_json(a));
    h["time"] = axis_json(time);
    h["support_space"] = json::array();
    for (const auto& s : support_space) h["support_space"].push_back({s.a, s.b});
    h["support_time"] = {support_time.a, support_time.b};
    h["smoothness"] = smoothness == Smoothness::smooth ? "smooth" : "lq_only";
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << h.dump() << "\n";
    for (int a = 0; a < n - 1; ++a) f << "x" << a + 1 << ",";
    f << "t";
    for (int j = 0; j < n; ++j) f << ",a" << j + 1;
    f << "\n";
    int d = n - 1;
    std::size_t g = grid_size();
    char buf[64];
    for (std::size_t flat = 0; flat < g; ++flat) {
        std::size_t it = flat % time.count, rest = flat / time.count;
        double xp[kMaxDim];
        for (int a = d - 1; a >= 0; --a) {
            xp[a] = space[a].at(static_cast<int>(rest % space[a].count));
            rest /= space[a].count;
        }
        for (int a = 0; a < d; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", xp[a]);
            f << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", time.at(static_cast<int>(it)));
        f << buf;
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", values[j][flat]);
            f << buf;
        }
        f << "\n";
    }
}

BoundaryData BoundaryData::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read " + path.string());
    std::string line;
    std::getline(f, line);
    json h = json::parse(line);
    BoundaryData b;
    b.n = h.at("n").get<int>();
    for (const auto& a : h.at("space")) b.space.push_back(axis_from(a));
    b.time = axis_from(h.at("time"));
    for (const auto& s : h.at("support_space")) b.support_space.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    b.support_time = {h.at("support_time").at(0).get<double>(), h.at("support_time").at(1).get<double>()};
    std::string sm = h.at("smoothness").get<std::string>();
    if (sm != "smooth" && sm != "lq_only") throw ConfigError("unknown smoothness tag " + sm);
    b.smoothness = sm == "smooth" ? Smoothness::smooth : Smoothness::lq_only;
    if (b.n < 2 || b.n > kMaxDim || static_cast<int>(b.space.size()) != b.n - 1)
        throw ConfigError("bad boundary data header");
    std::getline(f, line);  // column names
    std::size_t g = b.grid_size();
    b.values.assign(b.n, std::vector<double>(g, 0.0));
    for (std::size_t flat = 0; flat < g; ++flat) {
        if (!std::getline(f, line)) throw ConfigError("boundary data file ends early");
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; c < b.n; ++c) std::getline(ss, cell, ',');  // coordinates
        for (int j = 0; j < b.n; ++j) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("boundary data row too short");
            b.values[j][flat] = std::stod(cell);
        }
    }
    b.validate();
    return b;
}

std::size_t FieldLattice::plane_size() const {
    std::size_t s = t.size();
    for (const auto& a : space) s *= a.size();
    return s;
}

std::size_t FieldLattice::size() const { return plane_size() * xn.size(); }

void FieldLattice::validate() const {
    if (n() < 2 || n() > kMaxDim) throw ConfigError("lattice dimension must be 2 or 3");
    if (xn.empty() || t.empty()) throw ConfigError("empty lattice");
    for (const auto& a : space)
        if (a.empty()) throw ConfigError("empty lattice axis");
    for (double v : xn)
        if (!(v > 0.0)) throw DomainError("lattice points need x_n > 0");
}

FieldLattice FieldLattice::uniform(const std::vector<double>& centre_xp, double centre_xn, double centre_t, double h,
                                   double dt, int half) {
    FieldLattice L;
    auto axis = [&](double c, double step) {
        std::vector<double> v;
        for (int i = -half; i <= half; ++i) v.push_back(c + i * step);
        return v;
    };
    for (double c : centre_xp) L.space.push_back(axis(c, h));
    L.xn = axis(centre_xn, h);
    L.t = axis(centre_t, dt);
    L.validate();
    return L;
}

void FieldSpec::validate() const {
    (void)gl_nodes(gauss_order);
    if (!(time_floor > 0.0) || !(space_floor > 0.0) || !(time_cap > 0.0) || !(space_cap > 0.0))
        throw ConfigError("rule scales must be positive");
    if (x_ref < 0.0) throw ConfigError("x_ref must be >= 0");
    kernel.validate();
}

LagBox lag_box(const BoundaryData& a, const FieldLattice& lat) {
    LagBox b;
    for (int k = 0; k < a.n - 1; ++k) {
        auto [lo, hi] = std::minmax_element(lat.space[k].begin(), lat.space[k].end());
        b.z.push_back({*lo - a.support_space[k].b, *hi - a.support_space[k].a});
    }
    auto [tlo, thi] = std::minmax_element(lat.t.begin(), lat.t.end());
    b.tau = {std::max(0.0, *tlo - a.support_time.b), std::max(0.0, *thi - a.support_time.a)};
    return b;
}

LagRule lag_rule(const LagBox& box, double x_ref, const FieldSpec& spec) {
    LagRule r;
    r.dim = static_cast<int>(box.z.size());
    if (!(box.tau.b > box.tau.a)) return r;
    double tau0 = spec.time_floor * x_ref * x_ref;
    auto ends = graded_ends(tau0, spec.time_cap, box.tau.b);
    std::vector<double> tx, tw;
    clipped_rule(ends, box.tau.a, box.tau.b, spec.gauss_order, tx, tw);
    for (std::size_t i = 0; i < tx.size(); ++i) {
        double s0 = spec.space_floor * std::max(x_ref, std::sqrt(tx[i]));
        append_space(r, box, s0, tx[i], tw[i], spec);
    }
    return r;
}

LagRule instant_rule(const LagBox& box, double x_ref, const FieldSpec& spec) {
    LagRule r;
    r.dim = static_cast<int>(box.z.size());
    append_space(r, box, spec.space_floor * x_ref, 0.0, 1.0, spec);
    return r;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

KernelTable kernel_table(const LagRule& rule, double xn, const std::vector<KernelId>& ids, double alpha,
                         const FieldSpec& spec) {
    if (!(xn > 0.0)) throw DomainError("kernel tables need x_n > 0");
    KernelTable t;
    t.xn = xn;
    t.ids = ids;
    std::size_t ne = ids.size(), d = static_cast<std::size_t>(rule.dim);
    t.vals.assign(rule.size() * ne, 0.0);
    std::vector<std::size_t> vel, pre;
    std::vector<KernelId> vel_ids;
    for (std::size_t e = 0; e < ne; ++e) {
        if (ids[e].tensor == Tensor::velocity) {
            vel.push_back(e);
            vel_ids.push_back(ids[e]);
        } else {
            pre.push_back(e);
        }
    }
    parallel_for(rule.size(), [&](std::size_t q) {
        SpaceTimePoint p(std::vector<double>(rule.z.begin() + q * d, rule.z.begin() + (q + 1) * d), xn, rule.tau[q]);
        double* out = &t.vals[q * ne];
        for (std::size_t e : vel) out[e] = P0(ids[e], p, spec.kernel).value;
        if (alpha == 0.0) return;
        if (!vel_ids.empty()) {
            auto pa = P_alpha_batch(vel_ids, p, alpha, spec.kernel);
            for (std::size_t i = 0; i < vel.size(); ++i) out[vel[i]] += alpha * pa[i].value;
        }
        for (std::size_t e : pre) out[e] = alpha * g_alpha(ids[e].j, p, alpha, spec.kernel, ids[e].deriv).value;
    });
    return t;
}

std::vector<std::vector<double>> build_velocity_outputs(const BoundaryData& a, double alpha, const FieldLattice& lat,
                                                        const std::vector<FieldOutput>& outs, const FieldSpec& spec) {
    std::vector<Term> terms;
    for (std::size_t o = 0; o < outs.size(); ++o)
        for (int j = 1; j <= a.n; ++j) {
            KernelId id{outs[o].k, j, KernelPart::zero, outs[o].deriv};
            id.validate(a.n);
            terms.push_back({o, j - 1, id});
        }
    return convolve(a, alpha, lat, terms, outs.size(), spec);
}

Field build_velocity(const BoundaryData& a, double alpha, const FieldLattice& lat, const FieldSpec& spec) {
    std::vector<FieldOutput> outs;
    for (int k = 1; k <= a.n; ++k) outs.push_back({k, {}});
    Field f;
    f.n = a.n;
    f.lattice = lat;
    f.u = build_velocity_outputs(a, alpha, lat, outs, spec);
    return f;
}

std::vector<double> build_pressure_values(const BoundaryData& a, double alpha, const FieldLattice& lat,
                                          const FieldSpec& spec, const MultiIndexDeriv& deriv) {
    std::vector<Term> terms;
    for (int j = 1; j <= a.n; ++j) {
        KernelId id{1, j, KernelPart::zero, deriv, Tensor::pressure};
        id.validate(a.n);
        terms.push_back({0, j - 1, id});
    }
    return convolve(a, alpha, lat, terms, 1, spec)[0];
}

Field build_pressure(const BoundaryData& a, double alpha, const FieldLattice& lat, const FieldSpec& spec) {
    Field f;
    f.n = a.n;
    f.lattice = lat;
    f.p = build_pressure_values(a, alpha, lat, spec);
    return f;
}

void Field::save_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    for (int a = 0; a < n - 1; ++a) f << "x" << a + 1 << ",";
    f << "x" << n << ",t";
    for (std::size_t k = 0; k < u.size(); ++k) f << ",u" << k + 1;
    if (!p.empty()) f << ",p";
    f << "\n";
    std::size_t plane = lattice.plane_size(), nt = lattice.t.size();
    char buf[64];
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        std::size_t ix = i / plane, pi = i % plane, it = pi % nt, rest = pi / nt;
        std::vector<double> xp(n - 1);
        for (int a = n - 2; a >= 0; --a) {
            xp[a] = lattice.space[a][rest % lattice.space[a].size()];
            rest /= lattice.space[a].size();
        }
        for (double v : xp) {
            std::snprintf(buf, sizeof buf, "%.17g,", v);
            f << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", lattice.xn[ix], lattice.t[it]);
        f << buf;
        for (const auto& c : u) {
            std::snprintf(buf, sizeof buf, ",%.17g", c[i]);
            f << buf;
        }
        if (!p.empty()) {
            std::snprintf(buf, sizeof buf, ",%.17g", p[i]);
            f << buf;
        }
        f << "\n";
    }
}

ResidualReport verify_divergence(const Field& u) {
    int n = u.n;
    if (static_cast<int>(u.u.size()) != n) throw DomainError("field needs n velocity components");
    auto L = layout(u.lattice);
    auto idx = interior(L);
    std::vector<double> div(idx.size(), 0.0);
    for (std::size_t m = 0; m < idx.size(); ++m)
        for (int k = 1; k <= n; ++k) {
            std::size_t a = axis_of(k, n);
            div[m] += d1(u.u[k - 1], idx[m], L.stride[a], L.step[a]);
        }
    ResidualReport r;
    r.interior_points = idx.size();
    finish(r, {div});
    return r;
}

ResidualReport verify_stokes_residual(const Field& u, const Field& p) {
    int n = u.n;
    if (p.n != n || !same_lattice(u.lattice, p.lattice)) throw DomainError("velocity and pressure lattices differ");
    if (static_cast<int>(u.u.size()) != n || p.p.size() != u.lattice.size())
        throw DomainError("field needs n velocity components and a pressure");
    auto L = layout(u.lattice);
    auto idx = interior(L);
    std::size_t ta = L.count.size() - 1;
    std::vector<std::vector<double>> res(n, std::vector<double>(idx.size(), 0.0));
    for (int k = 1; k <= n; ++k) {
        const auto& f = u.u[k - 1];
        for (std::size_t m = 0; m < idx.size(); ++m) {
            std::size_t i = idx[m];
            double lap = 0.0;
            for (int c = 1; c <= n; ++c) {
                std::size_t a = axis_of(c, n);
                lap += d2(f, i, L.stride[a], L.step[a]);
            }
            std::size_t ak = axis_of(k, n);
            res[k - 1][m] = d1(f, i, L.stride[ta], L.step[ta]) - lap + d1(p.p, i, L.stride[ak], L.step[ak]);
        }
    }
    ResidualReport r;
    r.interior_points = idx.size();
    finish(r, res);
    return r;
}

void RefinementSetup::validate() const {
    if (!(h > 0.0) || !(dt_over_h > 0.0) || half < 2) throw ConfigError("refinement needs h > 0 and half >= 2");
    if (!(centre_xn - half * h > 0.0)) throw ConfigError("refinement lattice must stay above x_n = 0");
}

FieldVerifyReport field_refinement(const BoundaryData& a, double alpha, const RefinementSetup& s,
                                   const FieldSpec& spec) {
    s.validate();
    FieldLattice lat[2] = {
        FieldLattice::uniform(s.centre_xp, s.centre_xn, s.centre_t, s.h, s.h * s.dt_over_h, s.half),
        FieldLattice::uniform(s.centre_xp, s.centre_xn, s.centre_t, s.h / 2, s.h * s.dt_over_h / 2, s.half)};
    FieldSpec sp = spec;
    sp.per_xn = false;
    if (sp.x_ref == 0.0) sp.x_ref = lat[0].xn.front();
    FieldVerifyReport r;
    for (int level = 0; level < 2; ++level) {
        auto u = build_velocity(a, alpha, lat[level], sp);
        auto p = build_pressure(a, alpha, lat[level], sp);
        (level == 0 ? r.divergence.coarse : r.divergence.fine) = verify_divergence(u);
        (level == 0 ? r.stokes.coarse : r.stokes.fine) = verify_stokes_residual(u, p);
    }
    r.divergence.order = order_of(r.divergence.coarse.max_total, r.divergence.fine.max_total);
    r.stokes.order = order_of(r.stokes.coarse.max_total, r.stokes.fine.max_total);
    return r;
}

TraceReport verify_navier_trace(const BoundaryData& a, double alpha, const std::vector<double>& xn_sequence,
                                const FieldSpec& spec) {
    a.validate();
    if (xn_sequence.empty()) throw ConfigError("empty x_n sequence");
    for (std::size_t i = 0; i < xn_sequence.size(); ++i) {
        if (!(xn_sequence[i] > 0.0)) throw ConfigError("x_n values must be positive");
        if (i > 0 && !(xn_sequence[i] < xn_sequence[i - 1])) throw ConfigError("x_n sequence must decrease");
    }
    int n = a.n;
    TraceReport r;
    r.xn = xn_sequence;
    r.l2_errors.assign(n, {});
    r.data_l2 = a.lq_norm(2.0);
    FieldSpec sp = spec;
    sp.per_xn = true;
    std::vector<FieldOutput> outs;
    for (int k = 1; k < n; ++k) {
        std::vector<int> l(n, 0);
        l[n - 1] = 1;
        outs.push_back({k, MultiIndexDeriv(0, l)});
        outs.push_back({k, {}});
    }
    outs.push_back({n, {}});
    double vol = a.time.step;
    for (const auto& ax : a.space) vol *= ax.step;
    FieldLattice lat;
    for (const auto& ax : a.space) {
        std::vector<double> v;
        for (int i = 0; i < ax.count; ++i) v.push_back(ax.at(i));
        lat.space.push_back(v);
    }
    for (int i = 0; i < a.time.count; ++i) lat.t.push_back(a.time.at(i));
    for (double xn : xn_sequence) {
        lat.xn = {xn};
        auto v = build_velocity_outputs(a, alpha, lat, outs, sp);
        // Lattice order [x'][t] matches the data grid order.
        for (int k = 1; k <= n; ++k) {
            std::vector<double> sq(lat.size());
            for (std::size_t i = 0; i < lat.size(); ++i) {
                double e = k < n ? v[2 * (k - 1)][i] - alpha * v[2 * (k - 1) + 1][i] - a.values[k - 1][i]
                                 : v.back()[i] - a.values[n - 1][i];
                sq[i] = e * e;
            }
            r.l2_errors[k - 1].push_back(std::sqrt(pairwise_sum(sq) * vol));
        }
    }
    return r;
}

std::vector<std::vector<double>> p0kn_convolution(const BoundaryData& a, const FieldLattice& lat,
                                                  const FieldSpec& spec) {
    BoundaryData b = a;
    for (int j = 0; j < a.n - 1; ++j) std::fill(b.values[j].begin(), b.values[j].end(), 0.0);
    if (b.exact) {
        auto f = a.exact;
        int n = a.n;
        b.exact = [f, n](int j, const double* xp, double t) { return j == n - 1 ? f(j, xp, t) : 0.0; };
    }
    std::vector<FieldOutput> outs;
    for (int k = 1; k <= a.n; ++k) outs.push_back({k, {}});
    return build_velocity_outputs(b, 0.0, lat, outs, spec);
}

P0knReport p0kn_operator_bound(const std::vector<BoundaryData>& family, const std::vector<double>& xn_set,
                               const std::vector<double>& qs, const std::vector<Axis>& out_space,
                               const Axis& out_time, const FieldSpec& spec) {
    if (family.empty() || xn_set.empty() || qs.empty()) throw ConfigError("empty operator-bound request");
    for (double q : qs)
        if (!(q > 1.0) || !std::isfinite(q)) throw ConfigError("q must lie in (1, inf)");
    P0knReport rep;
    FieldSpec sp = spec;
    sp.per_xn = true;
    for (std::size_t m = 0; m < family.size(); ++m) {
        const auto& a = family[m];
        int n = a.n;
        if (static_cast<int>(out_space.size()) != n - 1) throw ConfigError("output grid needs n-1 space axes");
        if (a.component_zero(n - 1)) throw DomainError("operator ratio of a zero datum is undefined");
        FieldLattice lat;
        double vol = out_time.step;
        for (const auto& ax : out_space) {
            std::vector<double> v;
            for (int i = 0; i < ax.count; ++i) v.push_back(ax.at(i));
            lat.space.push_back(v);
            vol *= ax.step;
        }
        for (int i = 0; i < out_time.count; ++i) lat.t.push_back(out_time.at(i));
        std::vector<std::vector<std::vector<double>>> ratio(n, std::vector<std::vector<double>>(qs.size()));
        for (double xn : xn_set) {
            lat.xn = {xn};
            auto u = p0kn_convolution(a, lat, sp);
            for (int k = 1; k <= n; ++k)
                for (std::size_t iq = 0; iq < qs.size(); ++iq) {
                    double q = qs[iq];
                    std::vector<double> parts(u[k - 1].size());
                    for (std::size_t i = 0; i < parts.size(); ++i) parts[i] = std::pow(std::abs(u[k - 1][i]), q);
                    double num = std::pow(pairwise_sum(parts) * vol, 1.0 / q);
                    double r = num / a.lq_norm(q, n - 1);
                    rep.rows.push_back({m, k, q, xn, r});
                    ratio[k - 1][iq].push_back(r);
                    rep.max_ratio = std::max(rep.max_ratio, r);
                }
        }
        for (int k = 1; k <= n; ++k)
            for (std::size_t iq = 0; iq < qs.size(); ++iq) {
                const auto& v = ratio[k - 1][iq];
                auto [lo, hi] = std::minmax_element(v.begin(), v.end());
                rep.spreads.push_back({m, k, qs[iq], *lo, *hi});
            }
    }
    return rep;
}

}  // namespace stokes
