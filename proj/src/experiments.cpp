#include "stokes/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <random>

#include "stokes/besov.hpp"
#include "stokes/convolved.hpp"
#include "stokes/decay.hpp"
#include "stokes/errors.hpp"
#include "stokes/field.hpp"
#include "stokes/poisson.hpp"
#include "stokes/shear.hpp"

namespace stokes {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---- config plumbing -------------------------------------------------------

const char* type_name(const json& v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
}

// Every key of the reference must be present with the same JSON type and no extra keys may appear.
void check_schema(const json& ref, const json& cfg, const std::string& path) {
    if (std::string(type_name(ref)) != type_name(cfg))
        throw ConfigError("config key '" + path + "' must be of type " + type_name(ref));
    if (!ref.is_object()) return;
    for (auto it = ref.begin(); it != ref.end(); ++it) {
        if (!cfg.contains(it.key())) throw ConfigError("config key '" + path + it.key() + "' is missing");
        check_schema(it.value(), cfg.at(it.key()), path + it.key() + ".");
    }
    for (auto it = cfg.begin(); it != cfg.end(); ++it)
        if (!ref.contains(it.key())) throw ConfigError("unknown config key '" + path + it.key() + "'");
}

double number(const json& j, const char* key) { return j.at(key).get<double>(); }

int integer(const json& j, const char* key) {
    double v = j.at(key).get<double>();
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(std::string("config key '") + key + "' must be an integer");
    return static_cast<int>(v);
}

std::vector<double> numbers(const json& j, const char* key) {
    std::vector<double> v;
    for (const auto& e : j.at(key)) {
        if (!e.is_number()) throw ConfigError(std::string("config key '") + key + "' must hold numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

void check_q(double q, const std::string& what) {
    if (!(q > 1.0) || !std::isfinite(q)) throw ConfigError(what + " must lie in (1, inf)");
}

json quad_json(double abs_tol, double rel_tol) {
    return {{"abs_tol", abs_tol}, {"rel_tol", rel_tol}, {"max_subdivisions", 2000}};
}

QuadratureSpec quad_from(const json& j) {
    QuadratureSpec s;
    s.abs_tol = number(j, "abs_tol");
    s.rel_tol = number(j, "rel_tol");
    s.max_subdivisions = integer(j, "max_subdivisions");
    if (!(s.abs_tol > 0.0) || !(s.rel_tol > 0.0) || s.max_subdivisions < 1)
        throw ConfigError("quadrature tolerances must be positive");
    return s;
}

json field_json(const FieldSpec& f) {
    return {{"gauss_order", f.gauss_order}, {"time_floor", f.time_floor},   {"space_floor", f.space_floor},
            {"time_cap", f.time_cap},       {"space_cap", f.space_cap},     {"x_ref", f.x_ref},
            {"kernel_abs_tol", f.kernel.abs_tol}, {"kernel_rel_tol", f.kernel.rel_tol},
            {"cache_dir", f.cache_dir}};
}

FieldSpec field_from(const json& j) {
    FieldSpec f;
    f.gauss_order = integer(j, "gauss_order");
    f.time_floor = number(j, "time_floor");
    f.space_floor = number(j, "space_floor");
    f.time_cap = number(j, "time_cap");
    f.space_cap = number(j, "space_cap");
    f.x_ref = number(j, "x_ref");
    f.kernel.abs_tol = number(j, "kernel_abs_tol");
    f.kernel.rel_tol = number(j, "kernel_rel_tol");
    f.cache_dir = j.at("cache_dir").get<std::string>();
    f.validate();
    return f;
}

json base_config(const std::string& exp, int n, double alpha, double q) {
    return {{"experiment", exp}, {"n", n}, {"alpha", alpha}, {"q", q}, {"seed", 1}};
}

void require_n2(const json& cfg, const std::string& exp) {
    if (integer(cfg, "n") != 2) throw ConfigError(exp + " is implemented for n = 2 only");
}

double bump(double x, double c, double r, int p) {
    double u = (x - c) / r;
    return std::abs(u) >= 1.0 ? 0.0 : std::pow(1.0 - u * u, p);
}

void verdict(ExperimentResult& r, const std::string& name, double value, const std::string& rel, double threshold) {
    bool pass = false;
    if (rel == "<=") pass = value <= threshold;
    else if (rel == ">=") pass = value >= threshold;
    else if (rel == "<") pass = value < threshold;
    else if (rel == ">") pass = value > threshold;
    else if (rel == "==") pass = value == threshold;
    r.verdicts.push_back({name, pass && std::isfinite(value), value, threshold, rel});
}

// ---- kernel_decay ----------------------------------------------------------

json decay_default() {
    json c = base_config("kernel_decay", 2, 1.0, 2.0);
    DecayLattice L;
    c["lattice"] = {{"t_min", L.t_min},   {"t_max", L.t_max},   {"xi_min", L.xi_min}, {"xi_max", L.xi_max},
                    {"xi_tail", L.xi_tail}, {"n_t", L.n_t},     {"n_xi", L.n_xi},     {"n_theta", L.n_theta},
                    {"n_tail", L.n_tail}};
    c["max_total_order"] = 3;
    c["parts"] = {"zero", "alpha"};
    c["components"] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    c["quadrature"] = quad_json(1e-12, 1e-10);
    c["tolerances"] = {{"stability", 0.1}};
    return c;
}

struct DecaySetup {
    DecayLattice lattice;
    int max_total = 3;
    std::vector<KernelId> ids;
    QuadratureSpec quad;
    double alpha = 1.0, stability = 0.1;
};

DecaySetup decay_setup(const json& c) {
    require_n2(c, "kernel_decay");
    DecaySetup s;
    const auto& L = c.at("lattice");
    s.lattice.t_min = number(L, "t_min");
    s.lattice.t_max = number(L, "t_max");
    s.lattice.xi_min = number(L, "xi_min");
    s.lattice.xi_max = number(L, "xi_max");
    s.lattice.xi_tail = number(L, "xi_tail");
    s.lattice.n_t = integer(L, "n_t");
    s.lattice.n_xi = integer(L, "n_xi");
    s.lattice.n_theta = integer(L, "n_theta");
    s.lattice.n_tail = integer(L, "n_tail");
    try {
        s.lattice.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    s.max_total = integer(c, "max_total_order");
    if (s.max_total < 0 || s.max_total > 3) throw ConfigError("max_total_order must lie in [0, 3]");
    std::vector<KernelPart> parts;
    for (const auto& p : c.at("parts")) {
        std::string v = p.get<std::string>();
        if (v == "zero") parts.push_back(KernelPart::zero);
        else if (v == "alpha") parts.push_back(KernelPart::alpha);
        else throw ConfigError("kernel part must be 'zero' or 'alpha'");
    }
    for (auto part : parts)
        for (const auto& kj : c.at("components")) {
            if (!kj.is_array() || kj.size() != 2) throw ConfigError("components must be [k, j] pairs");
            KernelId id;
            id.k = kj[0].get<int>();
            id.j = kj[1].get<int>();
            id.part = part;
            if (id.k < 1 || id.k > 2 || id.j < 1 || id.j > 2) throw ConfigError("component indices must lie in {1, 2}");
            s.ids.push_back(id);
        }
    if (s.ids.empty()) throw ConfigError("no kernels selected");
    s.quad = quad_from(c.at("quadrature"));
    s.alpha = number(c, "alpha");
    s.stability = number(c.at("tolerances"), "stability");
    return s;
}

ExperimentResult run_decay(const json& c) {
    auto s = decay_setup(c);
    auto derivs = decay_derivs(s.max_total);
    auto coarse = decay_suite(s.ids, derivs, s.lattice, s.alpha, s.quad);
    auto fine = decay_suite(s.ids, derivs, s.lattice.refine(), s.alpha, s.quad);
    ExperimentResult r;
    r.table.columns = {"kernel", "part", "k", "j", "m", "l", "i", "C_coarse", "C_fine", "drift", "fraction_within",
                       "argmax_r", "argmax_xn", "argmax_t"};
    double worst = 0.0, min_frac = 1.0;
    json cs = json::array();
    for (std::size_t e = 0; e < coarse.size(); ++e) {
        const auto& a = coarse[e];
        const auto& b = fine[e];
        double drift = std::abs(b.C / a.C - 1.0);
        worst = std::max(worst, drift);
        min_frac = std::min(min_frac, b.fraction_within);
        std::string part = a.id.part == KernelPart::zero ? "zero" : "alpha";
        r.table.add({kernel_label(a.id), part, std::to_string(a.id.k), std::to_string(a.id.j), std::to_string(a.d.m),
                     std::to_string(a.d.l), std::to_string(a.d.i), num(a.C), num(b.C), num(drift),
                     num(b.fraction_within), num(b.argmax_r), num(b.argmax_xn), num(b.argmax_t)});
        cs.push_back({{"kernel", kernel_label(a.id)}, {"part", part}, {"m", a.d.m}, {"l", a.d.l}, {"i", a.d.i},
                      {"C", b.C}});
    }
    r.results["fitted_constants"] = cs;
    r.results["worst_drift"] = worst;
    r.results["samples_coarse"] = coarse.front().samples;
    r.results["samples_fine"] = fine.front().samples;
    verdict(r, "fitted constants stable under lattice doubling", worst, "<=", s.stability);
    verdict(r, "every sample within the fitted bound", min_frac, ">=", 1.0);
    return r;
}

// ---- navier_trace ----------------------------------------------------------

json trace_default() {
    json c = base_config("navier_trace", 2, 1.0, 2.0);
    c["data"] = {{"radius", 32.0}, {"duration", 256.0}, {"power", 6}, {"components", {1.0, -0.5}},
                 {"grid_space", 2.0}, {"grid_time", 8.0}};
    c["k_min"] = 3;
    c["k_max"] = 8;
    FieldSpec f;
    f.space_cap = 8.0;
    f.time_cap = 16.0;
    c["field"] = field_json(f);
    c["tolerances"] = {{"final_relative_error", 1e-3}};
    return c;
}

struct BumpData {
    double radius = 1.0, duration = 1.0;
    int power = 6;
    std::vector<double> comps;
    double hx = 0.05, ht = 0.05;
};

BumpData bump_from(const json& d) {
    BumpData b;
    b.radius = number(d, "radius");
    b.duration = number(d, "duration");
    b.power = integer(d, "power");
    b.comps = numbers(d, "components");
    b.hx = number(d, "grid_space");
    b.ht = number(d, "grid_time");
    if (!(b.radius > 0.0) || !(b.duration > 0.0) || b.power < 4 || b.comps.size() != 2 || !(b.hx > 0.0) ||
        !(b.ht > 0.0))
        throw ConfigError("bump data needs positive radius, duration, grid steps, power >= 4 and two components");
    if (b.radius / b.hx > 4000.0 || b.duration / b.ht > 4000.0) throw ConfigError("bump data grid too fine");
    return b;
}

// a_j = comps[j] bump(x', R) bump(t - T/2, T/2) on a grid padded by `pad` cells around the support.
BoundaryData bump_datum(const BumpData& b, int pad) {
    auto comps = b.comps;
    double R = b.radius, T = b.duration;
    int p = b.power;
    DataFunction f = [=](int j, const double* xp, double t) {
        return comps[j] * bump(xp[0], 0.0, R, p) * bump(t, 0.5 * T, 0.5 * T, p);
    };
    int nx = static_cast<int>(std::lround(2.0 * R / b.hx)) + 1 + 2 * pad;
    int nt = static_cast<int>(std::lround(T / b.ht)) + 1 + 2 * pad;
    return BoundaryData::sample(2, {Axis{-R - pad * b.hx, b.hx, nx}}, Axis{-pad * b.ht, b.ht, nt}, {{-R, R}},
                                {0.0, T}, f);
}

ExperimentResult run_trace(const json& c) {
    require_n2(c, "navier_trace");
    auto b = bump_from(c.at("data"));
    int k0 = integer(c, "k_min"), k1 = integer(c, "k_max");
    if (k0 < 1 || k1 <= k0 || k1 > 16) throw ConfigError("need 1 <= k_min < k_max <= 16");
    auto spec = field_from(c.at("field"));
    double tol = number(c.at("tolerances"), "final_relative_error");
    double alpha = number(c, "alpha");
    auto a = bump_datum(b, 0);
    std::vector<double> xs;
    for (int k = k0; k <= k1; ++k) xs.push_back(std::exp2(-k));
    auto rep = verify_navier_trace(a, alpha, xs, spec);
    ExperimentResult r;
    r.table.columns = {"xn", "error_1", "error_2", "relative_error"};
    std::vector<double> rel;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = std::hypot(rep.l2_errors[0][i], rep.l2_errors[1][i]);
        rel.push_back(rep.data_l2 > 0.0 ? e / rep.data_l2 : e);
        r.table.add({num(xs[i]), num(rep.l2_errors[0][i]), num(rep.l2_errors[1][i]), num(rel.back())});
    }
    bool dec = true;
    for (std::size_t i = 1; i < rel.size(); ++i) dec = dec && rel[i] < rel[i - 1];
    r.results["data_l2"] = rep.data_l2;
    r.results["relative_errors"] = rel;
    r.results["strictly_decreasing"] = dec;
    if (rep.data_l2 == 0.0) {
        verdict(r, "zero datum gives zero trace errors", rel.back(), "==", 0.0);
    } else {
        verdict(r, "trace errors strictly decreasing", dec ? 1.0 : 0.0, "==", 1.0);
        verdict(r, "final relative trace error", rel.back(), "<=", tol);
    }
    return r;
}

// ---- field_verify ----------------------------------------------------------

json field_verify_default() {
    json c = base_config("field_verify", 2, 1.0, 2.0);
    c["data"] = {{"radius", 1.0}, {"duration", 1.0}, {"power", 6}, {"components", {1.0, -0.5}},
                 {"grid_space", 0.05}, {"grid_time", 0.05}};
    RefinementSetup s;
    c["lattice"] = {{"centre_x1", 0.0}, {"centre_xn", s.centre_xn}, {"centre_t", s.centre_t},
                    {"h", s.h},         {"dt_over_h", s.dt_over_h}, {"half", s.half}};
    c["field"] = field_json(FieldSpec{});
    c["tolerances"] = {{"divergence_order", 2.0}, {"stokes_order", 1.0}, {"control_min", 0.1}};
    return c;
}

ExperimentResult run_field_verify(const json& c) {
    require_n2(c, "field_verify");
    auto b = bump_from(c.at("data"));
    const auto& L = c.at("lattice");
    RefinementSetup s;
    s.centre_xp = {number(L, "centre_x1")};
    s.centre_xn = number(L, "centre_xn");
    s.centre_t = number(L, "centre_t");
    s.h = number(L, "h");
    s.dt_over_h = number(L, "dt_over_h");
    s.half = integer(L, "half");
    s.validate();
    auto spec = field_from(c.at("field"));
    const auto& tol = c.at("tolerances");
    double alpha = number(c, "alpha");
    auto a = bump_datum(b, 4);
    auto rep = field_refinement(a, alpha, s, spec);

    // negative controls on the coarse lattice
    auto lat = FieldLattice::uniform(s.centre_xp, s.centre_xn, s.centre_t, s.h, s.h * s.dt_over_h, s.half);
    std::mt19937_64 rng(static_cast<std::uint64_t>(integer(c, "seed")));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Field ru{2, lat, {}, {}}, rp{2, lat, {}, {}};
    ru.u.assign(2, std::vector<double>(lat.size()));
    for (auto& comp : ru.u)
        for (auto& v : comp) v = uni(rng);
    rp.p.resize(lat.size());
    for (auto& v : rp.p) v = uni(rng);
    double random_div = verify_divergence(ru).max_total;
    double random_stokes = verify_stokes_residual(ru, rp).max_total;
    Field zu{2, lat, {}, {}}, xp{2, lat, {}, {}};
    zu.u.assign(2, std::vector<double>(lat.size(), 0.0));
    xp.p.resize(lat.size());
    std::size_t plane = lat.plane_size(), nt = lat.t.size();
    for (std::size_t i = 0; i < lat.size(); ++i) xp.p[i] = lat.space[0][(i % plane) / nt];
    double pressure_x1 = verify_stokes_residual(zu, xp).max_total;

    ExperimentResult r;
    r.table.columns = {"row", "h", "divergence_max", "stokes_max", "order_divergence", "order_stokes"};
    r.table.add({"coarse", num(s.h), num(rep.divergence.coarse.max_total), num(rep.stokes.coarse.max_total), "", ""});
    r.table.add({"fine", num(0.5 * s.h), num(rep.divergence.fine.max_total), num(rep.stokes.fine.max_total),
                 num(rep.divergence.order), num(rep.stokes.order)});
    r.table.add({"control_random_field", num(s.h), num(random_div), num(random_stokes), "", ""});
    r.table.add({"control_pressure_x1", num(s.h), "0", num(pressure_x1), "", ""});
    r.results["divergence_order"] = rep.divergence.order;
    r.results["stokes_order"] = rep.stokes.order;
    r.results["control_random_divergence"] = random_div;
    r.results["control_random_stokes"] = random_stokes;
    r.results["control_pressure_x1"] = pressure_x1;
    if (a.is_zero()) {
        double m = std::max(rep.divergence.fine.max_total, rep.stokes.fine.max_total);
        m = std::max(m, std::max(rep.divergence.coarse.max_total, rep.stokes.coarse.max_total));
        verdict(r, "zero datum gives zero residuals", m, "==", 0.0);
    } else {
        verdict(r, "divergence order under refinement", rep.divergence.order, ">=", number(tol, "divergence_order"));
        verdict(r, "Stokes residual order under refinement", rep.stokes.order, ">=", number(tol, "stokes_order"));
    }
    double cmin = number(tol, "control_min");
    verdict(r, "random field divergence control", random_div, ">=", cmin);
    verdict(r, "random field Stokes control", random_stokes, ">=", cmin);
    verdict(r, "pressure x1 control", pressure_x1, ">=", cmin);
    return r;
}

// ---- shear_blowup ----------------------------------------------------------

json shear_default() {
    json c = base_config("shear_blowup", 2, 1.0, 4.0);
    c["beta"] = 0.25;
    c["boundary"] = "navier";
    c["pressure"] = "gprime";
    ShearLattice L;
    L.k_min = 3;
    c["lattice"] = {{"k_min", L.k_min},   {"k_max", L.k_max},           {"y_per_octave", L.y_per_octave},
                    {"t_lo", L.t_lo},     {"t_hi", L.t_hi},             {"s_min", L.s_min},
                    {"s_per_octave", L.s_per_octave}};
    c["theta_fit"] = {{"k_lo", 4}, {"k_hi", 10}, {"per_octave", 1}};
    c["control"] = {{"beta", 0.5}, {"q", 2.0}};
    c["quadrature"] = quad_json(1e-13, 1e-10);
    c["tolerances"] = {{"theta_exponent", -0.5}, {"theta_exponent_tol", 0.05}, {"growth_min", 1.15},
                       {"sup_ratio_max", 2.0},   {"control_plateau", 0.05}};
    return c;
}

ShearLattice shear_lattice_from(const json& L) {
    ShearLattice s;
    s.k_min = integer(L, "k_min");
    s.k_max = integer(L, "k_max");
    s.y_per_octave = integer(L, "y_per_octave");
    s.t_lo = number(L, "t_lo");
    s.t_hi = number(L, "t_hi");
    s.s_min = number(L, "s_min");
    s.s_per_octave = integer(L, "s_per_octave");
    s.validate();
    return s;
}

ExperimentResult run_shear(const json& c) {
    require_n2(c, "shear_blowup");
    double q = number(c, "q"), beta = number(c, "beta"), alpha = number(c, "alpha");
    if (!(beta > 0.0 && beta <= 0.5)) throw ConfigError("beta must lie in (0, 1/2]");
    auto lat = shear_lattice_from(c.at("lattice"));
    auto quad = quad_from(c.at("quadrature"));
    const auto& ctl = c.at("control");
    double beta_c = number(ctl, "beta"), q_c = number(ctl, "q");
    check_q(q_c, "control q");
    if (!(beta_c > 0.0 && beta_c <= 0.5)) throw ConfigError("control beta must lie in (0, 1/2]");
    const auto& tf = c.at("theta_fit");
    int k_lo = integer(tf, "k_lo"), k_hi = integer(tf, "k_hi"), ppo = integer(tf, "per_octave");
    if (k_lo < 1 || k_hi < k_lo + 3 || k_hi > 30 || ppo < 1) throw ConfigError("theta_fit needs k_lo + 3 <= k_hi");
    const auto& tol = c.at("tolerances");

    ShearConfig cfg;
    cfg.alpha = alpha;
    cfg.bc = parse_bc(c.at("boundary").get<std::string>());
    cfg.pressure = parse_pressure(c.at("pressure").get<std::string>());
    GTParams gp;
    gp.beta = beta;
    cfg.forcing = Forcing::from_gT(GTKind::holder_beta, q, gp);
    cfg.validate();
    auto main = shear_blowup(cfg, q, lat, quad);

    ShearConfig ctl_cfg = cfg;
    GTParams gc;
    gc.beta = beta_c;
    ctl_cfg.forcing = Forcing::from_gT(GTKind::holder_beta, q_c, gc);
    auto control = shear_blowup(ctl_cfg, q_c, lat, quad);

    std::vector<double> ys, th;
    for (int i = k_lo * ppo; i <= k_hi * ppo; ++i) {
        ys.push_back(std::exp2(-double(i) / ppo));
        th.push_back(theta_eval(ys.back(), 1.0, cfg.forcing, quad));
    }
    auto fit = fit_power_with_background(ys, th);

    ExperimentResult r;
    r.table.columns = {"series", "eps", "norm", "slope", "growth", "sup_v", "sup_vy"};
    auto add_rows = [&](const std::string& name, const ShearBlowup& b) {
        for (const auto& row : b.rows)
            r.table.add({name, num(row.eps), num(row.norm), num(row.slope), num(row.growth), num(row.sup_v),
                         num(row.sup_vy)});
    };
    add_rows("main", main);
    add_rows("control", control);
    for (std::size_t i = 0; i < ys.size(); ++i) r.table.add({"theta_at_t1", num(ys[i]), num(th[i]), "", "", "", ""});

    double min_growth = INFINITY, sup_lo = INFINITY, sup_hi = 0.0;
    for (std::size_t i = 0; i < main.rows.size(); ++i) {
        if (i > 0) min_growth = std::min(min_growth, main.rows[i].growth);
        double sup = main.rows[i].sup_v + main.rows[i].sup_vy;
        sup_lo = std::min(sup_lo, sup);
        sup_hi = std::max(sup_hi, sup);
    }
    std::size_t m = control.rows.size();
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = m >= 3 ? m - 3 : 0; i < m; ++i) {
        lo = std::min(lo, control.rows[i].norm);
        hi = std::max(hi, control.rows[i].norm);
    }
    double plateau = hi / lo - 1.0;
    r.results["derivative_order"] = main.order;
    r.results["theta_exponent"] = fit.exponent;
    r.results["theta_amplitude"] = fit.amplitude;
    r.results["theta_background"] = fit.background;
    r.results["theta_plain_slope"] = fit.plain_slope;
    if (beta < 0.5) r.results["theta_predicted_amplitude"] = theta_scaling_constant(beta);
    r.results["min_growth"] = min_growth;
    r.results["sup_ratio"] = sup_hi / sup_lo;
    r.results["control_plateau_spread"] = plateau;
    verdict(r, "theta exponent deviation", std::abs(fit.exponent - number(tol, "theta_exponent")), "<=",
            number(tol, "theta_exponent_tol"));
    verdict(r, "norm growth per halving", min_growth, ">=", number(tol, "growth_min"));
    verdict(r, "sup |v| + sup |v_y| ratio", sup_hi / sup_lo, "<=", number(tol, "sup_ratio_max"));
    verdict(r, "control plateau spread", plateau, "<=", number(tol, "control_plateau"));
    return r;
}

// ---- poisson_blowup --------------------------------------------------------

json poisson_default() {
    PoissonConfig p;
    json c = base_config("poisson_blowup", 2, p.alpha, p.q);
    c["x0"] = p.x0;
    c["beta"] = p.beta;
    c["lattice"] = {{"k_min", p.k_min},       {"k_max", p.k_max},         {"xn_per_octave", p.xn_per_octave},
                    {"nx", p.nx},             {"nt_uniform", p.nt_uniform}, {"s_per_octave", p.s_per_octave},
                    {"s_min", p.s_min}};
    c["far_radii"] = p.far_radii;
    c["field"] = field_json(p.field);
    c["quadrature"] = quad_json(p.quad.abs_tol, p.quad.rel_tol);
    c["tolerances"] = {{"sup_drift", 0.1}, {"remainder_ratio", 3.0}, {"plateau", 0.05}, {"far_slope_margin", 0.25}};
    return c;
}

PoissonConfig poisson_from(const json& c) {
    PoissonConfig p;
    p.n = integer(c, "n");
    p.alpha = number(c, "alpha");
    p.q = number(c, "q");
    p.x0 = number(c, "x0");
    p.beta = number(c, "beta");
    const auto& L = c.at("lattice");
    p.k_min = integer(L, "k_min");
    p.k_max = integer(L, "k_max");
    p.xn_per_octave = integer(L, "xn_per_octave");
    p.nx = integer(L, "nx");
    p.nt_uniform = integer(L, "nt_uniform");
    p.s_per_octave = integer(L, "s_per_octave");
    p.s_min = number(L, "s_min");
    p.far_radii = numbers(c, "far_radii");
    p.field = field_from(c.at("field"));
    p.quad = quad_from(c.at("quadrature"));
    p.validate();
    return p;
}

ExperimentResult run_poisson(const json& c) {
    auto p = poisson_from(c);
    const auto& tol = c.at("tolerances");
    auto rep = poisson_blowup(p);
    ExperimentResult r;
    r.table.columns = {"eps", "norm_d2u1", "norm_h1", "growth", "remainder_sup"};
    for (const auto& row : rep.rows)
        r.table.add({num(row.eps), num(row.norm_d2), num(row.norm_h1), num(row.growth), num(row.remainder)});
    double psi_lo = INFINITY, psi_hi = -INFINITY;
    for (int i = 0; i <= 16; ++i) {
        double v = poisson_psi(p, -0.5 + i / 16.0);
        psi_lo = std::min(psi_lo, v);
        psi_hi = std::max(psi_hi, v);
    }
    json far = json::array();
    for (const auto& f : rep.far)
        far.push_back({{"radius", f.radius}, {"x1", f.x1}, {"xn", f.xn}, {"value", f.value}, {"scaled", f.scaled}});
    r.results["c_fit"] = rep.c_fit;
    r.results["c_predicted"] = rep.c_predicted;
    r.results["sup_coarse"] = rep.sup_coarse;
    r.results["sup_fine"] = rep.sup_fine;
    r.results["sup_drift"] = rep.sup_drift();
    r.results["remainder_ratio"] = rep.remainder_ratio();
    r.results["monotone"] = rep.monotone;
    r.results["plateau"] = rep.plateau;
    r.results["psi_min"] = psi_lo;
    r.results["psi_max"] = psi_hi;
    r.results["far_field"] = far;
    r.results["far_slope"] = rep.far_slope;
    verdict(r, "truncated norm grows monotonically", rep.monotone ? 1.0 : 0.0, "==", 1.0);
    {
        std::size_t m = rep.rows.size();
        double lo = INFINITY, hi = 0.0;
        for (std::size_t i = m - 3; i < m; ++i) {
            lo = std::min(lo, rep.rows[i].norm_d2);
            hi = std::max(hi, rep.rows[i].norm_d2);
        }
        verdict(r, "last three norms spread (no plateau)", hi / lo - 1.0, ">", number(tol, "plateau"));
    }
    verdict(r, "sup |u| + |grad u| refinement drift", rep.sup_drift(), "<=", number(tol, "sup_drift"));
    verdict(r, "remainder sup over coarsest", rep.remainder_ratio(), "<=", number(tol, "remainder_ratio"));
    verdict(r, "psi positive on the half ball", psi_lo, ">", 0.0);
    if (!rep.far.empty())
        verdict(r, "far-field decay exponent", rep.far_slope, "<=", -2.0 + number(tol, "far_slope_margin"));
    return r;
}

// ---- besov_equivalence -----------------------------------------------------

json besov_default() {
    json c = base_config("besov_equivalence", 2, 0.0, 2.0);
    c["qs"] = {1.5, 2.0, 4.0};
    c["grid"] = {{"dt", 1.0 / 8192}, {"length", 16384}};
    c["x_per_decade"] = 24;
    c["lacunary_terms"] = 8;
    c["tolerances"] = {{"spread_max", 50.0}, {"covariance", 1e-9}};
    return c;
}

Signal packet_signal(double w, double sigma, double tc, double dt, std::size_t len) {
    Interval supp{tc - 8.0 * sigma, tc + 8.0 * sigma};
    return Signal::sample(
        [&](double t) {
            double u = (t - tc) / sigma;
            return std::cos(w * (t - tc)) * std::exp(-0.5 * u * u);
        },
        0.0, dt, len, supp);
}

// Carrier of the low packet, at the centre of a dyadic annulus; the high one sits three octaves up.
double besov_low_carrier(double dt) { return 1.4166 * std::exp2(std::floor(std::log2(0.02 / dt))); }

void check_besov(const json& c) {
    auto qs = numbers(c, "qs");
    if (qs.empty()) throw ConfigError("qs must not be empty");
    for (double q : qs) check_q(q, "each q");
    double dt = number(c.at("grid"), "dt");
    int len = integer(c.at("grid"), "length");
    if (!(dt > 0.0) || len < 1024 || len > (1 << 22)) throw ConfigError("grid needs dt > 0 and 1024 <= length <= 2^22");
    int ppd = integer(c, "x_per_decade");
    int J = integer(c, "lacunary_terms");
    if (ppd < 4 || J < 1 || J > 30) throw ConfigError("x_per_decade >= 4 and lacunary_terms in [1, 30] required");
    // low packet support is 8 widths of 16 / carrier on each side of the grid centre
    if (8.0 * 16.0 / besov_low_carrier(dt) > 0.5 * dt * (len - 1))
        throw ConfigError("grid too short for the low-frequency packet; increase length or decrease dt");
}

ExperimentResult run_besov(const json& c) {
    check_besov(c);
    auto qs = numbers(c, "qs");
    double dt = number(c.at("grid"), "dt");
    int len = integer(c.at("grid"), "length");
    int ppd = integer(c, "x_per_decade");
    int J = integer(c, "lacunary_terms");
    const auto& tol = c.at("tolerances");
    double T = dt * (len - 1);
    double tc = 0.5 * T;
    double w_lo = besov_low_carrier(dt), w_hi = 8.0 * w_lo;
    std::vector<std::pair<std::string, Signal>> fam;
    fam.push_back({"block_low", packet_signal(w_lo, 16.0 / w_lo, tc, dt, len)});
    fam.push_back({"block_high", packet_signal(w_hi, 16.0 / w_hi, tc, dt, len)});
    fam.push_back({"gaussian", Signal::sample(
                                   [&](double t) {
                                       double u = (t - tc) / (0.02 * T);
                                       return std::exp(-0.5 * u * u);
                                   },
                                   0.0, dt, len, {tc - 0.16 * T, tc + 0.16 * T})});
    ExperimentResult r;
    r.table.columns = {"q", "signal", "lower", "upper"};
    double worst_spread = 0.0;
    json brackets = json::array();
    for (double q : qs) {
        auto members = fam;
        members.push_back({"box", construct_gT(GTKind::box, q)});
        GTParams gp;
        gp.J = J;
        members.push_back({"lacunary", construct_gT(GTKind::lacunary, q, gp)});
        auto p = BesovParams::critical(q);
        double lo = INFINITY, hi = 0.0;
        for (const auto& [name, g] : members) {
            auto e = equivalence_ratio(g, p, default_x_grid(g, ppd));
            r.table.add({num(q), name, num(e.lower), num(e.upper)});
            lo = std::min(lo, e.lower);
            hi = std::max(hi, e.upper);
        }
        worst_spread = std::max(worst_spread, hi / lo);
        brackets.push_back({{"q", q}, {"c1", lo}, {"c2", hi}, {"spread", hi / lo}});
    }
    // dyadic covariance of block norms for the box profile
    double cov = 0.0;
    {
        auto g = construct_gT(GTKind::box, qs.front());
        auto g2 = g.dilated(2.0);
        auto band = resolvable_band(g);
        auto b1 = lp_blocks(g, band.jmin, band.jmax - 1);
        auto b2 = lp_blocks(g2, band.jmin + 1, band.jmax);
        for (double q : qs)
            for (std::size_t i = 0; i < b1.size(); ++i) {
                double a = lq_norm(b2[i], q), b = std::pow(2.0, -1.0 / q) * lq_norm(b1[i], q);
                if (b > 0.0) cov = std::max(cov, std::abs(a - b) / b);
            }
    }
    r.results["brackets"] = brackets;
    r.results["worst_spread"] = worst_spread;
    r.results["covariance_error"] = cov;
    verdict(r, "bracket spread", worst_spread, "<=", number(tol, "spread_max"));
    verdict(r, "dyadic covariance", cov, "<=", number(tol, "covariance"));
    return r;
}

// ---- lemma26_check ---------------------------------------------------------

json lemma26_default() {
    json c = base_config("lemma26_check", 2, 0.0, 2.0);
    c["ts"] = {1e-4, 1e-3, 1e-2};
    c["random_directions"] = 2;
    c["oracle_eps"] = 1e-6;
    c["quadrature"] = quad_json(1e-12, 1e-10);
    c["tolerances"] = {{"spread_max", 10.0}, {"oracle_relative", 1e-4}};
    return c;
}

ExperimentResult run_lemma26(const json& c) {
    int n = integer(c, "n");
    auto ts = numbers(c, "ts");
    if (ts.size() < 2) throw ConfigError("ts needs at least two times");
    for (double t : ts)
        if (!(t > 0.0 && t <= 1.0)) throw ConfigError("times must lie in (0, 1]");
    int nd = integer(c, "random_directions");
    if (nd < 0 || nd > 64) throw ConfigError("random_directions must lie in [0, 64]");
    double eps = number(c, "oracle_eps");
    if (!(eps > 0.0 && eps < 1e-2)) throw ConfigError("oracle_eps must lie in (0, 1e-2)");
    auto quad = quad_from(c.at("quadrature"));
    const auto& tol = c.at("tolerances");

    // unit vectors with x_1 >= 1/2 so the leading term stays away from zero
    std::vector<std::vector<double>> dirs{n == 2 ? std::vector<double>{1.0} : std::vector<double>{1.0, 0.0}};
    std::mt19937_64 rng(static_cast<std::uint64_t>(integer(c, "seed")));
    std::uniform_real_distribution<double> ang(-kPi / 3.0, kPi / 3.0);
    for (int i = 0; i < nd; ++i) {
        double a = ang(rng);
        if (n == 2) dirs.push_back({1.0});
        else dirs.push_back({std::cos(a), std::sin(a)});
    }
    if (n == 2) dirs.resize(1);  // the unit sphere in R^1 with x_1 > 0 is a single point

    ExperimentResult r;
    r.table.columns = {"n", "direction", "x1", "t", "pv", "leading", "scaled_residual", "oracle", "oracle_rel_diff"};
    double worst_spread = 0.0, worst_oracle = 0.0;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        std::vector<double> scaled;
        for (double t : ts) {
            double pv = gaussian_singular_conv(dirs[d], t, n, quad);
            double lead = std::pow(4.0 * kPi * t, 0.5 * (n - 1)) * dirs[d][0];
            double res = std::abs(pv - lead) / std::pow(t, 0.5 * n);
            double oracle = gaussian_singular_conv_eps(dirs[d], t, n, eps, quad);
            double rel = std::abs(pv - oracle) / std::abs(oracle);
            scaled.push_back(res);
            worst_oracle = std::max(worst_oracle, rel);
            r.table.add({std::to_string(n), std::to_string(d), num(dirs[d][0]), num(t), num(pv), num(lead), num(res),
                         num(oracle), num(rel)});
        }
        auto s = scaled;
        std::sort(s.begin(), s.end());
        double med = s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
        worst_spread = std::max({worst_spread, s.back() / med, med / s.front()});
    }
    r.results["worst_spread"] = worst_spread;
    r.results["worst_oracle_rel_diff"] = worst_oracle;
    verdict(r, "scaled residual spread about the median", worst_spread, "<=", number(tol, "spread_max"));
    verdict(r, "agreement with the fixed-eps oracle", worst_oracle, "<=", number(tol, "oracle_relative"));
    return r;
}

// ---- p0kn_bound ------------------------------------------------------------

json p0kn_default() {
    json c = base_config("p0kn_bound", 2, 0.0, 2.0);
    c["qs"] = {1.5, 2.0, 4.0};
    c["k_min"] = 2;
    c["k_max"] = 8;
    c["output_grid"] = {{"x_lo", -3.0}, {"x_hi", 3.0}, {"hx", 0.0625}, {"t_lo", 0.0}, {"t_hi", 2.0}, {"ht", 0.03125}};
    FieldSpec f;
    c["field"] = field_json(f);
    c["tolerances"] = {{"spread_max", 2.0}};
    return c;
}

// Three normal-component data: a smooth bump, an off-centre oscillating bump, a rough box.
std::vector<BoundaryData> p0kn_family() {
    std::vector<BoundaryData> fam;
    DataFunction smooth = [](int j, const double* xp, double t) {
        return j == 1 ? bump(xp[0], 0.0, 1.0, 6) * bump(t, 0.5, 0.5, 6) : 0.0;
    };
    fam.push_back(BoundaryData::sample(2, {Axis{-1.2, 0.025, 97}}, Axis{-0.1, 0.0125, 97}, {{-1.0, 1.0}}, {0.0, 1.0},
                                       smooth));
    DataFunction wave = [](int j, const double* xp, double t) {
        return j == 1 ? std::cos(3.0 * xp[0]) * bump(xp[0], 0.25, 1.0, 6) * bump(t, 0.6, 0.4, 6) : 0.0;
    };
    fam.push_back(BoundaryData::sample(2, {Axis{-0.85, 0.0125, 177}}, Axis{0.1, 0.0125, 97}, {{-0.75, 1.25}},
                                       {0.2, 1.0}, wave));
    DataFunction box = [](int j, const double* xp, double t) {
        return j == 1 && std::abs(xp[0]) <= 0.5 && t >= 0.25 && t <= 0.75 ? 1.0 : 0.0;
    };
    fam.push_back(BoundaryData::sample(2, {Axis{-0.6, 0.025, 49}}, Axis{0.15, 0.025, 29}, {{-0.5, 0.5}}, {0.25, 0.75},
                                       box, Smoothness::lq_only));
    return fam;
}

ExperimentResult run_p0kn(const json& c) {
    require_n2(c, "p0kn_bound");
    auto qs = numbers(c, "qs");
    if (qs.empty()) throw ConfigError("qs must not be empty");
    for (double q : qs) check_q(q, "each q");
    int k0 = integer(c, "k_min"), k1 = integer(c, "k_max");
    if (k0 < 0 || k1 <= k0 || k1 > 14) throw ConfigError("need 0 <= k_min < k_max <= 14");
    const auto& g = c.at("output_grid");
    double xl = number(g, "x_lo"), xh = number(g, "x_hi"), hx = number(g, "hx");
    double tl = number(g, "t_lo"), th = number(g, "t_hi"), ht = number(g, "ht");
    if (!(xh > xl) || !(hx > 0.0) || !(th > tl) || !(ht > 0.0)) throw ConfigError("output grid needs positive extents");
    int nx = static_cast<int>(std::lround((xh - xl) / hx)) + 1, nt = static_cast<int>(std::lround((th - tl) / ht)) + 1;
    if (nx < 3 || nt < 3 || double(nx) * nt > 2e6) throw ConfigError("output grid must have 3..2e6 points per axis product");
    auto spec = field_from(c.at("field"));
    double tol = number(c.at("tolerances"), "spread_max");
    std::vector<double> xs;
    for (int k = k0; k <= k1; ++k) xs.push_back(std::exp2(-k));
    auto rep = p0kn_operator_bound(p0kn_family(), xs, qs, {Axis{xl, hx, nx}}, Axis{tl, ht, nt}, spec);
    ExperimentResult r;
    r.table.columns = {"member", "k", "q", "xn", "ratio"};
    for (const auto& row : rep.rows)
        r.table.add({std::to_string(row.member), std::to_string(row.k), num(row.q), num(row.xn), num(row.ratio)});
    double worst = 0.0;
    json spreads = json::array();
    for (const auto& s : rep.spreads) {
        worst = std::max(worst, s.spread());
        spreads.push_back({{"member", s.member}, {"k", s.k}, {"q", s.q}, {"min", s.min_ratio}, {"max", s.max_ratio}});
    }
    r.results["spreads"] = spreads;
    r.results["worst_spread"] = worst;
    r.results["max_ratio"] = rep.max_ratio;
    verdict(r, "operator ratio spread over x_n", worst, "<=", tol);
    return r;
}

struct Entry {
    std::function<json()> defaults;
    std::function<void(const json&)> check;
    std::function<ExperimentResult(const json&)> run;
};

const std::map<std::string, Entry>& registry() {
    static const std::map<std::string, Entry> m{
        {"kernel_decay", {decay_default, [](const json& c) { decay_setup(c); }, run_decay}},
        {"navier_trace",
         {trace_default,
          [](const json& c) {
              require_n2(c, "navier_trace");
              bump_from(c.at("data"));
              field_from(c.at("field"));
          },
          run_trace}},
        {"field_verify",
         {field_verify_default,
          [](const json& c) {
              require_n2(c, "field_verify");
              bump_from(c.at("data"));
              field_from(c.at("field"));
          },
          run_field_verify}},
        {"shear_blowup",
         {shear_default,
          [](const json& c) {
              require_n2(c, "shear_blowup");
              shear_lattice_from(c.at("lattice"));
              parse_bc(c.at("boundary").get<std::string>());
              parse_pressure(c.at("pressure").get<std::string>());
              quad_from(c.at("quadrature"));
          },
          run_shear}},
        {"poisson_blowup", {poisson_default, [](const json& c) { poisson_from(c); }, run_poisson}},
        {"besov_equivalence",
         {besov_default, check_besov, run_besov}},
        {"lemma26_check", {lemma26_default, [](const json& c) { quad_from(c.at("quadrature")); }, run_lemma26}},
        {"p0kn_bound",
         {p0kn_default,
          [](const json& c) {
              require_n2(c, "p0kn_bound");
              for (double q : numbers(c, "qs")) check_q(q, "each q");
              field_from(c.at("field"));
          },
          run_p0kn}},
    };
    return m;
}

const Entry& entry(const std::string& exp) {
    auto it = registry().find(exp);
    if (it == registry().end()) throw ConfigError("unknown experiment '" + exp + "'");
    return it->second;
}

}  // namespace

void Table::add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw DomainError("table row width does not match the header");
    rows.push_back(std::move(row));
}

std::string Table::csv() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += v[i];
        }
        s += '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return s;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool ExperimentResult::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

json ExperimentResult::summary(const json& config, double wall_seconds) const {
    json v = json::array();
    for (const auto& d : verdicts)
        v.push_back({{"name", d.name}, {"pass", d.pass}, {"value", d.value}, {"relation", d.relation},
                     {"threshold", d.threshold}});
    return {{"experiment", experiment}, {"config", config},  {"verdicts", v},
            {"passed", passed()},       {"results", results}, {"wall_time_seconds", wall_seconds}};
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, e] : registry()) v.push_back(k);
        return v;
    }();
    return names;
}

json default_config(const std::string& experiment) { return entry(experiment).defaults(); }

void validate_config(const std::string& experiment, const json& config) {
    const auto& e = entry(experiment);
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    check_schema(e.defaults(), config, "");
    if (config.at("experiment").get<std::string>() != experiment)
        throw ConfigError("config is for experiment '" + config.at("experiment").get<std::string>() + "'");
    int n = integer(config, "n");
    if (n != 2 && n != 3) throw ConfigError("n must be 2 or 3");
    check_q(number(config, "q"), "q");
    double alpha = number(config, "alpha");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
    integer(config, "seed");
    try {
        e.check(config);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ConfigError(ex.what());
    }
}

ExperimentResult run_experiment(const std::string& experiment, const json& config) {
    validate_config(experiment, config);
    auto r = entry(experiment).run(config);
    r.experiment = experiment;
    return r;
}

std::filesystem::path write_outputs(const ExperimentResult& result, const json& config,
                                    const std::filesystem::path& out, double wall_seconds) {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    std::filesystem::path dir = out / (result.experiment + "-" + stamp);
    for (int i = 1; std::filesystem::exists(dir); ++i)
        dir = out / (result.experiment + "-" + stamp + "-" + std::to_string(i));
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "table.csv");
        f << result.table.csv();
        if (!f) throw std::runtime_error("cannot write " + (dir / "table.csv").string());
    }
    {
        std::ofstream f(dir / "summary.json");
        f << result.summary(config, wall_seconds).dump(2) << '\n';
        if (!f) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    }
    return dir;
}

}  // namespace stokes
