// Acceptance gate: one PASS/FAIL line per criterion; thresholds are fixed here.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "stokes/experiments.hpp"
#include "stokes/kernels.hpp"
#include "stokes/parallel.hpp"
#include "stokes/quadrature.hpp"
#include "stokes/special.hpp"

using namespace stokes;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double result(const ExperimentResult& r, const char* key) { return r.results.at(key).get<double>(); }

// 1. Heat kernel mass and heat-equation residual of the analytic derivatives.
Outcome special_functions() {
    auto t0 = std::chrono::steady_clock::now();
    QuadratureSpec s;
    s.abs_tol = 1e-14;
    s.rel_tol = 1e-13;
    double worst_mass = 0.0;
    for (int n = 1; n <= 3; ++n)
        for (double t : {0.1, 1.0}) {
            double R = 40.0 * std::sqrt(t);
            double surf = n == 1 ? 2.0 : (n == 2 ? 2.0 * kPi : 4.0 * kPi);
            auto f = [&](double r) {
                std::vector<double> x(n, 0.0);
                x[0] = r;
                return surf * std::pow(r, n - 1) * heat_kernel(x, t);
            };
            double m = integrate_checked(f, 0.0, R, s, {std::sqrt(t), 4 * std::sqrt(t)}).value;
            double tail = surf * std::pow(R, n) * std::exp(-R * R / (4 * t));
            worst_mass = std::max(worst_mass, std::abs(m - 1.0) + tail);
        }
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), ut(0.05, 2.0);
    double worst_res = 0.0;
    for (int i = 0; i < 100; ++i) {
        int n = 1 + i % 3;
        std::vector<double> x(n);
        for (auto& v : x) v = ux(rng);
        double t = ut(rng);
        double dt = heat_kernel_deriv(x, t, MultiIndexDeriv(1, {}));
        double lap = 0.0, scale = std::abs(dt);
        for (int k = 0; k < n; ++k) {
            std::vector<int> l(n, 0);
            l[k] = 2;
            double v = heat_kernel_deriv(x, t, MultiIndexDeriv(0, l));
            lap += v;
            scale = std::max(scale, std::abs(v));
        }
        worst_res = std::max(worst_res, std::abs(dt - lap) / scale);
    }
    double sec = seconds_since(t0);
    return {worst_mass <= 1e-8 && worst_res <= 1e-10 && sec < 10.0,
            fmt("mass error %.2e (<= 1e-8), heat residual %.2e (<= 1e-10), %.1f s (< 10)", worst_mass, worst_res, sec)};
}

// 2. Gaussian-singular principal value at n = 2, 3.
Outcome gaussian_singular() {
    auto t0 = std::chrono::steady_clock::now();
    double spread = 0.0, oracle = 0.0;
    for (int n : {2, 3}) {
        auto cfg = default_config("lemma26_check");
        cfg["n"] = n;
        auto r = run_experiment("lemma26_check", cfg);
        spread = std::max(spread, result(r, "worst_spread"));
        oracle = std::max(oracle, result(r, "worst_oracle_rel_diff"));
    }
    double sec = seconds_since(t0);
    return {spread <= 10.0 && oracle <= 1e-4 && sec < 120.0,
            fmt("spread %.3g (<= 10), oracle diff %.2e (<= 1e-4), %.1f s (< 120)", spread, oracle, sec)};
}

// 3. Two-path decompositions of d_n J_1 and d_n K_2 (tangential derivative applied to both sides).
Outcome decompositions() {
    auto t0 = std::chrono::steady_clock::now();
    QuadratureSpec spec;
    spec.abs_tol = 1e-14;
    spec.rel_tol = 1e-12;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), un(0.0, 1.5), ut(0.05, 2.0);
    const double alpha = 1.0;
    double w1 = 0.0, w2 = 0.0;
    auto D = [](int m, std::vector<int> l) { return MultiIndexDeriv(m, std::move(l)); };
    for (int s = 0; s < 50; ++s) {
        SpaceTimePoint p({ux(rng)}, un(rng), ut(rng));
        double lhs1 = J_kernel(1, p, alpha, spec, D(0, {1, 1})).value;
        double rhs1 = -K_kernel(1, p, alpha, spec, D(0, {1})).value + alpha * J_kernel(1, p, alpha, spec, D(0, {1})).value -
                      K_kernel(2, p, alpha, spec, D(0, {1})).value;
        w1 = std::max(w1, std::abs(lhs1 - rhs1) / std::max(std::abs(lhs1), 1e-12));
        double lhs2 = K_kernel(2, p, alpha, spec, D(0, {1, 1})).value;
        double rhs2 = 0.5 * heat_kernel_deriv(p.full(), p.t, D(0, {1, 0})) +
                      alpha * K_kernel(2, p, alpha, spec, D(0, {1})).value - K_kernel(3, p, alpha, spec, D(0, {1})).value;
        w2 = std::max(w2, std::abs(lhs2 - rhs2) / std::max(std::abs(lhs2), 1e-12));
    }
    double sec = seconds_since(t0);
    return {w1 <= 1e-6 && w2 <= 1e-6 && sec < 300.0,
            fmt("J1 path %.2e, K2 path %.2e (<= 1e-6), %.1f s (< 300)", w1, w2, sec)};
}

Outcome decay() {
    auto t0 = std::chrono::steady_clock::now();
    auto r = run_experiment("kernel_decay", default_config("kernel_decay"));
    double drift = result(r, "worst_drift");
    double sec = seconds_since(t0);
    return {drift <= 0.1 && sec < 900.0, fmt("worst constant drift %.3g (<= 0.1), %.0f s (< 900)", drift, sec)};
}

Outcome trace() {
    auto t0 = std::chrono::steady_clock::now();
    auto r = run_experiment("navier_trace", default_config("navier_trace"));
    auto rel = r.results.at("relative_errors").get<std::vector<double>>();
    bool dec = true;
    for (std::size_t i = 1; i < rel.size(); ++i) dec = dec && rel[i] < rel[i - 1];
    double sec = seconds_since(t0);
    return {dec && rel.size() == 6 && rel.back() <= 1e-3 && sec < 600.0,
            fmt("strictly decreasing %s, final %.3e (<= 1e-3), %.0f s (< 600)", dec ? "yes" : "no", rel.back(), sec)};
}

Outcome field_verify() {
    auto r = run_experiment("field_verify", default_config("field_verify"));
    double od = result(r, "divergence_order"), os = result(r, "stokes_order");
    double c1 = result(r, "control_random_divergence"), c2 = result(r, "control_random_stokes"),
           c3 = result(r, "control_pressure_x1");
    double cmin = std::min({c1, c2, c3});
    return {od >= 2.0 && os >= 1.0 && cmin >= 0.1,
            fmt("divergence order %.2f (>= 2), Stokes order %.2f (>= 1), smallest control %.3g (>= 0.1)", od, os, cmin)};
}

Outcome p0kn() {
    auto r = run_experiment("p0kn_bound", default_config("p0kn_bound"));
    double s = result(r, "worst_spread");
    return {s <= 2.0, fmt("worst ratio spread over x_n %.3f (<= 2) for 3 data, q in {1.5, 2, 4}", s)};
}

Outcome besov() {
    auto t0 = std::chrono::steady_clock::now();
    auto r = run_experiment("besov_equivalence", default_config("besov_equivalence"));
    double s = result(r, "worst_spread"), c = result(r, "covariance_error");
    double sec = seconds_since(t0);
    return {s <= 50.0 && c <= 1e-9 && sec < 300.0,
            fmt("bracket spread %.3g (<= 50), covariance %.2e (<= 1e-9), %.1f s (< 300)", s, c, sec)};
}

Outcome shear() {
    auto t0 = std::chrono::steady_clock::now();
    auto r = run_experiment("shear_blowup", default_config("shear_blowup"));
    double p = result(r, "theta_exponent"), g = result(r, "min_growth"), sr = result(r, "sup_ratio"),
           pl = result(r, "control_plateau_spread");
    double sec = seconds_since(t0);
    bool ok = std::abs(p + 0.5) <= 0.05 && g >= 1.15 && sr <= 2.0 && pl <= 0.05 && sec < 300.0;
    return {ok, fmt("theta exponent %.4f (-0.5 +- 0.05), min growth %.4f (>= 1.15), sup ratio %.3f (<= 2), "
                    "control spread %.4f (<= 0.05), %.1f s (< 300)",
                    p, g, sr, pl, sec)};
}

Outcome poisson() {
    auto t0 = std::chrono::steady_clock::now();
    auto r = run_experiment("poisson_blowup", default_config("poisson_blowup"));
    bool mono = r.results.at("monotone").get<bool>(), plateau = r.results.at("plateau").get<bool>();
    double drift = result(r, "sup_drift"), rem = result(r, "remainder_ratio"), c = result(r, "c_fit");
    double sec = seconds_since(t0);
    bool ok = mono && !plateau && drift <= 0.1 && rem <= 3.0 && sec < 3600.0;
    return {ok, fmt("monotone %s, plateau %s, sup drift %.4f (<= 0.1), remainder ratio %.3f (<= 3), c = %.4f "
                    "(4 alpha = 4), %.0f s (< 3600)",
                    mono ? "yes" : "no", plateau ? "yes" : "no", drift, rem, c, sec)};
}

// Reduced configurations so that every experiment runs twice within minutes.
json reduced(const std::string& exp) {
    json c = default_config(exp);
    if (exp == "kernel_decay") {
        c["lattice"]["n_t"] = 2;
        c["lattice"]["n_xi"] = 7;
        c["lattice"]["n_theta"] = 5;
        c["lattice"]["n_tail"] = 2;
        c["max_total_order"] = 1;
    } else if (exp == "navier_trace") {
        c["data"] = {{"radius", 2.0},    {"duration", 4.0},   {"power", 6}, {"components", {1.0, -0.5}},
                     {"grid_space", 0.25}, {"grid_time", 0.25}};
        c["k_max"] = 5;
        c["field"]["space_cap"] = 0.5;
        c["field"]["time_cap"] = 0.5;
    } else if (exp == "field_verify") {
        c["lattice"]["half"] = 2;
        c["field"]["gauss_order"] = 8;
        c["field"]["space_cap"] = 1.0;
        c["field"]["time_cap"] = 0.5;
    } else if (exp == "shear_blowup") {
        c["lattice"]["k_max"] = 6;
        c["lattice"]["y_per_octave"] = 2;
        c["lattice"]["s_per_octave"] = 2;
        c["lattice"]["s_min"] = 1e-6;
        c["theta_fit"]["k_hi"] = 8;
    } else if (exp == "poisson_blowup") {
        c["lattice"]["k_max"] = 4;
        c["lattice"]["xn_per_octave"] = 2;
        c["lattice"]["nx"] = 5;
        c["lattice"]["nt_uniform"] = 5;
        c["lattice"]["s_per_octave"] = 2;
        c["lattice"]["s_min"] = 1e-4;
        c["far_radii"] = {12.0};
    } else if (exp == "besov_equivalence") {
        c["qs"] = {2.0};
    } else if (exp == "p0kn_bound") {
        c["k_max"] = 4;
        c["qs"] = {2.0};
        c["output_grid"]["hx"] = 0.25;
        c["output_grid"]["ht"] = 0.125;
    }
    return c;
}

Outcome reproducibility() {
    std::string bad;
    int previous = num_threads();
    for (const auto& exp : experiment_names()) {
        std::string a, b;
        try {
            auto cfg = reduced(exp);
            set_num_threads(1);
            a = run_experiment(exp, cfg).table.csv();
            set_num_threads(8);
            b = run_experiment(exp, cfg).table.csv();
        } catch (const std::exception& e) {
            a = b = "";
            std::fprintf(stderr, "%s: %s\n", exp.c_str(), e.what());
        }
        if (a != b || a.empty()) bad += (bad.empty() ? "" : ", ") + exp;
    }
    set_num_threads(previous);
    return {bad.empty(), bad.empty() ? fmt("%zu experiments bit-identical at 1 and 8 threads", experiment_names().size())
                                     : "differs: " + bad};
}

}  // namespace

// Optional arguments restrict the run to the listed criterion ids.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> all{
        {1, "special functions", special_functions},
        {2, "gaussian-singular principal value", gaussian_singular},
        {3, "kernel decompositions", decompositions},
        {4, "decay conformance", decay},
        {5, "navier trace", trace},
        {6, "field verification", field_verify},
        {7, "normal Poisson kernel operator ratios", p0kn},
        {8, "besov equivalence", besov},
        {9, "shear blow-up", shear},
        {10, "poisson blow-up", poisson},
        {11, "reproducibility", reproducibility},
    };
    int failed = 0, ran = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
