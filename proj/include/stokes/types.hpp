#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "stokes/errors.hpp"

namespace stokes {

constexpr int kMaxDim = 3;

struct SpaceTimePoint {
    std::vector<double> xprime;  // length n-1
    double xn = 0.0;
    double t = 0.0;
    int n = 2;

    SpaceTimePoint() = default;
    SpaceTimePoint(std::vector<double> xp, double xn_, double t_)
        : xprime(std::move(xp)), xn(xn_), t(t_), n(static_cast<int>(xprime.size()) + 1) {
        validate();
    }

    void validate() const {
        if (n < 2 || n > kMaxDim) throw DomainError("dimension n must be 2 or 3");
        if (static_cast<int>(xprime.size()) != n - 1) throw DomainError("xprime must have n-1 entries");
        if (!(xn >= 0.0)) throw DomainError("xn must be >= 0");
    }

    // Full coordinate vector (x', x_n).
    std::vector<double> full() const {
        std::vector<double> x(xprime);
        x.push_back(xn);
        return x;
    }
};

struct MultiIndexDeriv {
    int m = 0;           // time derivatives
    std::vector<int> l;  // spatial orders per coordinate (may be shorter than n: missing = 0)

    MultiIndexDeriv() = default;
    MultiIndexDeriv(int m_, std::vector<int> l_) : m(m_), l(std::move(l_)) { validate(); }

    void validate() const {
        if (m < 0) throw DomainError("negative time-derivative order");
        for (int v : l)
            if (v < 0) throw DomainError("negative spatial-derivative order");
    }
    int at(int i) const { return i < static_cast<int>(l.size()) ? l[i] : 0; }
    int spatial_order() const {
        int s = 0;
        for (int v : l) s += v;
        return s;
    }
};

struct TruncationPolicy {
    double decay_factor = 40.0;
    double alpha_factor = 40.0;
    double point(double decay_scale, double alpha) const;
};

struct QuadratureSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;
    TruncationPolicy truncation{};
    std::vector<double> pv_epsilon_sequence{1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};

    void validate() const;
};

struct KernelValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

}  // namespace stokes
