#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stokes {

// Tree summation with a fixed split rule so the result depends only on the data order.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

inline double pairwise_sum(std::span<const double> v) { return pairwise_sum(v.data(), v.size()); }
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace stokes
