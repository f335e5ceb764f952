#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "softbound/box.hpp"
#include "softbound/rng.hpp"

namespace test_util {

/// Relative closeness with max(1, |value|) scaling, the comparison used
/// throughout for inequality assertions.
inline bool rel_close(double a, double b, double tol)
{
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= tol * scale;
}

/// a <= b up to scaled tolerance.
inline bool leq_tol(double a, double b, double tol)
{
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return a <= b + tol * scale;
}

inline softbound::Box random_box(softbound::Xoshiro256pp &rng, std::size_t k,
                                 double min_width = 0.01, double max_width = 4.0,
                                 double center_range = 3.0)
{
    std::vector<double> lo(k), hi(k);
    for (std::size_t j = 0; j < k; ++j) {
        double c = rng.uniform(-center_range, center_range);
        double w = rng.uniform(min_width, max_width);
        lo[j] = c - 0.5 * w;
        hi[j] = c + 0.5 * w;
    }
    return softbound::Box(std::move(lo), std::move(hi));
}

inline std::vector<double> random_point(const softbound::Box &box, softbound::Xoshiro256pp &rng)
{
    std::vector<double> x(box.size());
    for (std::size_t j = 0; j < box.size(); ++j)
        x[j] = rng.uniform(box.lower[j], box.upper[j]);
    return x;
}

} // namespace test_util
