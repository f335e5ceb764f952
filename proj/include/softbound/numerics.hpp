#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace softbound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

// Set whenever a sum of exponentials saturates to +inf. Thread-local so
// concurrent evaluations do not race; callers poll and clear it.
inline bool &overflow_flag()
{
    thread_local bool flag = false;
    return flag;
}

} // namespace detail

inline bool overflow_seen() { return detail::overflow_flag(); }
inline void clear_overflow() { detail::overflow_flag() = false; }

inline void require_finite(std::span<const double> x, const char *what)
{
    for (double v : x)
        if (!std::isfinite(v))
            throw std::domain_error(std::string(what) + ": non-finite entry");
}

/// Sum of exponentials, sum_j e^{x_j}. Saturates to +inf on overflow and
/// flags the event instead of throwing.
inline double se(std::span<const double> x)
{
    require_finite(x, "se");
    double sum = 0.0;
    for (double v : x)
        sum += std::exp(v);
    if (std::isinf(sum))
        detail::overflow_flag() = true;
    return sum;
}

/// Log-sum-exp, evaluated max-shifted so that large inputs do not overflow.
/// Satisfies max(x) <= lse(x) <= max(x) + log K.
inline double lse(std::span<const double> x)
{
    require_finite(x, "lse");
    double m = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (double v : x)
        sum += std::exp(v - m);
    return m + std::log(sum);
}

/// Softmax via the max-shifted reciprocal form 1 / sum_j e^{x_j - x_k}.
inline std::vector<double> softmax(std::span<const double> x)
{
    if (x.size() < 2)
        throw std::invalid_argument("softmax: need at least two logits");
    require_finite(x, "softmax");
    double m = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    std::vector<double> p(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        p[j] = std::exp(x[j] - m);
        sum += p[j];
    }
    for (double &v : p)
        v /= sum;
    return p;
}

/// Slope (e^u - e^l) / (u - l) of the chord of exp over [l, u]; the
/// degenerate interval l = u yields the derivative e^l. expm1 keeps the
/// ratio accurate for narrow intervals.
inline double chord_slope(double l, double u)
{
    double d = u - l;
    if (d == 0.0)
        return std::exp(l);
    return std::exp(l) * (std::expm1(d) / d);
}

/// Chord of exp over [l, u] evaluated at x in [l, u], as a convex
/// combination of the endpoint values; e^l for a degenerate interval.
inline double chord_value(double x, double l, double u)
{
    double d = u - l;
    if (d == 0.0)
        return std::exp(l);
    double w_hi = (x - l) / d;
    double w_lo = (u - x) / d;
    return w_lo * std::exp(l) + w_hi * std::exp(u);
}

/// Chordal upper bound on se(x) over the box [lo, hi]: each exponential is
/// replaced by its chord. Degenerate components contribute e^{lo_j}.
inline double se_chord(std::span<const double> x, std::span<const double> lo,
                       std::span<const double> hi)
{
    if (x.size() != lo.size() || x.size() != hi.size())
        throw std::invalid_argument("se_chord: size mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        constexpr double slack = 1e-9;
        double pad = slack * std::max(1.0, std::max(std::abs(lo[j]), std::abs(hi[j])));
        if (x[j] < lo[j] - pad || x[j] > hi[j] + pad)
            throw std::domain_error("se_chord: point outside box");
        sum += chord_value(std::clamp(x[j], lo[j], hi[j]), lo[j], hi[j]);
    }
    if (std::isinf(sum))
        detail::overflow_flag() = true;
    return sum;
}

} // namespace softbound
