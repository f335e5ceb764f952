#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace softbound {

/// Axis-aligned region [lower, upper] for logits or network inputs.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    Box() = default;
    Box(std::vector<double> lo, std::vector<double> hi)
        : lower(std::move(lo)), upper(std::move(hi))
    {
        validate();
    }

    std::size_t size() const { return lower.size(); }

    void validate() const
    {
        if (lower.size() != upper.size())
            throw std::invalid_argument("Box: lower/upper size mismatch");
        if (lower.size() < 2)
            throw std::invalid_argument("Box: need at least two coordinates");
        for (std::size_t j = 0; j < lower.size(); ++j)
            if (!(lower[j] <= upper[j]))
                throw std::invalid_argument("Box: lower > upper");
    }

    double midpoint(std::size_t j) const { return 0.5 * (lower[j] + upper[j]); }
    double half_width(std::size_t j) const { return 0.5 * (upper[j] - lower[j]); }

    std::vector<double> midpoints() const
    {
        std::vector<double> m(size());
        for (std::size_t j = 0; j < size(); ++j)
            m[j] = midpoint(j);
        return m;
    }

    bool contains(std::span<const double> x, double pad = 1e-9) const
    {
        if (x.size() != size())
            return false;
        for (std::size_t j = 0; j < size(); ++j) {
            double s = pad * std::max(1.0, std::max(std::abs(lower[j]), std::abs(upper[j])));
            if (x[j] < lower[j] - s || x[j] > upper[j] + s)
                return false;
        }
        return true;
    }
};

/// Bounds on difference variables x_j - x_anchor; the anchor entry is
/// pinned to (0, 0).
struct DiffBox {
    std::size_t anchor = 0;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t size() const { return lower.size(); }

    /// Differences w.r.t. the anchor coordinate of a full point x.
    std::vector<double> differences(std::span<const double> x) const
    {
        if (x.size() != size())
            throw std::invalid_argument("DiffBox: point size mismatch");
        std::vector<double> d(x.size());
        for (std::size_t j = 0; j < x.size(); ++j)
            d[j] = x[j] - x[anchor];
        d[anchor] = 0.0;
        return d;
    }
};

/// Always-valid difference bounds derived from a box:
/// lower_j = l_j - u_a, upper_j = u_j - l_a, with (0, 0) at the anchor.
/// Externally tighter DiffBox values may be substituted wherever one is
/// accepted.
inline DiffBox diff_box(const Box &box, std::size_t anchor)
{
    if (anchor >= box.size())
        throw std::invalid_argument("diff_box: anchor out of range");
    DiffBox d;
    d.anchor = anchor;
    d.lower.resize(box.size());
    d.upper.resize(box.size());
    for (std::size_t j = 0; j < box.size(); ++j) {
        d.lower[j] = box.lower[j] - box.upper[anchor];
        d.upper[j] = box.upper[j] - box.lower[anchor];
    }
    d.lower[anchor] = 0.0;
    d.upper[anchor] = 0.0;
    return d;
}

/// Index of the largest coordinate by interval midpoint, ties broken to
/// the smallest index.
inline std::size_t argmax_midpoint(const Box &box)
{
    std::size_t best = 0;
    double best_val = box.lower[0] + box.upper[0];
    for (std::size_t j = 1; j < box.size(); ++j) {
        double v = box.lower[j] + box.upper[j];
        if (v > best_val) {
            best = j;
            best_val = v;
        }
    }
    return best;
}

} // namespace softbound
