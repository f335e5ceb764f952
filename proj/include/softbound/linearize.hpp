#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "softbound/bounds.hpp"
#include "softbound/box.hpp"
#include "softbound/numerics.hpp"

namespace softbound {

/// One affine lower or upper bound coeffs . x + offset on a softmax
/// output, valid over the box it was generated from.
struct AffineBound {
    std::vector<double> coeffs;
    double offset = 0.0;
    Side side = Side::Lower;
    std::size_t output_index = 0;

    double value(std::span<const double> x) const
    {
        double v = 0.0;
        for (std::size_t j = 0; j < coeffs.size(); ++j)
            v += coeffs[j] * x[j];
        return v + offset;
    }
};

/// Where to linearize a nonlinear bound: kind, tangent point, box, output.
struct TangentSpec {
    BoundKind kind = BoundKind::ErLo;
    std::vector<double> point;
    Box box;
    std::size_t output_index = 0;
};

namespace detail {

// Analytic gradients in internal coordinates (target output at index 0).
// The lse-family lower bounds are differentiated in a frame shifted by the
// largest upper bound, which leaves the gradient unchanged but avoids
// overflow.

inline std::vector<double> grad_er_lower(std::span<const double> y, const BoundContext &ctx)
{
    const DiffBox &d = ctx.tilde();
    double value = er_lower_raw(d.differences(y), d);
    std::vector<double> g(y.size(), 0.0);
    double total = 0.0;
    for (std::size_t j = 1; j < y.size(); ++j) {
        double slope = chord_slope(d.lower[j], d.upper[j]);
        g[j] = -value * value * slope;
        total += slope;
    }
    g[0] = value * value * total;
    return g;
}

inline std::vector<double> grad_er_upper(std::span<const double> y, const BoundContext &ctx)
{
    const ConstBounds &cb = ctx.constant_bounds();
    std::vector<double> xt = ctx.tilde().differences(y);
    std::vector<double> g(y.size(), 0.0);
    double pp = cb.p_hi * cb.p_lo;
    double sum = 0.0;
    for (std::size_t j = 1; j < y.size(); ++j) {
        double e = std::exp(xt[j]);
        g[j] = -pp * e;
        sum += e;
    }
    g[0] = pp * sum;
    return g;
}

// d/dx of exp(x[a]) / se_chord(x; lo, hi) for a point expressed in any
// anchor's difference coordinates (or the raw ones). `skip` marks the
// degenerate anchor coordinate of a difference box (no chord there).
inline std::vector<double> grad_exp_over_chord(std::span<const double> x,
                                               std::span<const double> lo,
                                               std::span<const double> hi, std::size_t a,
                                               std::size_t skip, bool has_skip)
{
    double c = hi[0];
    for (double v : hi)
        c = std::max(c, v);
    double denom = 0.0;
    std::vector<double> slope(x.size(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        double xc = std::clamp(x[j], lo[j], hi[j]) - c;
        denom += chord_value(xc, lo[j] - c, hi[j] - c);
        slope[j] = chord_slope(lo[j] - c, hi[j] - c);
    }
    double s = 1.0 / denom;
    double e = std::exp(x[a] - c);
    std::vector<double> g(x.size(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (has_skip && j == skip)
            continue;
        g[j] = -e * s * s * slope[j];
    }
    g[a] += e * s;
    return g;
}

inline std::vector<double> grad_lse_lower(std::span<const double> y, const BoundContext &ctx)
{
    const Box &box = ctx.permuted_box();
    return grad_exp_over_chord(y, box.lower, box.upper, 0, 0, false);
}

inline std::vector<double> grad_lse_star_lower(std::span<const double> y, const BoundContext &ctx)
{
    if (ctx.jstar() == 0)
        return grad_er_lower(y, ctx);
    DiffBox dot = diff_box(ctx.permuted_box(), ctx.jstar());
    std::vector<double> yd = dot.differences(y);
    std::vector<double> g = grad_exp_over_chord(yd, dot.lower, dot.upper, 0, dot.anchor, true);
    // chain rule through the differences: the anchor coordinate picks up
    // minus the sum of the others
    double sum = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
        if (j != dot.anchor)
            sum += g[j];
    g[dot.anchor] = -sum;
    return g;
}

inline std::vector<double> grad_lse_upper(std::span<const double> y, const BoundContext &ctx)
{
    const DiffBox &d = ctx.tilde();
    double w = lse(d.upper) - lse(d.lower);
    // (p_hi - p_lo) / w with the exact degenerate limit p_hi as w -> 0
    double kappa = w == 0.0 ? ctx.constant_bounds().p_hi
                            : ctx.constant_bounds().p_hi * (-std::expm1(-w)) / w;
    std::vector<double> sm = softmax(y);
    std::vector<double> g(y.size(), 0.0);
    for (std::size_t j = 0; j < y.size(); ++j)
        g[j] = -kappa * sm[j];
    g[0] += kappa;
    return g;
}

} // namespace detail

/// Analytic gradient of a nonlinear bound at x; supports ErLo, ErHi,
/// LseLo, LseStarLo, LseHi.
inline std::vector<double> grad(const BoundContext &ctx, BoundKind kind,
                                std::span<const double> x)
{
    std::vector<double> y = ctx.permuted(x);
    if (!ctx.permuted_box().contains(y))
        throw std::domain_error("grad: point outside box");
    std::vector<double> g;
    switch (kind) {
    case BoundKind::ErLo:
        g = detail::grad_er_lower(y, ctx);
        break;
    case BoundKind::ErHi:
        g = detail::grad_er_upper(y, ctx);
        break;
    case BoundKind::LseLo:
        g = detail::grad_lse_lower(y, ctx);
        break;
    case BoundKind::LseStarLo:
        g = detail::grad_lse_star_lower(y, ctx);
        break;
    case BoundKind::LseHi:
        g = detail::grad_lse_upper(y, ctx);
        break;
    default:
        throw std::invalid_argument("grad: kind has no tangent form");
    }
    std::swap(g[0], g[ctx.target()]);
    return g;
}

inline std::vector<double> grad(BoundKind kind, std::span<const double> x, const Box &box,
                                std::size_t target = 0)
{
    return grad(BoundContext(box, target), kind, x);
}

/// Tangent plane to a nonlinear bound at the given point. Supporting
/// hyperplane of a convex (concave) bound, hence itself a sound lower
/// (upper) bound over the box. Falls back to the constant bound if the
/// gradient is not finite.
inline AffineBound tangent_plane(const BoundContext &ctx, BoundKind kind,
                                 std::span<const double> point)
{
    AffineBound plane;
    plane.side = side_of(kind);
    plane.output_index = ctx.target();
    plane.coeffs = grad(ctx, kind, point);
    double v = ctx.value(kind, point);
    bool ok = std::isfinite(v);
    for (double c : plane.coeffs)
        ok = ok && std::isfinite(c);
    if (!ok) {
        detail::overflow_flag() = true;
        plane.coeffs.assign(point.size(), 0.0);
        plane.offset = plane.side == Side::Lower ? ctx.constant_bounds().p_lo
                                                 : ctx.constant_bounds().p_hi;
        return plane;
    }
    double dot = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j)
        dot += plane.coeffs[j] * point[j];
    plane.offset = v - dot;
    return plane;
}

inline AffineBound tangent_plane(const TangentSpec &spec)
{
    return tangent_plane(BoundContext(spec.box, spec.output_index), spec.kind, spec.point);
}

/// The linear bounds are already affine; this returns them in coefficient
/// form for LP assembly and bound propagation.
inline AffineBound lin_affine(const BoundContext &ctx, Side side)
{
    const DiffBox &d = ctx.tilde();
    const LinAux &aux = ctx.linear_aux();
    AffineBound ab;
    ab.side = side;
    ab.output_index = ctx.target();
    std::vector<double> g(d.size(), 0.0);
    double total = 0.0;
    for (std::size_t j = 1; j < d.size(); ++j) {
        double slope = side == Side::Lower
                           ? -chord_slope(d.lower[j], d.upper[j]) / (aux.t_q * aux.t_q)
                           : -(ctx.constant_bounds().p_lo / aux.q_lo_lin) * std::exp(aux.t[j]);
        g[j] = slope;
        total -= slope;
    }
    g[0] = total;
    std::swap(g[0], g[ctx.target()]);
    ab.coeffs = std::move(g);
    std::vector<double> mid = ctx.permuted_box().midpoints();
    std::swap(mid[0], mid[ctx.target()]);
    double v = ctx.value(side == Side::Lower ? BoundKind::LinLo : BoundKind::LinHi, mid);
    double dot = 0.0;
    for (std::size_t j = 0; j < mid.size(); ++j)
        dot += ab.coeffs[j] * mid[j];
    if (!std::isfinite(dot)) {
        detail::overflow_flag() = true;
        ab.coeffs.assign(mid.size(), 0.0);
        ab.offset = side == Side::Lower ? ctx.constant_bounds().p_lo : ctx.constant_bounds().p_hi;
        return ab;
    }
    ab.offset = v - dot;
    return ab;
}

inline AffineBound lin_affine(const Box &box, Side side, std::size_t target = 0)
{
    return lin_affine(BoundContext(box, target), side);
}

/// Central-difference gradient of `evaluate`, the verification oracle for
/// the analytic gradients. Steps are scaled per coordinate and clamped to
/// stay inside the box.
inline std::vector<double> finite_diff_grad(BoundKind kind, std::span<const double> x,
                                            const Box &box, double h, std::size_t target = 0)
{
    BoundContext ctx(box, target);
    std::vector<double> g(x.size(), 0.0);
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
        double step = h * std::max(1.0, std::abs(x[j]));
        double hi = std::min(x[j] + step, box.upper[j]);
        double lo = std::max(x[j] - step, box.lower[j]);
        if (hi <= lo)
            continue;
        probe[j] = hi;
        double f_hi = ctx.value(kind, probe);
        probe[j] = lo;
        double f_lo = ctx.value(kind, probe);
        probe[j] = x[j];
        g[j] = (f_hi - f_lo) / (hi - lo);
    }
    return g;
}

} // namespace softbound
