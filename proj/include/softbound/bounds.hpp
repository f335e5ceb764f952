#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "softbound/box.hpp"
#include "softbound/numerics.hpp"

namespace softbound {

enum class Side : std::uint8_t { Lower, Upper };

/// The closed-form bound families on one softmax output over a box.
enum class BoundKind : std::uint8_t {
    ConstLo,
    ConstHi,
    LinLo,
    LinHi,
    ErLo,
    ErHi,
    LseLo,
    LseStarLo,
    Lse2Lo,
    LsePrimeLo,
    LseHi,
};

inline constexpr BoundKind kAllKinds[] = {
    BoundKind::ConstLo,  BoundKind::ConstHi,    BoundKind::LinLo,
    BoundKind::LinHi,    BoundKind::ErLo,       BoundKind::ErHi,
    BoundKind::LseLo,    BoundKind::LseStarLo,  BoundKind::Lse2Lo,
    BoundKind::LsePrimeLo, BoundKind::LseHi,
};

inline constexpr bool is_lower(BoundKind k)
{
    switch (k) {
    case BoundKind::ConstHi:
    case BoundKind::LinHi:
    case BoundKind::ErHi:
    case BoundKind::LseHi:
        return false;
    default:
        return true;
    }
}

inline constexpr Side side_of(BoundKind k)
{
    return is_lower(k) ? Side::Lower : Side::Upper;
}

inline constexpr std::string_view kind_name(BoundKind k)
{
    switch (k) {
    case BoundKind::ConstLo: return "const_lo";
    case BoundKind::ConstHi: return "const_hi";
    case BoundKind::LinLo: return "lin_lo";
    case BoundKind::LinHi: return "lin_hi";
    case BoundKind::ErLo: return "er_lo";
    case BoundKind::ErHi: return "er_hi";
    case BoundKind::LseLo: return "lse_lo";
    case BoundKind::LseStarLo: return "lse_star_lo";
    case BoundKind::Lse2Lo: return "lse2_lo";
    case BoundKind::LsePrimeLo: return "lse_prime_lo";
    case BoundKind::LseHi: return "lse_hi";
    }
    return "?";
}

inline std::optional<BoundKind> parse_kind(std::string_view name)
{
    for (BoundKind k : kAllKinds)
        if (kind_name(k) == name)
            return k;
    return std::nullopt;
}

/// x-independent extremes of a softmax output over a difference box.
struct ConstBounds {
    double p_lo = 0.0;
    double p_hi = 1.0;
};

/// Tangent abscissas and reciprocal-input range backing the linear bounds.
struct LinAux {
    std::vector<double> t; // per coordinate; entry at the anchor unused
    double q_lo_lin = 0.0;
    double q_hi_lin = 0.0;
    double t_q = 0.0;
};

/// Range of lse(x_2..x_K) - x_1 used by the alternative lse lower bound.
struct LsePrimeAux {
    double v_lo = 0.0;
    double v_hi = 0.0;
};

/// Constant bounds p_lo = 1/se(upper), p_hi = 1/se(lower) on the anchor's
/// softmax output.
inline ConstBounds const_bounds(const DiffBox &d)
{
    ConstBounds cb;
    cb.p_lo = 1.0 / se(d.upper);
    cb.p_hi = 1.0 / se(d.lower);
    return cb;
}

/// Tangent abscissa for the linear lower bound on e^{x} over [l, u]:
/// the chord-slope point, capped at l + 1 so the bound stays non-negative.
/// Degenerate intervals use the endpoint itself.
inline double lin_tangent_abscissa(double l, double u)
{
    double d = u - l;
    if (d == 0.0)
        return l;
    double log_slope = l + std::log(std::expm1(d) / d);
    return std::min(log_slope, l + 1.0);
}

inline LinAux lin_aux(const DiffBox &d)
{
    LinAux aux;
    aux.t.resize(d.size());
    double q_lo = 1.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (j == d.anchor) {
            aux.t[j] = 0.0;
            continue;
        }
        aux.t[j] = lin_tangent_abscissa(d.lower[j], d.upper[j]);
        q_lo += std::exp(aux.t[j]) * (d.lower[j] - aux.t[j] + 1.0);
    }
    aux.q_lo_lin = q_lo;
    aux.q_hi_lin = se(d.upper);
    aux.t_q = std::max(std::sqrt(aux.q_lo_lin * aux.q_hi_lin), aux.q_hi_lin / 2.0);
    return aux;
}

namespace detail {

inline void check_in_diff_box(std::span<const double> xt, const DiffBox &d)
{
    for (std::size_t j = 0; j < xt.size(); ++j) {
        double pad = 1e-9 * std::max({1.0, std::abs(d.lower[j]), std::abs(d.upper[j])});
        if (xt[j] < d.lower[j] - pad || xt[j] > d.upper[j] + pad)
            throw std::domain_error("bound evaluation: point outside box");
    }
}

inline double clamped(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

// Raw closed forms, all for the diff-box anchor's output. Callers apply
// the non-finite fallback.

inline double lin_lower_raw(std::span<const double> xt, const DiffBox &d, const LinAux &aux)
{
    double sebar = 0.0;
    for (std::size_t j = 0; j < xt.size(); ++j)
        sebar += chord_value(clamped(xt[j], d.lower[j], d.upper[j]), d.lower[j], d.upper[j]);
    return (1.0 / aux.t_q) * (2.0 - sebar / aux.t_q);
}

inline double lin_upper_raw(std::span<const double> xt, const DiffBox &d, const LinAux &aux,
                            double p_lo)
{
    double inner = 1.0;
    for (std::size_t j = 0; j < xt.size(); ++j) {
        if (j == d.anchor)
            continue;
        inner += std::exp(aux.t[j]) * (clamped(xt[j], d.lower[j], d.upper[j]) - aux.t[j] + 1.0);
    }
    return 1.0 / aux.q_lo_lin + p_lo - (p_lo / aux.q_lo_lin) * inner;
}

inline double er_lower_raw(std::span<const double> xt, const DiffBox &d)
{
    double sebar = 0.0;
    for (std::size_t j = 0; j < xt.size(); ++j)
        sebar += chord_value(clamped(xt[j], d.lower[j], d.upper[j]), d.lower[j], d.upper[j]);
    return 1.0 / sebar;
}

inline double er_upper_raw(std::span<const double> xt, const ConstBounds &cb)
{
    return cb.p_hi + cb.p_lo - cb.p_hi * cb.p_lo * se(xt);
}

// e^{x_a} / se_chord(x; l, u) evaluated in a frame shifted by the largest
// upper bound so that no exponential overflows.
inline double lse_lower_shifted(std::span<const double> x, std::span<const double> lo,
                                std::span<const double> hi, std::size_t a)
{
    double c = hi[0];
    for (double v : hi)
        c = std::max(c, v);
    double denom = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        denom += chord_value(clamped(x[j], lo[j], hi[j]) - c, lo[j] - c, hi[j] - c);
    return std::exp(x[a] - c) / denom;
}

inline double lse_upper_raw(std::span<const double> xt, const DiffBox &d, const ConstBounds &cb)
{
    double ll = lse(d.lower);
    double lu = lse(d.upper);
    if (lu == ll)
        return cb.p_hi; // degenerate box: softmax is constant
    double lx = lse(xt);
    double w_hi = (lu - lx) / (lu - ll);
    double w_lo = (lx - ll) / (lu - ll);
    return cb.p_hi * w_hi + cb.p_lo * w_lo;
}

inline double lse2_lower_raw(std::span<const double> xt, const DiffBox &d, const ConstBounds &cb)
{
    std::size_t j = d.anchor == 0 ? 1 : 0;
    double width = d.upper[j] - d.lower[j];
    if (width == 0.0)
        return cb.p_hi;
    double w = (clamped(xt[j], d.lower[j], d.upper[j]) - d.lower[j]) / width;
    return std::exp(w * std::log(cb.p_lo) + (1.0 - w) * std::log(cb.p_hi));
}

} // namespace detail

/// Linear bound (tangent/chord composition through the reciprocal) on the
/// anchor output, affine in the difference variables.
inline double bound_lin(std::span<const double> x, const DiffBox &d, const LinAux &aux, Side side)
{
    std::vector<double> xt = d.differences(x);
    detail::check_in_diff_box(xt, d);
    ConstBounds cb = const_bounds(d);
    double v = side == Side::Lower ? detail::lin_lower_raw(xt, d, aux)
                                   : detail::lin_upper_raw(xt, d, aux, cb.p_lo);
    if (!std::isfinite(v)) {
        detail::overflow_flag() = true;
        return side == Side::Lower ? cb.p_lo : cb.p_hi;
    }
    return v;
}

/// Nonlinear exponential-reciprocal bound on the anchor output: convex
/// below, concave above.
inline double bound_er(std::span<const double> x, const DiffBox &d, Side side)
{
    std::vector<double> xt = d.differences(x);
    detail::check_in_diff_box(xt, d);
    ConstBounds cb = const_bounds(d);
    double v = side == Side::Lower ? detail::er_lower_raw(xt, d)
                                   : detail::er_upper_raw(xt, cb);
    if (!std::isfinite(v)) {
        detail::overflow_flag() = true;
        return side == Side::Lower ? cb.p_lo : cb.p_hi;
    }
    return v;
}

enum class LseVariant : std::uint8_t { Lse, LseStar, Lse2, LsePrime };

inline LsePrimeAux lse_prime_aux(const Box &box, std::size_t target = 0)
{
    if (target != 0)
        throw std::invalid_argument("lse_prime_aux: permute the box so the target is index 0");
    std::span<const double> lo(box.lower), hi(box.upper);
    LsePrimeAux aux;
    aux.v_lo = lse(lo.subspan(1)) - box.upper[0];
    aux.v_hi = lse(hi.subspan(1)) - box.lower[0];
    return aux;
}

namespace detail {

inline double lse_prime_lower_raw(std::span<const double> x, const Box &box,
                                  const LsePrimeAux &aux, const ConstBounds &cb)
{
    if (aux.v_hi == aux.v_lo)
        return cb.p_hi;
    double log_phi = std::log(cb.p_hi);
    double log_plo = std::log(cb.p_lo);
    double a = (aux.v_hi * log_phi - aux.v_lo * log_plo) / (aux.v_hi - aux.v_lo);
    double b = (log_phi - log_plo) / (aux.v_hi - aux.v_lo);
    double c = box.upper[1];
    for (std::size_t j = 2; j < box.size(); ++j)
        c = std::max(c, box.upper[j]);
    double chord_sum = 0.0;
    for (std::size_t j = 1; j < box.size(); ++j)
        chord_sum += chord_value(clamped(x[j], box.lower[j], box.upper[j]) - c,
                                 box.lower[j] - c, box.upper[j] - c);
    double log_sum = c + std::log(chord_sum);
    return std::exp(a + b * (x[0] - log_sum));
}

} // namespace detail

/// Log-sum-exp family bounds; the target output is coordinate 0 of `box`.
/// `lse` and `lse_star` are lower bounds, as are `lse2` (K = 2 only) and
/// `lse_prime`; pass Side::Upper with variant `lse` for the upper bound.
inline double bound_lse(std::span<const double> x, const Box &box, LseVariant variant,
                        Side side = Side::Lower)
{
    if (!box.contains(x))
        throw std::domain_error("bound_lse: point outside box");
    DiffBox tilde = diff_box(box, 0);
    ConstBounds cb = const_bounds(tilde);
    double v = 0.0;
    if (side == Side::Upper) {
        if (variant != LseVariant::Lse)
            throw std::invalid_argument("bound_lse: only the lse variant has an upper side");
        std::vector<double> xt = tilde.differences(x);
        v = detail::lse_upper_raw(xt, tilde, cb);
    } else {
        switch (variant) {
        case LseVariant::Lse:
            v = detail::lse_lower_shifted(x, box.lower, box.upper, 0);
            break;
        case LseVariant::LseStar: {
            std::size_t js = argmax_midpoint(box);
            if (js == 0) {
                std::vector<double> xt = tilde.differences(x);
                v = detail::er_lower_raw(xt, tilde);
            } else {
                DiffBox dot = diff_box(box, js);
                std::vector<double> xd = dot.differences(x);
                v = detail::lse_lower_shifted(xd, dot.lower, dot.upper, 0);
            }
            break;
        }
        case LseVariant::Lse2: {
            if (box.size() != 2)
                throw std::invalid_argument("bound_lse: lse2 requires K = 2");
            std::vector<double> xt = tilde.differences(x);
            v = detail::lse2_lower_raw(xt, tilde, cb);
            break;
        }
        case LseVariant::LsePrime:
            v = detail::lse_prime_lower_raw(x, box, lse_prime_aux(box), cb);
            break;
        }
    }
    if (!std::isfinite(v)) {
        detail::overflow_flag() = true;
        return side == Side::Lower ? cb.p_lo : cb.p_hi;
    }
    return v;
}

/// Caches the per-box auxiliaries (difference boxes, constant bounds,
/// tangent abscissas) and dispatches bound evaluation for one target
/// output index. Immutable after construction; safe to share across
/// threads.
class BoundContext {
public:
    explicit BoundContext(const Box &box, std::size_t target = 0)
        : BoundContext(box, std::nullopt, target)
    {
    }

    /// `tilde` overrides the derived difference bounds when tighter ones
    /// are known externally; it must be anchored at the target.
    BoundContext(const Box &box, std::optional<DiffBox> tilde, std::size_t target)
        : target_(target), pbox_(box)
    {
        box.validate();
        if (target >= box.size())
            throw std::invalid_argument("BoundContext: target out of range");
        std::swap(pbox_.lower[0], pbox_.lower[target_]);
        std::swap(pbox_.upper[0], pbox_.upper[target_]);
        if (tilde) {
            if (tilde->anchor != target || tilde->size() != box.size())
                throw std::invalid_argument("BoundContext: DiffBox must be anchored at target");
            tilde_ = std::move(*tilde);
            std::swap(tilde_.lower[0], tilde_.lower[target_]);
            std::swap(tilde_.upper[0], tilde_.upper[target_]);
            tilde_.anchor = 0;
        } else {
            tilde_ = diff_box(pbox_, 0);
        }
        cb_ = const_bounds(tilde_);
        lin_ = lin_aux(tilde_);
        jstar_ = argmax_midpoint(pbox_);
        if (jstar_ != 0)
            star_ = diff_box(pbox_, jstar_);
        prime_ = lse_prime_aux(pbox_);
    }

    std::size_t dimension() const { return pbox_.size(); }
    std::size_t target() const { return target_; }
    /// Box in internal coordinates (target swapped to index 0).
    const Box &permuted_box() const { return pbox_; }
    const DiffBox &tilde() const { return tilde_; }
    const ConstBounds &constant_bounds() const { return cb_; }
    const LinAux &linear_aux() const { return lin_; }
    const LsePrimeAux &prime_aux() const { return prime_; }
    std::size_t jstar() const { return jstar_; }

    std::vector<double> permuted(std::span<const double> x) const
    {
        if (x.size() != pbox_.size())
            throw std::invalid_argument("BoundContext: point size mismatch");
        std::vector<double> y(x.begin(), x.end());
        std::swap(y[0], y[target_]);
        return y;
    }

    double value(BoundKind kind, std::span<const double> x) const
    {
        std::vector<double> y = permuted(x);
        if (!pbox_.contains(y))
            throw std::domain_error("BoundContext: point outside box");
        double v = raw_value(kind, y);
        if (!std::isfinite(v)) {
            detail::overflow_flag() = true;
            return is_lower(kind) ? cb_.p_lo : cb_.p_hi;
        }
        return v;
    }

private:
    double raw_value(BoundKind kind, std::span<const double> y) const
    {
        switch (kind) {
        case BoundKind::ConstLo:
            return cb_.p_lo;
        case BoundKind::ConstHi:
            return cb_.p_hi;
        case BoundKind::LinLo:
            return detail::lin_lower_raw(tilde_.differences(y), tilde_, lin_);
        case BoundKind::LinHi:
            return detail::lin_upper_raw(tilde_.differences(y), tilde_, lin_, cb_.p_lo);
        case BoundKind::ErLo:
            return detail::er_lower_raw(tilde_.differences(y), tilde_);
        case BoundKind::ErHi:
            return detail::er_upper_raw(tilde_.differences(y), cb_);
        case BoundKind::LseLo:
            return detail::lse_lower_shifted(y, pbox_.lower, pbox_.upper, 0);
        case BoundKind::LseStarLo:
            if (jstar_ == 0)
                return detail::er_lower_raw(tilde_.differences(y), tilde_);
            return detail::lse_lower_shifted(star_.differences(y), star_.lower, star_.upper, 0);
        case BoundKind::Lse2Lo:
            if (pbox_.size() != 2)
                throw std::invalid_argument("BoundContext: lse2 requires K = 2");
            return detail::lse2_lower_raw(tilde_.differences(y), tilde_, cb_);
        case BoundKind::LsePrimeLo:
            return detail::lse_prime_lower_raw(y, pbox_, prime_, cb_);
        case BoundKind::LseHi:
            return detail::lse_upper_raw(tilde_.differences(y), tilde_, cb_);
        }
        throw std::invalid_argument("BoundContext: unknown kind");
    }

    std::size_t target_;
    Box pbox_;
    DiffBox tilde_;
    DiffBox star_;
    ConstBounds cb_;
    LinAux lin_;
    LsePrimeAux prime_;
    std::size_t jstar_ = 0;
};

/// One-shot evaluation; prefer a BoundContext when evaluating many points
/// over the same box.
inline double evaluate(BoundKind kind, std::span<const double> x, const Box &box,
                       std::size_t target = 0)
{
    return BoundContext(box, target).value(kind, x);
}

} // namespace softbound
