#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "softbound/bounds.hpp"
#include "softbound/box.hpp"
#include "softbound/linearize.hpp"
#include "softbound/lp.hpp"
#include "softbound/mlp.hpp"
#include "softbound/numerics.hpp"
#include "softbound/rng.hpp"

namespace softbound {

enum class ScoreRule : std::uint8_t { Nll, Brier };

inline constexpr std::string_view score_rule_name(ScoreRule r)
{
    return r == ScoreRule::Nll ? "nll" : "brier";
}

inline std::optional<ScoreRule> parse_score_rule(std::string_view s)
{
    if (s == "nll")
        return ScoreRule::Nll;
    if (s == "brier")
        return ScoreRule::Brier;
    return std::nullopt;
}

/// Worst-score query: scoring rule, true class, clean input and l_inf
/// radius.
struct ScoreSpec {
    ScoreRule rule = ScoreRule::Nll;
    std::size_t y_star = 0;
    std::vector<double> x_star;
    double epsilon = 0.0;

    void validate(std::size_t input_dim, std::size_t classes) const
    {
        if (x_star.size() != input_dim)
            throw std::invalid_argument("ScoreSpec: x_star dimension mismatch");
        if (y_star >= classes)
            throw std::invalid_argument("ScoreSpec: y_star out of range");
        if (epsilon < 0.0)
            throw std::invalid_argument("ScoreSpec: negative epsilon");
    }
};

enum class BoundFamily : std::uint8_t { Lin, ErTangent, LseTangent, LseStarTangent };

inline constexpr BoundFamily kAllFamilies[] = {BoundFamily::Lin, BoundFamily::ErTangent,
                                               BoundFamily::LseTangent,
                                               BoundFamily::LseStarTangent};

inline constexpr std::string_view family_name(BoundFamily f)
{
    switch (f) {
    case BoundFamily::Lin: return "lin";
    case BoundFamily::ErTangent: return "er_tangent";
    case BoundFamily::LseTangent: return "lse_tangent";
    case BoundFamily::LseStarTangent: return "lse_star_tangent";
    }
    return "?";
}

inline std::optional<BoundFamily> parse_family(std::string_view s)
{
    for (BoundFamily f : kAllFamilies)
        if (family_name(f) == s)
            return f;
    return std::nullopt;
}

enum class ReluCase : std::uint8_t { Inactive, Active, Unstable };

/// Triangular relaxation of relu over [l, u]: besides x >= z and x >= 0,
/// the unstable case is capped by x <= slope * z + offset.
struct ReluRelaxation {
    ReluCase kind = ReluCase::Active;
    double slope = 1.0;
    double offset = 0.0;
};

inline ReluRelaxation relu_relaxation(double l, double u)
{
    if (!(l <= u))
        throw std::invalid_argument("relu_relaxation: l > u");
    if (u <= 0.0)
        return {ReluCase::Inactive, 0.0, 0.0};
    if (l >= 0.0)
        return {ReluCase::Active, 1.0, 0.0};
    double slope = u / (u - l);
    return {ReluCase::Unstable, slope, -l * slope};
}

/// Linear objective over the averaged probabilities: NLL maximizes
/// -p_{y*}; Brier maximizes its chordal upper bound over the per-class
/// constant boxes.
struct LinearObjective {
    std::vector<double> coeffs;
    double constant = 0.0;
};

inline LinearObjective score_objective(const ScoreSpec &spec,
                                       std::span<const ConstBounds> class_bounds)
{
    LinearObjective obj;
    obj.coeffs.assign(class_bounds.size(), 0.0);
    if (spec.rule == ScoreRule::Nll) {
        obj.coeffs[spec.y_star] = -1.0;
        return obj;
    }
    obj.constant = 1.0;
    for (std::size_t k = 0; k < class_bounds.size(); ++k) {
        obj.coeffs[k] = class_bounds[k].p_lo + class_bounds[k].p_hi;
        obj.constant -= class_bounds[k].p_lo * class_bounds[k].p_hi;
    }
    obj.coeffs[spec.y_star] -= 2.0;
    return obj;
}

/// Score S(p, y*) on explicit probabilities: the linear NLL surrogate
/// -p_{y*} or the exact quadratic Brier score.
inline double true_score(ScoreRule rule, std::span<const double> p, std::size_t y_star)
{
    if (rule == ScoreRule::Nll)
        return -p[y_star];
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        double d = p[k] - (k == y_star ? 1.0 : 0.0);
        s += d * d;
    }
    return s;
}

inline std::vector<double> ensemble_probs(const Ensemble &e, std::span<const double> x)
{
    std::vector<double> p(e.output_dim(), 0.0);
    for (const Mlp &net : e.members) {
        std::vector<double> pm = softmax(forward(net, x));
        for (std::size_t k = 0; k < p.size(); ++k)
            p[k] += pm[k];
    }
    for (double &v : p)
        v /= static_cast<double>(e.members.size());
    return p;
}

inline double clean_score(const Ensemble &e, const ScoreSpec &spec)
{
    return true_score(spec.rule, ensemble_probs(e, spec.x_star), spec.y_star);
}

/// Variable layout of the assembled program. Per member: pre-activation z
/// and post-activation variables per hidden layer, then logits, then
/// probabilities; the input block is shared.
struct MemberLayout {
    std::vector<std::size_t> z_offset;    // one per hidden layer
    std::vector<std::size_t> post_offset; // one per hidden layer
    std::size_t logits_offset = 0;
    std::size_t probs_offset = 0;
};

struct LpLayout {
    std::size_t input_offset = 0;
    std::size_t input_dim = 0;
    std::size_t classes = 0;
    std::vector<MemberLayout> members;
    std::size_t num_vars = 0;
};

struct AssembledLp {
    LinearProgram lp;
    LpLayout layout;
};

namespace detail {

inline AffineBound softmax_affine_bound(const BoundContext &ctx, BoundFamily family, Side side)
{
    AffineBound ab;
    if (family == BoundFamily::Lin) {
        ab = lin_affine(ctx, side);
    } else {
        std::vector<double> mid = ctx.permuted_box().midpoints();
        std::swap(mid[0], mid[ctx.target()]);
        BoundKind kind;
        if (side == Side::Upper)
            kind = family == BoundFamily::ErTangent ? BoundKind::ErHi : BoundKind::LseHi;
        else if (family == BoundFamily::ErTangent)
            kind = BoundKind::ErLo;
        else if (family == BoundFamily::LseTangent)
            kind = BoundKind::LseLo;
        else
            kind = BoundKind::LseStarLo;
        ab = tangent_plane(ctx, kind, mid);
    }
    // A plane whose swing over the box dwarfs [0, 1] adds nothing beyond
    // the constant bound and its coefficients wreck the simplex
    // tolerances (possible for extreme logit ranges on untrained
    // networks). Substitute the constant bound, which is always sound.
    const Box &pbox = ctx.permuted_box();
    double swing = 0.0;
    for (std::size_t j = 0; j < ab.coeffs.size(); ++j) {
        std::size_t pj = j == 0 ? ctx.target() : (j == ctx.target() ? 0 : j);
        swing += std::abs(ab.coeffs[j]) * (pbox.upper[pj] - pbox.lower[pj]);
    }
    if (!(swing <= 1e8) || !(std::abs(ab.offset) <= 1e12)) {
        ab.coeffs.assign(ab.coeffs.size(), 0.0);
        ab.offset = side == Side::Lower ? ctx.constant_bounds().p_lo
                                        : ctx.constant_bounds().p_hi;
    }
    return ab;
}

} // namespace detail

/// Builds the score-maximization program: shared input block, per-member
/// ReLU relaxations and logit rows, per-member simplex, and one affine
/// softmax constraint per class (lower side for y*, upper side
/// otherwise) plus the matching constant bounds.
///
/// Size tally for input n0, hidden widths h_l, K classes, M members,
/// A/U active/unstable hidden neuron counts:
///   variables = n0 + M (2 sum h_l + 2K)
///   rows      = M (sum h_l + K + A + 2U + 1 + K)
inline AssembledLp assemble_lp(const Ensemble &ensemble, const ScoreSpec &spec,
                               std::span<const LayerBounds> bounds, BoundFamily family)
{
    ensemble.validate();
    spec.validate(ensemble.input_dim(), ensemble.output_dim());
    if (bounds.size() != ensemble.members.size())
        throw std::invalid_argument("assemble_lp: need bounds per member");

    const std::size_t n0 = ensemble.input_dim();
    const std::size_t classes = ensemble.output_dim();
    const std::size_t m_count = ensemble.members.size();

    AssembledLp out;
    LpLayout &layout = out.layout;
    layout.input_dim = n0;
    layout.classes = classes;
    std::size_t cursor = n0;
    for (std::size_t m = 0; m < m_count; ++m) {
        const Mlp &net = ensemble.members[m];
        MemberLayout ml;
        for (std::size_t l = 0; l < net.num_hidden(); ++l) {
            std::size_t width = net.layers[l].weights.rows;
            ml.z_offset.push_back(cursor);
            cursor += width;
            ml.post_offset.push_back(cursor);
            cursor += width;
        }
        ml.logits_offset = cursor;
        cursor += classes;
        ml.probs_offset = cursor;
        cursor += classes;
        layout.members.push_back(std::move(ml));
    }
    layout.num_vars = cursor;

    LinearProgram &lp = out.lp;
    lp.num_vars = cursor;
    lp.objective.assign(cursor, 0.0);
    lp.var_lo.assign(cursor, -kInf);
    lp.var_hi.assign(cursor, kInf);

    for (std::size_t j = 0; j < n0; ++j) {
        lp.var_lo[j] = spec.x_star[j] - spec.epsilon;
        lp.var_hi[j] = spec.x_star[j] + spec.epsilon;
    }

    auto add_row = [&lp](std::vector<double> coeffs, Sense sense, double rhs) {
        lp.rows.push_back(LpRow{std::move(coeffs), sense, rhs});
    };

    // Ensemble-averaged constant bounds per class feed the Brier
    // objective.
    std::vector<ConstBounds> avg_bounds(classes);
    for (auto &cb : avg_bounds)
        cb = ConstBounds{0.0, 0.0};

    for (std::size_t m = 0; m < m_count; ++m) {
        const Mlp &net = ensemble.members[m];
        const LayerBounds &lb = bounds[m];
        const MemberLayout &ml = layout.members[m];

        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const Layer &layer = net.layers[l];
            const bool is_logits = l + 1 == net.layers.size();
            std::size_t z_off = is_logits ? ml.logits_offset : ml.z_offset[l];
            // Inputs to this layer: shared input block or previous posts.
            std::size_t in_off = l == 0 ? layout.input_offset : ml.post_offset[l - 1];

            for (std::size_t i = 0; i < layer.weights.rows; ++i) {
                std::vector<double> row(lp.num_vars, 0.0);
                row[z_off + i] = 1.0;
                for (std::size_t j = 0; j < layer.weights.cols; ++j)
                    row[in_off + j] -= layer.weights.at(i, j);
                add_row(std::move(row), Sense::Eq, layer.bias[i]);
                lp.var_lo[z_off + i] = lb.lo[l][i];
                lp.var_hi[z_off + i] = lb.hi[l][i];
            }

            if (is_logits)
                continue;
            for (std::size_t i = 0; i < layer.weights.rows; ++i) {
                double zl = lb.lo[l][i], zu = lb.hi[l][i];
                std::size_t post = ml.post_offset[l] + i;
                ReluRelaxation rr = relu_relaxation(zl, zu);
                lp.var_lo[post] = 0.0;
                lp.var_hi[post] = std::max(zu, 0.0);
                switch (rr.kind) {
                case ReluCase::Inactive:
                    lp.var_hi[post] = 0.0;
                    break;
                case ReluCase::Active: {
                    std::vector<double> row(lp.num_vars, 0.0);
                    row[post] = 1.0;
                    row[z_off + i] = -1.0;
                    add_row(std::move(row), Sense::Eq, 0.0);
                    break;
                }
                case ReluCase::Unstable: {
                    std::vector<double> ge(lp.num_vars, 0.0);
                    ge[post] = 1.0;
                    ge[z_off + i] = -1.0;
                    add_row(std::move(ge), Sense::Ge, 0.0);
                    std::vector<double> le(lp.num_vars, 0.0);
                    le[post] = 1.0;
                    le[z_off + i] = -rr.slope;
                    add_row(std::move(le), Sense::Le, rr.offset);
                    break;
                }
                }
            }
        }

        // Per-member probabilities: simplex, constant bounds, and one
        // affine softmax constraint per class.
        Box logit_box(lb.lo.back(), lb.hi.back());
        std::vector<double> simplex(lp.num_vars, 0.0);
        for (std::size_t k = 0; k < classes; ++k)
            simplex[ml.probs_offset + k] = 1.0;
        add_row(std::move(simplex), Sense::Eq, 1.0);

        for (std::size_t k = 0; k < classes; ++k) {
            BoundContext ctx(logit_box, k);
            const ConstBounds &cb = ctx.constant_bounds();
            avg_bounds[k].p_lo += cb.p_lo / static_cast<double>(m_count);
            avg_bounds[k].p_hi += cb.p_hi / static_cast<double>(m_count);
            std::size_t pk = ml.probs_offset + k;
            Side side = k == spec.y_star ? Side::Lower : Side::Upper;
            if (side == Side::Lower) {
                lp.var_lo[pk] = std::max(0.0, cb.p_lo);
                lp.var_hi[pk] = 1.0;
            } else {
                lp.var_lo[pk] = 0.0;
                lp.var_hi[pk] = std::min(1.0, cb.p_hi);
            }
            AffineBound ab = detail::softmax_affine_bound(ctx, family, side);
            std::vector<double> row(lp.num_vars, 0.0);
            row[pk] = 1.0;
            for (std::size_t j = 0; j < classes; ++j)
                row[ml.logits_offset + j] -= ab.coeffs[j];
            add_row(std::move(row), side == Side::Lower ? Sense::Ge : Sense::Le, ab.offset);
        }
    }

    LinearObjective obj = score_objective(spec, avg_bounds);
    lp.objective_offset = obj.constant;
    for (std::size_t m = 0; m < m_count; ++m)
        for (std::size_t k = 0; k < classes; ++k)
            lp.objective[layout.members[m].probs_offset + k] =
                obj.coeffs[k] / static_cast<double>(m_count);
    return out;
}

/// The point in LP variable space induced by running the networks exactly
/// on x; used to test that the relaxation contains every reachable point.
inline std::vector<double> embed_point(const Ensemble &ensemble, std::span<const double> x,
                                       const LpLayout &layout)
{
    std::vector<double> v(layout.num_vars, 0.0);
    for (std::size_t j = 0; j < layout.input_dim; ++j)
        v[layout.input_offset + j] = x[j];
    for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
        const MemberLayout &ml = layout.members[m];
        ForwardTrace trace = forward_trace(ensemble.members[m], x);
        for (std::size_t l = 0; l < ml.z_offset.size(); ++l)
            for (std::size_t i = 0; i < trace.pre[l].size(); ++i) {
                v[ml.z_offset[l] + i] = trace.pre[l][i];
                v[ml.post_offset[l] + i] = trace.post[l][i];
            }
        const std::vector<double> &logits = trace.pre.back();
        std::vector<double> p = softmax(logits);
        for (std::size_t k = 0; k < layout.classes; ++k) {
            v[ml.logits_offset + k] = logits[k];
            v[ml.probs_offset + k] = p[k];
        }
    }
    return v;
}

struct AttackOptions {
    std::size_t steps = 200;
    std::size_t restarts = 3;
    std::uint64_t seed = 0;
    // Extra starting points (each gets a full ascent run); lets callers
    // warm-start nested-radius sweeps.
    std::vector<std::vector<double>> warm_starts;
};

namespace detail {

inline std::vector<double> score_input_gradient(const Ensemble &e, const ScoreSpec &spec,
                                                std::span<const double> x)
{
    const std::size_t classes = e.output_dim();
    const double inv_m = 1.0 / static_cast<double>(e.members.size());

    std::vector<ForwardTrace> traces;
    traces.reserve(e.members.size());
    std::vector<double> p_avg(classes, 0.0);
    std::vector<std::vector<double>> member_probs;
    for (const Mlp &net : e.members) {
        traces.push_back(forward_trace(net, x));
        member_probs.push_back(softmax(traces.back().pre.back()));
        for (std::size_t k = 0; k < classes; ++k)
            p_avg[k] += inv_m * member_probs.back()[k];
    }

    std::vector<double> dscore_dp(classes, 0.0);
    if (spec.rule == ScoreRule::Nll)
        dscore_dp[spec.y_star] = -1.0;
    else
        for (std::size_t k = 0; k < classes; ++k)
            dscore_dp[k] = 2.0 * (p_avg[k] - (k == spec.y_star ? 1.0 : 0.0));

    std::vector<double> gx(x.size(), 0.0);
    for (std::size_t m = 0; m < e.members.size(); ++m) {
        const Mlp &net = e.members[m];
        const std::vector<double> &p = member_probs[m];
        // softmax backward: dz = (diag(p) - p p^T) g, g = dS/dp^m
        double inner = 0.0;
        for (std::size_t k = 0; k < classes; ++k)
            inner += p[k] * dscore_dp[k] * inv_m;
        std::vector<double> delta(classes);
        for (std::size_t k = 0; k < classes; ++k)
            delta[k] = p[k] * (dscore_dp[k] * inv_m - inner);
        // affine/relu backward
        for (std::size_t l = net.layers.size(); l-- > 0;) {
            const Layer &layer = net.layers[l];
            std::vector<double> dx(layer.weights.cols, 0.0);
            for (std::size_t i = 0; i < layer.weights.rows; ++i)
                for (std::size_t j = 0; j < layer.weights.cols; ++j)
                    dx[j] += layer.weights.at(i, j) * delta[i];
            if (l == 0) {
                for (std::size_t j = 0; j < gx.size(); ++j)
                    gx[j] += dx[j];
            } else {
                const std::vector<double> &z_prev = traces[m].pre[l - 1];
                for (std::size_t j = 0; j < dx.size(); ++j)
                    dx[j] = z_prev[j] > 0.0 ? dx[j] : 0.0;
                delta = std::move(dx);
            }
        }
    }
    return gx;
}

} // namespace detail

/// Projected gradient ascent on the score over the l_inf ball:
/// sign-gradient steps of size eps/20, clamped to the ball, best iterate
/// kept. Restart 0 starts at x_star, later restarts at seeded uniform
/// points. Returns a certified-feasible lower bound on the worst score;
/// `best_point` (when given) receives the attaining input, which can
/// warm-start the next radius of a nested sweep.
inline double empirical_attack(const Ensemble &ensemble, const ScoreSpec &spec,
                               const AttackOptions &opts = {},
                               std::vector<double> *best_point = nullptr)
{
    ensemble.validate();
    spec.validate(ensemble.input_dim(), ensemble.output_dim());
    const std::size_t n = ensemble.input_dim();
    double best = clean_score(ensemble, spec);
    if (best_point)
        *best_point = spec.x_star;
    if (spec.epsilon == 0.0)
        return best;
    double step = spec.epsilon / 20.0;

    std::vector<std::vector<double>> starts;
    starts.push_back(spec.x_star);
    for (std::size_t r = 1; r < opts.restarts; ++r) {
        Xoshiro256pp rng = derive_stream(opts.seed, r);
        std::vector<double> x0(n);
        for (std::size_t j = 0; j < n; ++j)
            x0[j] = spec.x_star[j] + rng.uniform(-spec.epsilon, spec.epsilon);
        starts.push_back(std::move(x0));
    }
    for (const auto &w : opts.warm_starts) {
        if (w.size() != n)
            throw std::invalid_argument("empirical_attack: warm start dimension mismatch");
        std::vector<double> x0(w);
        for (std::size_t j = 0; j < n; ++j)
            x0[j] = std::clamp(x0[j], spec.x_star[j] - spec.epsilon,
                               spec.x_star[j] + spec.epsilon);
        starts.push_back(std::move(x0));
    }

    auto consider = [&](const std::vector<double> &x) {
        double s = true_score(spec.rule, ensemble_probs(ensemble, x), spec.y_star);
        if (s > best) {
            best = s;
            if (best_point)
                *best_point = x;
        }
    };
    for (std::vector<double> x : starts) {
        consider(x);
        for (std::size_t it = 0; it < opts.steps; ++it) {
            std::vector<double> g = detail::score_input_gradient(ensemble, spec, x);
            for (std::size_t j = 0; j < n; ++j) {
                double dir = g[j] > 0.0 ? 1.0 : (g[j] < 0.0 ? -1.0 : 0.0);
                x[j] = std::clamp(x[j] + step * dir, spec.x_star[j] - spec.epsilon,
                                  spec.x_star[j] + spec.epsilon);
            }
            consider(x);
        }
    }
    return best;
}

struct VerifyResult {
    BoundFamily family = BoundFamily::Lin;
    LpStatus lp_status = LpStatus::IterLimit;
    double score_upper_bound = 0.0;
    double attack_lower_bound = 0.0;
    double clean = 0.0;
};

/// Interval propagation, LP assembly/solve for the score upper bound, and
/// the PGD lower bound. attack_lower_bound <= score_upper_bound must hold
/// for a sound relaxation.
inline VerifyResult verify(const Ensemble &ensemble, const ScoreSpec &spec, BoundFamily family,
                           const AttackOptions &attack_opts = {})
{
    ensemble.validate();
    spec.validate(ensemble.input_dim(), ensemble.output_dim());
    std::vector<LayerBounds> bounds;
    bounds.reserve(ensemble.members.size());
    for (const Mlp &net : ensemble.members)
        bounds.push_back(interval_propagate(net, spec.x_star, spec.epsilon));
    AssembledLp assembled = assemble_lp(ensemble, spec, bounds, family);
    LpSolution sol = solve(assembled.lp);

    VerifyResult res;
    res.family = family;
    res.lp_status = sol.status;
    res.score_upper_bound = sol.objective_value;
    res.clean = clean_score(ensemble, spec);
    res.attack_lower_bound = empirical_attack(ensemble, spec, attack_opts);
    return res;
}

} // namespace softbound
