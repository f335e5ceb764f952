#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "softbound/bounds.hpp"
#include "test_util.hpp"

using Catch::Approx;
using namespace softbound;
using test_util::leq_tol;
using test_util::random_box;
using test_util::random_point;

namespace {

// Figure-1 setting: K = 2, difference interval [-2, 2].
Box fig1_box() { return Box({0.0, -2.0}, {0.0, 2.0}); }

const double kE2 = std::exp(2.0);
const double kEm2 = std::exp(-2.0);

std::vector<BoundKind> lower_kinds(std::size_t k)
{
    std::vector<BoundKind> kinds = {BoundKind::ConstLo, BoundKind::LinLo, BoundKind::ErLo,
                                    BoundKind::LseLo, BoundKind::LseStarLo,
                                    BoundKind::LsePrimeLo};
    if (k == 2)
        kinds.push_back(BoundKind::Lse2Lo);
    return kinds;
}

const std::vector<BoundKind> kUpperKinds = {BoundKind::ConstHi, BoundKind::LinHi,
                                            BoundKind::ErHi, BoundKind::LseHi};

} // namespace

TEST_CASE("diff_box formula and anchor pinning")
{
    Box degenerate({0.0, 0.0}, {0.0, 0.0});
    DiffBox d0 = diff_box(degenerate, 0);
    REQUIRE(d0.lower == std::vector<double>{0.0, 0.0});
    REQUIRE(d0.upper == std::vector<double>{0.0, 0.0});

    DiffBox d1 = diff_box(Box({-1.0, -1.0}, {1.0, 1.0}), 0);
    REQUIRE(d1.lower == std::vector<double>{0.0, -2.0});
    REQUIRE(d1.upper == std::vector<double>{0.0, 2.0});

    DiffBox d2 = diff_box(Box({0.0, 3.0}, {1.0, 4.0}), 1);
    REQUIRE(d2.lower == std::vector<double>{-4.0, 0.0});
    REQUIRE(d2.upper == std::vector<double>{-2.0, 0.0});
}

TEST_CASE("argmax_midpoint with ties to the smallest index")
{
    REQUIRE(argmax_midpoint(Box({0.0, 0.0}, {1.0, 2.0})) == 1);
    REQUIRE(argmax_midpoint(Box({0.0, 0.0}, {1.0, 1.0})) == 0);
    REQUIRE(argmax_midpoint(Box({-5.0, 3.0, 0.0}, {-4.0, 4.0, 1.0})) == 1);
}

TEST_CASE("const_bounds closed forms")
{
    ConstBounds mid = const_bounds(diff_box(Box({0.0, 0.0}, {0.0, 0.0}), 0));
    REQUIRE(mid.p_lo == Approx(0.5));
    REQUIRE(mid.p_hi == Approx(0.5));

    ConstBounds fig = const_bounds(diff_box(fig1_box(), 0));
    REQUIRE(fig.p_lo == Approx(1.0 / (1.0 + kE2)).epsilon(1e-14));
    REQUIRE(fig.p_hi == Approx(1.0 / (1.0 + kEm2)).epsilon(1e-14));

    ConstBounds k3 = const_bounds(diff_box(Box({0.0, -2.0, -2.0}, {0.0, 2.0, 2.0}), 0));
    REQUIRE(k3.p_lo == Approx(1.0 / (1.0 + 2.0 * kE2)).epsilon(1e-14));
    REQUIRE(k3.p_hi == Approx(1.0 / (1.0 + 2.0 * kEm2)).epsilon(1e-14));
}

TEST_CASE("lin_aux tangent abscissas and reciprocal range")
{
    LinAux fig = lin_aux(diff_box(fig1_box(), 0));
    REQUIRE(fig.t[1] == Approx(-1.0)); // min(log((e^2 - e^-2)/4), -1)
    REQUIRE(fig.q_lo_lin == Approx(1.0));
    REQUIRE(fig.q_hi_lin == Approx(1.0 + kE2).epsilon(1e-14));
    REQUIRE(fig.t_q == Approx(0.5 * (1.0 + kE2)).epsilon(1e-14));

    LinAux deg = lin_aux(diff_box(Box({0.0, 0.0}, {0.0, 0.0}), 0));
    REQUIRE(deg.t[1] == Approx(0.0).margin(1e-15));
    REQUIRE(deg.q_lo_lin == Approx(2.0));
    REQUIRE(deg.q_hi_lin == Approx(2.0));
    REQUIRE(deg.t_q == Approx(2.0));

    LinAux narrow = lin_aux(diff_box(Box({0.0, -0.1}, {0.0, 0.1}), 0));
    double expect = std::log((std::exp(0.1) - std::exp(-0.1)) / 0.2);
    REQUIRE(narrow.t[1] == Approx(expect).epsilon(1e-12));
    REQUIRE(narrow.t_q >= narrow.q_hi_lin / 2.0);
}

TEST_CASE("bound_lin anchor values on the Figure-1 box")
{
    Box box = fig1_box();
    DiffBox d = diff_box(box, 0);
    LinAux aux = lin_aux(d);
    std::vector<double> x = {0.0, 0.0};
    // closed forms, evaluated independently of the implementation path
    double sebar = 1.0 + 0.5 * (kEm2 + kE2);
    double tq = 0.5 * (1.0 + kE2);
    double expect_lo = (1.0 / tq) * (2.0 - sebar / tq);
    REQUIRE(bound_lin(x, d, aux, Side::Lower) == Approx(expect_lo).epsilon(1e-12));
    REQUIRE(bound_lin(x, d, aux, Side::Lower) == Approx(0.2061411216152448).epsilon(1e-9));
    double plo = 1.0 / (1.0 + kE2);
    double expect_hi = 1.0 + plo - plo * (1.0 + 2.0 * std::exp(-1.0));
    REQUIRE(bound_lin(x, d, aux, Side::Upper) == Approx(expect_hi).epsilon(1e-12));
    REQUIRE(bound_lin(x, d, aux, Side::Upper) == Approx(0.9122953913210008).epsilon(1e-9));
}

TEST_CASE("bound_lin collapses to softmax on a degenerate box")
{
    Box box({0.5, -0.3, 1.1}, {0.5, -0.3, 1.1});
    DiffBox d = diff_box(box, 0);
    LinAux aux = lin_aux(d);
    std::vector<double> x = {0.5, -0.3, 1.1};
    double p = softmax(x)[0];
    REQUIRE(bound_lin(x, d, aux, Side::Lower) == Approx(p).epsilon(1e-12));
    REQUIRE(bound_lin(x, d, aux, Side::Upper) == Approx(p).epsilon(1e-12));
}

TEST_CASE("bound_er anchor values and corner tightness")
{
    Box box = fig1_box();
    DiffBox d = diff_box(box, 0);
    std::vector<double> x = {0.0, 0.0};
    double sebar = 1.0 + 0.5 * (kEm2 + kE2);
    REQUIRE(bound_er(x, d, Side::Lower) == Approx(1.0 / sebar).epsilon(1e-12));
    REQUIRE(bound_er(x, d, Side::Lower) == Approx(0.2099871708070130).epsilon(1e-9));
    REQUIRE(bound_er(x, d, Side::Upper) == Approx(1.0 - 1.0 / sebar).epsilon(1e-12));
    REQUIRE(bound_er(x, d, Side::Upper) == Approx(0.7900128291929870).epsilon(1e-9));

    // both ER bounds are exact at the box corners
    ConstBounds cb = const_bounds(d);
    std::vector<double> at_lower = {0.0, -2.0};
    REQUIRE(bound_er(at_lower, d, Side::Lower) == Approx(cb.p_hi).epsilon(1e-12));
    REQUIRE(bound_er(at_lower, d, Side::Upper) == Approx(cb.p_hi).epsilon(1e-12));
    std::vector<double> at_upper = {0.0, 2.0};
    REQUIRE(bound_er(at_upper, d, Side::Lower) == Approx(cb.p_lo).epsilon(1e-12));
    REQUIRE(bound_er(at_upper, d, Side::Upper) == Approx(cb.p_lo).epsilon(1e-12));
}

TEST_CASE("nonlinear kinds are exact at full box corners")
{
    // At the corner where every difference sits at its bound, chords meet
    // their functions, so each nonlinear bound collapses to the constant
    // envelope. The lin pair stays strictly inside (its reciprocal
    // tangent point is elsewhere), so it is excluded here.
    Xoshiro256pp rng(909);
    for (std::size_t k : {2ul, 4ul}) {
        Box box = random_box(rng, k, 0.2, 2.0);
        BoundContext ctx(box, 0);
        const ConstBounds &cb = ctx.constant_bounds();
        std::vector<double> lo_corner(box.upper), hi_corner(box.lower);
        lo_corner[0] = box.lower[0]; // differences at their upper bounds
        hi_corner[0] = box.upper[0]; // differences at their lower bounds
        std::vector<BoundKind> kinds = {BoundKind::ConstLo,   BoundKind::ConstHi,
                                        BoundKind::ErLo,      BoundKind::ErHi,
                                        BoundKind::LseLo,     BoundKind::LseStarLo,
                                        BoundKind::LsePrimeLo, BoundKind::LseHi};
        if (k == 2)
            kinds.push_back(BoundKind::Lse2Lo);
        for (BoundKind kind : kinds) {
            if (kind != BoundKind::ConstHi && kind != BoundKind::ConstLo) {
                REQUIRE(ctx.value(kind, hi_corner) == Approx(cb.p_hi).epsilon(1e-9));
                REQUIRE(ctx.value(kind, lo_corner) == Approx(cb.p_lo).epsilon(1e-9));
            }
        }
        REQUIRE(softmax(hi_corner)[0] == Approx(cb.p_hi).epsilon(1e-12));
        REQUIRE(softmax(lo_corner)[0] == Approx(cb.p_lo).epsilon(1e-12));
    }
}

TEST_CASE("bound_er rejects out-of-box points")
{
    Box box = fig1_box();
    DiffBox d = diff_box(box, 0);
    std::vector<double> x = {0.0, 2.5};
    REQUIRE_THROWS_AS(bound_er(x, d, Side::Lower), std::domain_error);
}

TEST_CASE("bound_lse anchor values")
{
    Box box = fig1_box();
    std::vector<double> x = {0.0, 0.0};
    double plo = 1.0 / (1.0 + kE2), phi = 1.0 / (1.0 + kEm2);
    REQUIRE(bound_lse(x, box, LseVariant::Lse2) == Approx(std::sqrt(plo * phi)).epsilon(1e-12));
    REQUIRE(bound_lse(x, box, LseVariant::Lse2) == Approx(0.3240271368319427).epsilon(1e-9));
    double expect_hi = (plo * std::log(phi) - phi * std::log(plo) -
                        (phi - plo) * std::log(2.0)) /
                       (std::log(phi) - std::log(plo));
    REQUIRE(bound_lse(x, box, LseVariant::Lse, Side::Upper) ==
            Approx(expect_hi).epsilon(1e-12));
    REQUIRE(bound_lse(x, box, LseVariant::Lse, Side::Upper) ==
            Approx(0.6651824727307559).epsilon(1e-9));
}

TEST_CASE("lse_star coincides with the ER lower bound when jstar is the target")
{
    // midpoints (0, -1): jstar = 0 = target
    Box box({0.0, -2.0}, {0.0, 0.0});
    REQUIRE(argmax_midpoint(box) == 0);
    Xoshiro256pp rng(31);
    DiffBox d = diff_box(box, 0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x = random_point(box, rng);
        REQUIRE(bound_lse(x, box, LseVariant::LseStar) ==
                Approx(bound_er(x, d, Side::Lower)).epsilon(1e-12));
    }
}

TEST_CASE("lse2 requires K = 2")
{
    Box box({0.0, -1.0, -1.0}, {0.0, 1.0, 1.0});
    std::vector<double> x = {0.0, 0.0, 0.0};
    REQUIRE_THROWS_AS(bound_lse(x, box, LseVariant::Lse2), std::invalid_argument);
}

TEST_CASE("evaluate dispatch matches the direct operations")
{
    Box box = fig1_box();
    std::vector<double> mid = {0.0, 0.0};
    std::vector<double> corner = {0.0, 1.7};
    ConstBounds cb = const_bounds(diff_box(box, 0));
    REQUIRE(evaluate(BoundKind::ConstHi, mid, box) == Approx(cb.p_hi));
    REQUIRE(evaluate(BoundKind::ConstHi, corner, box) == Approx(cb.p_hi));
    REQUIRE(evaluate(BoundKind::ErLo, mid, box) == Approx(0.2099871708070130).epsilon(1e-9));
    REQUIRE(evaluate(BoundKind::LseHi, mid, box) == Approx(0.6651824727307559).epsilon(1e-9));
}

TEST_CASE("inequality chain on random boxes")
{
    const std::size_t ks[] = {2, 3, 4, 16, 128};
    std::uint64_t stream = 0;
    for (std::size_t k : ks) {
        Xoshiro256pp rng = derive_stream(2026, stream++);
        std::size_t boxes = k > 16 ? 10 : 40;
        for (std::size_t b = 0; b < boxes; ++b) {
            Box box = random_box(rng, k);
            BoundContext ctx(box, 0);
            for (int t = 0; t < 25; ++t) {
                std::vector<double> x = random_point(box, rng);
                double p = softmax(x)[0];
                double lin_lo = ctx.value(BoundKind::LinLo, x);
                double er_lo = ctx.value(BoundKind::ErLo, x);
                double lse_hi = ctx.value(BoundKind::LseHi, x);
                double er_hi = ctx.value(BoundKind::ErHi, x);
                double lin_hi = ctx.value(BoundKind::LinHi, x);
                REQUIRE(leq_tol(lin_lo, er_lo, 1e-9));
                REQUIRE(leq_tol(er_lo, p, 1e-9));
                REQUIRE(leq_tol(p, lse_hi, 1e-9));
                REQUIRE(leq_tol(lse_hi, er_hi, 1e-9));
                REQUIRE(leq_tol(er_hi, lin_hi, 1e-9));
                if (k == 2) {
                    double lse2 = ctx.value(BoundKind::Lse2Lo, x);
                    REQUIRE(leq_tol(er_lo, lse2, 1e-9));
                    REQUIRE(leq_tol(lse2, p, 1e-9));
                }
            }
        }
    }
}

TEST_CASE("every lower bound below softmax below every upper bound")
{
    const std::size_t ks[] = {2, 3, 5, 16};
    std::uint64_t stream = 100;
    for (std::size_t k : ks) {
        Xoshiro256pp rng = derive_stream(99, stream++);
        for (int b = 0; b < 20; ++b) {
            Box box = random_box(rng, k);
            BoundContext ctx(box, 0);
            for (int t = 0; t < 10; ++t) {
                std::vector<double> x = random_point(box, rng);
                double p = softmax(x)[0];
                for (BoundKind kind : lower_kinds(k))
                    REQUIRE(leq_tol(ctx.value(kind, x), p, 1e-9));
                for (BoundKind kind : kUpperKinds)
                    REQUIRE(leq_tol(p, ctx.value(kind, x), 1e-9));
            }
        }
    }
}

TEST_CASE("sampled bounds stay within the constant envelope")
{
    Xoshiro256pp rng(5150);
    for (int b = 0; b < 10; ++b) {
        Box box = random_box(rng, 4);
        BoundContext ctx(box, 0);
        const ConstBounds &cb = ctx.constant_bounds();
        for (int t = 0; t < 20; ++t) {
            std::vector<double> x = random_point(box, rng);
            for (BoundKind kind : kUpperKinds)
                REQUIRE(leq_tol(cb.p_lo, ctx.value(kind, x), 1e-9));
            for (BoundKind kind : lower_kinds(4))
                REQUIRE(leq_tol(ctx.value(kind, x), cb.p_hi, 1e-9));
        }
    }
}

TEST_CASE("midpoint convexity of lower bounds, concavity of upper bounds")
{
    Xoshiro256pp rng(8080);
    for (int b = 0; b < 10; ++b) {
        Box box = random_box(rng, 3);
        BoundContext ctx(box, 0);
        for (int t = 0; t < 30; ++t) {
            std::vector<double> a = random_point(box, rng);
            std::vector<double> c = random_point(box, rng);
            std::vector<double> mid(a.size());
            for (std::size_t j = 0; j < a.size(); ++j)
                mid[j] = 0.5 * (a[j] + c[j]);
            for (BoundKind kind : lower_kinds(3)) {
                double lhs = ctx.value(kind, mid);
                double rhs = 0.5 * (ctx.value(kind, a) + ctx.value(kind, c));
                REQUIRE(leq_tol(lhs, rhs, 1e-9));
            }
            for (BoundKind kind : kUpperKinds) {
                double lhs = ctx.value(kind, mid);
                double rhs = 0.5 * (ctx.value(kind, a) + ctx.value(kind, c));
                REQUIRE(leq_tol(rhs, lhs, 1e-9));
            }
        }
    }
}

TEST_CASE("bounds for output k are the permuted bounds for output 0")
{
    Xoshiro256pp rng(4242);
    const std::size_t k = 5;
    for (int rep = 0; rep < 10; ++rep) {
        Box box = random_box(rng, k);
        std::vector<double> x = random_point(box, rng);
        std::size_t target = static_cast<std::size_t>(rng.next() % k);

        // random permutation sending target -> 0
        std::vector<std::size_t> perm(k);
        for (std::size_t j = 0; j < k; ++j)
            perm[j] = j;
        for (std::size_t j = k; j-- > 1;)
            std::swap(perm[j], perm[rng.next() % (j + 1)]);
        std::size_t pos = 0;
        for (std::size_t j = 0; j < k; ++j)
            if (perm[j] == target)
                pos = j;
        std::swap(perm[0], perm[pos]);

        std::vector<double> plo(k), phi(k), px(k);
        for (std::size_t j = 0; j < k; ++j) {
            plo[j] = box.lower[perm[j]];
            phi[j] = box.upper[perm[j]];
            px[j] = x[perm[j]];
        }
        Box pbox(plo, phi);
        BoundContext direct(box, target);
        BoundContext permuted(pbox, 0);
        REQUIRE(softmax(x)[target] == Approx(softmax(px)[0]).epsilon(1e-12));
        for (BoundKind kind :
             {BoundKind::ConstLo, BoundKind::ConstHi, BoundKind::LinLo, BoundKind::LinHi,
              BoundKind::ErLo, BoundKind::ErHi, BoundKind::LseLo, BoundKind::LseStarLo,
              BoundKind::LsePrimeLo, BoundKind::LseHi}) {
            REQUIRE(direct.value(kind, x) == Approx(permuted.value(kind, px)).epsilon(1e-9));
        }
    }
}

TEST_CASE("uniform shifts leave every bound unchanged")
{
    Xoshiro256pp rng(6001);
    const double shift = 1000.0;
    for (int rep = 0; rep < 10; ++rep) {
        Box box = random_box(rng, 4);
        std::vector<double> x = random_point(box, rng);
        std::vector<double> lo2(box.lower), hi2(box.upper), x2(x);
        for (std::size_t j = 0; j < 4; ++j) {
            lo2[j] += shift;
            hi2[j] += shift;
            x2[j] += shift;
        }
        BoundContext base(box, 0);
        BoundContext shifted(Box(lo2, hi2), 0);
        for (BoundKind kind : lower_kinds(4))
            REQUIRE(test_util::rel_close(base.value(kind, x), shifted.value(kind, x2), 1e-9));
        for (BoundKind kind : kUpperKinds)
            REQUIRE(test_util::rel_close(base.value(kind, x), shifted.value(kind, x2), 1e-9));
    }
}

TEST_CASE("huge logits degrade to the constant envelope without NaNs")
{
    clear_overflow();
    Box box({0.0, 500.0}, {1.0, 900.0});
    BoundContext ctx(box, 0);
    std::vector<double> x = {0.5, 700.0};
    double p = softmax(x)[0];
    for (BoundKind kind : lower_kinds(2)) {
        double v = ctx.value(kind, x);
        REQUIRE(std::isfinite(v));
        REQUIRE(leq_tol(v, p, 1e-9));
    }
    for (BoundKind kind : kUpperKinds) {
        double v = ctx.value(kind, x);
        REQUIRE(std::isfinite(v));
        REQUIRE(leq_tol(p, v, 1e-9));
    }
    REQUIRE(overflow_seen());
    clear_overflow();
}

TEST_CASE("degenerate box: lse upper returns the exact constant")
{
    Box box({0.2, -0.4}, {0.2, -0.4});
    std::vector<double> x = {0.2, -0.4};
    double p = softmax(x)[0];
    REQUIRE(evaluate(BoundKind::LseHi, x, box) == Approx(p).epsilon(1e-12));
    REQUIRE(evaluate(BoundKind::Lse2Lo, x, box) == Approx(p).epsilon(1e-12));
    REQUIRE(evaluate(BoundKind::LsePrimeLo, x, box) == Approx(p).epsilon(1e-12));
}

TEST_CASE("externally tighter difference bounds are honored")
{
    Box box({-1.0, -1.0}, {1.0, 1.0});
    // derived tilde bounds are [-2, 2]; supply tighter ones
    DiffBox tight;
    tight.anchor = 0;
    tight.lower = {0.0, -0.5};
    tight.upper = {0.0, 0.5};
    BoundContext loose(box, 0);
    BoundContext tighter(box, tight, 0);
    REQUIRE(tighter.constant_bounds().p_lo > loose.constant_bounds().p_lo);
    REQUIRE(tighter.constant_bounds().p_hi < loose.constant_bounds().p_hi);
}
