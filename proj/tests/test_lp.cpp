#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "lp_oracle.hpp"
#include "softbound/lp.hpp"

using Catch::Approx;
using namespace softbound;

namespace {

LinearProgram box_lp(std::size_t n)
{
    LinearProgram lp;
    lp.num_vars = n;
    lp.objective.assign(n, 0.0);
    lp.var_lo.assign(n, 0.0);
    lp.var_hi.assign(n, kInf);
    return lp;
}

} // namespace

TEST_CASE("single variable with a cap")
{
    LinearProgram lp = box_lp(1);
    lp.objective = {1.0};
    lp.rows.push_back({{1.0}, Sense::Le, 1.0});
    LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.objective_value == Approx(1.0).margin(1e-9));
    REQUIRE(sol.point[0] == Approx(1.0).margin(1e-9));
}

TEST_CASE("two variables on a shared budget")
{
    LinearProgram lp = box_lp(2);
    lp.objective = {1.0, 1.0};
    lp.var_hi = {1.0, 1.0};
    lp.rows.push_back({{1.0, 1.0}, Sense::Le, 1.0});
    LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.objective_value == Approx(1.0).margin(1e-9));
}

TEST_CASE("textbook two-constraint maximum")
{
    LinearProgram lp = box_lp(2);
    lp.objective = {3.0, 2.0};
    lp.rows.push_back({{1.0, 1.0}, Sense::Le, 4.0});
    lp.rows.push_back({{1.0, 3.0}, Sense::Le, 6.0});
    LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.objective_value == Approx(12.0).margin(1e-9));
    REQUIRE(sol.point[0] == Approx(4.0).margin(1e-8));
    REQUIRE(sol.point[1] == Approx(0.0).margin(1e-8));
}

TEST_CASE("equality rows go through phase 1")
{
    LinearProgram lp = box_lp(2);
    lp.objective = {1.0, 0.0};
    lp.var_hi = {10.0, 10.0};
    lp.rows.push_back({{1.0, 1.0}, Sense::Eq, 1.0});
    LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.objective_value == Approx(1.0).margin(1e-9));
    REQUIRE(sol.point[0] + sol.point[1] == Approx(1.0).margin(1e-9));
}

TEST_CASE("free variables pinned only by equalities")
{
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1.0, -1.0};
    lp.var_lo = {-kInf, -kInf};
    lp.var_hi = {kInf, kInf};
    lp.rows.push_back({{1.0, 0.0}, Sense::Eq, 5.0});
    lp.rows.push_back({{0.0, 1.0}, Sense::Ge, -3.0});
    LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.point[0] == Approx(5.0).margin(1e-9));
    REQUIRE(sol.point[1] == Approx(-3.0).margin(1e-9));
}

TEST_CASE("infeasible systems are reported, not solved")
{
    LinearProgram lp = box_lp(1);
    lp.objective = {1.0};
    lp.rows.push_back({{1.0}, Sense::Ge, 2.0});
    lp.rows.push_back({{1.0}, Sense::Le, 1.0});
    REQUIRE(solve(lp).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded rays are reported")
{
    LinearProgram lp = box_lp(1);
    lp.objective = {1.0};
    REQUIRE(solve(lp).status == LpStatus::Unbounded);
}

TEST_CASE("optimal points satisfy the program")
{
    Xoshiro256pp rng(90210);
    for (int t = 0; t < 40; ++t) {
        std::size_t n = 2 + rng.next() % 4;
        std::size_t m = 1 + rng.next() % 8;
        LinearProgram lp = lp_oracle::random_bounded_lp(rng, n, m);
        LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        auto rep = check_feasible(lp, sol.point, 1e-7);
        INFO("worst residual " << rep.worst_residual);
        REQUIRE(rep.feasible);
    }
}

TEST_CASE("simplex optimum matches brute-force vertex enumeration")
{
    Xoshiro256pp rng(2718);
    for (int t = 0; t < 60; ++t) {
        std::size_t n = 2 + rng.next() % 3; // 2..4
        std::size_t m = 1 + rng.next() % 8; // 1..8
        LinearProgram lp = lp_oracle::random_bounded_lp(rng, n, m);
        LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        auto brute = lp_oracle::best_vertex(lp);
        REQUIRE(brute.has_value());
        double scale = std::max({1.0, std::abs(sol.objective_value), std::abs(*brute)});
        REQUIRE(std::abs(sol.objective_value - *brute) <= 1e-7 * scale);
    }
}

TEST_CASE("any feasible point scores at most the reported maximum")
{
    Xoshiro256pp rng(5);
    for (int t = 0; t < 30; ++t) {
        std::size_t n = 2 + rng.next() % 3;
        LinearProgram lp = lp_oracle::random_bounded_lp(rng, n, 5);
        LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        // enumerated feasible vertices serve as the witnesses
        auto brute = lp_oracle::best_vertex(lp);
        REQUIRE(brute.has_value());
        REQUIRE(*brute <= sol.objective_value + 1e-7 * std::max(1.0, std::abs(*brute)));
    }
}

TEST_CASE("identical programs solve identically")
{
    Xoshiro256pp rng(13);
    LinearProgram lp = lp_oracle::random_bounded_lp(rng, 4, 6);
    LpSolution a = solve(lp);
    LpSolution b = solve(lp);
    REQUIRE(a.status == b.status);
    REQUIRE(a.objective_value == b.objective_value);
    REQUIRE(a.point == b.point);
}

TEST_CASE("variables narrower than the tolerance cannot stall the solver")
{
    // A bound width far below the at-bound classification tolerance used
    // to trigger an endless zero-progress flip loop in phase 1.
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1.0, 1.0};
    lp.var_lo = {0.0, 0.0};
    lp.var_hi = {1e-116, 10.0};
    lp.rows.push_back({{1.0, 1.0}, Sense::Eq, 5.0});
    LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    REQUIRE(sol.objective_value == Approx(5.0).margin(1e-8));
}

TEST_CASE("objective offset is carried through")
{
    LinearProgram lp = box_lp(1);
    lp.objective = {1.0};
    lp.objective_offset = 2.5;
    lp.var_hi = {1.0};
    LpSolution sol = solve(lp);
    REQUIRE(sol.objective_value == Approx(3.5).margin(1e-9));
}

TEST_CASE("check_feasible reports the worst violation")
{
    LinearProgram lp = box_lp(2);
    lp.var_hi = {1.0, 1.0};
    lp.rows.push_back({{1.0, 1.0}, Sense::Le, 1.0});
    std::vector<double> bad = {0.6, 0.4 + 1e-3};
    auto rep = check_feasible(lp, bad, 1e-7);
    REQUIRE_FALSE(rep.feasible);
    REQUIRE(rep.worst_residual == Approx(1e-3).epsilon(1e-6));
    std::vector<double> good = {0.6, 0.4};
    REQUIRE(check_feasible(lp, good, 1e-7).feasible);
}

TEST_CASE("text dump mentions every section")
{
    LinearProgram lp = box_lp(2);
    lp.objective = {3.0, 2.0};
    lp.rows.push_back({{1.0, 1.0}, Sense::Le, 4.0});
    std::ostringstream os;
    dump(os, lp);
    std::string text = os.str();
    REQUIRE(text.find("max:") != std::string::npos);
    REQUIRE(text.find("r0:") != std::string::npos);
    REQUIRE(text.find("bound:") != std::string::npos);
}
