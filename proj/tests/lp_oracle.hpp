#pragma once

// Brute-force LP oracle for testing: enumerate all candidate vertices
// (intersections of n active constraints drawn from rows and finite
// variable bounds), keep the feasible ones, and return the best
// objective. Independent of the simplex implementation.

#include <cmath>
#include <optional>
#include <vector>

#include "softbound/lp.hpp"
#include "softbound/rng.hpp"

namespace lp_oracle {

struct Hyperplane {
    std::vector<double> a;
    double b = 0.0;
};

inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> m,
                                                       std::vector<double> rhs)
{
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col]))
                piv = r;
        if (std::abs(m[piv][col]) < 1e-9)
            return std::nullopt;
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            double f = m[r][col] / m[col][col];
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n; ++c)
                m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = rhs[i] / m[i][i];
    return x;
}

/// Max objective over all feasible candidate vertices, or nullopt if none
/// is feasible. Requires finite variable bounds so the optimum sits on a
/// vertex.
inline std::optional<double> best_vertex(const softbound::LinearProgram &lp, double tol = 1e-7)
{
    const std::size_t n = lp.num_vars;
    std::vector<Hyperplane> planes;
    for (const auto &row : lp.rows)
        planes.push_back({row.coeffs, row.rhs});
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        planes.push_back({e, lp.var_lo[j]});
        planes.push_back({e, lp.var_hi[j]});
    }

    std::optional<double> best;
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i)
        pick[i] = i;
    const std::size_t total = planes.size();
    if (total < n)
        return std::nullopt;
    for (;;) {
        std::vector<std::vector<double>> m(n);
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = planes[pick[i]].a;
            rhs[i] = planes[pick[i]].b;
        }
        if (auto x = solve_square(std::move(m), std::move(rhs))) {
            if (softbound::check_feasible(lp, *x, tol).feasible) {
                double obj = lp.objective_offset;
                for (std::size_t j = 0; j < n; ++j)
                    obj += lp.objective[j] * (*x)[j];
                if (!best || obj > *best)
                    best = obj;
            }
        }
        // next combination
        std::size_t i = n;
        while (i-- > 0) {
            if (pick[i] + (n - i) < total) {
                ++pick[i];
                for (std::size_t j = i + 1; j < n; ++j)
                    pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0)
                return best;
        }
    }
}

/// Random LP that is feasible (a sampled interior point satisfies
/// everything) and bounded (every variable has finite bounds).
inline softbound::LinearProgram random_bounded_lp(softbound::Xoshiro256pp &rng, std::size_t n,
                                                  std::size_t m, double eq_prob = 0.2)
{
    softbound::LinearProgram lp;
    lp.num_vars = n;
    std::vector<double> x0(n);
    lp.objective.resize(n);
    lp.var_lo.resize(n);
    lp.var_hi.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        x0[j] = rng.uniform(-1.0, 1.0);
        lp.objective[j] = rng.uniform(-1.0, 1.0);
        lp.var_lo[j] = x0[j] - rng.uniform(0.2, 2.0);
        lp.var_hi[j] = x0[j] + rng.uniform(0.2, 2.0);
    }
    for (std::size_t i = 0; i < m; ++i) {
        softbound::LpRow row;
        row.coeffs.resize(n);
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row.coeffs[j] = rng.uniform(-2.0, 2.0);
            dot += row.coeffs[j] * x0[j];
        }
        double u = rng.uniform01();
        if (u < eq_prob) {
            row.sense = softbound::Sense::Eq;
            row.rhs = dot;
        } else if (u < 0.5 + eq_prob / 2.0) {
            row.sense = softbound::Sense::Le;
            row.rhs = dot + rng.uniform(0.0, 2.0);
        } else {
            row.sense = softbound::Sense::Ge;
            row.rhs = dot - rng.uniform(0.0, 2.0);
        }
        lp.rows.push_back(std::move(row));
    }
    return lp;
}

} // namespace lp_oracle
