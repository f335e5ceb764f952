#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "softbound/format.hpp"
#include "softbound/numerics.hpp"

namespace softbound {

enum class Sense : char { Le = '<', Eq = '=', Ge = '>' };

struct LpRow {
    std::vector<double> coeffs;
    Sense sense = Sense::Le;
    double rhs = 0.0;
};

/// Dense LP in inequality form: maximize objective . v + objective_offset
/// subject to rows and per-variable bounds (+-inf allowed).
struct LinearProgram {
    std::size_t num_vars = 0;
    std::vector<double> objective;
    double objective_offset = 0.0;
    std::vector<LpRow> rows;
    std::vector<double> var_lo;
    std::vector<double> var_hi;

    void validate() const
    {
        if (objective.size() != num_vars || var_lo.size() != num_vars ||
            var_hi.size() != num_vars)
            throw std::invalid_argument("LinearProgram: inconsistent dimensions");
        for (double c : objective)
            if (!std::isfinite(c))
                throw std::invalid_argument("LinearProgram: non-finite objective");
        for (const LpRow &r : rows) {
            if (r.coeffs.size() != num_vars)
                throw std::invalid_argument("LinearProgram: row dimension mismatch");
            for (double c : r.coeffs)
                if (!std::isfinite(c))
                    throw std::invalid_argument("LinearProgram: non-finite coefficient");
            if (!std::isfinite(r.rhs))
                throw std::invalid_argument("LinearProgram: non-finite rhs");
        }
        for (std::size_t j = 0; j < num_vars; ++j)
            if (!(var_lo[j] <= var_hi[j]))
                throw std::invalid_argument("LinearProgram: empty variable bound");
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

inline constexpr std::string_view lp_status_name(LpStatus s)
{
    switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iter_limit";
    }
    return "?";
}

struct LpSolution {
    LpStatus status = LpStatus::IterLimit;
    double objective_value = 0.0;
    std::vector<double> point;
};

struct FeasibilityReport {
    bool feasible = false;
    double worst_residual = 0.0;
};

inline FeasibilityReport check_feasible(const LinearProgram &lp, std::span<const double> point,
                                        double tol)
{
    if (point.size() != lp.num_vars)
        throw std::invalid_argument("check_feasible: point dimension mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < lp.num_vars; ++j) {
        worst = std::max(worst, lp.var_lo[j] - point[j]);
        worst = std::max(worst, point[j] - lp.var_hi[j]);
    }
    for (const LpRow &r : lp.rows) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < lp.num_vars; ++j)
            lhs += r.coeffs[j] * point[j];
        double viol = 0.0;
        switch (r.sense) {
        case Sense::Le: viol = lhs - r.rhs; break;
        case Sense::Ge: viol = r.rhs - lhs; break;
        case Sense::Eq: viol = std::abs(lhs - r.rhs); break;
        }
        worst = std::max(worst, viol);
    }
    return {worst <= tol, worst};
}

namespace detail {

// Bounded-variable primal simplex on a dense tableau. Every row gets a
// slack (fixed to [0,0] for equalities); rows whose initial slack value
// falls outside its bounds get a phase-1 artificial absorbing the
// residual. Dantzig pricing with a switch to Bland's rule after a stretch
// of stalled iterations.
class SimplexSolver {
public:
    explicit SimplexSolver(const LinearProgram &lp) : lp_(lp)
    {
        lp.validate();
        n_ = lp.num_vars;
        m_ = lp.rows.size();
    }

    LpSolution run()
    {
        build();
        if (phase1_needed_ && !phase1())
            return extract();
        phase2();
        return extract();
    }

private:
    static constexpr double kPivotTol = 1e-10;
    static constexpr double kRatioTol = 1e-9;
    static constexpr double kDualTol = 1e-9;
    static constexpr double kFeasTol = 1e-7;

    void build()
    {
        total_ = n_ + m_;
        lo_.assign(total_, 0.0);
        hi_.assign(total_, 0.0);
        val_.assign(total_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = lp_.var_lo[j];
            hi_[j] = lp_.var_hi[j];
            if (std::isfinite(lo_[j]))
                val_[j] = lo_[j];
            else if (std::isfinite(hi_[j]))
                val_[j] = hi_[j];
            else
                val_[j] = 0.0;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t s = n_ + i;
            switch (lp_.rows[i].sense) {
            case Sense::Le: lo_[s] = 0.0; hi_[s] = kInf; break;
            case Sense::Ge: lo_[s] = -kInf; hi_[s] = 0.0; break;
            case Sense::Eq: lo_[s] = 0.0; hi_[s] = 0.0; break;
            }
        }

        // Initial slack values and artificials for rows that start outside
        // their slack bounds.
        basis_.assign(m_, 0);
        std::vector<double> resid(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double r = lp_.rows[i].rhs;
            for (std::size_t j = 0; j < n_; ++j)
                r -= lp_.rows[i].coeffs[j] * val_[j];
            resid[i] = r;
        }
        std::vector<double> art_sign(m_, 0.0);
        std::size_t art_count = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            std::size_t s = n_ + i;
            double clamped = std::clamp(resid[i], lo_[s], hi_[s]);
            val_[s] = clamped;
            double d = resid[i] - clamped;
            if (std::abs(d) > 0.0) {
                art_sign[i] = d > 0.0 ? 1.0 : -1.0;
                ++art_count;
            }
        }
        phase1_needed_ = art_count > 0;
        art_begin_ = total_;
        total_ += art_count;
        lo_.resize(total_, 0.0);
        hi_.resize(total_, kInf);
        val_.resize(total_, 0.0);

        tab_.assign(m_, std::vector<double>(total_, 0.0));
        std::size_t art = art_begin_;
        for (std::size_t i = 0; i < m_; ++i) {
            double scale = art_sign[i] != 0.0 ? art_sign[i] : 1.0;
            for (std::size_t j = 0; j < n_; ++j)
                tab_[i][j] = lp_.rows[i].coeffs[j] * scale;
            tab_[i][n_ + i] = scale;
            if (art_sign[i] != 0.0) {
                std::size_t s = n_ + i;
                tab_[i][art] = 1.0;
                basis_[i] = art;
                val_[art] = std::abs(resid[i] - val_[s]);
                ++art;
            } else {
                basis_[i] = n_ + i;
            }
        }
        xb_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i)
            xb_[i] = val_[basis_[i]];
        status_ = LpStatus::IterLimit;
    }

    void init_reduced_costs(const std::vector<double> &c)
    {
        red_.assign(total_, 0.0);
        for (std::size_t j = 0; j < total_; ++j)
            red_[j] = c[j];
        for (std::size_t i = 0; i < m_; ++i) {
            double cb = c[basis_[i]];
            if (cb == 0.0)
                continue;
            for (std::size_t j = 0; j < total_; ++j)
                red_[j] -= cb * tab_[i][j];
        }
        in_basis_.assign(total_, false);
        for (std::size_t i = 0; i < m_; ++i)
            in_basis_[basis_[i]] = true;
    }

    bool phase1()
    {
        std::vector<double> c(total_, 0.0);
        for (std::size_t j = art_begin_; j < total_; ++j)
            c[j] = -1.0;
        init_reduced_costs(c);
        if (!iterate()) {
            status_ = LpStatus::IterLimit;
            return false;
        }
        double infeas = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= art_begin_)
                infeas += std::abs(xb_[i]);
        if (infeas > kFeasTol) {
            status_ = LpStatus::Infeasible;
            return false;
        }
        // Fix artificials at zero; pivot basic ones out where the row has
        // a usable non-fixed column, otherwise the row is redundant and
        // the fixed variable stays put.
        for (std::size_t j = art_begin_; j < total_; ++j) {
            lo_[j] = hi_[j] = 0.0;
            if (!in_basis_[j])
                val_[j] = 0.0;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < art_begin_)
                continue;
            std::size_t pivot_col = total_;
            for (std::size_t j = 0; j < art_begin_; ++j) {
                if (!in_basis_[j] && lo_[j] != hi_[j] && std::abs(tab_[i][j]) > kPivotTol) {
                    pivot_col = j;
                    break;
                }
            }
            if (pivot_col < total_) {
                std::size_t leaving = basis_[i];
                in_basis_[leaving] = false;
                val_[leaving] = 0.0;
                pivot(i, pivot_col, val_[pivot_col]);
            }
        }
        return true;
    }

    void phase2()
    {
        std::vector<double> c(total_, 0.0);
        for (std::size_t j = 0; j < n_; ++j)
            c[j] = lp_.objective[j];
        init_reduced_costs(c);
        if (!iterate())
            status_ = LpStatus::IterLimit;
    }

    // Runs the pricing loop until optimality or unboundedness; returns
    // false when the iteration limit is hit.
    bool iterate()
    {
        const std::size_t stall_limit = 5 * (m_ + n_) + 10;
        const std::size_t max_iters = 200 * (m_ + n_ + 10);
        std::size_t stall = 0;
        bool bland = false;
        for (std::size_t iter = 0; iter < max_iters; ++iter) {
            std::size_t enter = total_;
            int dir = 0;
            double best = kDualTol;
            for (std::size_t j = 0; j < total_; ++j) {
                // Variables narrower than the ratio tolerance are treated
                // as fixed: they cannot be told apart from their bounds,
                // and entering one loops on zero-progress flips.
                if (in_basis_[j] || hi_[j] - lo_[j] <= kRatioTol)
                    continue;
                double d = red_[j];
                bool at_lo = std::isfinite(lo_[j]) && val_[j] <= lo_[j] + kRatioTol;
                bool at_hi = std::isfinite(hi_[j]) && val_[j] >= hi_[j] - kRatioTol;
                bool free_var = !at_lo && !at_hi;
                int cand_dir = 0;
                if ((at_lo || free_var) && d > kDualTol)
                    cand_dir = +1;
                else if ((at_hi || free_var) && d < -kDualTol)
                    cand_dir = -1;
                if (cand_dir == 0)
                    continue;
                if (bland) {
                    enter = j;
                    dir = cand_dir;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    enter = j;
                    dir = cand_dir;
                }
            }
            if (enter == total_) {
                status_ = LpStatus::Optimal;
                return true;
            }

            // Ratio test: how far can the entering variable move before it
            // hits its own opposite bound (flip) or drives a basic
            // variable to one of its bounds (pivot). Ties between rows
            // prefer the larger pivot element, or the smallest basis index
            // under Bland's rule.
            double t_best = hi_[enter] - lo_[enter]; // flip distance, may be inf
            std::size_t leave_row = m_;
            double leave_bound = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                double y = tab_[i][enter];
                if (std::abs(y) <= kPivotTol)
                    continue;
                double delta = -static_cast<double>(dir) * y;
                double t;
                double bound;
                if (delta < 0.0) {
                    if (!std::isfinite(lo_[basis_[i]]))
                        continue;
                    t = (xb_[i] - lo_[basis_[i]]) / (-delta);
                    bound = lo_[basis_[i]];
                } else {
                    if (!std::isfinite(hi_[basis_[i]]))
                        continue;
                    t = (hi_[basis_[i]] - xb_[i]) / delta;
                    bound = hi_[basis_[i]];
                }
                t = std::max(t, 0.0);
                bool take = false;
                if (t < t_best - kRatioTol) {
                    take = true;
                } else if (leave_row < m_ && t <= t_best + kRatioTol) {
                    take = bland ? basis_[i] < basis_[leave_row]
                                 : std::abs(y) > std::abs(tab_[leave_row][enter]);
                }
                if (take) {
                    t_best = t;
                    leave_row = i;
                    leave_bound = bound;
                }
            }
            if (!std::isfinite(t_best)) {
                status_ = LpStatus::Unbounded;
                return true;
            }

            double progress = std::abs(red_[enter]) * t_best;
            if (leave_row == m_) {
                // Bound flip: entering variable runs to its other bound.
                flip(enter, dir, t_best);
            } else {
                double enter_val = val_[enter] + dir * t_best;
                update_basics(enter, dir, t_best, leave_row);
                val_[basis_[leave_row]] = leave_bound;
                in_basis_[basis_[leave_row]] = false;
                pivot(leave_row, enter, enter_val);
            }
            if (progress > 1e-12)
                stall = 0;
            else if (++stall >= stall_limit)
                bland = true;
        }
        status_ = LpStatus::IterLimit;
        return false;
    }

    void flip(std::size_t enter, int dir, double t)
    {
        for (std::size_t i = 0; i < m_; ++i)
            xb_[i] -= static_cast<double>(dir) * t * tab_[i][enter];
        // land exactly on the opposite bound
        val_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
    }

    void update_basics(std::size_t enter, int dir, double t, std::size_t skip_row)
    {
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == skip_row)
                continue;
            xb_[i] -= static_cast<double>(dir) * t * tab_[i][enter];
        }
    }

    void pivot(std::size_t pr, std::size_t pc, double enter_val)
    {
        double piv = tab_[pr][pc];
        std::vector<double> &prow = tab_[pr];
        for (double &v : prow)
            v /= piv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == pr)
                continue;
            double f = tab_[i][pc];
            if (f == 0.0)
                continue;
            for (std::size_t j = 0; j < total_; ++j)
                tab_[i][j] -= f * prow[j];
        }
        double rf = red_[pc];
        if (rf != 0.0)
            for (std::size_t j = 0; j < total_; ++j)
                red_[j] -= rf * prow[j];
        basis_[pr] = pc;
        in_basis_[pc] = true;
        xb_[pr] = enter_val;
        val_[pc] = enter_val;
    }

    LpSolution extract()
    {
        LpSolution sol;
        sol.status = status_;
        sol.point.assign(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j)
            sol.point[j] = val_[j];
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_)
                sol.point[basis_[i]] = xb_[i];
        if (status_ == LpStatus::Optimal || status_ == LpStatus::IterLimit) {
            double obj = lp_.objective_offset;
            for (std::size_t j = 0; j < n_; ++j)
                obj += lp_.objective[j] * sol.point[j];
            sol.objective_value = obj;
        }
        return sol;
    }

    const LinearProgram &lp_;
    std::size_t n_ = 0, m_ = 0, total_ = 0, art_begin_ = 0;
    bool phase1_needed_ = false;
    std::vector<std::vector<double>> tab_;
    std::vector<double> lo_, hi_, val_, xb_, red_;
    std::vector<std::size_t> basis_;
    std::vector<bool> in_basis_;
    LpStatus status_ = LpStatus::IterLimit;
};

} // namespace detail

/// Solves the LP with a bounded-variable two-phase primal simplex.
/// Deterministic: identical programs yield identical solutions.
inline LpSolution solve(const LinearProgram &lp)
{
    return detail::SimplexSolver(lp).run();
}

/// Plain-text dump for debugging; not a stable interchange format.
inline void dump(std::ostream &os, const LinearProgram &lp)
{
    os << "max:";
    for (std::size_t j = 0; j < lp.num_vars; ++j)
        if (lp.objective[j] != 0.0)
            os << ' ' << format_double(lp.objective[j]) << "*v" << j;
    if (lp.objective_offset != 0.0)
        os << " + " << format_double(lp.objective_offset);
    os << '\n';
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        const LpRow &r = lp.rows[i];
        os << "r" << i << ":";
        for (std::size_t j = 0; j < lp.num_vars; ++j)
            if (r.coeffs[j] != 0.0)
                os << ' ' << format_double(r.coeffs[j]) << "*v" << j;
        os << ' ' << (r.sense == Sense::Le ? "<=" : r.sense == Sense::Ge ? ">=" : "=") << ' '
           << format_double(r.rhs) << '\n';
    }
    for (std::size_t j = 0; j < lp.num_vars; ++j)
        os << "bound: " << format_double(lp.var_lo[j]) << " <= v" << j
           << " <= " << format_double(lp.var_hi[j]) << '\n';
}

} // namespace softbound
