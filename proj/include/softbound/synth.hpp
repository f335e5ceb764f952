#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "softbound/bounds.hpp"
#include "softbound/box.hpp"
#include "softbound/format.hpp"
#include "softbound/parallel.hpp"
#include "softbound/rng.hpp"

namespace softbound {

/// Dirichlet family with one concentrated component: alpha_{j_max} =
/// alpha_max >= 1 and alpha_j = 1 elsewhere.
struct DirichletSpec {
    std::size_t k = 16;
    double alpha_max = 1.0;
    std::size_t j_max = 0;
    std::uint64_t seed = 0;

    double mu_max() const { return alpha_max / (alpha_max + static_cast<double>(k) - 1.0); }

    void validate() const
    {
        if (k < 2)
            throw std::invalid_argument("DirichletSpec: k must be >= 2");
        if (!(alpha_max >= 1.0))
            throw std::invalid_argument("DirichletSpec: alpha_max must be >= 1");
        if (j_max >= k)
            throw std::invalid_argument("DirichletSpec: j_max out of range");
    }
};

/// Concentration for a target largest mean component:
/// alpha_max = mu_max (K - 1) / (1 - mu_max).
inline double alpha_for_mu_max(double mu_max, std::size_t k)
{
    if (!(mu_max > 0.0 && mu_max < 1.0))
        throw std::invalid_argument("alpha_for_mu_max: mu_max must be in (0, 1)");
    return mu_max * (static_cast<double>(k) - 1.0) / (1.0 - mu_max);
}

inline std::vector<double> sample_dirichlet(const DirichletSpec &spec, Xoshiro256pp &rng)
{
    spec.validate();
    std::vector<double> alpha(spec.k, 1.0);
    alpha[spec.j_max] = spec.alpha_max;
    return dirichlet(alpha, rng);
}

/// Inverts the softmax up to the shift degree of freedom: m_j = log(p_j /
/// p_1), then centered to mean zero.
inline std::vector<double> probs_to_logits(std::span<const double> p)
{
    std::vector<double> m(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (!(p[j] > 0.0))
            throw std::domain_error("probs_to_logits: probabilities must be strictly positive");
        m[j] = std::log(p[j] / p[0]);
    }
    double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
    for (double &v : m)
        v -= mean;
    return m;
}

/// One sampled input region: centered logits and the box [m - eps, m + eps].
struct RegionSample {
    std::vector<double> center_logits;
    double epsilon = 0.0;
    Box box;
    std::size_t draws = 0;
};

inline RegionSample make_region(const DirichletSpec &spec, double epsilon, std::size_t draws,
                                Xoshiro256pp &rng)
{
    RegionSample region;
    region.center_logits = probs_to_logits(sample_dirichlet(spec, rng));
    region.epsilon = epsilon;
    region.draws = draws;
    std::vector<double> lo(region.center_logits), hi(region.center_logits);
    for (std::size_t j = 0; j < lo.size(); ++j) {
        lo[j] -= epsilon;
        hi[j] += epsilon;
    }
    region.box = Box(std::move(lo), std::move(hi));
    return region;
}

/// Tightness statistics for one bound kind at one mu_max grid point,
/// aggregated over regions.
struct KindGapStats {
    BoundKind kind = BoundKind::ConstLo;
    double mean_gap = 0.0;     // mean over regions of per-region mean gaps
    double mean_ratio = 0.0;   // mean over regions of gap / same-side constant gap
    double stderr_ratio = 0.0; // standard error of the ratio over regions
    double min_gap = 0.0;      // smallest single-sample gap seen (soundness telemetry)
};

struct GapStats {
    double mu_max = 0.0;
    double alpha_max = 0.0;
    std::size_t k = 0;
    std::size_t j_max = 0;
    double epsilon = 0.0;
    std::size_t regions = 0;
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    std::vector<KindGapStats> kinds;

    const KindGapStats &operator[](BoundKind kind) const
    {
        for (const auto &ks : kinds)
            if (ks.kind == kind)
                return ks;
        throw std::out_of_range("GapStats: kind not measured");
    }
};

struct ExperimentConfig {
    std::size_t k = 16;
    std::size_t j_max = 0;
    double epsilon = 1.0;
    std::size_t regions = 100;
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    std::vector<double> mu_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::vector<BoundKind> kinds; // empty: all kinds applicable to k
};

inline std::vector<BoundKind> default_kinds(std::size_t k)
{
    std::vector<BoundKind> kinds = {
        BoundKind::ConstLo, BoundKind::ConstHi, BoundKind::LinLo,      BoundKind::LinHi,
        BoundKind::ErLo,    BoundKind::ErHi,    BoundKind::LseLo,      BoundKind::LseStarLo,
        BoundKind::LseHi,   BoundKind::LsePrimeLo,
    };
    if (k == 2)
        kinds.push_back(BoundKind::Lse2Lo);
    return kinds;
}

namespace detail {

struct RegionAccum {
    std::vector<double> mean_gap;  // per kind
    std::vector<double> min_gap;   // per kind
};

inline RegionAccum measure_region(const DirichletSpec &spec, double epsilon, std::size_t draws,
                                  std::span<const BoundKind> kinds, std::uint64_t region_index)
{
    Xoshiro256pp rng = derive_stream(spec.seed, region_index);
    RegionSample region = make_region(spec, epsilon, draws, rng);
    BoundContext ctx(region.box, 0);

    RegionAccum acc;
    acc.mean_gap.assign(kinds.size(), 0.0);
    acc.min_gap.assign(kinds.size(), kInf);
    std::vector<double> x(spec.k);
    for (std::size_t s = 0; s < draws; ++s) {
        for (std::size_t j = 0; j < spec.k; ++j)
            x[j] = region.center_logits[j] + epsilon * rng.uniform(-1.0, 1.0);
        double p1 = softmax(x)[0];
        for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
            double b = ctx.value(kinds[ki], x);
            double gap = is_lower(kinds[ki]) ? p1 - b : b - p1;
            acc.mean_gap[ki] += gap;
            acc.min_gap[ki] = std::min(acc.min_gap[ki], gap);
        }
    }
    for (double &g : acc.mean_gap)
        g /= static_cast<double>(draws);
    return acc;
}

} // namespace detail

/// Mean-gap statistics at a single mu_max grid point. Optionally records
/// the per-region ratios (one row per region per kind) for box-plot style
/// post-processing.
inline GapStats gap_stats_at(const DirichletSpec &spec, double epsilon, std::size_t regions,
                             std::size_t draws, std::span<const BoundKind> kinds,
                             std::vector<std::vector<double>> *per_region_ratios = nullptr)
{
    spec.validate();
    std::size_t const_lo_idx = kinds.size(), const_hi_idx = kinds.size();
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
        if (kinds[ki] == BoundKind::ConstLo)
            const_lo_idx = ki;
        if (kinds[ki] == BoundKind::ConstHi)
            const_hi_idx = ki;
    }
    if (const_lo_idx == kinds.size() || const_hi_idx == kinds.size())
        throw std::invalid_argument("gap_stats_at: kinds must include the constant bounds");

    std::vector<detail::RegionAccum> per_region(regions);
    parallel_for(regions, [&](std::size_t r) {
        per_region[r] = detail::measure_region(spec, epsilon, draws, kinds, r);
    });

    GapStats stats;
    stats.mu_max = spec.mu_max();
    stats.alpha_max = spec.alpha_max;
    stats.k = spec.k;
    stats.j_max = spec.j_max;
    stats.epsilon = epsilon;
    stats.regions = regions;
    stats.draws = draws;
    stats.seed = spec.seed;
    stats.kinds.resize(kinds.size());
    if (per_region_ratios)
        per_region_ratios->assign(kinds.size(), std::vector<double>(regions, 0.0));

    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
        KindGapStats ks;
        ks.kind = kinds[ki];
        ks.min_gap = kInf;
        std::vector<double> ratios(regions);
        for (std::size_t r = 0; r < regions; ++r) {
            std::size_t denom_idx = is_lower(kinds[ki]) ? const_lo_idx : const_hi_idx;
            ratios[r] = per_region[r].mean_gap[ki] / per_region[r].mean_gap[denom_idx];
            ks.mean_gap += per_region[r].mean_gap[ki];
            ks.mean_ratio += ratios[r];
            ks.min_gap = std::min(ks.min_gap, per_region[r].min_gap[ki]);
        }
        ks.mean_gap /= static_cast<double>(regions);
        ks.mean_ratio /= static_cast<double>(regions);
        if (regions > 1) {
            double ss = 0.0;
            for (double r : ratios)
                ss += (r - ks.mean_ratio) * (r - ks.mean_ratio);
            ks.stderr_ratio = std::sqrt(ss / static_cast<double>(regions - 1)) /
                              std::sqrt(static_cast<double>(regions));
        }
        if (per_region_ratios)
            (*per_region_ratios)[ki] = std::move(ratios);
        stats.kinds[ki] = std::move(ks);
    }
    return stats;
}

/// Full tightness sweep over the mu_max grid.
inline std::vector<GapStats> run_experiment(const ExperimentConfig &cfg)
{
    std::vector<BoundKind> kinds = cfg.kinds.empty() ? default_kinds(cfg.k) : cfg.kinds;
    std::vector<GapStats> out;
    out.reserve(cfg.mu_grid.size());
    for (double mu : cfg.mu_grid) {
        DirichletSpec spec{cfg.k, alpha_for_mu_max(mu, cfg.k), cfg.j_max, cfg.seed};
        out.push_back(gap_stats_at(spec, cfg.epsilon, cfg.regions, cfg.draws, kinds));
    }
    return out;
}

inline void write_gap_csv(std::ostream &os, std::span<const GapStats> results)
{
    os << "mu_max,kind,side,mean_gap,mean_ratio,stderr_ratio,regions,draws,epsilon,K,seed\n";
    for (const GapStats &gs : results) {
        for (const KindGapStats &ks : gs.kinds) {
            os << format_double(gs.mu_max) << ',' << kind_name(ks.kind) << ','
               << (is_lower(ks.kind) ? "lower" : "upper") << ',' << format_double(ks.mean_gap)
               << ',' << format_double(ks.mean_ratio) << ',' << format_double(ks.stderr_ratio)
               << ',' << gs.regions << ',' << gs.draws << ',' << format_double(gs.epsilon) << ','
               << gs.k << ',' << gs.seed << '\n';
        }
    }
}

/// Per-region ratio dump backing the optional --per-region CSV.
inline void write_per_region_csv(std::ostream &os, const GapStats &gs,
                                 std::span<const BoundKind> kinds,
                                 const std::vector<std::vector<double>> &ratios)
{
    os << "mu_max,region,kind,ratio\n";
    for (std::size_t ki = 0; ki < kinds.size(); ++ki)
        for (std::size_t r = 0; r < ratios[ki].size(); ++r)
            os << format_double(gs.mu_max) << ',' << r << ',' << kind_name(kinds[ki]) << ','
               << format_double(ratios[ki][r]) << '\n';
}

} // namespace softbound
