// softbound command-line front end: bound curves, gradient checks, the
// synthetic tightness experiment, network generation, LP verification and
// the PGD attack oracle. CSV/JSON out; plotting is left to other tools.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "softbound/bounds.hpp"
#include "softbound/format.hpp"
#include "softbound/linearize.hpp"
#include "softbound/net_io.hpp"
#include "softbound/rng.hpp"
#include "softbound/synth.hpp"
#include "softbound/verify.hpp"

namespace {

using namespace softbound;

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

std::vector<double> parse_doubles(const std::string &csv)
{
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(std::stod(item));
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string &csv)
{
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<std::size_t>(std::stoul(item)));
    return out;
}

std::vector<BoundKind> parse_kinds_arg(const std::string &csv)
{
    std::vector<BoundKind> kinds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto k = parse_kind(item);
        if (!k)
            throw CLI::ValidationError("--kinds", "unknown bound kind: " + item);
        kinds.push_back(*k);
    }
    return kinds;
}

std::ostream &open_sink(std::ofstream &file, const std::string &path)
{
    if (path.empty())
        return std::cout;
    file.open(path);
    if (!file)
        throw std::runtime_error("cannot open output file: " + path);
    return file;
}

int cmd_bounds(const std::string &kinds_csv, std::size_t k, double lo, double hi,
               std::size_t grid, const std::string &at, const std::string &box_lo,
               const std::string &box_hi, std::size_t target, const std::string &out_path)
{
    std::ofstream file;
    std::ostream &os = open_sink(file, out_path);
    if (!at.empty()) {
        // Point mode: evaluate every kind at one point of an explicit box.
        std::vector<double> x = parse_doubles(at);
        Box box(parse_doubles(box_lo), parse_doubles(box_hi));
        BoundContext ctx(box, target);
        std::vector<BoundKind> kinds =
            kinds_csv.empty() ? default_kinds(box.size()) : parse_kinds_arg(kinds_csv);
        os << "kind,value\n";
        for (BoundKind kind : kinds)
            os << kind_name(kind) << ',' << format_double(ctx.value(kind, x)) << '\n';
        return kExitOk;
    }
    if (k != 2)
        throw CLI::ValidationError("--k", "grid mode supports K = 2 only; use --at");
    // Grid over the difference x2 - x1 in [lo, hi]; anchor coordinate
    // pinned at zero.
    Box box({0.0, lo}, {0.0, hi});
    BoundContext ctx(box, 0);
    std::vector<BoundKind> kinds =
        kinds_csv.empty() ? default_kinds(2) : parse_kinds_arg(kinds_csv);
    os << "x2,kind,value\n";
    for (std::size_t g = 0; g < grid; ++g) {
        double t = grid == 1 ? lo : lo + (hi - lo) * static_cast<double>(g) / (grid - 1.0);
        std::vector<double> x = {0.0, t};
        for (BoundKind kind : kinds)
            os << format_double(t) << ',' << kind_name(kind) << ','
               << format_double(ctx.value(kind, x)) << '\n';
    }
    return kExitOk;
}

int cmd_synth(std::size_t k, std::size_t j_max, double eps, std::size_t regions,
              std::size_t draws, std::uint64_t seed, const std::string &mu_csv,
              const std::string &kinds_csv, const std::string &out_path,
              const std::string &per_region_path)
{
    ExperimentConfig cfg;
    cfg.k = k;
    cfg.j_max = j_max;
    cfg.epsilon = eps;
    cfg.regions = regions;
    cfg.draws = draws;
    cfg.seed = seed;
    if (!mu_csv.empty())
        cfg.mu_grid = parse_doubles(mu_csv);
    if (!kinds_csv.empty())
        cfg.kinds = parse_kinds_arg(kinds_csv);

    std::vector<BoundKind> kinds = cfg.kinds.empty() ? default_kinds(cfg.k) : cfg.kinds;
    std::ofstream file;
    std::ostream &os = open_sink(file, out_path);
    if (per_region_path.empty()) {
        std::vector<GapStats> results = run_experiment(cfg);
        write_gap_csv(os, results);
    } else {
        std::ofstream per_region_file(per_region_path);
        if (!per_region_file)
            throw std::runtime_error("cannot open output file: " + per_region_path);
        std::vector<GapStats> results;
        bool first = true;
        for (double mu : cfg.mu_grid) {
            DirichletSpec spec{cfg.k, alpha_for_mu_max(mu, cfg.k), cfg.j_max, cfg.seed};
            std::vector<std::vector<double>> ratios;
            GapStats gs = gap_stats_at(spec, cfg.epsilon, cfg.regions, cfg.draws, kinds, &ratios);
            if (first) {
                per_region_file << "mu_max,region,kind,ratio\n";
                first = false;
            }
            for (std::size_t ki = 0; ki < kinds.size(); ++ki)
                for (std::size_t r = 0; r < ratios[ki].size(); ++r)
                    per_region_file << format_double(gs.mu_max) << ',' << r << ','
                                    << kind_name(kinds[ki]) << ','
                                    << format_double(ratios[ki][r]) << '\n';
            results.push_back(std::move(gs));
        }
        write_gap_csv(os, results);
    }
    return kExitOk;
}

int cmd_gradcheck(const std::string &ks_csv, std::size_t trials, std::uint64_t seed, double h,
                  double tol, const std::string &out_path)
{
    const BoundKind kinds[] = {BoundKind::ErLo, BoundKind::ErHi, BoundKind::LseLo,
                               BoundKind::LseStarLo, BoundKind::LseHi};
    std::vector<std::size_t> ks = parse_sizes(ks_csv);
    nlohmann::json per_kind;
    double global_max = 0.0;
    for (BoundKind kind : kinds) {
        double worst = 0.0;
        std::size_t trial_index = 0;
        for (std::size_t k : ks) {
            for (std::size_t t = 0; t < trials; ++t, ++trial_index) {
                Xoshiro256pp rng = derive_stream(seed, trial_index);
                std::vector<double> lo(k), hi(k), x(k);
                for (std::size_t j = 0; j < k; ++j) {
                    double c = rng.uniform(-3.0, 3.0);
                    double w = rng.uniform(0.05, 2.0);
                    lo[j] = c - w;
                    hi[j] = c + w;
                    x[j] = rng.uniform(lo[j], hi[j]);
                }
                Box box(lo, hi);
                std::vector<double> ga = grad(kind, x, box, 0);
                std::vector<double> gn = finite_diff_grad(kind, x, box, h, 0);
                for (std::size_t j = 0; j < k; ++j) {
                    double scale = std::max({1e-8, std::abs(ga[j]), std::abs(gn[j])});
                    worst = std::max(worst, std::abs(ga[j] - gn[j]) / scale);
                }
            }
        }
        per_kind[std::string(kind_name(kind))] = worst;
        global_max = std::max(global_max, worst);
    }
    nlohmann::json doc;
    doc["ks"] = ks;
    doc["trials"] = trials;
    doc["seed"] = seed;
    doc["step"] = h;
    doc["tolerance"] = tol;
    doc["max_relative_error"] = per_kind;
    doc["max_overall"] = global_max;
    std::ofstream file;
    std::ostream &os = open_sink(file, out_path);
    os << doc.dump(2) << '\n';
    return global_max <= tol ? kExitOk : kExitInvariant;
}

int cmd_gen_net(std::size_t inputs, const std::string &layers_csv, std::size_t members,
                std::uint64_t seed, const std::string &out_path)
{
    std::vector<std::size_t> dims = {inputs};
    for (std::size_t w : parse_sizes(layers_csv))
        dims.push_back(w);
    Ensemble e = random_ensemble(dims, members, seed);
    save_ensemble(out_path, e);
    return kExitOk;
}

ScoreSpec make_spec(const Ensemble &e, const std::string &x_csv, std::size_t y_star, double eps,
                    const std::string &score, std::uint64_t seed)
{
    ScoreSpec spec;
    auto rule = parse_score_rule(score);
    if (!rule)
        throw CLI::ValidationError("--score", "expected nll or brier");
    spec.rule = *rule;
    spec.y_star = y_star;
    spec.epsilon = eps;
    if (!x_csv.empty()) {
        spec.x_star = parse_doubles(x_csv);
    } else {
        // No clean input given: draw one from the seed, in [0, 1]^n.
        Xoshiro256pp rng = derive_stream(seed, 0x78737461u);
        spec.x_star.resize(e.input_dim());
        for (double &v : spec.x_star)
            v = rng.uniform01();
    }
    spec.validate(e.input_dim(), e.output_dim());
    return spec;
}

nlohmann::json spec_echo(const std::string &net_path, const ScoreSpec &spec, std::uint64_t seed)
{
    nlohmann::json j;
    j["net"] = net_path;
    j["x_star"] = spec.x_star;
    j["y_star"] = spec.y_star;
    j["epsilon"] = spec.epsilon;
    j["score"] = std::string(score_rule_name(spec.rule));
    j["seed"] = seed;
    return j;
}

int cmd_verify(const std::string &net_path, const std::string &x_csv, std::size_t y_star,
               double eps, const std::string &score, const std::string &family_arg,
               bool all_families, std::size_t steps, std::size_t restarts, std::uint64_t seed,
               bool timing, const std::string &out_path)
{
    auto t0 = std::chrono::steady_clock::now();
    Ensemble e = load_ensemble(net_path);
    ScoreSpec spec = make_spec(e, x_csv, y_star, eps, score, seed);
    AttackOptions attack{steps, restarts, seed, {}};

    std::vector<BoundFamily> families;
    if (all_families) {
        families.assign(std::begin(kAllFamilies), std::end(kAllFamilies));
    } else {
        auto f = parse_family(family_arg);
        if (!f)
            throw CLI::ValidationError("--family", "unknown bound family: " + family_arg);
        families.push_back(*f);
    }

    nlohmann::json doc;
    doc["spec"] = spec_echo(net_path, spec, seed);
    doc["clean_score"] = clean_score(e, spec);
    double attack_value = empirical_attack(e, spec, attack);
    doc["attack_lower_bound"] = attack_value;
    bool violated = false;
    for (BoundFamily f : families) {
        VerifyResult res = verify(e, spec, f, attack);
        nlohmann::json jf;
        jf["lp_status"] = std::string(lp_status_name(res.lp_status));
        jf["score_upper_bound"] = res.score_upper_bound;
        doc["families"][std::string(family_name(f))] = jf;
        if (res.lp_status != LpStatus::Optimal ||
            attack_value > res.score_upper_bound + 1e-6)
            violated = true;
    }
    if (timing) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
        doc["wall_time_ms"] = ms;
    }
    std::ofstream file;
    std::ostream &os = open_sink(file, out_path);
    os << doc.dump(2) << '\n';
    return violated ? kExitInvariant : kExitOk;
}

int cmd_attack(const std::string &net_path, const std::string &x_csv, std::size_t y_star,
               double eps, const std::string &score, std::size_t steps, std::size_t restarts,
               std::uint64_t seed, const std::string &out_path)
{
    Ensemble e = load_ensemble(net_path);
    ScoreSpec spec = make_spec(e, x_csv, y_star, eps, score, seed);
    nlohmann::json doc;
    doc["spec"] = spec_echo(net_path, spec, seed);
    doc["clean_score"] = clean_score(e, spec);
    doc["attack_lower_bound"] = empirical_attack(e, spec, AttackOptions{steps, restarts, seed, {}});
    std::ofstream file;
    std::ostream &os = open_sink(file, out_path);
    os << doc.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Convex softmax bounds, tightness experiments, and LP score verification"};
    app.require_subcommand(1);

    // bounds
    auto *bounds = app.add_subcommand("bounds", "Evaluate bound curves over a box");
    std::string b_kinds, b_at, b_box_lo, b_box_hi, b_out;
    std::size_t b_k = 2, b_grid = 401, b_target = 0;
    double b_lo = -2.0, b_hi = 2.0;
    bounds->add_option("--k", b_k, "Number of softmax inputs (grid mode needs 2)");
    bounds->add_option("--lo", b_lo, "Difference-interval lower end (grid mode)");
    bounds->add_option("--hi", b_hi, "Difference-interval upper end (grid mode)");
    bounds->add_option("--grid", b_grid, "Grid resolution");
    bounds->add_option("--kinds", b_kinds, "Comma list of bound kinds (default: all)");
    bounds->add_option("--at", b_at, "Point mode: evaluate at this comma-separated point");
    bounds->add_option("--box-lo", b_box_lo, "Point mode: box lower corner");
    bounds->add_option("--box-hi", b_box_hi, "Point mode: box upper corner");
    bounds->add_option("--target", b_target, "Output index to bound");
    bounds->add_option("--out", b_out, "Output CSV path (default: stdout)");

    // synth
    auto *synth = app.add_subcommand("synth", "Dirichlet tightness experiment CSV");
    std::size_t s_k = 16, s_jmax = 0, s_regions = 100, s_draws = 1000;
    double s_eps = 1.0;
    std::uint64_t s_seed = 0;
    std::string s_mu, s_kinds, s_out, s_per_region;
    synth->add_option("--k", s_k, "Softmax dimension");
    synth->add_option("--jmax", s_jmax, "Concentrated Dirichlet component");
    synth->add_option("--eps", s_eps, "Box half-width");
    synth->add_option("--regions", s_regions, "Input regions per grid point");
    synth->add_option("--draws", s_draws, "Uniform draws per region");
    synth->add_option("--seed", s_seed, "RNG seed")->required();
    synth->add_option("--mu-grid", s_mu, "Comma list of mu_max grid points");
    synth->add_option("--kinds", s_kinds, "Comma list of bound kinds");
    synth->add_option("--out", s_out, "Output CSV path (default: stdout)");
    synth->add_option("--per-region", s_per_region, "Also write per-region ratios CSV here");

    // gradcheck
    auto *gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
    std::string g_ks = "2,3,16", g_out;
    std::size_t g_trials = 100;
    std::uint64_t g_seed = 0;
    double g_h = 1e-5, g_tol = 1e-5;
    gradcheck->add_option("--ks", g_ks, "Comma list of softmax dimensions");
    gradcheck->add_option("--trials", g_trials, "Random points per kind per dimension");
    gradcheck->add_option("--seed", g_seed, "RNG seed");
    gradcheck->add_option("--step", g_h, "Finite-difference relative step");
    gradcheck->add_option("--tol", g_tol, "Max relative error accepted");
    gradcheck->add_option("--out", g_out, "Output JSON path (default: stdout)");

    // gen-net
    auto *gen = app.add_subcommand("gen-net", "Write a random ReLU ensemble JSON");
    std::size_t n_inputs = 4, n_members = 3;
    std::uint64_t n_seed = 0;
    std::string n_layers = "8,3", n_out;
    gen->add_option("--inputs", n_inputs, "Input dimension");
    gen->add_option("--layers", n_layers, "Comma list of layer widths (last = classes)");
    gen->add_option("--members", n_members, "Ensemble size");
    gen->add_option("--seed", n_seed, "RNG seed")->required();
    gen->add_option("--out", n_out, "Output JSON path")->required();

    // verify
    auto *verify_cmd = app.add_subcommand("verify", "LP upper bound + attack lower bound");
    std::string v_net, v_x, v_score = "nll", v_family = "er_tangent", v_out;
    std::size_t v_y = 0, v_steps = 200, v_restarts = 3;
    double v_eps = 0.0;
    std::uint64_t v_seed = 0;
    bool v_all = false, v_timing = false;
    verify_cmd->add_option("--net", v_net, "Network JSON path")->required();
    verify_cmd->add_option("--x-star", v_x, "Clean input (comma list; default: seeded random)");
    verify_cmd->add_option("--y-star", v_y, "True class index");
    verify_cmd->add_option("--eps", v_eps, "l_inf radius");
    verify_cmd->add_option("--score", v_score, "nll or brier");
    verify_cmd->add_option("--family", v_family, "Bound family");
    verify_cmd->add_flag("--all-families", v_all, "Verify with every bound family");
    verify_cmd->add_option("--steps", v_steps, "Attack steps");
    verify_cmd->add_option("--restarts", v_restarts, "Attack restarts");
    verify_cmd->add_option("--seed", v_seed, "RNG seed");
    verify_cmd->add_flag("--timing", v_timing, "Include wall time in the report");
    verify_cmd->add_option("--out", v_out, "Output JSON path (default: stdout)");

    // attack
    auto *attack_cmd = app.add_subcommand("attack", "Projected gradient ascent lower bound");
    std::string a_net, a_x, a_score = "nll", a_out;
    std::size_t a_y = 0, a_steps = 200, a_restarts = 3;
    double a_eps = 0.0;
    std::uint64_t a_seed = 0;
    attack_cmd->add_option("--net", a_net, "Network JSON path")->required();
    attack_cmd->add_option("--x-star", a_x, "Clean input (comma list; default: seeded random)");
    attack_cmd->add_option("--y-star", a_y, "True class index");
    attack_cmd->add_option("--eps", a_eps, "l_inf radius");
    attack_cmd->add_option("--score", a_score, "nll or brier");
    attack_cmd->add_option("--steps", a_steps, "Attack steps");
    attack_cmd->add_option("--restarts", a_restarts, "Attack restarts");
    attack_cmd->add_option("--seed", a_seed, "RNG seed");
    attack_cmd->add_option("--out", a_out, "Output JSON path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (bounds->parsed())
            return cmd_bounds(b_kinds, b_k, b_lo, b_hi, b_grid, b_at, b_box_lo, b_box_hi,
                              b_target, b_out);
        if (synth->parsed())
            return cmd_synth(s_k, s_jmax, s_eps, s_regions, s_draws, s_seed, s_mu, s_kinds,
                             s_out, s_per_region);
        if (gradcheck->parsed())
            return cmd_gradcheck(g_ks, g_trials, g_seed, g_h, g_tol, g_out);
        if (gen->parsed())
            return cmd_gen_net(n_inputs, n_layers, n_members, n_seed, n_out);
        if (verify_cmd->parsed())
            return cmd_verify(v_net, v_x, v_y, v_eps, v_score, v_family, v_all, v_steps,
                              v_restarts, v_seed, v_timing, v_out);
        if (attack_cmd->parsed())
            return cmd_attack(a_net, a_x, a_y, a_eps, a_score, a_steps, a_restarts, a_seed,
                              a_out);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
