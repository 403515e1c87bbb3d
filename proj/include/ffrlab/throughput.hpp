#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ffrlab/config.hpp"
#include "ffrlab/solver.hpp"

namespace ffrlab {

namespace detail {

inline double positive_part_sum(const std::vector<double>& pmf, double xi, double p_tx,
                                const std::vector<double>& sched_interior,
                                const std::vector<double>& sched_edge, double served_interior,
                                double served_edge) {
    if (xi >= 1.0) return 0.0;
    const double norm = 1.0 - pmf[0];
    if (norm <= 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 1; k < pmf.size(); ++k) {
        if (pmf[k] < 1e-14) continue;
        const double mu_bar =
            p_tx * (sched_interior[k] * served_interior + sched_edge[k] * served_edge);
        if (mu_bar > xi) sum += pmf[k] * (mu_bar - xi) / (1.0 - xi);
    }
    return sum / norm;
}

}  // namespace detail

// Mean packet throughput of a user at distance r: tier-weighted stable-queue
// drain rate, with the per-distance classification and decode probabilities
// folded into the joint served_* terms.
inline double mpt_at_distance(double r, const StpEvaluator& eval, const StpSolution& sol,
                              const ScenarioConfig& cfg, Direction dir) {
    const double xi = dir == Direction::dl ? cfg.dl_arrival : cfg.ul_arrival;
    const double p_tx =
        dir == Direction::dl ? sol.activity.dl_probability : sol.activity.ul_probability;
    const auto& sched_in = dir == Direction::dl ? sol.sched_interior_dl : sol.sched_interior_ul;
    const auto& sched_e = dir == Direction::dl ? sol.sched_edge_dl : sol.sched_edge_ul;
    return detail::positive_part_sum(sol.activity.load_pmf, xi, p_tx, sched_in, sched_e,
                                     eval.served_interior(r, dir), eval.served_edge(r, dir));
}

inline double mpt_at_distance(double r, const StpSolution& sol, const ScenarioConfig& cfg,
                              Direction dir, const QuadratureOptions& opt = {}) {
    return mpt_at_distance(r, StpEvaluator(sol, cfg, opt), sol, cfg, dir);
}

// Distance-averaged throughput from the solver's averaged state.
inline double mpt_average(const StpSolution& sol, const ScenarioConfig& cfg, Direction dir) {
    const double xi = dir == Direction::dl ? cfg.dl_arrival : cfg.ul_arrival;
    const double p_tx =
        dir == Direction::dl ? sol.activity.dl_probability : sol.activity.ul_probability;
    const double q_in = dir == Direction::dl ? sol.interior_prob_dl : sol.interior_prob_ul;
    const double s_in = dir == Direction::dl ? sol.stp_dl_interior : sol.stp_ul_interior;
    const double s_e = dir == Direction::dl ? sol.stp_dl_edge : sol.stp_ul_edge;
    const auto& sched_in = dir == Direction::dl ? sol.sched_interior_dl : sol.sched_interior_ul;
    const auto& sched_e = dir == Direction::dl ? sol.sched_edge_dl : sol.sched_edge_ul;
    return detail::positive_part_sum(sol.activity.load_pmf, xi, p_tx, sched_in, sched_e,
                                     q_in * s_in, (1.0 - q_in) * s_e);
}

struct MptCurve {
    Direction direction = Direction::dl;
    std::vector<double> r;
    std::vector<double> value;
    bool monotone = true;  // flagged false when any step rises by more than 1e-9
};

inline MptCurve mpt_curve(const StpSolution& sol, const ScenarioConfig& cfg, Direction dir,
                          int points = 64, double r_max = -1.0,
                          const QuadratureOptions& opt = {}) {
    if (r_max <= 0.0) r_max = cfg.cell_radius;
    StpEvaluator eval(sol, cfg, opt);
    MptCurve curve;
    curve.direction = dir;
    curve.r.reserve(points);
    curve.value.reserve(points);
    for (int i = 0; i < points; ++i) {
        const double r = points == 1 ? 0.0 : r_max * i / (points - 1);
        curve.r.push_back(r);
        curve.value.push_back(mpt_at_distance(r, eval, sol, cfg, dir));
        if (i > 0 && curve.value[i] > curve.value[i - 1] + 1e-9) curve.monotone = false;
    }
    return curve;
}

struct SweepEntry {
    double theta_db = 0.0;
    int edge_subbands = 0;
    double mpt_dl = 0.0;
    double mpt_ul = 0.0;
    double mpt_dl_at_r = 0.0;  // at the cell radius, the binding point
    double mpt_ul_at_r = 0.0;
    bool feasible_dl = false;
    bool feasible_ul = false;
    bool converged = false;
};

// Exhaustive grid evaluation in deterministic grid order (thresholds outer,
// edge band counts inner). No state is reused across points unless warm
// starting is requested.
inline std::vector<SweepEntry> run_sweep(const ScenarioConfig& base, const OptimizerConfig& ocfg,
                                         const SolverOptions& sopt = {},
                                         bool warm_start = false) {
    std::vector<SweepEntry> sweep;
    sweep.reserve(ocfg.theta_grid.size() * ocfg.l_candidates.size());
    StpSolution previous;
    bool have_previous = false;
    for (double theta_db : ocfg.theta_grid) {
        for (int l : ocfg.l_candidates) {
            ScenarioConfig cfg = base;
            cfg.edge_subbands = l;
            cfg.classification_threshold = db_to_linear(theta_db);
            if (cfg.reuse_factor * l >= cfg.total_subbands)
                throw ConfigError("sweep point leaves no interior sub-band: L=" +
                                  std::to_string(l));
            SolverOptions point_opt = sopt;
            point_opt.warm_from = (warm_start && have_previous) ? &previous : nullptr;
            StpSolution sol = solve_fixed_point(cfg, point_opt);
            StpEvaluator eval(sol, cfg, point_opt.quad);
            SweepEntry entry;
            entry.theta_db = theta_db;
            entry.edge_subbands = l;
            entry.mpt_dl = mpt_average(sol, cfg, Direction::dl);
            entry.mpt_ul = mpt_average(sol, cfg, Direction::ul);
            entry.mpt_dl_at_r = mpt_at_distance(cfg.cell_radius, eval, sol, cfg, Direction::dl);
            entry.mpt_ul_at_r = mpt_at_distance(cfg.cell_radius, eval, sol, cfg, Direction::ul);
            entry.feasible_dl = entry.mpt_dl_at_r >= ocfg.min_mpt_dl;
            entry.feasible_ul = entry.mpt_ul_at_r >= ocfg.min_mpt_ul;
            entry.converged = sol.converged;
            sweep.push_back(entry);
            previous = std::move(sol);
            have_previous = true;
        }
    }
    return sweep;
}

struct OptimizationResult {
    Direction direction = Direction::dl;
    bool feasible = false;
    double best_theta_db = 0.0;
    int best_edge_subbands = 0;
    double best_mpt = 0.0;        // objective direction at the optimum
    double best_mpt_other = 0.0;  // the other direction at the same point
    double constraint_value = 0.0;  // throughput at the cell radius there
    std::vector<SweepEntry> sweep;
    std::vector<double> slack;  // per entry: constraint value minus requirement
    // Joint point maximizing the DL+UL sum over points feasible in both
    // directions; reported alongside, never used as the per-direction answer.
    bool sum_feasible = false;
    double sum_theta_db = 0.0;
    int sum_edge_subbands = 0;
    double sum_mpt = 0.0;
};

inline OptimizationResult optimize_from_sweep(std::vector<SweepEntry> sweep,
                                              const OptimizerConfig& ocfg, Direction dir) {
    OptimizationResult res;
    res.direction = dir;
    res.slack.reserve(sweep.size());
    const double requirement = dir == Direction::dl ? ocfg.min_mpt_dl : ocfg.min_mpt_ul;
    for (const SweepEntry& e : sweep) {
        const double objective = dir == Direction::dl ? e.mpt_dl : e.mpt_ul;
        const double at_r = dir == Direction::dl ? e.mpt_dl_at_r : e.mpt_ul_at_r;
        res.slack.push_back(at_r - requirement);
        const bool feasible = dir == Direction::dl ? e.feasible_dl : e.feasible_ul;
        if (!feasible) continue;
        const bool better =
            !res.feasible || objective > res.best_mpt ||
            (objective == res.best_mpt &&
             (e.edge_subbands < res.best_edge_subbands ||
              (e.edge_subbands == res.best_edge_subbands && e.theta_db < res.best_theta_db)));
        if (better) {
            res.feasible = true;
            res.best_theta_db = e.theta_db;
            res.best_edge_subbands = e.edge_subbands;
            res.best_mpt = objective;
            res.best_mpt_other = dir == Direction::dl ? e.mpt_ul : e.mpt_dl;
            res.constraint_value = at_r;
        }
    }
    for (const SweepEntry& e : sweep) {
        if (!(e.feasible_dl && e.feasible_ul)) continue;
        const double total = e.mpt_dl + e.mpt_ul;
        const bool better =
            !res.sum_feasible || total > res.sum_mpt ||
            (total == res.sum_mpt &&
             (e.edge_subbands < res.sum_edge_subbands ||
              (e.edge_subbands == res.sum_edge_subbands && e.theta_db < res.sum_theta_db)));
        if (better) {
            res.sum_feasible = true;
            res.sum_theta_db = e.theta_db;
            res.sum_edge_subbands = e.edge_subbands;
            res.sum_mpt = total;
        }
    }
    res.sweep = std::move(sweep);
    return res;
}

inline OptimizationResult optimize(const ScenarioConfig& base, const OptimizerConfig& ocfg,
                                   Direction dir, const SolverOptions& sopt = {}) {
    return optimize_from_sweep(run_sweep(base, ocfg, sopt), ocfg, dir);
}

}  // namespace ffrlab
