#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffrlab/config.hpp"
#include "ffrlab/kernels.hpp"
#include "ffrlab/queue.hpp"
#include "ffrlab/quadrature.hpp"

namespace ffrlab {

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StpSolution;

struct SolverOptions {
    double damping = 0.5;
    double tolerance = 1e-6;
    int max_iterations = 500;
    double initial_stp = 1.0;
    // Optional warm start: seed the iteration from another converged state
    // instead of the optimistic all-ones start.
    const StpSolution* warm_from = nullptr;
    // Saturated-DL reduction: full-buffer DL-only network with every cell
    // always holding one interior and one edge transmission. Queue coupling
    // is bypassed; the result is a direct evaluation, not an iteration.
    bool force_saturated_dl = false;
    QuadratureOptions quad{};
};

struct ClassStp {
    double dl_interior = 1.0;
    double dl_edge = 1.0;
    double ul_interior = 1.0;
    double ul_edge = 1.0;
};

struct ActivityPair {
    double edge = 0.0;
    double interior = 0.0;
};

// Fraction of a tier-k cell's band capacity in use per class: edge activity
// carries the 1/reuse factor since each cell owns one of `reuse` groups.
inline ActivityPair activity_fractions(int k, double q_edge, double q_interior, double nonempty,
                                       int edge_subbands, int interior_subbands, int reuse) {
    ActivityPair chi;
    if (edge_subbands > 0)
        chi.edge = std::min(k * q_edge * nonempty / edge_subbands, 1.0) / reuse;
    chi.interior = std::min(k * q_interior * nonempty / interior_subbands, 1.0);
    return chi;
}

struct StpSolution {
    double stp_dl_interior = 1.0;
    double stp_dl_edge = 1.0;
    double stp_ul_interior = 1.0;
    double stp_ul_edge = 1.0;
    double interior_prob_dl = 1.0;
    double interior_prob_ul = 1.0;
    std::vector<double> nonempty_dl, nonempty_ul;            // indexed by tier, entry 0 unused
    std::vector<double> sched_interior_dl, sched_edge_dl;    // scheduling grants per tier
    std::vector<double> sched_interior_ul, sched_edge_ul;
    TierActivity activity;
    double density_dl_interior = 0.0;
    double density_dl_edge = 0.0;
    double density_ul_interior = 0.0;
    double density_ul_edge = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
};

// Classification probability at distance r: chance the trial-band SIR clears
// the classification threshold against the interior interferer fields. UL
// links see the threshold scaled up by the SAP-to-user power ratio.
inline double interior_prob_at_r(double r, double density_dl_interior, double density_ul_interior,
                                 double theta, Direction dir, const ScenarioConfig& cfg,
                                 const QuadratureOptions& opt = {}) {
    const double thr = dir == Direction::dl ? theta : theta * cfg.sap_power / cfg.user_power;
    return stp_poisson_field(density_dl_interior, density_ul_interior, thr, r,
                             cfg.pathloss_exponent, cfg.user_power / cfg.sap_power, opt);
}

// Caches the four exponent coefficients per direction so per-distance STPs
// and throughput curves reduce to a handful of exponentials.
class StpEvaluator {
  public:
    StpEvaluator(const StpSolution& sol, const ScenarioConfig& cfg,
                 const QuadratureOptions& opt = {}) {
        const double alpha = cfg.pathloss_exponent;
        const double ratio = cfg.user_power / cfg.sap_power;
        const double theta = cfg.classification_threshold;
        const double top = std::max(cfg.decode_threshold, theta);
        const double ul_scale = cfg.sap_power / cfg.user_power;
        a_ref_[0] = field_decay(sol.density_dl_interior, sol.density_ul_interior, theta, alpha,
                                ratio, opt);
        a_top_[0] = field_decay(sol.density_dl_interior, sol.density_ul_interior, top, alpha,
                                ratio, opt);
        a_edge_[0] = field_decay(sol.density_dl_edge, sol.density_ul_edge, cfg.decode_threshold,
                                 alpha, ratio, opt);
        b_cell_[0] = cell_field_decay(cfg.decode_threshold, theta, sol.activity, opt);
        a_ref_[1] = field_decay(sol.density_dl_interior, sol.density_ul_interior,
                                theta * ul_scale, alpha, ratio, opt);
        a_top_[1] = field_decay(sol.density_dl_interior, sol.density_ul_interior, top * ul_scale,
                                alpha, ratio, opt);
        a_edge_[1] = field_decay(sol.density_dl_edge, sol.density_ul_edge,
                                 cfg.decode_threshold * ul_scale, alpha, ratio, opt);
        b_cell_[1] = cell_field_decay(cfg.decode_threshold * ul_scale, theta * ul_scale,
                                      sol.activity, opt);
    }

    double interior_prob(double r, Direction dir) const {
        return std::exp(-a_ref_[idx(dir)] * r * r);
    }
    // Joint probability of being classified interior and decoding: the ratio
    // form cancels, leaving a single exponential.
    double served_interior(double r, Direction dir) const {
        return std::exp(-a_top_[idx(dir)] * r * r);
    }
    // Joint probability of being classified edge, scheduled field beating the
    // decode threshold: difference of the marginal and joint tails.
    double served_edge(double r, Direction dir) const {
        const int i = idx(dir);
        const double rr = r * r;
        return std::max(std::exp(-a_edge_[i] * rr) - std::exp(-b_cell_[i] * rr), 0.0);
    }

    double stp_interior(double r, Direction dir) const {
        const int i = idx(dir);
        return std::exp(-(a_top_[i] - a_ref_[i]) * r * r);
    }
    double stp_edge(double r, Direction dir) const {
        const int i = idx(dir);
        const double rr = r * r;
        const double den = -std::expm1(-a_ref_[i] * rr);
        if (den < 1e-12)
            throw SolverError(std::string("edge class has vanishing probability at r=") +
                              std::to_string(r) + " (" + name(dir) +
                              "): virtually every user is interior here");
        const double num = std::exp(-a_edge_[i] * rr) - std::exp(-b_cell_[i] * rr);
        return std::clamp(num / den, 0.0, 1.0);
    }
    ClassStp stp_at(double r) const {
        return ClassStp{stp_interior(r, Direction::dl), stp_edge(r, Direction::dl),
                        stp_interior(r, Direction::ul), stp_edge(r, Direction::ul)};
    }

  private:
    static int idx(Direction d) { return d == Direction::dl ? 0 : 1; }
    double a_ref_[2], a_top_[2], a_edge_[2], b_cell_[2];
};

inline ClassStp stp_at_distance(double r, const StpSolution& sol, const ScenarioConfig& cfg,
                                const QuadratureOptions& opt = {}) {
    return StpEvaluator(sol, cfg, opt).stp_at(r);
}

namespace detail {

struct SolverScratch {
    std::vector<double> q_in = {1.0, 1.0};  // per direction
    ClassStp stp;
    std::vector<std::vector<double>> nonempty;  // [dir][tier]
};

}  // namespace detail

// Damped Picard iteration over the coupled state (four averaged STPs, two
// classification probabilities, per-tier buffer occupancies). Non-convergence
// is reported in the result, not thrown.
inline StpSolution solve_fixed_point(const ScenarioConfig& cfg, const SolverOptions& opt = {}) {
    const int k_max = cfg.max_users;
    const double alpha = cfg.pathloss_exponent;
    const double ratio = cfg.user_power / cfg.sap_power;
    const double ul_scale = cfg.sap_power / cfg.user_power;
    const double theta = cfg.classification_threshold;
    const double t_dec = cfg.decode_threshold;
    const int m_sub = cfg.total_subbands - cfg.reuse_factor * cfg.edge_subbands;
    const double xi[2] = {cfg.dl_arrival, cfg.ul_arrival};
    const double xi_sum = cfg.dl_arrival + cfg.ul_arrival;
    const double p_tx[2] = {xi_sum > 0.0 ? cfg.dl_arrival / xi_sum : 0.5,
                            xi_sum > 0.0 ? cfg.ul_arrival / xi_sum : 0.5};
    const auto pmf = cell_load_pmf(cfg.sap_density, cfg.user_density, k_max);

    StpSolution sol;
    sol.nonempty_dl.assign(k_max + 1, 0.0);
    sol.nonempty_ul.assign(k_max + 1, 0.0);
    sol.sched_interior_dl.assign(k_max + 1, 0.0);
    sol.sched_edge_dl.assign(k_max + 1, 0.0);
    sol.sched_interior_ul.assign(k_max + 1, 0.0);
    sol.sched_edge_ul.assign(k_max + 1, 0.0);
    sol.activity.chi_dl_interior.assign(k_max + 1, 0.0);
    sol.activity.chi_dl_edge.assign(k_max + 1, 0.0);
    sol.activity.chi_ul_interior.assign(k_max + 1, 0.0);
    sol.activity.chi_ul_edge.assign(k_max + 1, 0.0);
    sol.activity.load_pmf = pmf;
    sol.activity.power_ratio = ratio;
    sol.activity.alpha = alpha;
    sol.activity.sap_density = cfg.sap_density;
    sol.activity.dl_probability = p_tx[0];
    sol.activity.ul_probability = p_tx[1];

    const double mass_above_empty = 1.0 - pmf[0];

    if (opt.force_saturated_dl) {
        sol.activity.dl_probability = 1.0;
        sol.activity.ul_probability = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            sol.activity.chi_dl_interior[k] = 1.0;
            sol.activity.chi_dl_edge[k] = 1.0 / cfg.reuse_factor;
            sol.nonempty_dl[k] = 1.0;
            sol.nonempty_ul[k] = 1.0;
        }
        sol.density_dl_interior = cfg.sap_density * mass_above_empty;
        sol.density_dl_edge = cfg.sap_density * mass_above_empty / cfg.reuse_factor;
        sol.density_ul_interior = 0.0;
        sol.density_ul_edge = 0.0;
        sol.interior_prob_dl = average_over_distance(
            [&](double r) {
                return interior_prob_at_r(r, sol.density_dl_interior, 0.0, theta, Direction::dl,
                                          cfg, opt.quad);
            },
            cfg.sap_density, opt.quad);
        sol.interior_prob_ul = average_over_distance(
            [&](double r) {
                return interior_prob_at_r(r, sol.density_dl_interior, 0.0, theta, Direction::ul,
                                          cfg, opt.quad);
            },
            cfg.sap_density, opt.quad);
        for (int k = 1; k <= k_max; ++k) {
            sol.sched_interior_dl[k] = scheduling_prob(k, m_sub, sol.interior_prob_dl, 1.0);
            sol.sched_edge_dl[k] =
                scheduling_prob(k, cfg.edge_subbands, 1.0 - sol.interior_prob_dl, 1.0);
            sol.sched_interior_ul[k] = scheduling_prob(k, m_sub, sol.interior_prob_ul, 1.0);
            sol.sched_edge_ul[k] =
                scheduling_prob(k, cfg.edge_subbands, 1.0 - sol.interior_prob_ul, 1.0);
        }
    }

    detail::SolverScratch cur;
    cur.stp = ClassStp{opt.initial_stp, opt.initial_stp, opt.initial_stp, opt.initial_stp};
    cur.nonempty = {std::vector<double>(k_max + 1, 0.0), std::vector<double>(k_max + 1, 0.0)};
    if (opt.warm_from && static_cast<int>(opt.warm_from->nonempty_dl.size()) == k_max + 1) {
        const StpSolution& w = *opt.warm_from;
        cur.stp = ClassStp{w.stp_dl_interior, w.stp_dl_edge, w.stp_ul_interior, w.stp_ul_edge};
        cur.q_in = {w.interior_prob_dl, w.interior_prob_ul};
        cur.nonempty = {w.nonempty_dl, w.nonempty_ul};
    }

    double residual = 0.0;
    int iterations = 0;
    if (!opt.force_saturated_dl) {
        for (iterations = 1; iterations <= opt.max_iterations; ++iterations) {
            // Fresh per-tier occupancies from the current averaged state.
            std::vector<std::vector<double>> nonempty_new = cur.nonempty;
            for (int d = 0; d < 2; ++d) {
                const double q_in = cur.q_in[d];
                const double q_e = 1.0 - q_in;
                const double s_in = d == 0 ? cur.stp.dl_interior : cur.stp.ul_interior;
                const double s_e = d == 0 ? cur.stp.dl_edge : cur.stp.ul_edge;
                for (int k = 1; k <= k_max; ++k) {
                    const double grant_in = scheduling_prob(k, m_sub, q_in, cur.nonempty[d][k]);
                    const double grant_e =
                        scheduling_prob(k, cfg.edge_subbands, q_e, cur.nonempty[d][k]);
                    const double mu_bar =
                        departure_prob(p_tx[d], q_in, q_e, grant_in, grant_e, s_in, s_e);
                    nonempty_new[d][k] = nonempty_prob(xi[d], mu_bar);
                }
            }
            // Interferer densities implied by the fresh occupancies.
            double chi_sum[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // [dir][class: 0 interior, 1 edge]
            TierActivity& act = sol.activity;
            for (int d = 0; d < 2; ++d) {
                const double q_in = cur.q_in[d];
                for (int k = 1; k <= k_max; ++k) {
                    const ActivityPair chi =
                        activity_fractions(k, 1.0 - q_in, q_in, nonempty_new[d][k],
                                           cfg.edge_subbands, m_sub, cfg.reuse_factor);
                    (d == 0 ? act.chi_dl_interior : act.chi_ul_interior)[k] = chi.interior;
                    (d == 0 ? act.chi_dl_edge : act.chi_ul_edge)[k] = chi.edge;
                    chi_sum[d][0] += pmf[k] * chi.interior;
                    chi_sum[d][1] += pmf[k] * chi.edge;
                }
            }
            const double lam_dl_in = cfg.sap_density * p_tx[0] * chi_sum[0][0];
            const double lam_dl_e = cfg.sap_density * p_tx[0] * chi_sum[0][1];
            const double lam_ul_in = cfg.sap_density * p_tx[1] * chi_sum[1][0];
            const double lam_ul_e = cfg.sap_density * p_tx[1] * chi_sum[1][1];

            // Averaged classification probabilities and class STPs.
            double q_new[2];
            ClassStp stp_new;
            for (int d = 0; d < 2; ++d) {
                const double scale = d == 0 ? 1.0 : ul_scale;
                const double a_ref =
                    field_decay(lam_dl_in, lam_ul_in, theta * scale, alpha, ratio, opt.quad);
                const double a_top = field_decay(lam_dl_in, lam_ul_in,
                                                 std::max(t_dec, theta) * scale, alpha, ratio,
                                                 opt.quad);
                const double a_edge =
                    field_decay(lam_dl_e, lam_ul_e, t_dec * scale, alpha, ratio, opt.quad);
                const double b_cell =
                    cell_field_decay(t_dec * scale, theta * scale, act, opt.quad);
                const double q_in = average_over_distance(
                    [&](double r) { return std::exp(-a_ref * r * r); }, cfg.sap_density,
                    opt.quad);
                const double top_avg = average_over_distance(
                    [&](double r) { return std::exp(-a_top * r * r); }, cfg.sap_density,
                    opt.quad);
                const double edge_num = average_over_distance(
                    [&](double r) {
                        const double rr = r * r;
                        return std::exp(-a_edge * rr) - std::exp(-b_cell * rr);
                    },
                    cfg.sap_density, opt.quad);
                q_new[d] = q_in;
                const double s_in = q_in > 0.0 ? std::clamp(top_avg / q_in, 0.0, 1.0) : 1.0;
                const double den = 1.0 - q_in;
                double s_e;
                if (den < 1e-12)
                    s_e = (a_edge + b_cell < 1e-15) ? 1.0 : 0.0;
                else
                    s_e = std::clamp(edge_num / den, 0.0, 1.0);
                if (d == 0) {
                    stp_new.dl_interior = s_in;
                    stp_new.dl_edge = s_e;
                } else {
                    stp_new.ul_interior = s_in;
                    stp_new.ul_edge = s_e;
                }
            }
            sol.density_dl_interior = lam_dl_in;
            sol.density_dl_edge = lam_dl_e;
            sol.density_ul_interior = lam_ul_in;
            sol.density_ul_edge = lam_ul_e;

            // Pre-damping residual, then the damped update.
            residual = 0.0;
            const auto track = [&](double& cell, double next) {
                residual = std::max(residual, std::fabs(next - cell));
                cell += opt.damping * (next - cell);
            };
            track(cur.stp.dl_interior, stp_new.dl_interior);
            track(cur.stp.dl_edge, stp_new.dl_edge);
            track(cur.stp.ul_interior, stp_new.ul_interior);
            track(cur.stp.ul_edge, stp_new.ul_edge);
            track(cur.q_in[0], q_new[0]);
            track(cur.q_in[1], q_new[1]);
            for (int d = 0; d < 2; ++d)
                for (int k = 1; k <= k_max; ++k) track(cur.nonempty[d][k], nonempty_new[d][k]);
            sol.residual_history.push_back(residual);
            if (residual < opt.tolerance) break;
        }
        sol.iterations = std::min(iterations, opt.max_iterations);
        sol.residual = residual;
        sol.converged = residual < opt.tolerance;

        // Publish a mutually consistent snapshot of the final damped state:
        // occupancies, grants, activities, and densities all derived from it.
        sol.stp_dl_interior = cur.stp.dl_interior;
        sol.stp_dl_edge = cur.stp.dl_edge;
        sol.stp_ul_interior = cur.stp.ul_interior;
        sol.stp_ul_edge = cur.stp.ul_edge;
        sol.interior_prob_dl = cur.q_in[0];
        sol.interior_prob_ul = cur.q_in[1];
        double chi_sum[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        for (int d = 0; d < 2; ++d) {
            const double q_in = cur.q_in[d];
            for (int k = 1; k <= k_max; ++k) {
                const double occ = cur.nonempty[d][k];
                (d == 0 ? sol.nonempty_dl : sol.nonempty_ul)[k] = occ;
                (d == 0 ? sol.sched_interior_dl : sol.sched_interior_ul)[k] =
                    scheduling_prob(k, m_sub, q_in, occ);
                (d == 0 ? sol.sched_edge_dl : sol.sched_edge_ul)[k] =
                    scheduling_prob(k, cfg.edge_subbands, 1.0 - q_in, occ);
                const ActivityPair chi = activity_fractions(k, 1.0 - q_in, q_in, occ,
                                                            cfg.edge_subbands, m_sub,
                                                            cfg.reuse_factor);
                (d == 0 ? sol.activity.chi_dl_interior : sol.activity.chi_ul_interior)[k] =
                    chi.interior;
                (d == 0 ? sol.activity.chi_dl_edge : sol.activity.chi_ul_edge)[k] = chi.edge;
                chi_sum[d][0] += pmf[k] * chi.interior;
                chi_sum[d][1] += pmf[k] * chi.edge;
            }
        }
        sol.density_dl_interior = cfg.sap_density * p_tx[0] * chi_sum[0][0];
        sol.density_dl_edge = cfg.sap_density * p_tx[0] * chi_sum[0][1];
        sol.density_ul_interior = cfg.sap_density * p_tx[1] * chi_sum[1][0];
        sol.density_ul_edge = cfg.sap_density * p_tx[1] * chi_sum[1][1];
    }

    if (opt.force_saturated_dl) {
        StpEvaluator eval(sol, cfg, opt.quad);
        const double q_dl = sol.interior_prob_dl;
        const double q_ul = sol.interior_prob_ul;
        const auto averaged = [&](Direction dir, double q_in) {
            const double top_avg = average_over_distance(
                [&](double r) { return eval.served_interior(r, dir); }, cfg.sap_density,
                opt.quad);
            const double edge_avg = average_over_distance(
                [&](double r) {
                    return eval.served_edge(r, dir);
                },
                cfg.sap_density, opt.quad);
            const double s_in = q_in > 0.0 ? std::clamp(top_avg / q_in, 0.0, 1.0) : 1.0;
            const double den = 1.0 - q_in;
            const double s_e = den < 1e-12 ? 1.0 : std::clamp(edge_avg / den, 0.0, 1.0);
            return std::pair<double, double>{s_in, s_e};
        };
        auto [dl_in, dl_e] = averaged(Direction::dl, q_dl);
        auto [ul_in, ul_e] = averaged(Direction::ul, q_ul);
        sol.stp_dl_interior = dl_in;
        sol.stp_dl_edge = dl_e;
        sol.stp_ul_interior = ul_in;
        sol.stp_ul_edge = ul_e;
        sol.iterations = 0;
        sol.residual = 0.0;
        sol.converged = true;
    }

    return sol;
}

}  // namespace ffrlab
