// Final gate over both engines. Each check prints one verdict line; the exit
// code is the number of failed checks. The cross-engine checks run the full
// desk-size Monte Carlo and dominate the wall time (tens of minutes on one
// core), so progress notes go to stderr as the suite advances.
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ffrlab/ffrlab.hpp"

using namespace ffrlab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("%s %d %-22s %s\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void progress(const char* msg) {
    std::fprintf(stderr, "... %s\n", msg);
    std::fflush(stderr);
}

ScenarioConfig defaults() { return validate(RawScenario{}); }

SimConfig desk_sim(std::uint64_t seed = 1) {
    SimConfig sim;
    sim.half_side = 400.0;
    sim.realizations = 500;
    sim.slots_per_realization = 2000;
    sim.master_seed = seed;
    return sim;
}

// Plain transcriptions of the two interference integrals on their natural
// domains, truncated with explicit tail corrections. Deliberately avoids the
// substituted kernels so the production path is checked against an
// independent evaluation.
double outage_exponent_direct(double x, double alpha) {
    if (x <= 0.0) return 0.0;
    QuadratureOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-11;
    opt.max_segments = 8192;
    const double lo = std::pow(x, -2.0 / alpha);
    const double hi = 1e8;
    double integral = integrate(
        [&](double u) { return 1.0 / (1.0 + std::pow(u, 0.5 * alpha)); }, lo, hi, opt,
        "direct outage exponent");
    integral += std::pow(hi, 1.0 - 0.5 * alpha) / (0.5 * alpha - 1.0);
    return std::pow(x, 2.0 / alpha) * integral;
}

double cell_integral_direct(double t, double theta, double chi_in, double chi_e, double alpha) {
    QuadratureOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-11;
    opt.max_segments = 8192;
    const double hi = 1e5;
    double integral = integrate(
        [&](double v) {
            const double va = std::pow(v, -alpha);
            const double a = chi_in * theta * va / (1.0 + theta * va);
            const double b = chi_e * t * va / (1.0 + t * va);
            return (a + b - a * b) * v;
        },
        1.0, hi, opt, "direct cell integral");
    integral += (chi_in * theta + chi_e * t) * std::pow(hi, 2.0 - alpha) / (alpha - 2.0);
    return integral;
}

int run_cli(const std::string& args, const std::string& env) {
    const std::string cmd = env + " " FFRLAB_CLI_PATH " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_stp_agreement() {
    progress("cross-engine agreement: solving the fixed point");
    const ScenarioConfig cfg = defaults();
    const StpSolution sol = solve_fixed_point(cfg);
    progress("cross-engine agreement: desk Monte Carlo, 500 realizations");
    const MetricsReport rep = run_experiment(cfg, desk_sim(), {});
    const double ana[4] = {sol.stp_dl_interior, sol.stp_dl_edge, sol.stp_ul_interior,
                           sol.stp_ul_edge};
    const double emp[4] = {rep.stp_interior[0].value, rep.stp_edge[0].value,
                           rep.stp_interior[1].value, rep.stp_edge[1].value};
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::fabs(ana[i] - emp[i]));
    long long arr = 0, dep = 0;
    for (const auto& r : rep.rows) {
        arr += r.arrivals_total[1];
        dep += r.departures_total[1];
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "analytic %.3f/%.3f/%.3f/%.3f sim %.3f/%.3f/%.3f/%.3f max |diff| %.4f vs "
                  "0.03 (ul drain %.2f)",
                  ana[0], ana[1], ana[2], ana[3], emp[0], emp[1], emp[2], emp[3], worst,
                  arr > 0 ? double(dep) / double(arr) : 0.0);
    verdict(1, "stp_analytic_vs_sim", worst <= 0.03, buf);
}

void check_interior_plateau() {
    progress("interior plateau");
    bool analytic_ok = true;
    for (double rel : {1.0, 0.63}) {
        ScenarioConfig cfg = defaults();
        cfg.decode_threshold = rel * cfg.classification_threshold;
        const StpSolution sol = solve_fixed_point(cfg);
        const StpEvaluator eval(sol, cfg);
        for (int i = 0; i < 64; ++i) {
            const double r = cfg.cell_radius * i / 63.0;
            if (eval.stp_interior(r, Direction::dl) != 1.0 ||
                eval.stp_interior(r, Direction::ul) != 1.0)
                analytic_ok = false;
        }
        if (sol.stp_dl_interior != 1.0 || sol.stp_ul_interior != 1.0) analytic_ok = false;
    }

    ScenarioConfig cfg = defaults();
    cfg.decode_threshold = cfg.classification_threshold;
    SimConfig sim = desk_sim(21);
    sim.realizations = 20;
    sim.slots_per_realization = 500;
    const MetricsReport rep = run_experiment(cfg, sim, {});
    const double f_dl = rep.stp_interior[0].value;
    const double f_ul = rep.stp_interior[1].value;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "analytic exact %s, sim dl %.6f ul %.6f vs 0.999",
                  analytic_ok ? "yes" : "no", f_dl, f_ul);
    verdict(2, "interior_plateau", analytic_ok && f_dl >= 0.999 && f_ul >= 0.999, buf);
}

void check_forced_reduction() {
    progress("saturated reduction vs direct quadrature");
    const ScenarioConfig cfg = defaults();
    SolverOptions opt;
    opt.force_saturated_dl = true;
    const StpSolution sol = solve_fixed_point(cfg, opt);

    const double alpha = cfg.pathloss_exponent;
    const double scale_ul = cfg.sap_power / cfg.user_power;
    const auto pmf = cell_load_pmf(cfg.sap_density, cfg.user_density, cfg.max_users);
    const double busy = 1.0 - pmf[0];
    const double reuse = cfg.reuse_factor;

    double worst = 0.0;
    for (int d = 0; d < 2; ++d) {
        const double s = d == 0 ? 1.0 : scale_ul;
        const double theta = cfg.classification_threshold * s;
        const double t_dec = cfg.decode_threshold * s;
        const double q_in = 1.0 / (1.0 + busy * outage_exponent_direct(theta, alpha));
        const double q_top =
            1.0 / (1.0 + busy * outage_exponent_direct(std::max(t_dec, theta), alpha));
        const double s_in = q_top / q_in;
        const double a_edge = busy / reuse * outage_exponent_direct(t_dec, alpha);
        const double b_cell =
            2.0 * busy * cell_integral_direct(t_dec, theta, 1.0, 1.0 / reuse, alpha);
        const double edge_avg = 1.0 / (1.0 + a_edge) - 1.0 / (1.0 + b_cell);
        const double s_e = edge_avg / (1.0 - q_in);

        const double got_q = d == 0 ? sol.interior_prob_dl : sol.interior_prob_ul;
        const double got_in = d == 0 ? sol.stp_dl_interior : sol.stp_ul_interior;
        const double got_e = d == 0 ? sol.stp_dl_edge : sol.stp_ul_edge;
        worst = std::max({worst, std::fabs(got_q - q_in), std::fabs(got_in - s_in),
                          std::fabs(got_e - s_e)});
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |diff| %.2e vs 1e-6", worst);
    verdict(3, "forced_reduction", worst <= 1e-6, buf);
}

void check_queue_chain() {
    progress("queue chain oracle, five seeded operating points");
    double worst = 0.0;
    for (int pair = 0; pair < 5; ++pair) {
        Rng seeder(123, pair);
        const double xi = 0.05 + 0.35 * seeder.uniform();
        const double mu = std::min(0.95, xi + 0.05 + 0.5 * seeder.uniform());
        const SteadyStateDist dist = steady_state(xi, mu);
        if (!dist.stable) {
            worst = 1.0;
            break;
        }
        Rng rng(321, pair);
        int state = 0;
        double freq[6] = {0, 0, 0, 0, 0, 0};
        const int slots = 1000000;
        for (int t = 0; t < slots; ++t) {
            if (state > 0 && rng.bernoulli(mu)) --state;
            if (rng.bernoulli(xi)) ++state;
            if (state < 6) freq[state] += 1.0;
        }
        for (int j = 0; j <= 5; ++j)
            worst = std::max(worst, std::fabs(freq[j] / slots - dist.prob(j)));
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |diff| %.4f vs 0.01 per state", worst);
    verdict(4, "queue_chain", worst <= 0.01, buf);
}

void check_littles_law() {
    progress("mean queue vs arrival rate times sojourn: light-load desk Monte Carlo");
    ScenarioConfig cfg = defaults();
    cfg.dl_arrival = 0.02;
    cfg.ul_arrival = 0.01;
    const MetricsReport rep = run_experiment(cfg, desk_sim(5), {});
    double worst = 0.0;
    bool stable = true;
    std::string detail;
    for (int d = 0; d < 2; ++d) {
        long long arr = 0, dep = 0;
        for (const auto& r : rep.rows) {
            arr += r.arrivals_total[d];
            dep += r.departures_total[d];
        }
        const double drained = arr > 0 ? double(dep) / double(arr) : 0.0;
        if (drained < 0.98) stable = false;
        const double xi = d == 0 ? cfg.dl_arrival : cfg.ul_arrival;
        const double predicted = xi * rep.mean_sojourn[d];
        const double rel =
            std::fabs(rep.mean_queue[d].value - predicted) / rep.mean_queue[d].value;
        worst = std::max(worst, rel);
        char piece[96];
        std::snprintf(piece, sizeof(piece), "%s rel %.4f (drain %.3f) ", d == 0 ? "dl" : "ul",
                      rel, drained);
        detail += piece;
    }
    verdict(5, "littles_law", stable && worst <= 0.03, detail + "vs 0.03");
}

void check_shape_suite() {
    progress("shape suite: distance curves, band sweeps, field monotonicity");
    const ScenarioConfig cfg = defaults();
    const StpSolution sol = solve_fixed_point(cfg);
    bool curve_ok = true;
    for (Direction dir : {Direction::dl, Direction::ul})
        if (!mpt_curve(sol, cfg, dir, 64).monotone) curve_ok = false;

    OptimizerConfig grid;
    const auto sweep = run_sweep(cfg, grid);
    const std::size_t nl = grid.l_candidates.size();
    bool rise_fall_ok = true;
    bool unimodal_ok = true;
    for (std::size_t t = 0; t < grid.theta_grid.size(); ++t)
        for (int d = 0; d < 2; ++d) {
            std::vector<double> col;
            for (std::size_t j = 0; j < nl; ++j) {
                const SweepEntry& e = sweep[t * nl + j];
                col.push_back(d == 0 ? e.mpt_dl : e.mpt_ul);
            }
            bool falling = false;
            for (std::size_t j = 1; j < col.size(); ++j) {
                if (col[j] < col[j - 1] - 1e-12) falling = true;
                else if (falling && col[j] > col[j - 1] + 1e-12) unimodal_ok = false;
            }
            if (grid.theta_grid[t] == 0.0) {
                const std::size_t peak =
                    std::max_element(col.begin(), col.end()) - col.begin();
                if (peak == 0 || peak + 1 == col.size()) rise_fall_ok = false;
                for (std::size_t j = 1; j <= peak && j < col.size(); ++j)
                    if (col[j] <= col[j - 1]) rise_fall_ok = false;
                for (std::size_t j = peak + 1; j < col.size(); ++j)
                    if (col[j] >= col[j - 1]) rise_fall_ok = false;
            }
        }

    bool field_ok = true;
    const double alpha = cfg.pathloss_exponent;
    const double base = stp_poisson_field(2e-5, 1e-5, 1.0, 50.0, alpha, 0.2);
    for (double bump : {1.5, 2.0, 3.0}) {
        if (stp_poisson_field(2e-5 * bump, 1e-5, 1.0, 50.0, alpha, 0.2) >= base)
            field_ok = false;
        if (stp_poisson_field(2e-5, 1e-5 * bump, 1.0, 50.0, alpha, 0.2) >= base)
            field_ok = false;
        if (stp_poisson_field(2e-5, 1e-5, bump, 50.0, alpha, 0.2) >= base) field_ok = false;
        if (stp_poisson_field(2e-5, 1e-5, 1.0, 50.0 * bump, alpha, 0.2) >= base)
            field_ok = false;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "curve %s, rise-fall %s, unimodal %s, field %s",
                  curve_ok ? "ok" : "bad", rise_fall_ok ? "ok" : "bad",
                  unimodal_ok ? "ok" : "bad", field_ok ? "ok" : "bad");
    verdict(6, "shape_suite", curve_ok && rise_fall_ok && unimodal_ok && field_ok, buf);
}

void check_sweep_argmax() {
    progress("grid search optimum and benchmark gains");
    const ScenarioConfig cfg = defaults();
    OptimizerConfig grid;
    const auto sweep = run_sweep(cfg, grid);
    const OptimizationResult dl = optimize_from_sweep(sweep, grid, Direction::dl);
    const OptimizationResult ul = optimize_from_sweep(sweep, grid, Direction::ul);
    const bool argmax_ok = dl.feasible && ul.feasible && dl.best_theta_db == 1.0 &&
                           dl.best_edge_subbands == 5 && ul.best_theta_db == 1.0 &&
                           ul.best_edge_subbands == 5;
    const double gain_dl = dl.best_mpt / 0.456 - 1.0;
    const double gain_ul = ul.best_mpt / 0.159 - 1.0;
    const bool gain_ok =
        gain_dl >= 0.29 && gain_dl <= 0.39 && gain_ul >= 0.27 && gain_ul <= 0.37;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "dl (%g dB, L=%d) gain %.3f, ul (%g dB, L=%d) gain %.3f",
                  dl.best_theta_db, dl.best_edge_subbands, gain_dl, ul.best_theta_db,
                  ul.best_edge_subbands, gain_ul);
    verdict(7, "sweep_argmax", argmax_ok && gain_ok, buf);
}

void check_determinism() {
    progress("thread count determinism through the command line tool");
    const fs::path base = fs::temp_directory_path() / "ffrlab_acceptance";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string common =
        std::string("simulate --config ") + FFRLAB_REPO_DIR "/configs/defaults.json" +
        " --set sim.realizations=10 --set sim.slots_per_realization=300" +
        " --set sim.half_side=250";
    const int rc1 = run_cli(common + " --out " + (base / "t1").string(), "FFRLAB_THREADS=1");
    const int rc2 = run_cli(common + " --out " + (base / "t3").string(), "FFRLAB_THREADS=3");
    bool ok = rc1 == 0 && rc2 == 0;
    for (const char* file : {"metrics.csv", "mpt_vs_r.csv", "sim_summary.csv"}) {
        const std::string a = slurp(base / "t1" / file);
        ok = ok && !a.empty() && a == slurp(base / "t3" / file);
    }
    fs::remove_all(base);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "exit %d/%d, tables byte-identical across 1 and 3 threads",
                  rc1, rc2);
    verdict(8, "determinism", ok, buf);
}

void check_closed_forms() {
    double worst = 0.0;
    for (double x : {0.25, 1.0, 4.0})
        worst = std::max(worst, std::fabs(interference_factor(x, 4.0) -
                                          std::sqrt(x) * std::atan(std::sqrt(x))));
    const double pi = std::numbers::pi;
    for (double c : {0.5, 1.0, 2.0}) {
        const double avg = average_over_distance(
            [&](double r) { return std::exp(-pi * 1e-4 * c * r * r); }, 1e-4);
        worst = std::max(worst, std::fabs(avg - 1.0 / (1.0 + c)));
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |diff| %.2e vs 1e-9", worst);
    verdict(9, "closed_forms", worst <= 1e-9, buf);
}

}  // namespace

int main() {
    std::printf("acceptance gate, desk scale\n");
    check_stp_agreement();
    check_interior_plateau();
    check_forced_reduction();
    check_queue_chain();
    check_littles_law();
    check_shape_suite();
    check_sweep_argmax();
    check_determinism();
    check_closed_forms();
    std::printf("%d of 9 checks failed\n", failures);
    return failures;
}
