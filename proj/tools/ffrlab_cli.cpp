#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffrlab/ffrlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Args {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> sets;
    std::string scale;
    int figure_id = 0;
    std::optional<std::uint64_t> seed;
    bool no_torus = false;
    double clustered_dl = 0.456;
    double clustered_ul = 0.159;
};

int env_threads() {
    const char* v = std::getenv("FFRLAB_THREADS");
    if (!v || !*v) return 0;
    return std::atoi(v);
}

// --scale and --seed are rewritten as config overrides so the sidecar's
// resolved config is the full truth about what ran.
std::vector<std::string> effective_overrides(const Args& a) {
    std::vector<std::string> out;
    if (a.scale == "desk") {
        out.push_back("sim.realizations=500");
        out.push_back("sim.slots_per_realization=2000");
        out.push_back("sim.half_side=400");
    } else if (a.scale == "paper") {
        out.push_back("sim.realizations=5000");
        out.push_back("sim.slots_per_realization=10000");
        out.push_back("sim.half_side=800");
    }
    out.insert(out.end(), a.sets.begin(), a.sets.end());
    if (a.seed) out.push_back("sim.master_seed=" + std::to_string(*a.seed));
    return out;
}

// Removes every file written so far if the command fails midway.
class OutputGuard {
  public:
    ~OutputGuard() {
        if (armed_)
            for (const auto& p : written_) {
                std::error_code ec;
                fs::remove(p, ec);
                fs::remove(p + ".meta.json", ec);
            }
    }
    void emit(const fs::path& dir, const std::string& name, const ffrlab::CsvTable& table,
              json meta) {
        const fs::path path = dir / name;
        ffrlab::write_with_sidecar(path, table.to_string(), std::move(meta));
        written_.push_back(path.string());
    }
    void dismiss() { armed_ = false; }

  private:
    std::vector<std::string> written_;
    bool armed_ = true;
};

json base_meta(const std::string& command, const Args& a, const ffrlab::LoadedConfig& loaded) {
    json meta;
    meta["command"] = command;
    meta["config_path"] = a.config_path;
    meta["overrides"] = effective_overrides(a);
    meta["seed"] = loaded.sim.master_seed;
    meta["torus"] = !a.no_torus;
    meta["threads"] = env_threads();
    meta["resolved_config"] = loaded.resolved;
    if (!loaded.warnings.empty()) meta["warnings"] = loaded.warnings;
    return meta;
}

ffrlab::SimOptions sim_options(const Args& a) {
    ffrlab::SimOptions opt;
    opt.torus = !a.no_torus;
    opt.threads = env_threads();
    return opt;
}

void add_solution_row(ffrlab::CsvTable& t, const ffrlab::StpSolution& sol,
                      const ffrlab::ScenarioConfig& cfg) {
    using namespace ffrlab;
    t.begin_row()
        .add(mpt_average(sol, cfg, Direction::dl))
        .add(mpt_average(sol, cfg, Direction::ul))
        .add(sol.stp_dl_interior)
        .add(sol.stp_dl_edge)
        .add(sol.stp_ul_interior)
        .add(sol.stp_ul_edge)
        .add(sol.interior_prob_dl)
        .add(sol.interior_prob_ul)
        .add(sol.density_dl_interior)
        .add(sol.density_dl_edge)
        .add(sol.density_ul_interior)
        .add(sol.density_ul_edge)
        .add(mpt_at_distance(cfg.cell_radius, sol, cfg, Direction::dl))
        .add(mpt_at_distance(cfg.cell_radius, sol, cfg, Direction::ul))
        .add(sol.iterations)
        .add(static_cast<long long>(sol.converged))
        .add(sol.residual);
}

const std::vector<std::string> kSolutionHeader = {
    "mpt_dl",           "mpt_ul",          "stp_dl_interior",  "stp_dl_edge",
    "stp_ul_interior",  "stp_ul_edge",     "interior_prob_dl", "interior_prob_ul",
    "density_dl_interior", "density_dl_edge", "density_ul_interior", "density_ul_edge",
    "mpt_dl_at_r",      "mpt_ul_at_r",     "iterations",       "converged",
    "residual"};

ffrlab::CsvTable analytic_distance_table(const ffrlab::StpSolution& sol,
                                         const ffrlab::ScenarioConfig& cfg, int points = 64) {
    using namespace ffrlab;
    CsvTable t({"r_m", "mpt_dl", "mpt_ul", "stp_dl_interior", "stp_dl_edge", "stp_ul_interior",
                "stp_ul_edge"});
    const MptCurve dl = mpt_curve(sol, cfg, Direction::dl, points);
    const MptCurve ul = mpt_curve(sol, cfg, Direction::ul, points);
    for (int i = 0; i < points; ++i) {
        const double r = dl.r[i];
        double din = 1.0, de = std::nan(""), uin = 1.0, ue = std::nan("");
        try {
            const ClassStp at = stp_at_distance(r, sol, cfg);
            din = at.dl_interior;
            de = at.dl_edge;
            uin = at.ul_interior;
            ue = at.ul_edge;
        } catch (const SolverError&) {
            // r = 0: the edge class has zero probability there
        }
        t.begin_row().add(r).add(dl.value[i]).add(ul.value[i]).add(din).add(de).add(uin).add(ue);
    }
    return t;
}

void run_analytic(const Args& a, const ffrlab::LoadedConfig& loaded) {
    using namespace ffrlab;
    StpSolution sol = solve_fixed_point(loaded.scenario);
    OutputGuard guard;
    CsvTable summary(kSolutionHeader);
    add_solution_row(summary, sol, loaded.scenario);
    guard.emit(a.out_dir, "analytic_summary.csv", summary, base_meta("analytic", a, loaded));
    guard.emit(a.out_dir, "analytic_mpt_vs_r.csv", analytic_distance_table(sol, loaded.scenario),
               base_meta("analytic", a, loaded));
    guard.dismiss();
}

ffrlab::CsvTable metrics_table(const ffrlab::MetricsReport& rep) {
    using namespace ffrlab;
    std::vector<std::string> header = {"realization", "sap_count", "user_count",
                                       "served_count", "redraws",  "measured_slots"};
    for (const char* d : {"dl", "ul"})
        for (const char* col :
             {"trials", "classified_interior", "success_interior", "attempts_edge", "success_edge",
              "delivered", "sojourn_sum", "mean_queue", "arrivals", "departures", "final_backlog"})
            header.push_back(std::string(col) + "_" + d);
    CsvTable t(std::move(header));
    for (const auto& r : rep.rows) {
        t.begin_row()
            .add(r.realization)
            .add(r.sap_count)
            .add(r.user_count)
            .add(r.served_count)
            .add(r.redraws)
            .add(r.measured_slots);
        for (int d = 0; d < 2; ++d) {
            const double user_slots = static_cast<double>(r.measured_slots) * r.served_count;
            t.add(r.trials[d])
                .add(r.classified_interior[d])
                .add(r.success_interior[d])
                .add(r.attempts_edge[d])
                .add(r.success_edge[d])
                .add(r.delivered[d])
                .add(r.sojourn_sum[d])
                .add(user_slots > 0 ? r.queue_slot_sum[d] / user_slots : std::nan(""))
                .add(r.arrivals_total[d])
                .add(r.departures_total[d])
                .add(r.final_backlog[d]);
        }
    }
    return t;
}

ffrlab::CsvTable distance_bin_table(const ffrlab::MetricsReport& rep) {
    ffrlab::CsvTable t({"r_bin_center_m", "mpt_dl", "mpt_ul", "count"});
    for (const auto& bin : rep.mpt_vs_r)
        t.begin_row()
            .add(bin.center)
            .add(bin.mpt[0])
            .add(bin.mpt[1])
            .add(bin.delivered[0] + bin.delivered[1]);
    return t;
}

ffrlab::CsvTable sim_summary_table(const ffrlab::MetricsReport& rep) {
    ffrlab::CsvTable t({"direction", "stp_interior", "stp_interior_hw", "stp_edge", "stp_edge_hw",
                        "interior_fraction", "interior_fraction_hw", "mpt", "mpt_hw", "mean_queue",
                        "mean_queue_hw", "mean_sojourn"});
    const char* names[2] = {"dl", "ul"};
    for (int d = 0; d < 2; ++d)
        t.begin_row()
            .add(std::string(names[d]))
            .add(rep.stp_interior[d].value)
            .add(rep.stp_interior[d].half_width)
            .add(rep.stp_edge[d].value)
            .add(rep.stp_edge[d].half_width)
            .add(rep.interior_fraction[d].value)
            .add(rep.interior_fraction[d].half_width)
            .add(rep.mpt[d].value)
            .add(rep.mpt[d].half_width)
            .add(rep.mean_queue[d].value)
            .add(rep.mean_queue[d].half_width)
            .add(rep.mean_sojourn[d]);
    return t;
}

void run_simulate(const Args& a, const ffrlab::LoadedConfig& loaded) {
    using namespace ffrlab;
    MetricsReport rep = run_experiment(loaded.scenario, loaded.sim, sim_options(a));
    OutputGuard guard;
    guard.emit(a.out_dir, "metrics.csv", metrics_table(rep), base_meta("simulate", a, loaded));
    guard.emit(a.out_dir, "mpt_vs_r.csv", distance_bin_table(rep),
               base_meta("simulate", a, loaded));
    guard.emit(a.out_dir, "sim_summary.csv", sim_summary_table(rep),
               base_meta("simulate", a, loaded));
    guard.dismiss();
}

ffrlab::CsvTable sweep_table(const std::vector<ffrlab::SweepEntry>& sweep) {
    ffrlab::CsvTable t({"theta_db", "L", "mpt_dl", "mpt_ul", "mpt_dl_at_R", "mpt_ul_at_R",
                        "feasible_dl", "feasible_ul"});
    for (const auto& e : sweep)
        t.begin_row()
            .add(e.theta_db)
            .add(e.edge_subbands)
            .add(e.mpt_dl)
            .add(e.mpt_ul)
            .add(e.mpt_dl_at_r)
            .add(e.mpt_ul_at_r)
            .add(static_cast<long long>(e.feasible_dl))
            .add(static_cast<long long>(e.feasible_ul));
    return t;
}

ffrlab::CsvTable optimize_summary_table(const ffrlab::LoadedConfig& loaded,
                                        const std::vector<ffrlab::SweepEntry>& sweep) {
    using namespace ffrlab;
    CsvTable t({"direction", "feasible", "best_theta_db", "best_L", "best_mpt", "other_mpt",
                "constraint_at_R", "min_mpt"});
    for (Direction dir : {Direction::dl, Direction::ul}) {
        OptimizationResult res = optimize_from_sweep(sweep, loaded.optimizer, dir);
        const double floor_mpt =
            dir == Direction::dl ? loaded.optimizer.min_mpt_dl : loaded.optimizer.min_mpt_ul;
        t.begin_row()
            .add(std::string(name(dir)))
            .add(static_cast<long long>(res.feasible))
            .add(res.best_theta_db)
            .add(res.best_edge_subbands)
            .add(res.best_mpt)
            .add(res.best_mpt_other)
            .add(res.constraint_value)
            .add(floor_mpt);
    }
    return t;
}

void run_optimize(const Args& a, const ffrlab::LoadedConfig& loaded) {
    using namespace ffrlab;
    std::vector<SweepEntry> sweep = run_sweep(loaded.scenario, loaded.optimizer);
    OutputGuard guard;
    guard.emit(a.out_dir, "sweep.csv", sweep_table(sweep), base_meta("optimize", a, loaded));
    guard.emit(a.out_dir, "optimize_summary.csv", optimize_summary_table(loaded, sweep),
               base_meta("optimize", a, loaded));
    guard.dismiss();
}

void run_figure(const Args& a, const ffrlab::LoadedConfig& loaded) {
    using namespace ffrlab;
    OutputGuard guard;
    json meta = base_meta("figure", a, loaded);
    meta["figure_id"] = a.figure_id;

    if (a.figure_id == 2) {
        const std::vector<int> l_values = {1, 5};
        CsvTable analytic({"t_db", "L", "stp_dl_interior", "stp_dl_edge", "stp_ul_interior",
                           "stp_ul_edge", "mpt_dl", "mpt_ul"});
        CsvTable sim({"t_db", "L", "stp_dl_interior", "stp_dl_edge", "stp_ul_interior",
                      "stp_ul_edge", "mpt_dl", "mpt_ul"});
        for (int t_db = -4; t_db <= 8; ++t_db)
            for (int l : l_values) {
                ScenarioConfig cfg = loaded.scenario;
                cfg.decode_threshold = db_to_linear(t_db);
                cfg.edge_subbands = l;
                StpSolution sol = solve_fixed_point(cfg);
                analytic.begin_row()
                    .add(static_cast<double>(t_db))
                    .add(l)
                    .add(sol.stp_dl_interior)
                    .add(sol.stp_dl_edge)
                    .add(sol.stp_ul_interior)
                    .add(sol.stp_ul_edge)
                    .add(mpt_average(sol, cfg, Direction::dl))
                    .add(mpt_average(sol, cfg, Direction::ul));
                MetricsReport rep = run_experiment(cfg, loaded.sim, sim_options(a));
                sim.begin_row()
                    .add(static_cast<double>(t_db))
                    .add(l)
                    .add(rep.stp_interior[0].value)
                    .add(rep.stp_edge[0].value)
                    .add(rep.stp_interior[1].value)
                    .add(rep.stp_edge[1].value)
                    .add(rep.mpt[0].value)
                    .add(rep.mpt[1].value);
            }
        guard.emit(a.out_dir, "fig2_analytic.csv", analytic, meta);
        guard.emit(a.out_dir, "fig2_sim.csv", sim, meta);
    } else if (a.figure_id == 3) {
        CsvTable analytic({"r_m", "L", "mpt_dl", "mpt_ul"});
        CsvTable sim({"r_bin_center_m", "L", "mpt_dl", "mpt_ul", "count"});
        for (int l : {1, 3, 5, 7}) {
            ScenarioConfig cfg = loaded.scenario;
            cfg.edge_subbands = l;
            if (cfg.reuse_factor * l >= cfg.total_subbands)
                throw ConfigError("edge band count " + std::to_string(l) +
                                  " leaves no interior sub-bands");
            StpSolution sol = solve_fixed_point(cfg);
            const MptCurve dl = mpt_curve(sol, cfg, Direction::dl);
            const MptCurve ul = mpt_curve(sol, cfg, Direction::ul);
            for (std::size_t i = 0; i < dl.r.size(); ++i)
                analytic.begin_row().add(dl.r[i]).add(l).add(dl.value[i]).add(ul.value[i]);
            MetricsReport rep = run_experiment(cfg, loaded.sim, sim_options(a));
            for (const auto& bin : rep.mpt_vs_r)
                sim.begin_row()
                    .add(bin.center)
                    .add(l)
                    .add(bin.mpt[0])
                    .add(bin.mpt[1])
                    .add(bin.delivered[0] + bin.delivered[1]);
        }
        guard.emit(a.out_dir, "fig3_analytic.csv", analytic, meta);
        guard.emit(a.out_dir, "fig3_sim.csv", sim, meta);
    } else if (a.figure_id == 4) {
        std::vector<SweepEntry> sweep = run_sweep(loaded.scenario, loaded.optimizer);
        guard.emit(a.out_dir, "fig4_sweep.csv", sweep_table(sweep), meta);
        guard.emit(a.out_dir, "fig4_summary.csv", optimize_summary_table(loaded, sweep), meta);
    }
    guard.dismiss();
}

void run_compare(const Args& a, const ffrlab::LoadedConfig& loaded) {
    using namespace ffrlab;
    StpSolution ffr = solve_fixed_point(loaded.scenario);

    // No-FFR baseline: classification disabled, every sub-band interior.
    ScenarioConfig base = loaded.scenario;
    base.reuse_factor = 1;
    base.edge_subbands = 0;
    base.classification_threshold = 0.0;
    StpSolution plain = solve_fixed_point(base);

    OutputGuard guard;
    CsvTable t({"scheme", "mpt_dl", "mpt_ul", "stp_dl_interior", "stp_dl_edge", "stp_ul_interior",
                "stp_ul_edge", "interior_prob_dl", "interior_prob_ul"});
    t.begin_row()
        .add(std::string("ffr"))
        .add(mpt_average(ffr, loaded.scenario, Direction::dl))
        .add(mpt_average(ffr, loaded.scenario, Direction::ul))
        .add(ffr.stp_dl_interior)
        .add(ffr.stp_dl_edge)
        .add(ffr.stp_ul_interior)
        .add(ffr.stp_ul_edge)
        .add(ffr.interior_prob_dl)
        .add(ffr.interior_prob_ul);
    t.begin_row()
        .add(std::string("no_ffr"))
        .add(mpt_average(plain, base, Direction::dl))
        .add(mpt_average(plain, base, Direction::ul))
        .add(plain.stp_dl_interior)
        .add(plain.stp_dl_edge)
        .add(plain.stp_ul_interior)
        .add(plain.stp_ul_edge)
        .add(plain.interior_prob_dl)
        .add(plain.interior_prob_ul);
    t.begin_row()
        .add(std::string("clustered"))
        .add(a.clustered_dl)
        .add(a.clustered_ul)
        .add(std::nan(""))
        .add(std::nan(""))
        .add(std::nan(""))
        .add(std::nan(""))
        .add(std::nan(""))
        .add(std::nan(""));
    json meta = base_meta("compare", a, loaded);
    meta["clustered_dl"] = a.clustered_dl;
    meta["clustered_ul"] = a.clustered_ul;
    guard.emit(a.out_dir, "compare.csv", t, meta);
    guard.dismiss();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analytic and Monte Carlo laboratory for FFR-based dynamic-TDD small cells"};
    app.require_subcommand(1);
    Args a;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", a.config_path, "JSON config file")->required();
        cmd->add_option("--out", a.out_dir, "output directory");
        cmd->add_option("--set", a.sets, "override config entries as key=value");
        cmd->add_option("--scale", a.scale, "preset run size")
            ->check(CLI::IsMember({"desk", "paper"}));
        cmd->add_option("--seed", a.seed, "master seed override");
        cmd->add_flag("--no-torus", a.no_torus, "use the bounded window without wrap-around");
    };

    CLI::App* analytic = app.add_subcommand("analytic", "solve the coupled fixed point");
    add_common(analytic);
    CLI::App* simulate = app.add_subcommand("simulate", "run the slot-level Monte Carlo");
    add_common(simulate);
    CLI::App* optimize = app.add_subcommand("optimize", "grid search over theta and L");
    add_common(optimize);
    CLI::App* figure = app.add_subcommand("figure", "regenerate figure data");
    add_common(figure);
    figure->add_option("--id", a.figure_id, "figure number")->required();
    CLI::App* compare = app.add_subcommand("compare", "FFR vs no-FFR vs clustered constants");
    add_common(compare);
    compare->add_option("--clustered-dl", a.clustered_dl, "clustered DL benchmark");
    compare->add_option("--clustered-ul", a.clustered_ul, "clustered UL benchmark");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (figure->parsed() && a.figure_id != 2 && a.figure_id != 3 && a.figure_id != 4) {
            std::fprintf(stderr, "unknown figure id %d (expected 2, 3, or 4)\n", a.figure_id);
            return 2;
        }
        ffrlab::LoadedConfig loaded =
            ffrlab::load_config(a.config_path, effective_overrides(a));
        for (const auto& w : loaded.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        if (analytic->parsed()) run_analytic(a, loaded);
        else if (simulate->parsed()) run_simulate(a, loaded);
        else if (optimize->parsed()) run_optimize(a, loaded);
        else if (figure->parsed()) run_figure(a, loaded);
        else if (compare->parsed()) run_compare(a, loaded);
        return 0;
    } catch (const ffrlab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
