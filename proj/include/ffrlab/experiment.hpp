#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "ffrlab/config.hpp"
#include "ffrlab/deployment.hpp"
#include "ffrlab/simulator.hpp"

namespace ffrlab {

struct SimOptions {
    bool torus = true;
    int threads = 0;          // <= 0 picks hardware concurrency
    bool unit_fading = false; // test hook: all fades forced to 1
};

// Counters for one realization. Window counters cover the measured slots
// only; the *_total fields cover the whole run for conservation checks.
struct RealizationStats {
    int realization = 0;
    int sap_count = 0;
    int user_count = 0;
    int served_count = 0;
    int redraws = 0;
    long long trials[2] = {0, 0};
    long long classified_interior[2] = {0, 0};
    long long success_interior[2] = {0, 0};
    long long attempts_edge[2] = {0, 0};
    long long success_edge[2] = {0, 0};
    long long delivered[2] = {0, 0};
    double sojourn_sum[2] = {0.0, 0.0};
    double queue_slot_sum[2] = {0.0, 0.0}; // summed backlog per measured slot
    int measured_slots = 0;
    long long arrivals_total[2] = {0, 0};
    long long departures_total[2] = {0, 0};
    long long final_backlog[2] = {0, 0};
    std::vector<long long> bin_delivered[2];
    std::vector<double> bin_sojourn[2];
};

struct ClassRate {
    double value = std::numeric_limits<double>::quiet_NaN();
    double half_width = std::numeric_limits<double>::quiet_NaN();
};

struct DistanceBin {
    double center = 0.0;
    double mpt[2] = {std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN()};
    long long delivered[2] = {0, 0};
};

struct MetricsReport {
    ClassRate stp_interior[2];
    ClassRate stp_edge[2];
    ClassRate interior_fraction[2];
    ClassRate mpt[2];
    ClassRate mean_queue[2];
    double mean_sojourn[2] = {std::numeric_limits<double>::quiet_NaN(),
                              std::numeric_limits<double>::quiet_NaN()};
    std::vector<DistanceBin> mpt_vs_r;
    std::vector<RealizationStats> rows;
};

inline RealizationStats run_realization(const ScenarioConfig& cfg, const SimConfig& sim,
                                        std::uint64_t index, const SimOptions& opt) {
    Deployment dep = generate_deployment(cfg, sim, index, opt.torus);
    RealizationStats st;
    st.realization = static_cast<int>(index);
    st.sap_count = static_cast<int>(dep.saps.size());
    st.user_count = static_cast<int>(dep.users.size());
    st.redraws = dep.redraws;
    for (int d = 0; d < 2; ++d) {
        st.bin_delivered[d].assign(sim.distance_bins, 0);
        st.bin_sojourn[d].assign(sim.distance_bins, 0.0);
    }

    Simulator simulator(cfg, std::move(dep), opt.unit_fading);
    st.served_count = simulator.served_count();
    Rng rng(sim.master_seed ^ 0x9e3779b97f4a7c15ULL, index);
    const int warmup = sim.slots_per_realization / 10;
    const double bin_width = cfg.cell_radius / sim.distance_bins;

    SlotOutcome out;
    for (int slot = 0; slot < sim.slots_per_realization; ++slot) {
        simulator.step(rng, slot, out);
        for (int d = 0; d < 2; ++d) {
            st.arrivals_total[d] += out.arrivals[d];
            st.departures_total[d] += out.departures[d];
        }
        if (slot < warmup) continue;
        ++st.measured_slots;
        for (int d = 0; d < 2; ++d) {
            st.trials[d] += out.trials[d];
            st.classified_interior[d] += out.classified_interior[d];
            st.queue_slot_sum[d] += static_cast<double>(out.queue_total[d]);
        }
        for (const TxRecord& tx : out.transmissions) {
            const int d = static_cast<int>(tx.dir);
            if (tx.edge) {
                ++st.attempts_edge[d];
                if (tx.success) ++st.success_edge[d];
            } else if (tx.success) {
                ++st.success_interior[d];
            }
            if (!tx.success) continue;
            ++st.delivered[d];
            st.sojourn_sum[d] += tx.sojourn;
            const double r = simulator.served(tx.served_id).distance;
            const int bin = static_cast<int>(r / bin_width);
            if (bin >= 0 && bin < sim.distance_bins) {
                ++st.bin_delivered[d][bin];
                st.bin_sojourn[d][bin] += tx.sojourn;
            }
        }
    }
    st.final_backlog[0] = simulator.backlog(Direction::dl);
    st.final_backlog[1] = simulator.backlog(Direction::ul);
    return st;
}

namespace detail {

inline ClassRate pooled_rate(const std::vector<RealizationStats>& rows,
                             long long (RealizationStats::*num)[2],
                             long long (RealizationStats::*den)[2], int d) {
    long long n = 0;
    long long m = 0;
    std::vector<double> per;
    for (const auto& r : rows) {
        n += (r.*num)[d];
        m += (r.*den)[d];
        if ((r.*den)[d] > 0)
            per.push_back(static_cast<double>((r.*num)[d]) / static_cast<double>((r.*den)[d]));
    }
    ClassRate out;
    if (m <= 0) return out;
    out.value = static_cast<double>(n) / static_cast<double>(m);
    if (per.size() > 1) {
        double mean = 0.0;
        for (double x : per) mean += x;
        mean /= static_cast<double>(per.size());
        double var = 0.0;
        for (double x : per) var += (x - mean) * (x - mean);
        var /= static_cast<double>(per.size() - 1);
        out.half_width = 1.96 * std::sqrt(var / static_cast<double>(per.size()));
    }
    return out;
}

}  // namespace detail

inline MetricsReport merge_realizations(const ScenarioConfig& cfg, const SimConfig& sim,
                                        std::vector<RealizationStats> rows) {
    MetricsReport rep;
    for (int d = 0; d < 2; ++d) {
        rep.stp_interior[d] = detail::pooled_rate(rows, &RealizationStats::success_interior,
                                                  &RealizationStats::classified_interior, d);
        rep.stp_edge[d] = detail::pooled_rate(rows, &RealizationStats::success_edge,
                                              &RealizationStats::attempts_edge, d);
        rep.interior_fraction[d] = detail::pooled_rate(
            rows, &RealizationStats::classified_interior, &RealizationStats::trials, d);

        long long delivered = 0;
        double sojourn = 0.0;
        double queue_sum = 0.0;
        double user_slots = 0.0;
        std::vector<double> per_mpt;
        std::vector<double> per_queue;
        for (const auto& r : rows) {
            delivered += r.delivered[d];
            sojourn += r.sojourn_sum[d];
            queue_sum += r.queue_slot_sum[d];
            user_slots += static_cast<double>(r.measured_slots) * r.served_count;
            if (r.sojourn_sum[d] > 0.0)
                per_mpt.push_back(static_cast<double>(r.delivered[d]) / r.sojourn_sum[d]);
            if (r.measured_slots > 0 && r.served_count > 0)
                per_queue.push_back(r.queue_slot_sum[d] /
                                    (static_cast<double>(r.measured_slots) * r.served_count));
        }
        if (sojourn > 0.0) {
            rep.mpt[d].value = static_cast<double>(delivered) / sojourn;
            rep.mean_sojourn[d] = sojourn / static_cast<double>(delivered);
        }
        if (user_slots > 0.0) rep.mean_queue[d].value = queue_sum / user_slots;
        auto half_width = [](const std::vector<double>& xs) {
            if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= static_cast<double>(xs.size() - 1);
            return 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
        };
        rep.mpt[d].half_width = half_width(per_mpt);
        rep.mean_queue[d].half_width = half_width(per_queue);
    }

    rep.mpt_vs_r.assign(sim.distance_bins, {});
    const double bin_width = cfg.cell_radius / sim.distance_bins;
    for (int b = 0; b < sim.distance_bins; ++b) {
        DistanceBin& bin = rep.mpt_vs_r[b];
        bin.center = (b + 0.5) * bin_width;
        for (int d = 0; d < 2; ++d) {
            long long n = 0;
            double s = 0.0;
            for (const auto& r : rows) {
                n += r.bin_delivered[d][b];
                s += r.bin_sojourn[d][b];
            }
            bin.delivered[d] = n;
            if (s > 0.0) bin.mpt[d] = static_cast<double>(n) / s;
        }
    }
    rep.rows = std::move(rows);
    return rep;
}

// Runs all realizations, in parallel when asked; the report is a pure
// function of the config and seed, independent of the thread count.
inline MetricsReport run_experiment(const ScenarioConfig& cfg, const SimConfig& sim,
                                    const SimOptions& opt = {}) {
    std::vector<RealizationStats> rows(sim.realizations);
    int threads = opt.threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, sim.realizations));

    if (threads == 1) {
        for (int i = 0; i < sim.realizations; ++i)
            rows[i] = run_realization(cfg, sim, static_cast<std::uint64_t>(i), opt);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= sim.realizations) return;
                rows[i] = run_realization(cfg, sim, static_cast<std::uint64_t>(i), opt);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return merge_realizations(cfg, sim, std::move(rows));
}

}  // namespace ffrlab
