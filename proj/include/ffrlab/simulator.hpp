#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

#include "ffrlab/config.hpp"
#include "ffrlab/deployment.hpp"
#include "ffrlab/rng.hpp"

namespace ffrlab {

struct TxRecord {
    int served_id = 0;
    Direction dir = Direction::dl;
    bool edge = false;
    bool success = false;
    int sojourn = 0; // valid when success
};

struct SlotOutcome {
    std::vector<TxRecord> transmissions;
    std::vector<std::uint8_t> cell_direction; // 0 = dl slot, 1 = ul slot
    long long trials[2] = {0, 0};
    long long classified_interior[2] = {0, 0};
    long long arrivals[2] = {0, 0};
    long long departures[2] = {0, 0};
    long long queue_total[2] = {0, 0}; // after this slot's arrivals

    void reset(std::size_t cells) {
        transmissions.clear();
        cell_direction.assign(cells, 0);
        for (int d = 0; d < 2; ++d) {
            trials[d] = classified_interior[d] = 0;
            arrivals[d] = departures[d] = 0;
            queue_total[d] = 0;
        }
    }
};

// Drives one deployment slot by slot: each slot picks a duplex direction per
// cell, schedules backlogged users onto sub-bands, classifies them by SIR
// against the reuse threshold, retries edge users on their cell's reserved
// bands, and then admits new arrivals.
class Simulator {
  public:
    struct ServedUser {
        int user = 0;
        int cell = 0;
        double distance = 0.0;
        double access_gain = 0.0; // pathloss between user and its own SAP
    };

    Simulator(const ScenarioConfig& cfg, Deployment dep, bool unit_fading = false)
        : cfg_(cfg), dep_(std::move(dep)), unit_fading_(unit_fading) {
        const DerivedParams dv = derive(cfg_);
        interior_bands_ = dv.interior_subbands;
        dl_prob_ = dv.dl_probability;
        const std::size_t cells = dep_.saps.size();

        cell_served_ids_.resize(cells);
        for (std::size_t s = 0; s < cells; ++s)
            for (int u : dep_.cell_served[s]) {
                ServedUser su;
                su.user = u;
                su.cell = static_cast<int>(s);
                su.distance = std::sqrt(dep_.sq_dist(dep_.users[u], dep_.saps[s]));
                su.access_gain = pathloss(dep_.users[u], dep_.saps[s]);
                cell_served_ids_[s].push_back(static_cast<int>(served_.size()));
                served_.push_back(su);
            }

        sap_to_served_.assign(cells * served_.size(), 0.0);
        for (std::size_t s = 0; s < cells; ++s)
            for (std::size_t i = 0; i < served_.size(); ++i)
                sap_to_served_[s * served_.size() + i] =
                    pathloss(dep_.saps[s], dep_.users[served_[i].user]);
        sap_to_sap_.assign(cells * cells, 0.0);
        for (std::size_t a = 0; a < cells; ++a)
            for (std::size_t b = 0; b < cells; ++b)
                if (a != b) sap_to_sap_[a * cells + b] = pathloss(dep_.saps[a], dep_.saps[b]);

        queues_[0].assign(served_.size(), {});
        queues_[1].assign(served_.size(), {});
        band_tx_.assign(static_cast<std::size_t>(interior_bands_), {});
        edge_tx_.assign(static_cast<std::size_t>(cfg_.reuse_factor * cfg_.edge_subbands), {});
        edge_classified_.assign(cells, {});
        band_ids_.resize(static_cast<std::size_t>(std::max(interior_bands_, 1)));
        edge_band_ids_.resize(static_cast<std::size_t>(std::max(cfg_.edge_subbands, 1)));
    }

    const Deployment& deployment() const { return dep_; }
    int served_count() const { return static_cast<int>(served_.size()); }
    const ServedUser& served(int id) const { return served_[id]; }
    std::size_t queue_size(int id, Direction d) const {
        return queues_[static_cast<int>(d)][id].size();
    }
    long long backlog(Direction d) const {
        long long total = 0;
        for (const auto& q : queues_[static_cast<int>(d)]) total += static_cast<long long>(q.size());
        return total;
    }
    void push_packet(int id, Direction d, int arrival_slot) {
        queues_[static_cast<int>(d)][id].push_back(arrival_slot);
    }

    // One slot: direction draw, scheduling and SIR trials, edge retries,
    // departures, then arrivals. New packets wait at least one full slot.
    void step(Rng& rng, int slot, SlotOutcome& out) {
        const std::size_t cells = dep_.saps.size();
        out.reset(cells);
        for (std::size_t s = 0; s < cells; ++s)
            out.cell_direction[s] = rng.bernoulli(dl_prob_) ? 0 : 1;
        for (auto& v : band_tx_) v.clear();
        for (auto& v : edge_tx_) v.clear();
        for (auto& v : edge_classified_) v.clear();

        const int span = interior_bands_ + cfg_.edge_subbands;
        for (std::size_t s = 0; s < cells; ++s) {
            const int d = out.cell_direction[s];
            candidates_.clear();
            for (int id : cell_served_ids_[s])
                if (!queues_[d][id].empty()) candidates_.push_back(id);
            const std::size_t picked =
                std::min(candidates_.size(), static_cast<std::size_t>(span));
            if (picked == 0) continue;
            rng.partial_shuffle(candidates_.data(), candidates_.size(), picked);
            const std::size_t interior =
                std::min(picked, static_cast<std::size_t>(interior_bands_));
            if (interior > 0) {
                std::iota(band_ids_.begin(), band_ids_.end(), 0);
                rng.partial_shuffle(band_ids_.data(),
                                    static_cast<std::size_t>(interior_bands_), interior);
                for (std::size_t j = 0; j < interior; ++j)
                    band_tx_[band_ids_[j]].push_back(candidates_[j]);
            }
        }

        for (const auto& tx_list : band_tx_)
            for (std::size_t v = 0; v < tx_list.size(); ++v) {
                const int id = tx_list[v];
                const int cell = served_[id].cell;
                const int d = out.cell_direction[cell];
                const double sir = co_band_sir(rng, tx_list, v, out.cell_direction);
                ++out.trials[d];
                if (sir >= cfg_.classification_threshold) {
                    ++out.classified_interior[d];
                    record_tx(out, id, static_cast<Direction>(d), false,
                              sir >= cfg_.decode_threshold, slot);
                } else {
                    edge_classified_[cell].push_back(id);
                }
            }

        for (std::size_t s = 0; s < cells; ++s) {
            const auto& cls = edge_classified_[s];
            if (cls.empty() || cfg_.edge_subbands == 0) continue;
            const std::size_t picked =
                std::min(cls.size(), static_cast<std::size_t>(cfg_.edge_subbands));
            std::iota(edge_band_ids_.begin(), edge_band_ids_.end(), 0);
            rng.partial_shuffle(edge_band_ids_.data(),
                                static_cast<std::size_t>(cfg_.edge_subbands), picked);
            const int base = dep_.edge_group[s] * cfg_.edge_subbands;
            for (std::size_t j = 0; j < picked; ++j)
                edge_tx_[base + edge_band_ids_[j]].push_back(cls[j]);
        }

        for (const auto& tx_list : edge_tx_)
            for (std::size_t v = 0; v < tx_list.size(); ++v) {
                const int id = tx_list[v];
                const int d = out.cell_direction[served_[id].cell];
                const double sir = co_band_sir(rng, tx_list, v, out.cell_direction);
                record_tx(out, id, static_cast<Direction>(d), true,
                          sir >= cfg_.decode_threshold, slot);
            }

        for (std::size_t i = 0; i < served_.size(); ++i)
            for (int d = 0; d < 2; ++d)
                if (rng.bernoulli(d == 0 ? cfg_.dl_arrival : cfg_.ul_arrival)) {
                    queues_[d][i].push_back(slot);
                    ++out.arrivals[d];
                }
        out.queue_total[0] = backlog(Direction::dl);
        out.queue_total[1] = backlog(Direction::ul);
    }

  private:
    double pathloss(const Vec2& a, const Vec2& b) const {
        return std::pow(dep_.sq_dist(a, b), -0.5 * cfg_.pathloss_exponent);
    }

    double fade(Rng& rng) { return unit_fading_ ? 1.0 : rng.exponential(); }

    // SIR of transmission v against its co-band peers; the interfering node of
    // a DL cell is its SAP, of a UL cell its scheduled user.
    double co_band_sir(Rng& rng, const std::vector<int>& tx_list, std::size_t v,
                       const std::vector<std::uint8_t>& dir) {
        const int id = tx_list[v];
        const int cell = served_[id].cell;
        const int d = dir[cell];
        const double own_power = (d == 0) ? cfg_.sap_power : cfg_.user_power;
        const double signal = own_power * served_[id].access_gain * fade(rng);
        double interference = 0.0;
        const std::size_t cells = dep_.saps.size();
        for (std::size_t o = 0; o < tx_list.size(); ++o) {
            if (o == v) continue;
            const int oid = tx_list[o];
            const std::size_t ocell = static_cast<std::size_t>(served_[oid].cell);
            double gain;
            double power;
            if (dir[ocell] == 0) {
                power = cfg_.sap_power;
                gain = (d == 0) ? sap_to_served_[ocell * served_.size() + id]
                                : sap_to_sap_[ocell * cells + cell];
            } else {
                power = cfg_.user_power;
                gain = (d == 0)
                           ? pathloss(dep_.users[served_[oid].user], dep_.users[served_[id].user])
                           : sap_to_served_[static_cast<std::size_t>(cell) * served_.size() + oid];
            }
            interference += power * gain * fade(rng);
        }
        if (interference <= 0.0) return std::numeric_limits<double>::infinity();
        return signal / interference;
    }

    void record_tx(SlotOutcome& out, int id, Direction dir, bool edge, bool success, int slot) {
        TxRecord rec;
        rec.served_id = id;
        rec.dir = dir;
        rec.edge = edge;
        rec.success = success;
        if (success) {
            auto& q = queues_[static_cast<int>(dir)][id];
            rec.sojourn = slot - q.front();
            q.pop_front();
            ++out.departures[static_cast<int>(dir)];
        }
        out.transmissions.push_back(rec);
    }

    ScenarioConfig cfg_;
    Deployment dep_;
    bool unit_fading_ = false;
    int interior_bands_ = 0;
    double dl_prob_ = 0.5;
    std::vector<ServedUser> served_;
    std::vector<std::vector<int>> cell_served_ids_;
    std::vector<double> sap_to_served_;
    std::vector<double> sap_to_sap_;
    std::vector<std::deque<int>> queues_[2];
    std::vector<std::vector<int>> band_tx_;
    std::vector<std::vector<int>> edge_tx_;
    std::vector<std::vector<int>> edge_classified_;
    std::vector<int> candidates_;
    std::vector<int> band_ids_;
    std::vector<int> edge_band_ids_;
};

}  // namespace ffrlab
