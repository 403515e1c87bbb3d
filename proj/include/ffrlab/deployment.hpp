#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ffrlab/config.hpp"
#include "ffrlab/rng.hpp"

namespace ffrlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// One network realization on a square window, optionally wrapped into a torus
// so the typical cell sees no boundary.
struct Deployment {
    double half_side = 0.0;
    bool torus = true;
    std::vector<Vec2> saps;
    std::vector<Vec2> users;
    std::vector<int> user_sap;                    // nearest-SAP association
    std::vector<std::vector<int>> cell_members;   // all associated users per cell
    std::vector<std::vector<int>> cell_served;    // capped random service subset
    std::vector<int> edge_group;                  // per cell, in [0, reuse_factor)
    int redraws = 0;

    double sq_dist(const Vec2& a, const Vec2& b) const {
        double dx = std::fabs(a.x - b.x);
        double dy = std::fabs(a.y - b.y);
        if (torus) {
            const double side = 2.0 * half_side;
            dx = std::min(dx, side - dx);
            dy = std::min(dy, side - dy);
        }
        return dx * dx + dy * dy;
    }
};

// Fully determined by (master_seed, realization_index): node counts Poisson,
// positions uniform, service subsets and edge groups drawn afterwards in a
// fixed order. An empty SAP draw is redrawn and counted.
inline Deployment generate_deployment(const ScenarioConfig& cfg, const SimConfig& sim,
                                      std::uint64_t realization_index, bool torus = true) {
    Rng rng(sim.master_seed, realization_index);
    Deployment dep;
    dep.half_side = sim.half_side;
    dep.torus = torus;
    const double side = 2.0 * sim.half_side;
    const double area = side * side;

    std::size_t n_sap = 0;
    for (;;) {
        n_sap = rng.poisson(cfg.sap_density * area);
        if (n_sap > 0) break;
        ++dep.redraws;
    }
    dep.saps.resize(n_sap);
    for (auto& p : dep.saps) {
        p.x = (rng.uniform() - 0.5) * side;
        p.y = (rng.uniform() - 0.5) * side;
    }
    const std::size_t n_user = rng.poisson(cfg.user_density * area);
    dep.users.resize(n_user);
    for (auto& p : dep.users) {
        p.x = (rng.uniform() - 0.5) * side;
        p.y = (rng.uniform() - 0.5) * side;
    }

    dep.user_sap.resize(n_user);
    dep.cell_members.assign(n_sap, {});
    for (std::size_t u = 0; u < n_user; ++u) {
        int best = 0;
        double best_d = dep.sq_dist(dep.users[u], dep.saps[0]);
        for (std::size_t s = 1; s < n_sap; ++s) {
            const double d = dep.sq_dist(dep.users[u], dep.saps[s]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(s);
            }
        }
        dep.user_sap[u] = best;
        dep.cell_members[best].push_back(static_cast<int>(u));
    }

    dep.edge_group.resize(n_sap);
    for (auto& g : dep.edge_group) g = static_cast<int>(rng.uniform_below(cfg.reuse_factor));

    // Overloaded cells serve a uniform subset of max_users members; the rest
    // are never scheduled.
    dep.cell_served.resize(n_sap);
    for (std::size_t s = 0; s < n_sap; ++s) {
        std::vector<int> members = dep.cell_members[s];
        if (static_cast<int>(members.size()) > cfg.max_users) {
            rng.partial_shuffle(members.data(), members.size(),
                                static_cast<std::size_t>(cfg.max_users));
            members.resize(cfg.max_users);
        }
        dep.cell_served[s] = std::move(members);
    }
    return dep;
}

}  // namespace ffrlab
