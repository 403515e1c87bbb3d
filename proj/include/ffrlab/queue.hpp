#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ffrlab/config.hpp"

namespace ffrlab {

// Per-slot probability that the head-of-line packet leaves the buffer: the
// cell must pick this duplex direction, the user must be classified and
// scheduled in one class, and the transmission must decode.
inline double departure_prob(double p_tx, double q_interior, double q_edge, double sched_interior,
                             double sched_edge, double stp_interior, double stp_edge) {
    return p_tx * (q_interior * sched_interior * stp_interior +
                   q_edge * sched_edge * stp_edge);
}

// Probability that the typical user is granted one of `subbands` bands while
// k-1 peers with the same class probability and buffer occupancy compete.
inline double scheduling_prob(int k, int subbands, double q_class, double nonempty) {
    if (subbands <= 0) return 0.0;
    const double load = 1.0 + (k - 1) * q_class * nonempty;
    return std::min(subbands / load, 1.0);
}

// Probability the buffer is non-empty in steady state, clamped to 1 for
// saturated queues (arrival rate at or above service rate).
inline double nonempty_prob(double xi, double mu_bar) {
    if (xi <= 0.0) return 0.0;
    if (mu_bar <= 0.0) return 1.0;
    return std::min(xi / mu_bar, 1.0);
}

// Stationary law of the single-server Bernoulli-arrival buffer: geometric
// above level one. Instability is a value (saturated marker), not an error.
struct SteadyStateDist {
    double xi = 0.0;
    double mu_bar = 0.0;
    bool stable = false;
    double empty_prob = 0.0;       // mass at level 0
    double first_weight = 0.0;     // mass at level 1
    double geometric_ratio = 0.0;  // level j+1 over level j, j >= 1

    double prob(int level) const {
        if (!stable) return 0.0;
        if (level <= 0) return empty_prob;
        return first_weight * std::pow(geometric_ratio, level - 1);
    }
    double mean_queue_length() const {
        if (!stable) return std::numeric_limits<double>::infinity();
        if (xi <= 0.0) return 0.0;
        return xi * (1.0 - xi) / (mu_bar - xi);
    }
    double mean_sojourn() const {
        if (!stable) return std::numeric_limits<double>::infinity();
        return (1.0 - xi) / (mu_bar - xi);
    }
};

inline SteadyStateDist steady_state(double xi, double mu_bar) {
    SteadyStateDist d;
    d.xi = xi;
    d.mu_bar = mu_bar;
    if (xi <= 0.0) {
        d.stable = true;
        d.empty_prob = 1.0;
        return d;
    }
    if (xi >= mu_bar) return d;  // saturated: all mass escapes to infinity
    d.stable = true;
    d.empty_prob = 1.0 - xi / mu_bar;
    d.first_weight = d.empty_prob * xi / ((1.0 - xi) * mu_bar);
    d.geometric_ratio = xi * (1.0 - mu_bar) / ((1.0 - xi) * mu_bar);
    return d;
}

struct TierQueueStats {
    int tier = 0;
    Direction direction = Direction::dl;
    double departure = 0.0;
    double nonempty = 0.0;
    double sched_interior = 0.0;
    double sched_edge = 0.0;
    bool stable = false;
};

}  // namespace ffrlab
