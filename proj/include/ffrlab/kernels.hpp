#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ffrlab/quadrature.hpp"

namespace ffrlab {

// Gamma-weighted approximation of the Poisson-Voronoi cell-load distribution,
// shape 3.5, with all mass above max_users absorbed into the top bin (an
// overloaded cell serves at most max_users). Entry k of the result is the
// probability of a cell holding exactly k users, k = 0..max_users.
inline std::vector<double> cell_load_pmf(double sap_density, double user_density, int max_users) {
    constexpr double c = 3.5;
    const double rho = user_density / sap_density;
    const double log_ratio = std::log(rho / c);
    const double log_scale = std::log1p(rho / c);
    std::vector<double> pmf(static_cast<std::size_t>(max_users) + 1, 0.0);
    double below = 0.0;
    for (int k = 0; k < max_users; ++k) {
        const double lg = std::lgamma(k + c) - std::lgamma(c) - std::lgamma(k + 1.0) +
                          k * log_ratio - (k + c) * log_scale;
        pmf[k] = std::exp(lg);
        below += pmf[k];
    }
    pmf[max_users] = below < 1.0 ? 1.0 - below : 0.0;
    return pmf;
}

// Density of the distance from a uniformly dropped user to its nearest SAP.
inline double nearest_distance_pdf(double sap_density, double r) {
    const double pi = std::numbers::pi;
    return 2.0 * pi * sap_density * r * std::exp(-pi * sap_density * r * r);
}

// Radius beyond which the nearest-distance weight drops under 1e-12.
inline double distance_truncation_radius(double sap_density) {
    return std::sqrt(12.0 * std::log(10.0) / (std::numbers::pi * sap_density));
}

// Expectation of g(r) under the nearest-SAP distance density.
template <class G>
double average_over_distance(G&& g, double sap_density, const QuadratureOptions& opt = {}) {
    const double r_max = distance_truncation_radius(sap_density);
    return integrate([&](double r) { return g(r) * nearest_distance_pdf(sap_density, r); }, 0.0,
                     r_max, opt, "distance average");
}

// Per-unit-density outage exponent of a Poisson interferer field against a
// linear SIR threshold x: the tail integral of 1/(1+v^{alpha/2}) scaled by
// x^{2/alpha}. Evaluated on a finite interval via the power substitution that
// keeps the integrand smooth for every alpha > 2.
inline double interference_factor(double x, double alpha, const QuadratureOptions& opt = {}) {
    if (x <= 0.0) return 0.0;
    const double c = 2.0 / (alpha - 2.0);
    const double q = alpha / (alpha - 2.0);
    const double upper = std::pow(x, (alpha - 2.0) / alpha);
    const double tail = integrate([&](double t) { return 1.0 / (1.0 + std::pow(t, q)); }, 0.0,
                                  upper, opt, "interference factor");
    return std::pow(x, 2.0 / alpha) * c * tail;
}

// Exponent coefficient A of the independent-field success probability
// exp(-A r^2): one term per interferer class, the second scaled by the
// user-to-SAP transmit power ratio.
inline double field_decay(double lambda_dl, double lambda_ul, double threshold, double alpha,
                          double power_ratio, const QuadratureOptions& opt = {}) {
    const double pi = std::numbers::pi;
    double coeff = 0.0;
    if (lambda_dl > 0.0) coeff += lambda_dl * interference_factor(threshold, alpha, opt);
    if (lambda_ul > 0.0)
        coeff += lambda_ul * interference_factor(threshold * power_ratio, alpha, opt);
    return pi * coeff;
}

// Probability that a link at distance r beats `threshold` against two
// independent Poisson interferer fields (DL transmitters at lambda_dl, UL
// transmitters at lambda_ul).
inline double stp_poisson_field(double lambda_dl, double lambda_ul, double threshold, double r,
                                double alpha, double power_ratio,
                                const QuadratureOptions& opt = {}) {
    return std::exp(-field_decay(lambda_dl, lambda_ul, threshold, alpha, power_ratio, opt) * r * r);
}

namespace detail {

inline double fade_blocking(double s, double u_pow_alpha) {
    const double p = s * u_pow_alpha;
    if (!std::isfinite(p)) return 1.0;
    return p / (1.0 + p);
}

}  // namespace detail

// Radial coupling integral of one interfering cell holding both an interior
// and an edge transmitter with activity chi_in and chi_e: integrates the
// joint fade-blocking factor over normalized distances v >= 1, where t_eff
// weighs the edge activity and theta_eff the interior one. Mapped to [0, 1]
// by the same smoothing power substitution as interference_factor.
inline double cell_interference_integral(double t_eff, double theta_eff, double chi_in,
                                         double chi_e, double alpha,
                                         const QuadratureOptions& opt = {}) {
    if ((chi_in <= 0.0 || theta_eff <= 0.0) && (chi_e <= 0.0 || t_eff <= 0.0)) return 0.0;
    const double c = 2.0 / (alpha - 2.0);
    return c * integrate(
                   [&](double t) {
                       if (t <= 0.0) return 0.0;
                       const double u = std::pow(t, c);
                       const double ua = std::pow(u, alpha);
                       const double a = chi_in * detail::fade_blocking(theta_eff, ua);
                       const double b = chi_e * detail::fade_blocking(t_eff, ua);
                       return (a + b - a * b) * std::pow(t, -2.0 * c - 1.0);
                   },
                   0.0, 1.0, opt, "cell interference integral");
}

// Per-tier transmit activity of interfering cells, together with everything
// needed to accumulate their exponent: load pmf, duplex split, power ratio.
struct TierActivity {
    std::vector<double> chi_dl_interior;  // indexed by tier k, entry 0 unused
    std::vector<double> chi_dl_edge;
    std::vector<double> chi_ul_interior;
    std::vector<double> chi_ul_edge;
    std::vector<double> load_pmf;  // indexed 0..max_users
    double dl_probability = 1.0;
    double ul_probability = 0.0;
    double power_ratio = 1.0;  // user_power / sap_power
    double alpha = 4.0;
    double sap_density = 0.0;
};

// Exponent coefficient B of the correlated cell-field success probability
// exp(-B r^2): tier-weighted sum of DL and UL coupling integrals, doubled for
// the annulus geometry. Tiers with negligible mass are skipped.
inline double cell_field_decay(double t_eff, double theta_eff, const TierActivity& act,
                               const QuadratureOptions& opt = {}) {
    const double pi = std::numbers::pi;
    const int top = static_cast<int>(act.load_pmf.size()) - 1;
    double sum = 0.0;
    for (int k = 1; k <= top; ++k) {
        const double fk = act.load_pmf[k];
        if (fk < 1e-14) continue;
        double term = 0.0;
        if (act.dl_probability > 0.0)
            term += act.dl_probability *
                    cell_interference_integral(t_eff, theta_eff, act.chi_dl_interior[k],
                                               act.chi_dl_edge[k], act.alpha, opt);
        if (act.ul_probability > 0.0)
            term += act.ul_probability *
                    cell_interference_integral(t_eff * act.power_ratio,
                                               theta_eff * act.power_ratio,
                                               act.chi_ul_interior[k], act.chi_ul_edge[k],
                                               act.alpha, opt);
        sum += fk * term;
    }
    return 2.0 * pi * act.sap_density * sum;
}

// Joint probability that a link at distance r clears t_eff on its assigned
// band while failing theta_eff held on the trial band, against the full
// correlated field of interfering cells.
inline double stp_cell_field(double t_eff, double theta_eff, double r, const TierActivity& act,
                             const QuadratureOptions& opt = {}) {
    return std::exp(-cell_field_decay(t_eff, theta_eff, act, opt) * r * r);
}

}  // namespace ffrlab
