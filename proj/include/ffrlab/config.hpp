#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ffrlab {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Direction { dl, ul };

inline const char* name(Direction d) { return d == Direction::dl ? "dl" : "ul"; }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

// Scenario parameters as written at the interface: powers in dBm, SIR
// thresholds in dB. Defaults give the standard operating point used by the
// bundled configs.
struct RawScenario {
    double sap_density = 1e-4;
    double user_density = 1e-2;
    double sap_power = 30.0;
    double user_power = 23.0;
    double pathloss_exponent = 3.8;
    int total_subbands = 20;
    int reuse_factor = 2;
    int edge_subbands = 1;
    double classification_threshold = 0.0;
    double decode_threshold = 1.0;
    double dl_arrival = 0.08;
    double ul_arrival = 0.04;
    int max_users = 50;
    double cell_radius = 70.0;
};

// Validated scenario with strictly linear units: powers in watts, thresholds
// as linear SIR. Immutable once built; both engines take it by value.
struct ScenarioConfig {
    double sap_density;
    double user_density;
    double sap_power;
    double user_power;
    double pathloss_exponent;
    int total_subbands;
    int reuse_factor;
    int edge_subbands;
    double classification_threshold;
    double decode_threshold;
    double dl_arrival;
    double ul_arrival;
    int max_users;
    double cell_radius;
};

struct DerivedParams {
    int interior_subbands;
    double dl_probability;
    double ul_probability;
};

struct SimConfig {
    double half_side = 400.0;
    int realizations = 500;
    int slots_per_realization = 2000;
    std::uint64_t master_seed = 1;
    int distance_bins = 14;
};

struct OptimizerConfig {
    std::vector<double> theta_grid = {-1.0, 0.0, 1.0, 2.0, 3.0, 4.0};  // dB
    std::vector<int> l_candidates = {1, 3, 5, 7};
    double min_mpt_dl = 0.228;
    double min_mpt_ul = 0.0795;
};

inline ScenarioConfig validate(const RawScenario& raw) {
    std::vector<std::string> faults;
    auto fault = [&](const char* field, const char* what) {
        faults.push_back(std::string(field) + ": " + what);
    };
    if (!(raw.sap_density > 0.0) || !std::isfinite(raw.sap_density))
        fault("sap_density", "must be positive");
    if (!(raw.user_density > 0.0) || !std::isfinite(raw.user_density))
        fault("user_density", "must be positive");
    if (!std::isfinite(raw.sap_power)) fault("sap_power", "must be finite dBm");
    if (!std::isfinite(raw.user_power)) fault("user_power", "must be finite dBm");
    if (!(raw.pathloss_exponent > 2.0))
        fault("pathloss_exponent", "must exceed 2 (far-field integrals diverge otherwise)");
    if (raw.total_subbands < 1) fault("total_subbands", "must be at least 1");
    if (raw.reuse_factor < 1) fault("reuse_factor", "must be at least 1");
    if (raw.edge_subbands < 0) fault("edge_subbands", "must be nonnegative");
    if (raw.reuse_factor >= 1 && raw.edge_subbands >= 0 &&
        raw.reuse_factor * raw.edge_subbands >= raw.total_subbands)
        fault("edge_subbands", "reuse_factor * edge_subbands must leave at least one interior sub-band");
    if (!(raw.dl_arrival >= 0.0 && raw.dl_arrival <= 1.0))
        fault("dl_arrival", "must lie in [0, 1]");
    if (!(raw.ul_arrival >= 0.0 && raw.ul_arrival <= 1.0))
        fault("ul_arrival", "must lie in [0, 1]");
    if (raw.dl_arrival == 0.0 && raw.ul_arrival == 0.0)
        fault("dl_arrival", "dl_arrival + ul_arrival must be positive");
    if (raw.max_users < 1) fault("max_users", "must be at least 1");
    if (!(raw.cell_radius > 0.0)) fault("cell_radius", "must be positive");
    if (!faults.empty()) {
        std::string msg = "invalid scenario config: ";
        for (std::size_t i = 0; i < faults.size(); ++i) {
            if (i) msg += "; ";
            msg += faults[i];
        }
        throw ConfigError(msg);
    }
    return ScenarioConfig{raw.sap_density,
                          raw.user_density,
                          dbm_to_watts(raw.sap_power),
                          dbm_to_watts(raw.user_power),
                          raw.pathloss_exponent,
                          raw.total_subbands,
                          raw.reuse_factor,
                          raw.edge_subbands,
                          db_to_linear(raw.classification_threshold),
                          db_to_linear(raw.decode_threshold),
                          raw.dl_arrival,
                          raw.ul_arrival,
                          raw.max_users,
                          raw.cell_radius};
}

inline DerivedParams derive(const ScenarioConfig& cfg) {
    const int m = cfg.total_subbands - cfg.reuse_factor * cfg.edge_subbands;
    const double p_dl = cfg.dl_arrival / (cfg.dl_arrival + cfg.ul_arrival);
    return DerivedParams{m, p_dl, 1.0 - p_dl};
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const char* section,
                                std::initializer_list<const char*> allowed,
                                std::vector<std::string>& faults) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) known = true;
        if (!known)
            faults.push_back(std::string(section) + "." + it.key() + ": unknown key");
    }
}

inline double take_number(const nlohmann::json& obj, const char* section, const char* key,
                          std::vector<std::string>& faults, double fallback) {
    if (!obj.contains(key)) {
        faults.push_back(std::string(section) + "." + key + ": missing");
        return fallback;
    }
    if (!obj[key].is_number()) {
        faults.push_back(std::string(section) + "." + key + ": expected a number");
        return fallback;
    }
    return obj[key].get<double>();
}

inline int take_int(const nlohmann::json& obj, const char* section, const char* key,
                    std::vector<std::string>& faults, int fallback) {
    if (!obj.contains(key)) {
        faults.push_back(std::string(section) + "." + key + ": missing");
        return fallback;
    }
    if (!obj[key].is_number_integer()) {
        faults.push_back(std::string(section) + "." + key + ": expected an integer");
        return fallback;
    }
    return obj[key].get<int>();
}

}  // namespace detail

struct LoadedConfig {
    ScenarioConfig scenario;
    SimConfig sim;
    OptimizerConfig optimizer;
    nlohmann::json resolved;  // post-override document, for metadata sidecars
    std::vector<std::string> warnings;
};

// Applies one "key=value" or "section.key=value" override onto the document.
// Bare keys must identify a unique existing field across sections.
inline void apply_override(nlohmann::json& doc, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must have the form key=value: " + spec);
    std::string key = spec.substr(0, eq);
    const std::string value_text = spec.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(value_text, nullptr, false);
    if (value.is_discarded()) value = value_text;

    std::string section;
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        section = key.substr(0, dot);
        key = key.substr(dot + 1);
        if (!doc.contains(section) || !doc[section].is_object() || !doc[section].contains(key))
            throw ConfigError("override names a missing key: " + spec);
    } else {
        int hits = 0;
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (it.value().is_object() && it.value().contains(key)) {
                section = it.key();
                ++hits;
            }
        }
        if (hits == 0) throw ConfigError("override names a missing key: " + spec);
        if (hits > 1) throw ConfigError("override key is ambiguous, qualify it: " + spec);
    }
    doc[section][key] = value;
}

inline LoadedConfig parse_config(nlohmann::json doc, const std::vector<std::string>& overrides = {}) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    for (const auto& spec : overrides) apply_override(doc, spec);

    std::vector<std::string> faults;
    detail::reject_unknown_keys(doc, "config", {"scenario", "sim", "optimizer"}, faults);
    for (const char* section : {"scenario", "sim", "optimizer"})
        if (!doc.contains(section))
            faults.push_back(std::string(section) + ": missing section");
    if (!faults.empty()) {
        std::string msg = "invalid config: ";
        for (std::size_t i = 0; i < faults.size(); ++i) {
            if (i) msg += "; ";
            msg += faults[i];
        }
        throw ConfigError(msg);
    }

    const auto& sc = doc["scenario"];
    detail::reject_unknown_keys(
        sc, "scenario",
        {"sap_density", "user_density", "sap_power", "user_power", "pathloss_exponent",
         "total_subbands", "reuse_factor", "edge_subbands", "classification_threshold",
         "decode_threshold", "dl_arrival", "ul_arrival", "max_users", "cell_radius"},
        faults);
    RawScenario raw;
    raw.sap_density = detail::take_number(sc, "scenario", "sap_density", faults, raw.sap_density);
    raw.user_density = detail::take_number(sc, "scenario", "user_density", faults, raw.user_density);
    raw.sap_power = detail::take_number(sc, "scenario", "sap_power", faults, raw.sap_power);
    raw.user_power = detail::take_number(sc, "scenario", "user_power", faults, raw.user_power);
    raw.pathloss_exponent =
        detail::take_number(sc, "scenario", "pathloss_exponent", faults, raw.pathloss_exponent);
    raw.total_subbands = detail::take_int(sc, "scenario", "total_subbands", faults, raw.total_subbands);
    raw.reuse_factor = detail::take_int(sc, "scenario", "reuse_factor", faults, raw.reuse_factor);
    raw.edge_subbands = detail::take_int(sc, "scenario", "edge_subbands", faults, raw.edge_subbands);
    raw.classification_threshold = detail::take_number(sc, "scenario", "classification_threshold",
                                                       faults, raw.classification_threshold);
    raw.decode_threshold =
        detail::take_number(sc, "scenario", "decode_threshold", faults, raw.decode_threshold);
    raw.dl_arrival = detail::take_number(sc, "scenario", "dl_arrival", faults, raw.dl_arrival);
    raw.ul_arrival = detail::take_number(sc, "scenario", "ul_arrival", faults, raw.ul_arrival);
    raw.max_users = detail::take_int(sc, "scenario", "max_users", faults, raw.max_users);
    raw.cell_radius = detail::take_number(sc, "scenario", "cell_radius", faults, raw.cell_radius);

    const auto& sm = doc["sim"];
    detail::reject_unknown_keys(
        sm, "sim",
        {"half_side", "realizations", "slots_per_realization", "master_seed", "distance_bins"},
        faults);
    SimConfig sim;
    sim.half_side = detail::take_number(sm, "sim", "half_side", faults, sim.half_side);
    sim.realizations = detail::take_int(sm, "sim", "realizations", faults, sim.realizations);
    sim.slots_per_realization =
        detail::take_int(sm, "sim", "slots_per_realization", faults, sim.slots_per_realization);
    if (sm.contains("master_seed") && sm["master_seed"].is_number_unsigned())
        sim.master_seed = sm["master_seed"].get<std::uint64_t>();
    else
        detail::take_int(sm, "sim", "master_seed", faults, 1);
    sim.distance_bins = detail::take_int(sm, "sim", "distance_bins", faults, sim.distance_bins);
    if (!(sim.half_side > 0.0)) faults.push_back("sim.half_side: must be positive");
    if (sim.realizations < 1) faults.push_back("sim.realizations: must be at least 1");
    if (sim.slots_per_realization < 1)
        faults.push_back("sim.slots_per_realization: must be at least 1");
    if (sim.distance_bins < 1) faults.push_back("sim.distance_bins: must be at least 1");

    const auto& op = doc["optimizer"];
    detail::reject_unknown_keys(
        op, "optimizer", {"theta_grid", "l_candidates", "min_mpt_dl", "min_mpt_ul"}, faults);
    OptimizerConfig optimizer;
    if (op.contains("theta_grid") && op["theta_grid"].is_array()) {
        optimizer.theta_grid.clear();
        for (const auto& v : op["theta_grid"]) {
            if (!v.is_number()) {
                faults.push_back("optimizer.theta_grid: entries must be numbers");
                break;
            }
            optimizer.theta_grid.push_back(v.get<double>());
        }
    } else {
        faults.push_back("optimizer.theta_grid: missing or not an array");
    }
    if (op.contains("l_candidates") && op["l_candidates"].is_array()) {
        optimizer.l_candidates.clear();
        for (const auto& v : op["l_candidates"]) {
            if (!v.is_number_integer()) {
                faults.push_back("optimizer.l_candidates: entries must be integers");
                break;
            }
            optimizer.l_candidates.push_back(v.get<int>());
        }
    } else {
        faults.push_back("optimizer.l_candidates: missing or not an array");
    }
    optimizer.min_mpt_dl =
        detail::take_number(op, "optimizer", "min_mpt_dl", faults, optimizer.min_mpt_dl);
    optimizer.min_mpt_ul =
        detail::take_number(op, "optimizer", "min_mpt_ul", faults, optimizer.min_mpt_ul);
    if (optimizer.theta_grid.empty()) faults.push_back("optimizer.theta_grid: must be non-empty");
    if (optimizer.l_candidates.empty())
        faults.push_back("optimizer.l_candidates: must be non-empty");
    for (int l : optimizer.l_candidates)
        if (l < 0 || raw.reuse_factor * l >= raw.total_subbands) {
            faults.push_back("optimizer.l_candidates: candidate " + std::to_string(l) +
                             " leaves no interior sub-band");
            break;
        }
    if (optimizer.min_mpt_dl < 0.0) faults.push_back("optimizer.min_mpt_dl: must be nonnegative");
    if (optimizer.min_mpt_ul < 0.0) faults.push_back("optimizer.min_mpt_ul: must be nonnegative");

    if (!faults.empty()) {
        std::string msg = "invalid config: ";
        for (std::size_t i = 0; i < faults.size(); ++i) {
            if (i) msg += "; ";
            msg += faults[i];
        }
        throw ConfigError(msg);
    }

    LoadedConfig out{validate(raw), sim, optimizer, std::move(doc), {}};
    const double area = 4.0 * out.sim.half_side * out.sim.half_side;
    if (out.scenario.sap_density * area < 50.0)
        out.warnings.push_back(
            "sim.half_side: expected cell count below 50, edge statistics will be noisy");
    return out;
}

inline LoadedConfig load_config(const std::string& path,
                                const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
    return parse_config(std::move(doc), overrides);
}

}  // namespace ffrlab
