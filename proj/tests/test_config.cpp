#include <catch2/catch_amalgamated.hpp>

#include "ffrlab/config.hpp"

using namespace ffrlab;
using nlohmann::json;

namespace {

json minimal_doc() {
    return json::parse(R"({
      "scenario": {
        "sap_density": 1e-4, "user_density": 1e-2,
        "sap_power": 30.0, "user_power": 23.0,
        "pathloss_exponent": 3.8,
        "total_subbands": 20, "reuse_factor": 2, "edge_subbands": 1,
        "classification_threshold": 0.0, "decode_threshold": 1.0,
        "dl_arrival": 0.08, "ul_arrival": 0.04,
        "max_users": 50, "cell_radius": 70.0
      },
      "sim": {
        "half_side": 400.0, "realizations": 500,
        "slots_per_realization": 2000, "master_seed": 1, "distance_bins": 14
      },
      "optimizer": {
        "theta_grid": [-1.0, 0.0, 1.0, 2.0, 3.0, 4.0],
        "l_candidates": [1, 3, 5, 7],
        "min_mpt_dl": 0.228, "min_mpt_ul": 0.0795
      }
    })");
}

}  // namespace

TEST_CASE("bundled default config parses", "[config]") {
    const LoadedConfig loaded = load_config(FFRLAB_REPO_DIR "/configs/defaults.json");
    CHECK(loaded.scenario.sap_density == 1e-4);
    CHECK(loaded.scenario.max_users == 50);
    CHECK(loaded.sim.realizations == 500);
    CHECK(loaded.optimizer.l_candidates == std::vector<int>{1, 3, 5, 7});
    CHECK(loaded.warnings.empty());
}

TEST_CASE("interface units are converted to linear", "[config]") {
    const ScenarioConfig cfg = parse_config(minimal_doc()).scenario;
    CHECK_THAT(cfg.sap_power, Catch::Matchers::WithinRel(1.0, 1e-12));
    CHECK_THAT(cfg.user_power, Catch::Matchers::WithinRel(std::pow(10.0, -0.7), 1e-12));
    CHECK(cfg.classification_threshold == 1.0);
    CHECK_THAT(cfg.decode_threshold, Catch::Matchers::WithinRel(std::pow(10.0, 0.1), 1e-12));
}

TEST_CASE("derived parameters", "[config]") {
    const ScenarioConfig cfg = parse_config(minimal_doc()).scenario;
    const DerivedParams dv = derive(cfg);
    CHECK(dv.interior_subbands == 18);
    CHECK_THAT(dv.dl_probability, Catch::Matchers::WithinRel(2.0 / 3.0, 1e-12));
    CHECK_THAT(dv.ul_probability, Catch::Matchers::WithinRel(1.0 / 3.0, 1e-12));
}

TEST_CASE("unknown keys are rejected", "[config]") {
    json doc = minimal_doc();
    doc["scenario"]["bogus"] = 1;
    CHECK_THROWS_WITH(parse_config(doc), Catch::Matchers::ContainsSubstring("unknown key"));
    json doc2 = minimal_doc();
    doc2["extra_section"] = json::object();
    CHECK_THROWS_AS(parse_config(doc2), ConfigError);
}

TEST_CASE("missing fields are reported together", "[config]") {
    json doc = minimal_doc();
    doc["scenario"].erase("sap_density");
    doc["sim"].erase("realizations");
    try {
        parse_config(doc);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sap_density") != std::string::npos);
        CHECK(msg.find("realizations") != std::string::npos);
    }
}

TEST_CASE("value validation", "[config]") {
    json doc = minimal_doc();
    doc["scenario"]["dl_arrival"] = 1.5;
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    json doc2 = minimal_doc();
    doc2["scenario"]["pathloss_exponent"] = 2.0;
    CHECK_THROWS_AS(parse_config(doc2), ConfigError);

    json doc3 = minimal_doc();
    doc3["scenario"]["edge_subbands"] = 10;  // 2 * 10 uses the whole band
    CHECK_THROWS_AS(parse_config(doc3), ConfigError);

    json doc4 = minimal_doc();
    doc4["optimizer"]["l_candidates"] = {1, 10};
    CHECK_THROWS_AS(parse_config(doc4), ConfigError);
}

TEST_CASE("overrides", "[config]") {
    SECTION("qualified key") {
        const LoadedConfig loaded = parse_config(minimal_doc(), {"scenario.dl_arrival=0.3"});
        CHECK(loaded.scenario.dl_arrival == 0.3);
        CHECK(loaded.resolved["scenario"]["dl_arrival"] == 0.3);
    }
    SECTION("bare key resolving to a unique section") {
        const LoadedConfig loaded = parse_config(minimal_doc(), {"realizations=7"});
        CHECK(loaded.sim.realizations == 7);
    }
    SECTION("applied in order") {
        const LoadedConfig loaded =
            parse_config(minimal_doc(), {"sim.master_seed=3", "sim.master_seed=9"});
        CHECK(loaded.sim.master_seed == 9);
    }
    SECTION("missing key") {
        CHECK_THROWS_AS(parse_config(minimal_doc(), {"scenario.bogus=1"}), ConfigError);
    }
    SECTION("malformed") {
        CHECK_THROWS_AS(parse_config(minimal_doc(), {"no_equals"}), ConfigError);
    }
    SECTION("ambiguous bare key") {
        json doc = json::parse(R"({"a": {"k": 1}, "b": {"k": 2}})");
        CHECK_THROWS_WITH(apply_override(doc, "k=3"),
                          Catch::Matchers::ContainsSubstring("ambiguous"));
    }
}

TEST_CASE("small windows warn", "[config]") {
    json doc = minimal_doc();
    doc["sim"]["half_side"] = 100.0;
    const LoadedConfig loaded = parse_config(doc);
    REQUIRE_FALSE(loaded.warnings.empty());
}
