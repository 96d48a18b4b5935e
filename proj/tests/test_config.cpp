#include <catch2/catch_amalgamated.hpp>

#include "gridmfg/config.hpp"
#include "test_util.hpp"

using namespace gridmfg;
using gridmfg_test::load_scenario;

TEST_CASE("base scenario parses with the reference parameter set") {
    ScenarioConfig cfg = load_scenario("base.json");
    REQUIRE(cfg.n_regions() == 1);
    const auto& r = cfg.regions[0];
    CHECK(r.weight == 1.0);
    CHECK(r.demand_charge == 10.0);
    CHECK(r.ou.mean_reversion == 1.0);
    CHECK(r.ou.sigma == 0.8);
    CHECK(r.ou.sigma_common == 0.3);
    CHECK(cfg.rest_of_world.ou.sigma_common == 0.8);
    CHECK(cfg.pricing.intercept == 5.0);
    CHECK(cfg.pricing.slope == 5.0);
    CHECK(cfg.storage.level_quad == 250.0);
    CHECK(cfg.storage.level_lin == -15.0);
    CHECK(cfg.storage.effort_quad == 5.0);
    CHECK(cfg.storage.terminal_quad == 5000.0);
    CHECK(cfg.storage.terminal_lin == -0.12 * 5000.0);
    CHECK(cfg.grid.horizon == 1.0);
    // defaults: q0 = mu(0), s0 = 0
    CHECK(r.ou.initial.mean == Catch::Approx(-1.5));
    CHECK(cfg.rest_of_world.ou.initial.mean == Catch::Approx(-3.0));
    CHECK(r.initial_storage.mean == 0.0);
    CHECK(validate(cfg).empty());
}

TEST_CASE("missing pricing.p1 is reported by path") {
    std::string text = gridmfg_test::read_file(gridmfg_test::scenario_path("base.json"));
    auto doc = nlohmann::json::parse(text);
    doc["pricing"].erase("p1");
    bool threw = false;
    try {
        parse_scenario(doc.dump());
    } catch (const ConfigError& e) {
        threw = true;
        CHECK(e.path() == "pricing.p1");
    }
    CHECK(threw);
}

TEST_CASE("malformed document and wrong types name the offending path") {
    CHECK_THROWS_AS(parse_scenario("{ not json"), ConfigError);
    auto doc = nlohmann::json::parse(gridmfg_test::read_file(gridmfg_test::scenario_path("base.json")));
    doc["pricing"]["p1"] = "five";
    try {
        parse_scenario(doc.dump());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "pricing.p1");
    }
}

TEST_CASE("two equal regions parse to Gamma=2") {
    ScenarioConfig cfg = load_scenario("two_pop.json");
    REQUIRE(cfg.n_regions() == 2);
    CHECK(cfg.regions[0].weight == 0.5);
    CHECK(cfg.regions[1].weight == 0.5);
    CHECK(validate(cfg).empty());
}

TEST_CASE("validate flags boundary and normalization violations") {
    ScenarioConfig cfg = load_scenario("base.json");
    SECTION("p1 = 0 breaks the strict inequality") {
        cfg.pricing.slope = 0.0;
        auto v = validate(cfg);
        REQUIRE(v.size() == 1);
        CHECK(v[0].constraint == "p1 > 0");
    }
    SECTION("weights must sum to one") {
        cfg.regions.push_back(cfg.regions[0]);
        cfg.regions[0].weight = 0.6;
        cfg.regions[1].weight = 0.5;
        auto v = validate(cfg);
        REQUIRE(v.size() == 1);
        CHECK(v[0].constraint == "sum(weight) == 1");
    }
}

TEST_CASE("every single-field sign flip of {p1, a2, c, b2} is rejected") {
    ScenarioConfig base = load_scenario("base.json");
    auto flipped = [&](auto mut) {
        ScenarioConfig cfg = base;
        mut(cfg);
        return !validate(cfg).empty();
    };
    CHECK(flipped([](ScenarioConfig& c) { c.pricing.slope = -c.pricing.slope; }));
    CHECK(flipped([](ScenarioConfig& c) { c.storage.level_quad = -c.storage.level_quad; }));
    CHECK(flipped([](ScenarioConfig& c) { c.storage.effort_quad = -c.storage.effort_quad; }));
    CHECK(flipped([](ScenarioConfig& c) { c.storage.terminal_quad = -c.storage.terminal_quad; }));
}

TEST_CASE("parse o serialize is the identity") {
    for (const char* name : {"base.json", "two_pop.json", "zero.json", "high_vol.json"}) {
        ScenarioConfig cfg = load_scenario(name);
        ScenarioConfig back = parse_scenario(serialize_scenario(cfg));
        CHECK(serialize_scenario(back) == serialize_scenario(cfg));
        CHECK(back.n_regions() == cfg.n_regions());
        CHECK(back.pricing.slope == cfg.pricing.slope);
        CHECK(back.monte_carlo.seed == cfg.monte_carlo.seed);
        CHECK(back.regions[0].ou.seasonal.phase == cfg.regions[0].ou.seasonal.phase);
    }
}

TEST_CASE("gaussian initial laws round-trip") {
    ScenarioConfig cfg = load_scenario("base.json");
    cfg.regions[0].ou.initial = {-1.5, 0.4};
    cfg.regions[0].initial_storage = {0.1, 0.02};
    ScenarioConfig back = parse_scenario(serialize_scenario(cfg));
    CHECK(back.regions[0].ou.initial.std == 0.4);
    CHECK(back.regions[0].initial_storage.mean == 0.1);
    CHECK(validate(back).empty());
}
