#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridmfg/seasonal.hpp"

namespace gridmfg {

enum class GameMode { MFG, MFC };

inline const char* to_string(GameMode m) { return m == GameMode::MFG ? "mfg" : "mfc"; }

// Initial condition: deterministic when std == 0, else an independent N(mean, std^2) draw.
struct InitialLaw {
    double mean = 0.0;
    double std = 0.0;
    bool deterministic() const { return std == 0.0; }
};

struct OUParams {
    double mean_reversion = 0.0; // a (1/day)
    double sigma = 0.0;          // idiosyncratic loading (power/sqrt(day))
    double sigma_common = 0.0;   // common-noise loading
    SeasonalFn seasonal;
    InitialLaw initial; // q0
};

struct RegionSpec {
    double weight = 1.0;        // pi^gamma
    OUParams ou;
    double demand_charge = 0.0; // K^gamma (>= 0)
    InitialLaw initial_storage; // s0
};

struct RestOfWorldSpec {
    OUParams ou;                // driven by the common noise only (sigma == 0)
    double demand_charge = 0.0; // K^0, control-independent
};

struct StorageCostSpec {
    double level_quad = 0.0;    // A2 > 0
    double level_lin = 0.0;     // A1
    double effort_quad = 0.0;   // C > 0
    double terminal_quad = 0.0; // B2 > 0
    double terminal_lin = 0.0;  // B1
};

struct PricingSpec {
    double intercept = 0.0; // p0
    double slope = 0.0;     // p1 > 0
};

struct TimeGrid {
    double horizon = 1.0; // T (days)
    int steps = 256;      // n >= 2
    double dt() const { return horizon / steps; }
    double time(int k) const { return horizon * k / steps; }
};

struct MonteCarloSpec {
    int paths = 200;
    std::uint64_t seed = 1;
};

struct ScenarioConfig {
    std::vector<RegionSpec> regions;
    RestOfWorldSpec rest_of_world;
    StorageCostSpec storage;
    PricingSpec pricing;
    TimeGrid grid;
    MonteCarloSpec monte_carlo;

    int n_regions() const { return static_cast<int>(regions.size()); }
};

class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

struct Violation {
    std::string constraint;
    std::string actual;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& node, const std::string& path, const std::string& key) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    auto it = node.find(key);
    if (it == node.end()) throw ConfigError(path + "." + key, "missing required key");
    return *it;
}

inline double get_number(const json& node, const std::string& path) {
    if (!node.is_number()) throw ConfigError(path, "expected a number");
    return node.get<double>();
}

inline double req_number(const json& node, const std::string& path, const std::string& key) {
    return get_number(require(node, path, key), path + "." + key);
}

inline double opt_number(const json& node, const std::string& path, const std::string& key,
                         double fallback) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    auto it = node.find(key);
    if (it == node.end()) return fallback;
    return get_number(*it, path + "." + key);
}

inline std::uint64_t opt_u64(const json& node, const std::string& path, const std::string& key,
                             std::uint64_t fallback) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    auto it = node.find(key);
    if (it == node.end()) return fallback;
    if (!it->is_number_unsigned() && !it->is_number_integer())
        throw ConfigError(path + "." + key, "expected an unsigned integer");
    if (it->is_number_integer() && it->get<std::int64_t>() < 0)
        throw ConfigError(path + "." + key, "expected an unsigned integer");
    return it->get<std::uint64_t>();
}

inline int opt_int(const json& node, const std::string& path, const std::string& key,
                   int fallback) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    auto it = node.find(key);
    if (it == node.end()) return fallback;
    if (!it->is_number_integer() && !it->is_number_unsigned())
        throw ConfigError(path + "." + key, "expected an integer");
    return it->get<int>();
}

inline SeasonalFn parse_seasonal(const json& node, const std::string& path) {
    SeasonalFn s;
    s.offset = opt_number(node, path, "offset", 0.0);
    s.amplitude = opt_number(node, path, "amplitude", 0.0);
    s.omega = opt_number(node, path, "omega", 0.0);
    s.phase = opt_number(node, path, "phase", 0.0);
    return s;
}

// "q0": 1.5 or "q0": {"mean": 1.5, "std": 0.1}; absent -> fallback.
inline InitialLaw parse_initial(const json& parent, const std::string& path,
                                const std::string& key, const InitialLaw& fallback) {
    auto it = parent.find(key);
    if (it == parent.end()) return fallback;
    InitialLaw law;
    if (it->is_number()) {
        law.mean = it->get<double>();
        law.std = 0.0;
        return law;
    }
    if (!it->is_object()) throw ConfigError(path + "." + key, "expected a number or an object");
    law.mean = req_number(*it, path + "." + key, "mean");
    law.std = opt_number(*it, path + "." + key, "std", 0.0);
    return law;
}

inline OUParams parse_ou(const json& node, const std::string& path) {
    if (!node.is_object()) throw ConfigError(path, "expected an object");
    OUParams p;
    p.mean_reversion = req_number(node, path, "a");
    p.sigma = opt_number(node, path, "sigma", 0.0);
    p.sigma_common = opt_number(node, path, "sigma0", 0.0);
    auto it = node.find("seasonal");
    if (it != node.end()) p.seasonal = parse_seasonal(*it, path + ".seasonal");
    p.initial = parse_initial(node, path, "q0", InitialLaw{p.seasonal.value(0.0), 0.0});
    return p;
}

} // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("malformed document: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("$", "top level must be an object");

    ScenarioConfig cfg;

    const json& regions = detail::require(doc, "$", "regions");
    if (!regions.is_array() || regions.empty())
        throw ConfigError("regions", "expected a non-empty array");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        std::string path = "regions[" + std::to_string(i) + "]";
        const json& rn = regions[i];
        if (!rn.is_object()) throw ConfigError(path, "expected an object");
        RegionSpec r;
        r.weight = detail::req_number(rn, path, "weight");
        r.ou = detail::parse_ou(detail::require(rn, path, "ou"), path + ".ou");
        r.demand_charge = detail::opt_number(rn, path, "k", 0.0);
        r.initial_storage = detail::parse_initial(rn, path, "s0", InitialLaw{0.0, 0.0});
        cfg.regions.push_back(r);
    }

    {
        const json& rw = detail::require(doc, "$", "rest_of_world");
        std::string path = "rest_of_world";
        cfg.rest_of_world.ou = detail::parse_ou(detail::require(rw, path, "ou"), path + ".ou");
        cfg.rest_of_world.demand_charge = detail::opt_number(rw, path, "k0", 0.0);
    }

    {
        const json& sc = detail::require(doc, "$", "storage_cost");
        std::string path = "storage_cost";
        cfg.storage.level_quad = detail::req_number(sc, path, "a2");
        cfg.storage.level_lin = detail::opt_number(sc, path, "a1", 0.0);
        cfg.storage.effort_quad = detail::req_number(sc, path, "c");
        cfg.storage.terminal_quad = detail::req_number(sc, path, "b2");
        cfg.storage.terminal_lin = detail::opt_number(sc, path, "b1", 0.0);
    }

    {
        const json& pr = detail::require(doc, "$", "pricing");
        cfg.pricing.intercept = detail::req_number(pr, "pricing", "p0");
        cfg.pricing.slope = detail::req_number(pr, "pricing", "p1");
    }

    {
        const json& gr = detail::require(doc, "$", "grid");
        cfg.grid.horizon = detail::req_number(gr, "grid", "horizon");
        cfg.grid.steps = detail::opt_int(gr, "grid", "steps", 256);
    }

    if (auto it = doc.find("monte_carlo"); it != doc.end()) {
        cfg.monte_carlo.paths = detail::opt_int(*it, "monte_carlo", "paths", 200);
        cfg.monte_carlo.seed = detail::opt_u64(*it, "monte_carlo", "seed", 1);
    }

    return cfg;
}

inline std::string serialize_scenario(const ScenarioConfig& cfg) {
    using detail::json;
    auto seasonal = [](const SeasonalFn& s) {
        return json{{"offset", s.offset},
                    {"amplitude", s.amplitude},
                    {"omega", s.omega},
                    {"phase", s.phase}};
    };
    auto initial = [](const InitialLaw& law) -> json {
        if (law.deterministic()) return law.mean;
        return json{{"mean", law.mean}, {"std", law.std}};
    };
    auto ou = [&](const OUParams& p) {
        return json{{"a", p.mean_reversion},
                    {"sigma", p.sigma},
                    {"sigma0", p.sigma_common},
                    {"seasonal", seasonal(p.seasonal)},
                    {"q0", initial(p.initial)}};
    };
    json doc;
    doc["regions"] = json::array();
    for (const auto& r : cfg.regions) {
        doc["regions"].push_back(json{{"weight", r.weight},
                                      {"ou", ou(r.ou)},
                                      {"k", r.demand_charge},
                                      {"s0", initial(r.initial_storage)}});
    }
    doc["rest_of_world"] = json{{"ou", ou(cfg.rest_of_world.ou)},
                                {"k0", cfg.rest_of_world.demand_charge}};
    doc["storage_cost"] = json{{"a2", cfg.storage.level_quad},
                               {"a1", cfg.storage.level_lin},
                               {"c", cfg.storage.effort_quad},
                               {"b2", cfg.storage.terminal_quad},
                               {"b1", cfg.storage.terminal_lin}};
    doc["pricing"] = json{{"p0", cfg.pricing.intercept}, {"p1", cfg.pricing.slope}};
    doc["grid"] = json{{"horizon", cfg.grid.horizon}, {"steps", cfg.grid.steps}};
    doc["monte_carlo"] = json{{"paths", cfg.monte_carlo.paths}, {"seed", cfg.monte_carlo.seed}};
    return doc.dump(2);
}

inline std::vector<Violation> validate(const ScenarioConfig& cfg) {
    std::vector<Violation> out;
    auto fail = [&](const std::string& constraint, double actual) {
        std::ostringstream os;
        os << actual;
        out.push_back({constraint, os.str()});
    };

    if (cfg.regions.empty()) out.push_back({"regions non-empty", "0 regions"});
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < cfg.regions.size(); ++i) {
        const auto& r = cfg.regions[i];
        std::string tag = "regions[" + std::to_string(i) + "]";
        if (!(r.weight > 0.0)) fail(tag + ".weight > 0", r.weight);
        if (r.demand_charge < 0.0) fail(tag + ".k >= 0", r.demand_charge);
        if (r.ou.mean_reversion < 0.0) fail(tag + ".ou.a >= 0", r.ou.mean_reversion);
        if (r.ou.sigma < 0.0) fail(tag + ".ou.sigma >= 0", r.ou.sigma);
        if (r.ou.sigma_common < 0.0) fail(tag + ".ou.sigma0 >= 0", r.ou.sigma_common);
        if (r.initial_storage.std < 0.0) fail(tag + ".s0.std >= 0", r.initial_storage.std);
        if (r.ou.initial.std < 0.0) fail(tag + ".ou.q0.std >= 0", r.ou.initial.std);
        if (!(cfg.storage.effort_quad + r.demand_charge > 0.0))
            fail(tag + ": c + k > 0", cfg.storage.effort_quad + r.demand_charge);
        weight_sum += r.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-12) fail("sum(weight) == 1", weight_sum);

    const auto& rw = cfg.rest_of_world;
    if (rw.ou.mean_reversion < 0.0) fail("rest_of_world.ou.a >= 0", rw.ou.mean_reversion);
    if (rw.ou.sigma != 0.0) fail("rest_of_world.ou.sigma == 0", rw.ou.sigma);
    if (rw.ou.sigma_common < 0.0) fail("rest_of_world.ou.sigma0 >= 0", rw.ou.sigma_common);
    if (rw.demand_charge < 0.0) fail("rest_of_world.k0 >= 0", rw.demand_charge);

    if (!(cfg.storage.level_quad > 0.0)) fail("a2 > 0", cfg.storage.level_quad);
    if (!(cfg.storage.effort_quad > 0.0)) fail("c > 0", cfg.storage.effort_quad);
    if (!(cfg.storage.terminal_quad > 0.0)) fail("b2 > 0", cfg.storage.terminal_quad);
    if (!(cfg.pricing.slope > 0.0)) fail("p1 > 0", cfg.pricing.slope);

    if (!(cfg.grid.horizon > 0.0)) fail("grid.horizon > 0", cfg.grid.horizon);
    if (cfg.grid.steps < 2) fail("grid.steps >= 2", cfg.grid.steps);
    if (cfg.monte_carlo.paths < 1) fail("monte_carlo.paths >= 1", cfg.monte_carlo.paths);

    return out;
}

inline void require_valid(const ScenarioConfig& cfg) {
    auto violations = validate(cfg);
    if (violations.empty()) return;
    std::string msg = "invalid scenario:";
    for (const auto& v : violations) msg += " [" + v.constraint + " (actual " + v.actual + ")]";
    throw std::invalid_argument(msg);
}

} // namespace gridmfg
