#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gridmfg/market.hpp"
#include "gridmfg/parallel.hpp"
#include "gridmfg/processes.hpp"
#include "gridmfg/rng.hpp"
#include "gridmfg/solver.hpp"

namespace gridmfg {

// One Monte Carlo batch of controlled trajectories on the user grid. Exogenous
// states live in `exo`; mean-field plan quantities in `plan_of` (policy plans).
struct PathBundle {
    int n_paths = 0, n = 0, gammas = 0;
    double dt = 0.0;
    const StatePaths* exo = nullptr;
    const SolvedPolicy* policy = nullptr;         // null for the no-storage baseline
    std::vector<double> storage;                  // (path, k, g)
    std::vector<double> control;                  // (path, k, g)
    std::vector<double> price;                    // (path, k)
    std::size_t kg(int k, int g) const { return static_cast<std::size_t>(k) * gammas + g; }
    std::size_t idx(int path, int k, int g) const {
        return (static_cast<std::size_t>(path) * (n + 1) + k) * gammas + g;
    }
    double s(int path, int k, int g) const { return storage[idx(path, k, g)]; }
    double alpha(int path, int k, int g) const { return control[idx(path, k, g)]; }
    double p(int path, int k) const { return price[static_cast<std::size_t>(path) * (n + 1) + k]; }
};

namespace detail {

inline double initial_storage_draw(const ScenarioConfig& cfg, const NormalSource& rng, int path,
                                   int g, std::uint32_t salt) {
    const auto& law = cfg.regions[g].initial_storage;
    if (law.deterministic()) return law.mean;
    return law.mean + law.std * rng.one(kStreamRegion0 + g, static_cast<std::uint32_t>(path),
                                        kStepInitS, salt);
}

} // namespace detail

inline PathBundle simulate_mean_field(const ScenarioConfig& cfg, const SolvedPolicy& policy,
                                      const StatePaths& exo, std::uint32_t salt = 0) {
    if (policy.n != exo.n_steps || policy.gammas() != exo.n_regions)
        throw std::invalid_argument("simulate_mean_field: policy grid does not match paths");
    const int gc = exo.n_regions, n = exo.n_steps;
    PathBundle out;
    out.n_paths = exo.n_paths;
    out.n = n;
    out.gammas = gc;
    out.dt = exo.dt;
    out.exo = &exo;
    out.policy = &policy;
    out.storage.assign(static_cast<std::size_t>(exo.n_paths) * (n + 1) * gc, 0.0);
    out.control = out.storage;
    out.price.assign(static_cast<std::size_t>(exo.n_paths) * (n + 1), 0.0);

    NormalSource rng(policy.cfg.monte_carlo.seed);
    parallel_for(exo.n_paths, [&](int path) {
        const PathPlan& plan = policy.plans[path];
        for (int k = 0; k <= n; ++k)
            out.price[static_cast<std::size_t>(path) * (n + 1) + k] = plan.price[k];
        for (int g = 0; g < gc; ++g)
            out.storage[out.idx(path, 0, g)] = detail::initial_storage_draw(cfg, rng, path, g, salt);
        for (int k = 0; k <= n; ++k) {
            for (int g = 0; g < gc; ++g) {
                double s = out.storage[out.idx(path, k, g)];
                double a = feedback_control(policy, plan, g, k, s, exo.at_q(path, k, g));
                out.control[out.idx(path, k, g)] = a;
                if (k < n) out.storage[out.idx(path, k + 1, g)] = s + a * exo.dt;
            }
        }
    });
    return out;
}

// alpha == 0 everywhere; price evaluated at nu_bar == 0 on the same exogenous
// paths, so controlled-vs-baseline comparisons are common-random-number paired.
inline PathBundle baseline_no_storage(const ScenarioConfig& cfg, const StatePaths& exo,
                                      std::uint32_t salt = 0) {
    const int gc = exo.n_regions, n = exo.n_steps;
    PathBundle out;
    out.n_paths = exo.n_paths;
    out.n = n;
    out.gammas = gc;
    out.dt = exo.dt;
    out.exo = &exo;
    out.storage.assign(static_cast<std::size_t>(exo.n_paths) * (n + 1) * gc, 0.0);
    out.control = out.storage;
    out.price.assign(static_cast<std::size_t>(exo.n_paths) * (n + 1), 0.0);

    std::vector<double> weights(gc);
    for (int g = 0; g < gc; ++g) weights[g] = cfg.regions[g].weight;
    NormalSource rng(cfg.monte_carlo.seed);
    parallel_for(exo.n_paths, [&](int path) {
        for (int g = 0; g < gc; ++g) {
            double s0 = detail::initial_storage_draw(cfg, rng, path, g, salt);
            for (int k = 0; k <= n; ++k) out.storage[out.idx(path, k, g)] = s0;
        }
        for (int k = 0; k <= n; ++k) {
            double x = -exo.at_q0(path, k);
            for (int g = 0; g < gc; ++g) x -= weights[g] * exo.at_qbar(path, k, g);
            out.price[static_cast<std::size_t>(path) * (n + 1) + k] =
                inverse_demand(cfg.pricing, x);
        }
    });
    return out;
}

// Finite-N simulation: every node runs the mean-field feedback law with its own
// idiosyncratic state; the spot price is the empirical one from the N nodes.
struct NPlayerBundle {
    int n_paths = 0, n = 0, n_nodes = 0;
    double dt = 0.0;
    std::vector<int> region_of;            // node -> region
    std::vector<double> price;             // (path, k) empirical price
    std::vector<double> node_q, node_s, node_alpha; // (path, k, node)
    const SolvedPolicy* policy = nullptr;

    std::size_t idx(int path, int k, int i) const {
        return (static_cast<std::size_t>(path) * (n + 1) + k) * n_nodes + i;
    }
    double p(int path, int k) const { return price[static_cast<std::size_t>(path) * (n + 1) + k]; }
};

// floor(pi_g N) nodes per region in region order, remainder to the largest region.
inline std::vector<int> assign_regions(const ScenarioConfig& cfg, int n_nodes) {
    const int gc = cfg.n_regions();
    std::vector<int> counts(gc, 0);
    int assigned = 0;
    for (int g = 0; g < gc; ++g) {
        counts[g] = static_cast<int>(std::floor(cfg.regions[g].weight * n_nodes));
        assigned += counts[g];
    }
    int largest = 0;
    for (int g = 1; g < gc; ++g)
        if (cfg.regions[g].weight > cfg.regions[largest].weight) largest = g;
    counts[largest] += n_nodes - assigned;
    std::vector<int> region_of;
    region_of.reserve(n_nodes);
    for (int g = 0; g < gc; ++g)
        for (int c = 0; c < counts[g]; ++c) region_of.push_back(g);
    return region_of;
}

inline NPlayerBundle simulate_n_player(const ScenarioConfig& cfg, const SolvedPolicy& policy,
                                       const StatePaths& exo, int n_nodes,
                                       std::uint32_t salt = 0) {
    if (n_nodes < 1) throw std::invalid_argument("simulate_n_player: N >= 1 required");
    if (policy.n != exo.n_steps)
        throw std::invalid_argument("simulate_n_player: policy grid does not match paths");
    const int n = exo.n_steps;
    NPlayerBundle out;
    out.n_paths = exo.n_paths;
    out.n = n;
    out.n_nodes = n_nodes;
    out.dt = exo.dt;
    out.policy = &policy;
    out.region_of = assign_regions(cfg, n_nodes);
    out.price.assign(static_cast<std::size_t>(exo.n_paths) * (n + 1), 0.0);
    out.node_q.assign(static_cast<std::size_t>(exo.n_paths) * (n + 1) * n_nodes, 0.0);
    out.node_s = out.node_q;
    out.node_alpha = out.node_q;

    NormalSource rng(cfg.monte_carlo.seed);
    parallel_for(exo.n_paths, [&](int path) {
        auto pp = static_cast<std::uint32_t>(path);
        const PathPlan& plan = policy.plans[path];
        // initial node states
        for (int i = 0; i < n_nodes; ++i) {
            int g = out.region_of[i];
            const auto& qlaw = cfg.regions[g].ou.initial;
            double q = qlaw.mean;
            if (!qlaw.deterministic())
                q += qlaw.std * rng.one(kStreamNode0 + i, pp, kStepInitQ, salt);
            const auto& slaw = cfg.regions[g].initial_storage;
            double s = slaw.mean;
            if (!slaw.deterministic())
                s += slaw.std * rng.one(kStreamNode0 + i, pp, kStepInitS, salt);
            out.node_q[out.idx(path, 0, i)] = q;
            out.node_s[out.idx(path, 0, i)] = s;
        }
        for (int k = 0; k <= n; ++k) {
            double t = cfg.grid.time(k);
            double xi_common =
                k < n ? rng.one(kStreamCommon, pp, static_cast<std::uint32_t>(k), salt) : 0.0;
            double mean_injection = 0.0;
            for (int i = 0; i < n_nodes; ++i) {
                int g = out.region_of[i];
                double q = out.node_q[out.idx(path, k, i)];
                double s = out.node_s[out.idx(path, k, i)];
                double a = feedback_control(policy, plan, g, k, s, q);
                out.node_alpha[out.idx(path, k, i)] = a;
                mean_injection += q - a;
                if (k < n) {
                    out.node_s[out.idx(path, k + 1, i)] = s + a * exo.dt;
                    double xi = rng.one(kStreamNode0 + i, pp, static_cast<std::uint32_t>(k), salt);
                    out.node_q[out.idx(path, k + 1, i)] =
                        ou_step(cfg.regions[g].ou, q, t, exo.dt, xi, xi_common);
                }
            }
            mean_injection /= n_nodes;
            out.price[static_cast<std::size_t>(path) * (n + 1) + k] =
                inverse_demand(cfg.pricing, -exo.at_q0(path, k) - mean_injection);
        }
    });
    return out;
}

} // namespace gridmfg
