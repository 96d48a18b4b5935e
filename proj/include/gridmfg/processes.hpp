#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gridmfg/config.hpp"
#include "gridmfg/parallel.hpp"
#include "gridmfg/rng.hpp"

namespace gridmfg {

inline double seasonal_mean(const SeasonalFn& f, double t) { return f.value(t); }

// Variance integrator v(a,dt) = (1 - e^{-2 a dt}) / (2a), -> dt as a -> 0.
inline double ou_step_variance_factor(double a, double dt) {
    if (a * dt < 1e-12) return dt;
    return -std::expm1(-2.0 * a * dt) / (2.0 * a);
}

// One exact-in-distribution OU step. The Gaussian part uses the stationary
// increment variance (sigma^2 + sigma0^2) v(a,dt), split between the two loadings.
inline double ou_step(const OUParams& p, double q, double t, double dt, double xi_idio,
                      double xi_common) {
    double a = p.mean_reversion;
    double decay = std::exp(-a * dt);
    double mean = q * decay + p.seasonal.ou_kernel_integral(a, t, t + dt);
    double scale = std::sqrt(ou_step_variance_factor(a, dt));
    return mean + scale * (p.sigma * xi_idio + p.sigma_common * xi_common);
}

// E[Q_u | Q_t = q_t], closed form for the cosine seasonal family.
inline double ou_conditional_mean(const OUParams& p, double q_t, double t, double u) {
    double a = p.mean_reversion;
    return q_t * std::exp(-a * (u - t)) + p.seasonal.ou_kernel_integral(a, t, u);
}

// Exogenous state paths on the user grid: Q^0, one representative Q^gamma per
// region, and the conditional mean Q^bar_gamma (common loading only).
struct StatePaths {
    int n_paths = 0;
    int n_steps = 0;   // grid has n_steps+1 nodes
    int n_regions = 0;
    double dt = 0.0;
    std::vector<double> q0;   // (path, k)
    std::vector<double> q;    // (path, k, region)
    std::vector<double> qbar; // (path, k, region)

    double& at_q0(int path, int k) { return q0[static_cast<std::size_t>(path) * (n_steps + 1) + k]; }
    double at_q0(int path, int k) const { return q0[static_cast<std::size_t>(path) * (n_steps + 1) + k]; }
    std::size_t idx(int path, int k, int g) const {
        return (static_cast<std::size_t>(path) * (n_steps + 1) + k) * n_regions + g;
    }
    double& at_q(int path, int k, int g) { return q[idx(path, k, g)]; }
    double at_q(int path, int k, int g) const { return q[idx(path, k, g)]; }
    double& at_qbar(int path, int k, int g) { return qbar[idx(path, k, g)]; }
    double at_qbar(int path, int k, int g) const { return qbar[idx(path, k, g)]; }
};

namespace detail {

// Advances one path of (Q^0, Q^gamma, Qbar^gamma) with a shared common shock per
// step. Exposed so the nested-MC oracle can restart from an interior state.
inline void simulate_exogenous_path(const ScenarioConfig& cfg, const NormalSource& rng,
                                    std::uint32_t path, std::uint32_t salt, int k_start,
                                    int n_steps, double t0, double dt, double q0_init,
                                    const double* q_init, const double* qbar_init,
                                    StatePaths& out, int out_path) {
    int gamma_count = cfg.n_regions();
    out.at_q0(out_path, 0) = q0_init;
    for (int g = 0; g < gamma_count; ++g) {
        out.at_q(out_path, 0, g) = q_init[g];
        out.at_qbar(out_path, 0, g) = qbar_init[g];
    }
    for (int k = 0; k < n_steps; ++k) {
        double t = t0 + k * dt;
        auto step_id = static_cast<std::uint32_t>(k_start + k);
        double xi_common = rng.one(kStreamCommon, path, step_id, salt);
        const auto& rw = cfg.rest_of_world.ou;
        out.at_q0(out_path, k + 1) = ou_step(rw, out.at_q0(out_path, k), t, dt, 0.0, xi_common);
        for (int g = 0; g < gamma_count; ++g) {
            const auto& ou = cfg.regions[g].ou;
            double xi = rng.one(kStreamRegion0 + g, path, step_id, salt);
            out.at_q(out_path, k + 1, g) =
                ou_step(ou, out.at_q(out_path, k, g), t, dt, xi, xi_common);
            OUParams bar = ou;
            bar.sigma = 0.0;
            out.at_qbar(out_path, k + 1, g) =
                ou_step(bar, out.at_qbar(out_path, k, g), t, dt, 0.0, xi_common);
        }
    }
}

} // namespace detail

inline StatePaths simulate_exogenous(const ScenarioConfig& cfg, int n_paths, std::uint64_t seed,
                                     std::uint32_t salt = 0) {
    require_valid(cfg);
    int n = cfg.grid.steps;
    int gamma_count = cfg.n_regions();
    StatePaths out;
    out.n_paths = n_paths;
    out.n_steps = n;
    out.n_regions = gamma_count;
    out.dt = cfg.grid.dt();
    out.q0.assign(static_cast<std::size_t>(n_paths) * (n + 1), 0.0);
    out.q.assign(static_cast<std::size_t>(n_paths) * (n + 1) * gamma_count, 0.0);
    out.qbar.assign(static_cast<std::size_t>(n_paths) * (n + 1) * gamma_count, 0.0);

    NormalSource rng(seed);
    parallel_for(n_paths, [&](int path) {
        auto p = static_cast<std::uint32_t>(path);
        const auto& rw = cfg.rest_of_world.ou;
        double q0_init = rw.initial.mean;
        if (!rw.initial.deterministic())
            q0_init += rw.initial.std * rng.one(kStreamCommon, p, kStepInitQ, salt);
        std::vector<double> qi(gamma_count), qb(gamma_count);
        for (int g = 0; g < gamma_count; ++g) {
            const auto& law = cfg.regions[g].ou.initial;
            qi[g] = law.mean;
            if (!law.deterministic())
                qi[g] += law.std * rng.one(kStreamRegion0 + g, p, kStepInitQ, salt);
            qb[g] = law.mean; // conditional mean of an independent initial draw
        }
        detail::simulate_exogenous_path(cfg, rng, p, salt, 0, n, 0.0, out.dt, q0_init, qi.data(),
                                        qb.data(), out, path);
    });
    return out;
}

} // namespace gridmfg
