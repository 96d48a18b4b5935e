#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gridmfg/config.hpp"
#include "gridmfg/market.hpp"
#include "gridmfg/parallel.hpp"
#include "gridmfg/processes.hpp"
#include "gridmfg/riccati.hpp"

namespace gridmfg {

// K_hat = C + K_g; M_mode = diag(K_hat) + lambda 1 pi^T; M = -M_mode^{-1}.
struct InteractionMatrices {
    Eigen::VectorXd khat;
    Eigen::MatrixXd m_mode;
    Eigen::MatrixXd m;
    double determinant = 0.0;
    double lambda = 0.0;
};

inline InteractionMatrices interaction_matrices(const ScenarioConfig& cfg, GameMode mode) {
    int gamma_count = cfg.n_regions();
    InteractionMatrices im;
    im.lambda = effective_slope(mode, cfg.pricing);
    im.khat.resize(gamma_count);
    Eigen::VectorXd weights(gamma_count);
    for (int g = 0; g < gamma_count; ++g) {
        im.khat[g] = cfg.storage.effort_quad + cfg.regions[g].demand_charge;
        weights[g] = cfg.regions[g].weight;
    }
    im.m_mode = Eigen::MatrixXd(im.khat.asDiagonal());
    im.m_mode += im.lambda * Eigen::VectorXd::Ones(gamma_count) * weights.transpose();
    im.determinant = im.m_mode.determinant();
    if (!(im.determinant > 0.0))
        throw std::runtime_error("interaction matrix is singular or not positive");
    im.m = -im.m_mode.partialPivLu().solve(Eigen::MatrixXd::Identity(gamma_count, gamma_count));
    return im;
}

// Scalar Riccati value for one region, phi^{B2} convention.
inline double scalar_riccati(double a2, double delta, double b2, double horizon, double t) {
    return ScalarRiccati(delta, a2, b2, horizon).phi(t);
}

struct SolverOptions {
    bool paper_literal_b = false; // step-1 driver with K_hat instead of K
    int refine = 0;               // internal substeps per user step; 0 = auto
};

// Per-path step-1/step-2 plan on the user grid, gamma-fastest layout.
struct PathPlan {
    std::vector<double> b;           // (k,g) driver at grid nodes
    std::vector<double> psibar;      // (k,g)
    std::vector<double> alphabar;    // (k,g)
    std::vector<double> sbar;        // (k,g)
    std::vector<double> psi_const;   // (k,g) psi minus the c_lin * Q_t term
    std::vector<double> bhat_common; // (k)   p0 - lambda (Q0 + sum pi (Qbar - alphabar))
    std::vector<double> price;       // (k)   physical spot price p(x)
};

struct SolvedPolicy {
    GameMode mode = GameMode::MFG;
    ScenarioConfig cfg;
    SolverOptions options;
    InteractionMatrices im;

    int n = 0;        // user steps
    int m_refine = 1; // internal substeps per user step
    int n_int = 0;    // internal steps = n * m_refine
    double dt = 0.0, dt_int = 0.0;

    Eigen::VectorXd weights;  // pi
    Eigen::VectorXd k_demand; // K_g
    Eigen::VectorXd k_driver; // K_g, or K_hat_g under paper_literal_b
    Eigen::VectorXd delta2;   // 1/(C+K_g)

    std::vector<ScalarRiccati> step2; // per region
    MeanFieldRiccati step1;

    // Internal-grid tables, (j,g) layout
    std::vector<double> phi2_int, kappa2;    // phi^{g,B2}(u_j), delta_g phi^{g,B2}(u_j)
    std::vector<double> e2_step, ie2_step;   // one-interval kernel decay / integral
    // OU forecast tables, (k,j) and (k,j,g)
    std::vector<double> decay0, h0;
    std::vector<double> decayg, hg;
    // User-grid tables, (k,g)
    std::vector<double> c_lin;     // coefficient of Q_t in psi
    std::vector<double> phi2_user; // phi^{g,B2}(t_k)

    std::vector<PathPlan> plans;

    int gammas() const { return static_cast<int>(step2.size()); }
    int kg(int k, int g) const { return k * gammas() + g; }
    int jg(int j, int g) const { return j * gammas() + g; }
    std::size_t kj(int k, int j) const { return static_cast<std::size_t>(k) * (n_int + 1) + j; }
    std::size_t kjg(int k, int j, int g) const { return kj(k, j) * gammas() + g; }
    int j_of_k(int k) const { return k * m_refine; }
    double time_int(int j) const { return cfg.grid.horizon * j / n_int; }
};

// alpha = -delta_g (phi^{B2} S + psi + bhat), bhat = p0 - lambda(Q0 + sum pi (Qbar - alphabar)) - K Q.
inline double feedback_control(const SolvedPolicy& pol, int g, int k, double s, double q_node,
                               double q0, const double* qbar, const double* alphabar,
                               double psi) {
    double x_terms = q0;
    for (int d = 0; d < pol.gammas(); ++d) x_terms += pol.weights[d] * (qbar[d] - alphabar[d]);
    double bhat = pol.cfg.pricing.intercept - pol.im.lambda * x_terms -
                  pol.k_demand[g] * q_node;
    return -pol.delta2[g] * (pol.phi2_user[pol.kg(k, g)] * s + psi + bhat);
}

// Same feedback assembled from a stored plan (psi = psi_const + c_lin Q).
inline double feedback_control(const SolvedPolicy& pol, const PathPlan& plan, int g, int k,
                               double s, double q_node) {
    int kg = pol.kg(k, g);
    double psi = plan.psi_const[kg] + pol.c_lin[kg] * q_node;
    double bhat = plan.bhat_common[k] - pol.k_demand[g] * q_node;
    return -pol.delta2[g] * (pol.phi2_user[kg] * s + psi + bhat);
}

namespace detail {

struct PlanWork {
    std::vector<double> g_b;    // (j,g) E[b_u | state at t_k]
    std::vector<double> m_psi;  // (j,g) E[psibar_u | ...]
    std::vector<double> m_alpha; // (j,g)
    std::vector<double> s_common; // (j)
    std::vector<double> m_alpha_user, m_sbar_user; // (k,g)
    Eigen::VectorXd va, vb, vc;

    void resize(int n, int n_int, int gamma_count) {
        g_b.assign(static_cast<std::size_t>(n_int + 1) * gamma_count, 0.0);
        m_psi = g_b;
        m_alpha = g_b;
        s_common.assign(n_int + 1, 0.0);
        m_alpha_user.assign(static_cast<std::size_t>(n + 1) * gamma_count, 0.0);
        m_sbar_user = m_alpha_user;
        va.resize(gamma_count);
        vb.resize(gamma_count);
        vc.resize(gamma_count);
    }
};

// Backward sweep for m[j] = E[psibar_{u_j} | conditioning], j in [j0, n_int], given
// driver values g[j]. m[n_int] = -B1 * ones. Product-trapezoid in the driver:
//   m[j] = R_j (m[j+1] + g[j+1]) - g[j] - IR_j (g[j+1]-g[j])/h + IR_j A1 ones
inline void psibar_sweep(const SolvedPolicy& pol, const double* g, int j0, double* m_out) {
    const int gc = pol.gammas();
    const double a1 = pol.cfg.storage.level_lin;
    const double b1 = pol.cfg.storage.terminal_lin;
    const double h = pol.dt_int;
    Eigen::VectorXd m = Eigen::VectorXd::Constant(gc, -b1);
    for (int g_i = 0; g_i < gc; ++g_i) m_out[pol.jg(pol.n_int, g_i)] = m[g_i];
    Eigen::VectorXd gj(gc), gj1(gc), tmp(gc);
    for (int j = pol.n_int - 1; j >= j0; --j) {
        for (int g_i = 0; g_i < gc; ++g_i) {
            gj[g_i] = g[pol.jg(j, g_i)];
            gj1[g_i] = g[pol.jg(j + 1, g_i)];
        }
        tmp = pol.step1.r_step[j] * (m + gj1) - gj -
              pol.step1.ir_step[j] * ((gj1 - gj) / h - Eigen::VectorXd::Constant(gc, a1));
        m = tmp;
        for (int g_i = 0; g_i < gc; ++g_i) m_out[pol.jg(j, g_i)] = m[g_i];
    }
}

// Forecast driver: g_b[j,g] = p0 - lambda (E[Q0_u] + sum_d pi_d E[Qbar_d_u]) - Kdrv_g E[Qbar_g_u]
inline void fill_driver_forecast(const SolvedPolicy& pol, int k, double q0_k, const double* qbar_k,
                                 PlanWork& w) {
    const int gc = pol.gammas();
    const double p0 = pol.cfg.pricing.intercept;
    const double lambda = pol.im.lambda;
    for (int j = pol.j_of_k(k); j <= pol.n_int; ++j) {
        double e0 = pol.decay0[pol.kj(k, j)] * q0_k + pol.h0[pol.kj(k, j)];
        double acc = e0;
        for (int g = 0; g < gc; ++g) {
            double eg = pol.decayg[pol.kjg(k, j, g)] * qbar_k[g] + pol.hg[pol.kjg(k, j, g)];
            w.va[g] = eg;
            acc += pol.weights[g] * eg;
        }
        for (int g = 0; g < gc; ++g)
            w.g_b[pol.jg(j, g)] = p0 - lambda * acc - pol.k_driver[g] * w.va[g];
    }
}

// Full per-path plan from user node k_start with initial conditional-mean storage.
// q0_path/qbar_path are user-grid arrays (k, [g]) valid on [k_start, n].
inline void compute_plan(const SolvedPolicy& pol, const double* q0_path, const double* qbar_path,
                         int k_start, const Eigen::VectorXd& sbar_init, PathPlan& out,
                         PlanWork& w) {
    const int gc = pol.gammas();
    const int n = pol.n;
    const double dt = pol.dt;
    const double h = pol.dt_int;
    const double a1 = pol.cfg.storage.level_lin;
    const double b1 = pol.cfg.storage.terminal_lin;
    const double b2 = pol.cfg.storage.terminal_quad;
    const double p0 = pol.cfg.pricing.intercept;
    const double lambda = pol.im.lambda;

    out.b.assign(static_cast<std::size_t>(n + 1) * gc, 0.0);
    out.psibar = out.b;
    out.alphabar = out.b;
    out.sbar = out.b;
    out.psi_const = out.b;
    out.bhat_common.assign(n + 1, 0.0);
    out.price.assign(n + 1, 0.0);

    Eigen::VectorXd sbar = sbar_init;
    for (int k = k_start; k <= n; ++k) {
        const int j0 = pol.j_of_k(k);
        const double* qbar_k = qbar_path + static_cast<std::size_t>(k) * gc;
        fill_driver_forecast(pol, k, q0_path[k], qbar_k, w);
        psibar_sweep(pol, w.g_b.data(), j0, w.m_psi.data());

        // step-1 values at t_k
        double x = -q0_path[k];
        for (int g = 0; g < gc; ++g) {
            out.b[pol.kg(k, g)] = w.g_b[pol.jg(j0, g)];
            out.psibar[pol.kg(k, g)] = w.m_psi[pol.jg(j0, g)];
            out.sbar[pol.kg(k, g)] = sbar[g];
        }
        w.va = (pol.step1.phibar[j0] + b2 * Eigen::MatrixXd::Identity(gc, gc)) * sbar;
        for (int g = 0; g < gc; ++g)
            w.vb[g] = w.va[g] + out.psibar[pol.kg(k, g)] + out.b[pol.kg(k, g)];
        w.vc = pol.im.m * w.vb; // alphabar
        for (int g = 0; g < gc; ++g) {
            out.alphabar[pol.kg(k, g)] = w.vc[g];
            x -= pol.weights[g] * (qbar_k[g] - w.vc[g]);
        }
        out.price[k] = pol.cfg.pricing.intercept + pol.cfg.pricing.slope * x;
        out.bhat_common[k] = p0 + lambda * (x - 0.0); // p0 - lambda(Q0 + sum pi (Qbar-alphabar)) = p0 + lambda x

        // step-2 forecasts: conditional means of the discrete system from t_k
        for (int g = 0; g < gc; ++g) w.m_sbar_user[pol.kg(k, g)] = sbar[g];
        for (int kp = k; kp <= n; ++kp) {
            const int jp = pol.j_of_k(kp);
            for (int g = 0; g < gc; ++g) w.va[g] = w.m_sbar_user[pol.kg(kp, g)];
            w.vb = (pol.step1.phibar[jp] + b2 * Eigen::MatrixXd::Identity(gc, gc)) * w.va;
            for (int g = 0; g < gc; ++g)
                w.vb[g] += w.m_psi[pol.jg(jp, g)] + w.g_b[pol.jg(jp, g)];
            w.vc = pol.im.m * w.vb;
            for (int g = 0; g < gc; ++g) {
                w.m_alpha_user[pol.kg(kp, g)] = w.vc[g];
                if (kp < n)
                    w.m_sbar_user[pol.kg(kp + 1, g)] =
                        w.m_sbar_user[pol.kg(kp, g)] + w.vc[g] * dt;
            }
        }
        for (int j = j0; j <= pol.n_int; ++j) {
            int kp = std::min(j / pol.m_refine, n);
            double frac = pol.time_int(j) - kp * dt;
            for (int g = 0; g < gc; ++g)
                w.va[g] = w.m_sbar_user[pol.kg(kp, g)] +
                          w.m_alpha_user[pol.kg(kp, g)] * frac;
            w.vb = (pol.step1.phibar[j] + b2 * Eigen::MatrixXd::Identity(gc, gc)) * w.va;
            for (int g = 0; g < gc; ++g)
                w.vb[g] += w.m_psi[pol.jg(j, g)] + w.g_b[pol.jg(j, g)];
            w.vc = pol.im.m * w.vb;
            double e0 = pol.decay0[pol.kj(k, j)] * q0_path[k] + pol.h0[pol.kj(k, j)];
            double acc = e0;
            for (int g = 0; g < gc; ++g) {
                w.m_alpha[pol.jg(j, g)] = w.vc[g];
                double eg = pol.decayg[pol.kjg(k, j, g)] * qbar_k[g] + pol.hg[pol.kjg(k, j, g)];
                acc += pol.weights[g] * (eg - w.vc[g]);
            }
            w.s_common[j] = p0 - lambda * acc;
        }

        // psi_const per region: product-trapezoid of kappa E (t_k, .) against
        // h(u) = s_common(u) - K H(t_k,u) - A1/kappa(u); the K decay Q part lives in c_lin.
        for (int g = 0; g < gc; ++g) {
            double eacc = 1.0;
            double sum = 0.0;
            double kd = pol.k_demand[g];
            double h_j = w.s_common[j0] - kd * pol.hg[pol.kjg(k, j0, g)] -
                         a1 / pol.kappa2[pol.jg(j0, g)];
            for (int j = j0; j < pol.n_int; ++j) {
                double h_j1 = w.s_common[j + 1] - kd * pol.hg[pol.kjg(k, j + 1, g)] -
                              a1 / pol.kappa2[pol.jg(j + 1, g)];
                double e1 = pol.e2_step[pol.jg(j, g)];
                double ie = pol.ie2_step[pol.jg(j, g)];
                sum += eacc * (h_j * (1.0 - e1) + (h_j1 - h_j) / h * (ie - e1 * h));
                eacc *= e1;
                h_j = h_j1;
            }
            out.psi_const[pol.kg(k, g)] = -b1 * eacc - sum;
        }

        if (k < n)
            for (int g = 0; g < gc; ++g) sbar[g] += out.alphabar[pol.kg(k, g)] * dt;
    }
}

} // namespace detail

inline SolvedPolicy solve(const ScenarioConfig& cfg, GameMode mode, const StatePaths& exo,
                          SolverOptions options = {}) {
    require_valid(cfg);
    if (exo.n_steps != cfg.grid.steps || exo.n_regions != cfg.n_regions())
        throw std::invalid_argument("solve: exogenous paths do not match the scenario grid");

    SolvedPolicy pol;
    pol.mode = mode;
    pol.cfg = cfg;
    pol.options = options;
    pol.im = interaction_matrices(cfg, mode);

    const int gc = cfg.n_regions();
    pol.n = cfg.grid.steps;
    pol.m_refine = options.refine > 0 ? options.refine : 1;
    if (options.refine <= 0) {
        while (pol.n * pol.m_refine < 256 && pol.m_refine < 8) pol.m_refine *= 2;
    }
    pol.n_int = pol.n * pol.m_refine;
    pol.dt = cfg.grid.dt();
    pol.dt_int = pol.dt / pol.m_refine;

    pol.weights.resize(gc);
    pol.k_demand.resize(gc);
    pol.k_driver.resize(gc);
    pol.delta2.resize(gc);
    for (int g = 0; g < gc; ++g) {
        pol.weights[g] = cfg.regions[g].weight;
        pol.k_demand[g] = cfg.regions[g].demand_charge;
        pol.k_driver[g] = options.paper_literal_b ? pol.im.khat[g] : pol.k_demand[g];
        pol.delta2[g] = 1.0 / pol.im.khat[g];
    }

    const double a2 = cfg.storage.level_quad;
    const double b2 = cfg.storage.terminal_quad;
    const double horizon = cfg.grid.horizon;

    for (int g = 0; g < gc; ++g)
        pol.step2.emplace_back(pol.delta2[g], a2, b2, horizon);

    // Step-1 kernels: exact scalar closed forms when Gamma == 1, RK4 otherwise
    // (cross-checked against the block-exponential formula in solve-time tests).
    if (gc == 1) {
        double delta_bar = 1.0 / (pol.im.khat[0] + pol.im.lambda * pol.weights[0]);
        ScalarRiccati bar(delta_bar, a2, b2, horizon);
        pol.step1.n_nodes = pol.n_int + 1;
        pol.step1.dt = pol.dt_int;
        pol.step1.horizon = horizon;
        pol.step1.phibar.assign(pol.n_int + 1, Eigen::MatrixXd::Zero(1, 1));
        pol.step1.r_step.assign(pol.n_int, Eigen::MatrixXd::Zero(1, 1));
        pol.step1.ir_step.assign(pol.n_int, Eigen::MatrixXd::Zero(1, 1));
        for (int j = 0; j <= pol.n_int; ++j)
            pol.step1.phibar[j](0, 0) = bar.phi(pol.time_int(j)) - b2;
        for (int j = 0; j < pol.n_int; ++j) {
            double uj = pol.time_int(j), uj1 = pol.time_int(j + 1);
            pol.step1.r_step[j](0, 0) = bar.decay(uj, uj1);
            pol.step1.ir_step[j](0, 0) = bar.decay_integral(uj, uj, uj1);
        }
    } else {
        pol.step1 = solve_matrix_riccati(pol.im.m, a2, b2, horizon, pol.n_int);
    }

    // Scalar step-2 tables on the internal grid.
    pol.phi2_int.assign(static_cast<std::size_t>(pol.n_int + 1) * gc, 0.0);
    pol.kappa2 = pol.phi2_int;
    pol.e2_step.assign(static_cast<std::size_t>(pol.n_int) * gc, 0.0);
    pol.ie2_step = pol.e2_step;
    for (int j = 0; j <= pol.n_int; ++j) {
        double u = pol.time_int(j);
        for (int g = 0; g < gc; ++g) {
            double phi = pol.step2[g].phi(u);
            pol.phi2_int[pol.jg(j, g)] = phi;
            pol.kappa2[pol.jg(j, g)] = pol.delta2[g] * phi;
        }
    }
    for (int j = 0; j < pol.n_int; ++j) {
        double uj = pol.time_int(j), uj1 = pol.time_int(j + 1);
        for (int g = 0; g < gc; ++g) {
            pol.e2_step[pol.jg(j, g)] = pol.step2[g].decay(uj, uj1);
            pol.ie2_step[pol.jg(j, g)] = pol.step2[g].decay_integral(uj, uj, uj1);
        }
    }

    // OU forecast tables.
    const std::size_t kj_count = static_cast<std::size_t>(pol.n + 1) * (pol.n_int + 1);
    pol.decay0.assign(kj_count, 0.0);
    pol.h0.assign(kj_count, 0.0);
    pol.decayg.assign(kj_count * gc, 0.0);
    pol.hg.assign(kj_count * gc, 0.0);
    for (int k = 0; k <= pol.n; ++k) {
        double t = cfg.grid.time(k);
        for (int j = pol.j_of_k(k); j <= pol.n_int; ++j) {
            double u = pol.time_int(j);
            const auto& rw = cfg.rest_of_world.ou;
            pol.decay0[pol.kj(k, j)] = std::exp(-rw.mean_reversion * (u - t));
            pol.h0[pol.kj(k, j)] = rw.seasonal.ou_kernel_integral(rw.mean_reversion, t, u);
            for (int g = 0; g < gc; ++g) {
                const auto& ou = cfg.regions[g].ou;
                pol.decayg[pol.kjg(k, j, g)] = std::exp(-ou.mean_reversion * (u - t));
                pol.hg[pol.kjg(k, j, g)] =
                    ou.seasonal.ou_kernel_integral(ou.mean_reversion, t, u);
            }
        }
    }

    // phi^{B2} at user nodes and the linear psi coefficient
    // c_lin(k,g) = K_g int_t^T kappa E(t,u) e^{-a_g (u-t)} du (product-trapezoid).
    pol.phi2_user.assign(static_cast<std::size_t>(pol.n + 1) * gc, 0.0);
    pol.c_lin = pol.phi2_user;
    for (int k = 0; k <= pol.n; ++k) {
        int j0 = pol.j_of_k(k);
        for (int g = 0; g < gc; ++g) {
            pol.phi2_user[pol.kg(k, g)] = pol.phi2_int[pol.jg(j0, g)];
            double eacc = 1.0, sum = 0.0;
            double h_j = pol.decayg[pol.kjg(k, j0, g)];
            for (int j = j0; j < pol.n_int; ++j) {
                double h_j1 = pol.decayg[pol.kjg(k, j + 1, g)];
                double e1 = pol.e2_step[pol.jg(j, g)];
                double ie = pol.ie2_step[pol.jg(j, g)];
                sum += eacc * (h_j * (1.0 - e1) +
                               (h_j1 - h_j) / pol.dt_int * (ie - e1 * pol.dt_int));
                eacc *= e1;
                h_j = h_j1;
            }
            pol.c_lin[pol.kg(k, g)] = pol.k_demand[g] * sum;
        }
    }

    // Per-path plans.
    pol.plans.assign(exo.n_paths, PathPlan{});
    Eigen::VectorXd sbar0(gc);
    for (int g = 0; g < gc; ++g) sbar0[g] = cfg.regions[g].initial_storage.mean;
    parallel_for(exo.n_paths, [&](int path) {
        detail::PlanWork work;
        work.resize(pol.n, pol.n_int, gc);
        const double* q0 = exo.q0.data() + static_cast<std::size_t>(path) * (pol.n + 1);
        const double* qbar = exo.qbar.data() + static_cast<std::size_t>(path) * (pol.n + 1) * gc;
        detail::compute_plan(pol, q0, qbar, 0, sbar0, pol.plans[path], work);
    });
    return pol;
}

// E[alphabar_{t_ku} | F0_{t_k}] recomputed for one stored path (oracle probe).
inline Eigen::VectorXd mean_alpha_forecast(const SolvedPolicy& pol, const StatePaths& exo,
                                           int path, int k, int k_u) {
    const int gc = pol.gammas();
    detail::PlanWork w;
    w.resize(pol.n, pol.n_int, gc);
    const double* q0 = exo.q0.data() + static_cast<std::size_t>(path) * (pol.n + 1);
    const double* qbar = exo.qbar.data() + static_cast<std::size_t>(path) * (pol.n + 1) * gc;
    detail::fill_driver_forecast(pol, k, q0[k], qbar + static_cast<std::size_t>(k) * gc, w);
    detail::psibar_sweep(pol, w.g_b.data(), pol.j_of_k(k), w.m_psi.data());
    const double b2 = pol.cfg.storage.terminal_quad;
    Eigen::VectorXd m_sbar(gc), out(gc);
    for (int g = 0; g < gc; ++g) m_sbar[g] = pol.plans[path].sbar[pol.kg(k, g)];
    for (int kp = k; kp <= k_u; ++kp) {
        int jp = pol.j_of_k(kp);
        Eigen::VectorXd y =
            (pol.step1.phibar[jp] + b2 * Eigen::MatrixXd::Identity(gc, gc)) * m_sbar;
        for (int g = 0; g < gc; ++g) y[g] += w.m_psi[pol.jg(jp, g)] + w.g_b[pol.jg(jp, g)];
        out = pol.im.m * y;
        if (kp < k_u) m_sbar += out * pol.dt;
    }
    return out;
}

} // namespace gridmfg
