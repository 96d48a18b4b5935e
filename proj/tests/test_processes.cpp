#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gridmfg/processes.hpp"
#include "test_util.hpp"

using namespace gridmfg;
using gridmfg_test::load_scenario;

namespace {

SeasonalFn paper_mu0() {
    return {-3.0, 2.0, 4.0 * std::numbers::pi, -std::numbers::pi / 2.0};
}

// Adaptive Simpson for the oracle quadratures in this file.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    double m = 0.5 * (a + b);
    return simpson(f, a, b, f(a), f(m), f(b), tol, 48);
}

} // namespace

TEST_CASE("seasonal mean matches the reference values") {
    SeasonalFn mu0 = paper_mu0();
    CHECK(mu0.value(0.0) == Catch::Approx(-3.0).margin(1e-14));
    CHECK(mu0.value(0.125) == Catch::Approx(-1.0).margin(1e-12));
    SeasonalFn mug{-1.5, 1.0, 4.0 * std::numbers::pi, -std::numbers::pi / 2.0};
    CHECK(mug.value(0.0) == Catch::Approx(-1.5).margin(1e-14));
}

TEST_CASE("seasonal kernel integral matches adaptive quadrature and the semigroup law") {
    SeasonalFn mu0 = paper_mu0();
    double a = 1.3;
    auto direct = [&](double t, double u) {
        return integrate([&](double s) { return a * std::exp(-a * (u - s)) * mu0.value(s); }, t, u);
    };
    for (auto [t, u] : {std::pair{0.0, 0.5}, {0.1, 0.9}, {0.3, 0.31}}) {
        CHECK(mu0.ou_kernel_integral(a, t, u) == Catch::Approx(direct(t, u)).margin(1e-10));
    }
    // semigroup: H(t,v) = e^{-a(v-u)} H(t,u) + H(u,v)
    double t = 0.05, u = 0.4, v = 0.87;
    CHECK(mu0.ou_kernel_integral(a, t, v) ==
          Catch::Approx(std::exp(-a * (v - u)) * mu0.ou_kernel_integral(a, t, u) +
                        mu0.ou_kernel_integral(a, u, v))
              .margin(1e-13));
    // a = 0 degenerates to zero
    CHECK(mu0.ou_kernel_integral(0.0, 0.0, 1.0) == 0.0);
}

TEST_CASE("ou_step fixed point and driftless limit") {
    OUParams p;
    p.mean_reversion = 1.0;
    p.seasonal = {-3.0, 0.0, 0.0, 0.0};
    CHECK(ou_step(p, -3.0, 0.2, 0.1, 0.0, 0.0) == Catch::Approx(-3.0).margin(1e-14));

    OUParams flat;
    flat.mean_reversion = 0.0;
    flat.sigma = 1.0;
    flat.seasonal = {7.0, 2.0, 3.0, 0.1}; // irrelevant at a = 0
    double draw = 0.7341;
    CHECK(ou_step(flat, 2.0, 0.0, 0.25, draw, 0.0) ==
          Catch::Approx(2.0 + draw * std::sqrt(0.25)).margin(1e-14));
}

TEST_CASE("ou_step mean matches the closed form against fine-step Euler") {
    OUParams p;
    p.mean_reversion = 1.0;
    p.seasonal = {-3.0, 0.0, 0.0, 0.0};
    double stepped = ou_step(p, 0.0, 0.0, 1.0, 0.0, 0.0);
    CHECK(stepped == Catch::Approx(-3.0 * (1.0 - std::exp(-1.0))).margin(1e-12));
    // Euler oracle with 2^20 substeps
    double q = 0.0;
    int n = 1 << 20;
    double dt = 1.0 / n;
    for (int i = 0; i < n; ++i) q += -1.0 * (q - (-3.0)) * dt;
    CHECK(stepped == Catch::Approx(q).margin(5e-6));
}

TEST_CASE("ou_step one-step variance factor matches quadrature") {
    double a = 1.7, dt = 0.37;
    double oracle = integrate([&](double s) { return std::exp(-2.0 * a * (dt - s)); }, 0.0, dt);
    CHECK(ou_step_variance_factor(a, dt) == Catch::Approx(oracle).margin(1e-12));
    CHECK(ou_step_variance_factor(0.0, dt) == Catch::Approx(dt).margin(1e-14));
}

TEST_CASE("ou_conditional_mean identities and quadrature oracle") {
    OUParams p;
    p.mean_reversion = 1.0;
    p.seasonal = paper_mu0();
    CHECK(ou_conditional_mean(p, 0.42, 0.3, 0.3) == Catch::Approx(0.42).margin(1e-14));

    OUParams flat;
    flat.mean_reversion = 2.0;
    flat.seasonal = {5.5, 0.0, 0.0, 0.0};
    CHECK(ou_conditional_mean(flat, -1.0, 0.0, 50.0) == Catch::Approx(5.5).margin(1e-12));

    double a = 1.0;
    auto oracle = integrate(
        [&](double s) { return a * std::exp(-a * (0.5 - s)) * p.seasonal.value(s); }, 0.0, 0.5);
    CHECK(ou_conditional_mean(p, 0.0, 0.0, 0.5) == Catch::Approx(oracle).margin(1e-10));
}

TEST_CASE("degenerate noise reproduces the deterministic mean curves") {
    ScenarioConfig cfg = load_scenario("det.json");
    StatePaths paths = simulate_exogenous(cfg, 3, 99);
    for (int path = 0; path < 3; ++path) {
        for (int k = 0; k <= paths.n_steps; ++k) {
            double t = cfg.grid.time(k);
            double expect0 =
                ou_conditional_mean(cfg.rest_of_world.ou, cfg.rest_of_world.ou.initial.mean, 0.0, t);
            CHECK(paths.at_q0(path, k) == Catch::Approx(expect0).margin(1e-10));
            double expectg =
                ou_conditional_mean(cfg.regions[0].ou, cfg.regions[0].ou.initial.mean, 0.0, t);
            CHECK(paths.at_q(path, k, 0) == Catch::Approx(expectg).margin(1e-10));
            CHECK(paths.at_qbar(path, k, 0) == Catch::Approx(expectg).margin(1e-10));
        }
    }
}

TEST_CASE("qbar equals the deterministic mean when the common loading vanishes") {
    ScenarioConfig cfg = load_scenario("base.json");
    cfg.regions[0].ou.sigma_common = 0.0;
    StatePaths paths = simulate_exogenous(cfg, 4, 123);
    for (int path = 0; path < 4; ++path)
        for (int k = 0; k <= paths.n_steps; ++k) {
            double t = cfg.grid.time(k);
            double expect =
                ou_conditional_mean(cfg.regions[0].ou, cfg.regions[0].ou.initial.mean, 0.0, t);
            CHECK(paths.at_qbar(path, k, 0) == Catch::Approx(expect).margin(1e-10));
        }
}

TEST_CASE("monte carlo terminal mean within 3 standard errors of the closed form") {
    ScenarioConfig cfg = load_scenario("base.json");
    int n_paths = 10000;
    StatePaths paths = simulate_exogenous(cfg, n_paths, 4242);
    int n = paths.n_steps;
    double sum = 0.0, sumsq = 0.0;
    for (int path = 0; path < n_paths; ++path) {
        double v = paths.at_q(path, n, 0);
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n_paths;
    double se = std::sqrt((sumsq / n_paths - mean * mean) / n_paths);
    double expect = ou_conditional_mean(cfg.regions[0].ou, -1.5, 0.0, 1.0);
    CHECK(std::abs(mean - expect) < 3.0 * se);
}

TEST_CASE("tower property: idiosyncratic redraws average to qbar on a fixed common path") {
    ScenarioConfig cfg = load_scenario("base.json");
    const auto& ou = cfg.regions[0].ou;
    int n = 64;
    double dt = 1.0 / n;
    NormalSource rng(555);
    std::vector<double> xi_common(n);
    for (int k = 0; k < n; ++k) xi_common[k] = rng.one(kStreamCommon, 0, k);

    double qbar = ou.initial.mean;
    for (int k = 0; k < n; ++k) {
        OUParams bar = ou;
        bar.sigma = 0.0;
        qbar = ou_step(bar, qbar, k * dt, dt, 0.0, xi_common[k]);
    }

    int clouds = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < clouds; ++i) {
        double q = ou.initial.mean;
        for (int k = 0; k < n; ++k) {
            double xi = rng.one(kStreamRegion0, i, k);
            q = ou_step(ou, q, k * dt, dt, xi, xi_common[k]);
        }
        sum += q;
        sumsq += q * q;
    }
    double mean = sum / clouds;
    double se = std::sqrt((sumsq / clouds - mean * mean) / clouds);
    CHECK(std::abs(mean - qbar) < 3.0 * se);
}

TEST_CASE("identical seeds are bit-identical across worker counts") {
    ScenarioConfig cfg = load_scenario("base.json");
    cfg.grid.steps = 32;
    setenv("GRIDMFG_THREADS", "1", 1);
    StatePaths one = simulate_exogenous(cfg, 64, 31337);
    setenv("GRIDMFG_THREADS", "8", 1);
    StatePaths many = simulate_exogenous(cfg, 64, 31337);
    unsetenv("GRIDMFG_THREADS");
    CHECK(one.q == many.q);
    CHECK(one.q0 == many.q0);
    CHECK(one.qbar == many.qbar);
}

TEST_CASE("philox known-answer vector") {
    auto out = Philox4x32::block(0, {0, 0, 0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
}
