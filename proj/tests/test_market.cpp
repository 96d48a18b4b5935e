#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "gridmfg/market.hpp"
#include "gridmfg/processes.hpp"
#include "gridmfg/rng.hpp"
#include "test_util.hpp"

using namespace gridmfg;

TEST_CASE("inverse demand on the reference parameters") {
    PricingSpec p{5.0, 5.0};
    CHECK(inverse_demand(p, 0.0) == 5.0);
    CHECK(inverse_demand(p, 3.0) == 20.0);
    CHECK(inverse_demand(p, -1.0) == 0.0); // negative-price regime exists
}

TEST_CASE("effective slope per game mode") {
    PricingSpec p{5.0, 5.0};
    CHECK(effective_slope(GameMode::MFG, p) == 5.0);
    CHECK(effective_slope(GameMode::MFC, p) == 10.0);
    PricingSpec flat{5.0, 0.0};
    CHECK(effective_slope(GameMode::MFG, flat) == 0.0);
    CHECK(effective_slope(GameMode::MFC, flat) == 0.0);
}

TEST_CASE("mean-field spot price") {
    PricingSpec p{5.0, 5.0};
    {
        std::array<double, 1> w{1.0}, qb{0.0}, ab{0.0};
        CHECK(spot_price_mean_field(p, -3.0, w, qb, ab) == 20.0);
    }
    {
        std::array<double, 1> w{1.0}, qb{2.0}, ab{2.0};
        CHECK(spot_price_mean_field(p, 0.0, w, qb, ab) == 5.0);
    }
    {
        std::array<double, 2> w{0.5, 0.5}, qb{-1.0, -1.0}, ab{0.0, 0.0};
        CHECK(spot_price_mean_field(p, -3.0, w, qb, ab) == 25.0);
    }
}

TEST_CASE("empirical spot price") {
    PricingSpec p{5.0, 5.0};
    {
        std::array<std::pair<double, double>, 1> nodes{{{1.3, 1.3}}};
        CHECK(spot_price_empirical(p, -2.0, nodes) == inverse_demand(p, 2.0));
    }
    {
        // all nodes at the mean-field state -> equals the mean-field price
        std::array<std::pair<double, double>, 5> nodes;
        nodes.fill({0.7, 0.2});
        std::array<double, 1> w{1.0}, qb{0.7}, ab{0.2};
        CHECK(spot_price_empirical(p, -1.0, nodes) ==
              Catch::Approx(spot_price_mean_field(p, -1.0, w, qb, ab)).margin(1e-14));
    }
    {
        std::array<std::pair<double, double>, 4> nodes{{{1, 0}, {-1, 0}, {2, 1}, {0, -1}}};
        CHECK(spot_price_empirical(p, -3.0, nodes) == Catch::Approx(17.5).margin(1e-14));
    }
    std::vector<std::pair<double, double>> empty;
    CHECK_THROWS_AS(spot_price_empirical(p, 0.0, empty), std::invalid_argument);
}

TEST_CASE("price is strictly increasing in aggregate consumption") {
    PricingSpec p{5.0, 5.0};
    NormalSource rng(9);
    for (int i = 0; i < 200; ++i) {
        auto [x, dx_raw] = rng.pair(0, i, 0);
        double dx = std::abs(dx_raw) + 1e-9;
        CHECK(inverse_demand(p, x + dx) > inverse_demand(p, x));
    }
}

TEST_CASE("empirical price converges to the mean-field price at the sqrt(N) rate") {
    // i.i.d. node states with known conditional mean; compare N = 100 vs 10000.
    PricingSpec p{5.0, 5.0};
    NormalSource rng(1234);
    double qbar = -1.5, abar = 0.2, sd = 0.8;
    auto gap = [&](int n_nodes, int rep) {
        std::vector<std::pair<double, double>> nodes(n_nodes);
        for (int i = 0; i < n_nodes; ++i)
            nodes[i] = {qbar + sd * rng.one(1, i, rep), abar};
        std::array<double, 1> w{1.0}, qb{qbar}, ab{abar};
        return std::abs(spot_price_empirical(p, -0.5, nodes) -
                        spot_price_mean_field(p, -0.5, w, qb, ab));
    };
    int reps = 200;
    double small_n = 0.0, small_n_sq = 0.0, large_n = 0.0, large_n_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        double a = gap(100, r), b = gap(10000, r + 100000);
        small_n += a;
        small_n_sq += a * a;
        large_n += b;
        large_n_sq += b * b;
    }
    small_n /= reps;
    large_n /= reps;
    double se_small = std::sqrt((small_n_sq / reps - small_n * small_n) / reps);
    double se_large = std::sqrt((large_n_sq / reps - large_n * large_n) / reps);
    double band = 3.0 * std::sqrt(se_small * se_small + se_large * se_large);
    // |gap| scales like N^{-1/2}: factor 10 between the two sizes
    CHECK(small_n - 10.0 * large_n > -10.0 * band);
    CHECK(large_n < small_n);
}
