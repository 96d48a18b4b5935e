#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gridmfg/config.hpp"

namespace gridmfg {

inline double inverse_demand(const PricingSpec& pricing, double x) {
    return pricing.intercept + pricing.slope * x;
}

// Price slope seen by the optimizer: the decentralized player takes the price
// as given (p1); the planner internalizes the impact, p(x) + x p'(x) = p0 + 2 p1 x.
inline double effective_slope(GameMode mode, const PricingSpec& pricing) {
    return mode == GameMode::MFG ? pricing.slope : 2.0 * pricing.slope;
}

// x = -Q0 - sum_g pi_g (Qbar_g - alphabar_g)
inline double aggregate_consumption(double q0, std::span<const double> weights,
                                    std::span<const double> qbar,
                                    std::span<const double> alphabar) {
    double x = -q0;
    for (std::size_t g = 0; g < weights.size(); ++g) x -= weights[g] * (qbar[g] - alphabar[g]);
    return x;
}

inline double spot_price_mean_field(const PricingSpec& pricing, double q0,
                                    std::span<const double> weights,
                                    std::span<const double> qbar,
                                    std::span<const double> alphabar) {
    return inverse_demand(pricing, aggregate_consumption(q0, weights, qbar, alphabar));
}

// Empirical price from N node states: p(-Q0 - (1/N) sum_i (Q_i - alpha_i)).
inline double spot_price_empirical(const PricingSpec& pricing, double q0,
                                   std::span<const std::pair<double, double>> nodes) {
    if (nodes.empty()) throw std::invalid_argument("spot_price_empirical: empty node list");
    double mean_injection = 0.0;
    for (const auto& [qi, ai] : nodes) mean_injection += qi - ai;
    mean_injection /= static_cast<double>(nodes.size());
    return inverse_demand(pricing, -q0 - mean_injection);
}

} // namespace gridmfg
