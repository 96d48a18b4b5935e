#pragma once

#include <cmath>

namespace gridmfg {

// Seasonal mean mu(t) = offset + amplitude * cos(omega*t + phase).
struct SeasonalFn {
    double offset = 0.0;
    double amplitude = 0.0;
    double omega = 0.0; // rad/day
    double phase = 0.0; // rad

    double value(double t) const { return offset + amplitude * std::cos(omega * t + phase); }

    // H(t,u) = \int_t^u a e^{-a(u-s)} mu(s) ds, closed form for the cosine family.
    // Satisfies the semigroup identity H(t,v) = e^{-a(v-u)} H(t,u) + H(u,v).
    double ou_kernel_integral(double a, double t, double u) const {
        if (a <= 0.0 || u <= t) return 0.0;
        double decay = std::exp(-a * (u - t));
        double out = offset * (1.0 - decay);
        if (amplitude != 0.0) {
            double denom = a * a + omega * omega;
            double at_u = a * std::cos(omega * u + phase) + omega * std::sin(omega * u + phase);
            double at_t = a * std::cos(omega * t + phase) + omega * std::sin(omega * t + phase);
            out += amplitude * a / denom * (at_u - decay * at_t);
        }
        return out;
    }
};

} // namespace gridmfg
