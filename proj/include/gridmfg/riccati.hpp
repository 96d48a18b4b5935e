#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace gridmfg {

// Scalar Riccati phi' = delta phi^2 - A2 backward from phi(T) = B2 (phi is the
// phi^{B2} convention: the linear coefficient of Y = phi^{B2} S + psi).
// Closed form via D(tau) = c+ e^{rho tau} + c- e^{-rho tau}, rho = sqrt(A2 delta):
//   phi(t) = (rho/delta) (c+ - c- e^{-2 rho tau}) / (c+ + c- e^{-2 rho tau}),  tau = T - t
//   exp(-int_t^u delta phi) = D(T-u) / D(T-t)
class ScalarRiccati {
  public:
    ScalarRiccati() = default;
    ScalarRiccati(double delta, double a2, double b2, double horizon)
        : delta_(delta), a2_(a2), b2_(b2), T_(horizon), rho_(std::sqrt(a2 * delta)),
          cplus_(b2 * delta + rho_), cminus_(rho_ - b2 * delta) {
        if (!(delta > 0.0) || !(a2 > 0.0) || !(b2 > 0.0))
            throw std::invalid_argument("ScalarRiccati requires delta, A2, B2 > 0");
    }

    double delta() const { return delta_; }
    double horizon() const { return T_; }
    double stationary_value() const { return rho_ / delta_; }

    double phi(double t) const {
        double e = std::exp(-2.0 * rho_ * (T_ - t));
        return rho_ / delta_ * (cplus_ - cminus_ * e) / (cplus_ + cminus_ * e);
    }

    // ln D(tau), D(tau) = c+ e^{rho tau} + c- e^{-rho tau} (positive for tau >= 0)
    double ln_d(double tau) const {
        return rho_ * tau + std::log(cplus_ + cminus_ * std::exp(-2.0 * rho_ * tau));
    }

    // E(t,u) = exp(-int_t^u delta phi(s) ds) = D(T-u)/D(T-t), t <= u <= T
    double decay(double t, double u) const { return std::exp(ln_d(T_ - u) - ln_d(T_ - t)); }

    // ln G(tau), G(tau) = c+ e^{rho tau} - c- e^{-rho tau}; dG/dtau = rho D
    double ln_g(double tau) const {
        return rho_ * tau + std::log(cplus_ - cminus_ * std::exp(-2.0 * rho_ * tau));
    }

    // int_a^b E(t,u) du = (G(T-a) - G(T-b)) / (rho D(T-t)), t <= a <= b <= T
    double decay_integral(double t, double a, double b) const {
        double ld = ln_d(T_ - t);
        return (std::exp(ln_g(T_ - a) - ld) - std::exp(ln_g(T_ - b) - ld)) / rho_;
    }

  private:
    double delta_ = 0.0, a2_ = 0.0, b2_ = 0.0, T_ = 0.0;
    double rho_ = 0.0, cplus_ = 0.0, cminus_ = 0.0;
};

// Product-trapezoid weights of one interval [a,b] for integrals
// int_a^b k(u) E(t,u) h(u) du with k E = -dE/du and h piecewise linear:
//   = E(t,a) * [ h(a) (1 - e1) + (h(b)-h(a))/(b-a) * (ie - e1 (b-a)) ]
// where e1 = E(a,b) and ie = int_a^b E(a,u) du. Exact in the kernel.
struct KernelStep {
    double e1 = 1.0; // one-step decay
    double ie = 0.0; // one-step integral of the decay
};

// Matrix Riccati for the mean-field step:
//   phibar' + phibar M phibar + B2 M phibar + B2 phibar M + A2 I + B2^2 M = 0,
//   phibar(T) = 0. Equivalently PhiB := phibar + B2 I solves PhiB' = -PhiB M PhiB - A2 I...
// (sign check: scalar M = -Delta gives PhiB' = Delta PhiB^2 - A2).
// Also provides left transition one-step matrices R_j = R(u_{j+1}, u_j) for
// dR/du = R A(u), A(u) = (phibar(u) + B2 I) M, and their interval integrals.
struct MeanFieldRiccati {
    int n_nodes = 0;         // internal grid nodes (n_int + 1)
    double dt = 0.0;         // internal step
    double horizon = 0.0;
    std::vector<Eigen::MatrixXd> phibar;  // at nodes, terminal 0
    std::vector<Eigen::MatrixXd> r_step;  // size n_int: R(u_{j+1}, u_j)
    std::vector<Eigen::MatrixXd> ir_step; // size n_int: int_{u_j}^{u_{j+1}} R(v,u_j) dv

    Eigen::MatrixXd transition(int j_from, int j_to) const {
        // R(u_{j_to}, u_{j_from}) for j_to >= j_from; composes as R(v,t)=R(u,t)R(v,u)
        auto dim = phibar.front().rows();
        Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
        for (int j = j_from; j < j_to; ++j) r = r * r_step[j];
        return r;
    }
};

namespace detail {

inline Eigen::MatrixXd riccati_rhs(const Eigen::MatrixXd& phib, const Eigen::MatrixXd& m,
                                   double a2) {
    auto dim = phib.rows();
    return -phib * m * phib - a2 * Eigen::MatrixXd::Identity(dim, dim);
}

} // namespace detail

// Backward RK4 for PhiB = phibar + B2 I with rate-adaptive substeps, storing
// PhiB on a substep-refined ladder so the transition matrices can reuse it.
inline MeanFieldRiccati solve_matrix_riccati(const Eigen::MatrixXd& m, double a2, double b2,
                                             double horizon, int n_int,
                                             double substep_budget = 0.005) {
    const auto dim = m.rows();
    const double h = horizon / n_int;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);

    MeanFieldRiccati out;
    out.n_nodes = n_int + 1;
    out.dt = h;
    out.horizon = horizon;
    out.phibar.assign(n_int + 1, Eigen::MatrixXd::Zero(dim, dim));

    // Backward pass with per-interval power-of-two substep counts; keep the
    // substep values of PhiB per interval for the forward transition solve.
    std::vector<std::vector<Eigen::MatrixXd>> ladder(n_int);
    Eigen::MatrixXd phib = b2 * eye;
    out.phibar[n_int] = phib - b2 * eye;
    for (int j = n_int - 1; j >= 0; --j) {
        double rate = (phib * m).cwiseAbs().rowwise().sum().maxCoeff();
        int subs = 2;
        while (rate * h / subs > substep_budget && subs < 65536) subs *= 2;
        auto& nodes = ladder[j];
        nodes.assign(subs + 1, Eigen::MatrixXd());
        nodes[subs] = phib;
        double hs = h / subs;
        for (int s = subs - 1; s >= 0; --s) {
            // integrate backward: d(PhiB)/dt = -PhiB M PhiB - A2 I, step -hs
            Eigen::MatrixXd k1 = detail::riccati_rhs(nodes[s + 1], m, a2);
            Eigen::MatrixXd k2 = detail::riccati_rhs(nodes[s + 1] - 0.5 * hs * k1, m, a2);
            Eigen::MatrixXd k3 = detail::riccati_rhs(nodes[s + 1] - 0.5 * hs * k2, m, a2);
            Eigen::MatrixXd k4 = detail::riccati_rhs(nodes[s + 1] - hs * k3, m, a2);
            nodes[s] = nodes[s + 1] - hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        phib = nodes[0];
        out.phibar[j] = phib - b2 * eye;
    }

    // Forward transition matrices per interval: augmented RK4 for
    // d/dv (R, IR) = (R A(v), R), A = PhiB M, one step per substep pair
    // (ladder counts are even so A is available at the RK4 nodes).
    out.r_step.assign(n_int, Eigen::MatrixXd());
    out.ir_step.assign(n_int, Eigen::MatrixXd());
    for (int j = 0; j < n_int; ++j) {
        const auto& nodes = ladder[j];
        int subs = static_cast<int>(nodes.size()) - 1;
        double hs = h / subs;
        Eigen::MatrixXd r = eye;
        Eigen::MatrixXd ir = Eigen::MatrixXd::Zero(dim, dim);
        for (int s = 0; s + 2 <= subs; s += 2) {
            Eigen::MatrixXd a0 = nodes[s] * m;
            Eigen::MatrixXd am = nodes[s + 1] * m;
            Eigen::MatrixXd a1 = nodes[s + 2] * m;
            double h2 = 2.0 * hs;
            Eigen::MatrixXd k1 = r * a0;
            Eigen::MatrixXd r2 = r + 0.5 * h2 * k1;
            Eigen::MatrixXd k2 = r2 * am;
            Eigen::MatrixXd r3 = r + 0.5 * h2 * k2;
            Eigen::MatrixXd k3 = r3 * am;
            Eigen::MatrixXd r4 = r + h2 * k3;
            Eigen::MatrixXd k4 = r4 * a1;
            ir += h2 / 6.0 * (r + 2.0 * r2 + 2.0 * r3 + r4);
            r += h2 / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.r_step[j] = r;
        out.ir_step[j] = ir;
    }
    return out;
}

// Paper-style block-exponential solution of the same Riccati:
//   phibar(t) = -[(0 I) e^{A tau} (0;I)]^{-1} [(0 I) e^{A tau} (I;0)],
//   A = [[B2 M, M], [-A2 I - B2^2 M, -B2 M]], tau = T - t.
// Returns nullopt when the invertibility condition det > 0 fails.
inline std::optional<Eigen::MatrixXd> block_exponential_phibar(const Eigen::MatrixXd& m, double a2,
                                                               double b2, double tau) {
    const auto dim = m.rows();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * dim, 2 * dim);
    big.topLeftCorner(dim, dim) = b2 * m;
    big.topRightCorner(dim, dim) = m;
    big.bottomLeftCorner(dim, dim) =
        -a2 * Eigen::MatrixXd::Identity(dim, dim) - b2 * b2 * m;
    big.bottomRightCorner(dim, dim) = -b2 * m;
    Eigen::MatrixXd e = (big * tau).exp();
    Eigen::MatrixXd lower_right = e.bottomRightCorner(dim, dim);
    Eigen::MatrixXd lower_left = e.bottomLeftCorner(dim, dim);
    if (!(lower_right.determinant() > 0.0)) return std::nullopt;
    return -lower_right.partialPivLu().solve(lower_left);
}

} // namespace gridmfg
