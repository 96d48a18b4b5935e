#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmfg/config.hpp"
#include "gridmfg/engine.hpp"

namespace gridmfg {

struct ComponentStat {
    double mean = 0.0;
    double se = 0.0;
};

inline ComponentStat mc_stat(const std::vector<double>& per_path) {
    ComponentStat s;
    std::size_t n = per_path.size();
    if (n == 0) return s;
    double sum = 0.0;
    for (double v : per_path) sum += v;
    s.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : per_path) ss += (v - s.mean) * (v - s.mean);
        s.se = std::sqrt(ss / (static_cast<double>(n) * (static_cast<double>(n) - 1.0)));
    }
    return s;
}

// Realized cost decomposition. Per-path values are kept for paired statistics.
struct RegionCost {
    ComponentStat volumetric, demand, storage_run, terminal, bill, total;
    std::vector<double> per_path_volumetric, per_path_demand, per_path_storage_run,
        per_path_terminal, per_path_bill, per_path_total;
    std::vector<double> per_path_max_power;     // max_t |Q - alpha|
    std::vector<double> per_path_max_power_raw; // max_t |Q|
    std::vector<double> per_path_peak_storage;  // max_t |S|
    ComponentStat max_power, max_power_raw, peak_storage;
};

struct CostReport {
    std::vector<RegionCost> regions;
    ComponentStat j0_volumetric, j0_demand, j0_total, jc;
    std::vector<double> per_path_j0, per_path_jc;
    double dt = 0.0;
    int n_paths = 0;
};

inline CostReport realized_costs(const PathBundle& bundle, const ScenarioConfig& cfg) {
    const int gc = bundle.gammas, n = bundle.n, n_paths = bundle.n_paths;
    const double dt = bundle.dt;
    const StatePaths& exo = *bundle.exo;
    const auto& sc = cfg.storage;

    CostReport rep;
    rep.dt = dt;
    rep.n_paths = n_paths;
    rep.regions.resize(gc);
    for (auto& r : rep.regions) {
        r.per_path_volumetric.assign(n_paths, 0.0);
        r.per_path_demand.assign(n_paths, 0.0);
        r.per_path_storage_run.assign(n_paths, 0.0);
        r.per_path_terminal.assign(n_paths, 0.0);
        r.per_path_bill.assign(n_paths, 0.0);
        r.per_path_total.assign(n_paths, 0.0);
        r.per_path_max_power.assign(n_paths, 0.0);
        r.per_path_max_power_raw.assign(n_paths, 0.0);
        r.per_path_peak_storage.assign(n_paths, 0.0);
    }
    rep.per_path_j0.assign(n_paths, 0.0);
    rep.per_path_jc.assign(n_paths, 0.0);

    auto weight = [&](int k) { return (k == 0 || k == n) ? 0.5 * dt : dt; };

    for (int path = 0; path < n_paths; ++path) {
        double j0 = 0.0;
        for (int k = 0; k <= n; ++k) {
            double p = bundle.p(path, k);
            double q0 = exo.at_q0(path, k);
            j0 += weight(k) *
                  (-p * q0 + 0.5 * cfg.rest_of_world.demand_charge * q0 * q0);
        }
        rep.per_path_j0[path] = j0;
        double jc = j0;
        for (int g = 0; g < gc; ++g) {
            auto& r = rep.regions[g];
            double vol = 0.0, dem = 0.0, sto = 0.0;
            double maxp = 0.0, maxp_raw = 0.0, peak_s = 0.0;
            for (int k = 0; k <= n; ++k) {
                double p = bundle.p(path, k);
                double q = exo.at_q(path, k, g);
                double a = bundle.alpha(path, k, g);
                double s = bundle.s(path, k, g);
                double w = weight(k);
                vol += w * p * (a - q);
                dem += w * 0.5 * cfg.regions[g].demand_charge * (q - a) * (q - a);
                sto += w * (0.5 * sc.level_quad * s * s + sc.level_lin * s +
                            0.5 * sc.effort_quad * a * a);
                maxp = std::max(maxp, std::abs(q - a));
                maxp_raw = std::max(maxp_raw, std::abs(q));
                peak_s = std::max(peak_s, std::abs(s));
            }
            double s_t = bundle.s(path, n, g);
            double dev = s_t - sc.terminal_lin / sc.terminal_quad;
            double ter = 0.5 * sc.terminal_quad * dev * dev;
            r.per_path_volumetric[path] = vol;
            r.per_path_demand[path] = dem;
            r.per_path_storage_run[path] = sto;
            r.per_path_terminal[path] = ter;
            r.per_path_bill[path] = vol + dem;
            r.per_path_total[path] = vol + dem + sto + ter;
            r.per_path_max_power[path] = maxp;
            r.per_path_max_power_raw[path] = maxp_raw;
            r.per_path_peak_storage[path] = peak_s;
            jc += cfg.regions[g].weight * r.per_path_total[path];
        }
        rep.per_path_jc[path] = jc;
    }

    for (auto& r : rep.regions) {
        r.volumetric = mc_stat(r.per_path_volumetric);
        r.demand = mc_stat(r.per_path_demand);
        r.storage_run = mc_stat(r.per_path_storage_run);
        r.terminal = mc_stat(r.per_path_terminal);
        r.bill = mc_stat(r.per_path_bill);
        r.total = mc_stat(r.per_path_total);
        r.max_power = mc_stat(r.per_path_max_power);
        r.max_power_raw = mc_stat(r.per_path_max_power_raw);
        r.peak_storage = mc_stat(r.per_path_peak_storage);
    }
    {
        std::vector<double> j0v = rep.per_path_j0, j0d(n_paths, 0.0);
        for (int path = 0; path < n_paths; ++path) {
            double dem = 0.0, vol = 0.0;
            for (int k = 0; k <= n; ++k) {
                double q0 = exo.at_q0(path, k);
                double w = weight(k);
                dem += w * 0.5 * cfg.rest_of_world.demand_charge * q0 * q0;
                vol += w * (-bundle.p(path, k) * q0);
            }
            j0d[path] = dem;
            j0v[path] = vol;
        }
        rep.j0_volumetric = mc_stat(j0v);
        rep.j0_demand = mc_stat(j0d);
    }
    rep.j0_total = mc_stat(rep.per_path_j0);
    rep.jc = mc_stat(rep.per_path_jc);
    return rep;
}

// Paired difference statistics for two per-path samples of equal length.
inline ComponentStat paired_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_diff: length mismatch");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return mc_stat(d);
}

struct PoaResult {
    ComponentStat difference; // J^C_MFG - J^C_MFC (carries the guarantee >= 0)
    double ratio = 0.0;       // on shifted totals when either is negative
    double ratio_ci_lo = 0.0, ratio_ci_hi = 0.0;
    double shift = 0.0;       // documented constant added to both totals
    double jc_mfg = 0.0, jc_mfc = 0.0;
};

inline PoaResult price_of_anarchy(const CostReport& mfg, const CostReport& mfc) {
    if (mfg.n_paths != mfc.n_paths)
        throw std::invalid_argument("price_of_anarchy: reports are not path-paired");
    PoaResult out;
    out.jc_mfg = mfg.jc.mean;
    out.jc_mfc = mfc.jc.mean;
    out.difference = paired_diff(mfg.per_path_jc, mfc.per_path_jc);
    double lo = std::min(out.jc_mfg, out.jc_mfc);
    out.shift = lo <= 0.0 ? -lo + 1.0 : 0.0;
    double a = out.jc_mfg + out.shift, b = out.jc_mfc + out.shift;
    out.ratio = a / b;
    // paired delta method for var(a/b)
    int n = mfg.n_paths;
    if (n > 1) {
        double va = 0.0, vb = 0.0, cab = 0.0;
        for (int i = 0; i < n; ++i) {
            double da = mfg.per_path_jc[i] - out.jc_mfg;
            double db = mfc.per_path_jc[i] - out.jc_mfc;
            va += da * da;
            vb += db * db;
            cab += da * db;
        }
        double scale = 1.0 / (static_cast<double>(n) * (n - 1.0));
        va *= scale;
        vb *= scale;
        cab *= scale;
        double var_ratio =
            va / (b * b) + a * a * vb / (b * b * b * b) - 2.0 * a * cab / (b * b * b);
        double se = std::sqrt(std::max(var_ratio, 0.0));
        out.ratio_ci_lo = out.ratio - 3.0 * se;
        out.ratio_ci_hi = out.ratio + 3.0 * se;
    }
    return out;
}

struct Reduction {
    ComponentStat absolute; // baseline - controlled (positive = saving)
    double percent = 0.0;   // relative to |baseline mean|
    double percent_se = 0.0;
    bool percent_valid = true; // false when the baseline is statistically ~0
};

inline Reduction make_reduction(const std::vector<double>& controlled,
                                const std::vector<double>& baseline) {
    Reduction r;
    r.absolute = paired_diff(baseline, controlled);
    ComponentStat base = mc_stat(baseline);
    if (std::abs(base.mean) <= 3.0 * base.se || base.mean == 0.0) {
        r.percent_valid = false;
        return r;
    }
    r.percent = 100.0 * r.absolute.mean / std::abs(base.mean);
    r.percent_se = 100.0 * r.absolute.se / std::abs(base.mean);
    return r;
}

struct ReductionStats {
    std::vector<Reduction> volumetric, demand, bill, total; // per region
    std::vector<Reduction> max_power;                       // E max|Q-a| vs E max|Q|
    Reduction j0;
};

inline ReductionStats reduction_stats(const CostReport& controlled, const CostReport& baseline) {
    if (controlled.n_paths != baseline.n_paths || controlled.regions.size() != baseline.regions.size())
        throw std::invalid_argument("reduction_stats: reports are not paired");
    ReductionStats out;
    for (std::size_t g = 0; g < controlled.regions.size(); ++g) {
        const auto& c = controlled.regions[g];
        const auto& b = baseline.regions[g];
        out.volumetric.push_back(make_reduction(c.per_path_volumetric, b.per_path_volumetric));
        out.demand.push_back(make_reduction(c.per_path_demand, b.per_path_demand));
        out.bill.push_back(make_reduction(c.per_path_bill, b.per_path_bill));
        out.total.push_back(make_reduction(c.per_path_total, b.per_path_total));
        out.max_power.push_back(make_reduction(c.per_path_max_power, b.per_path_max_power_raw));
    }
    out.j0 = make_reduction(controlled.per_path_j0, baseline.per_path_j0);
    return out;
}

} // namespace gridmfg
