#ifndef TETHERNET_METRICS_HPP
#define TETHERNET_METRICS_HPP

#include <cmath>
#include <vector>

#include "tethernet/common.hpp"
#include "tethernet/hull.hpp"

namespace tethernet {

constexpr double kEarthG = 9.81;  // g_e [m/s^2]

/// Rigid cylindrical target. Volume and surface area are the tabulated
/// values used by the capture-quality index, which differ slightly from the
/// recomputed solid-cylinder values.
struct DebrisSpec {
    double mass = 9000.0;       // [kg]
    double diameter = 3.9;      // [m]
    double length = 11.0;       // [m]
    double volume = 125.3;      // [m^3]
    double surface_area = 159.9;  // [m^2]

    double l_c() const { return diameter / 2.0; }  // min CoM-to-surface distance

    /// Principal moments, uniform solid cylinder, axis along body z.
    Vec3 inertia() const {
        const double r = diameter / 2.0;
        const double i_axial = 0.5 * mass * r * r;
        const double i_trans = mass * (3.0 * r * r + length * length) / 12.0;
        return {i_trans, i_trans, i_axial};
    }
};

struct SimOutcome {
    double cqi_final = 0.0;
    int n_locked = 0;
    double m_prop = 0.0;
    bool tension_failed = false;
    bool success = false;
    /// Per-MU applied thrust, sampled at the controller rate (20 Hz).
    std::vector<std::vector<Vec3>> thrust_history;
    double thrust_dt = 0.05;
};

struct ObjectiveConfig {
    double cqi_threshold = 2.5;
    int n_l_required = 12;
    double beta = 1.0;  // penalty offset; calibrated from the dataset
};

/// Capture quality index: hull-vs-target volume, area, and CoM-offset terms.
inline double compute_cqi(const HullResult& hull, const DebrisSpec& debris, double q_n) {
    return 0.1 * std::abs(hull.volume - debris.volume) / debris.volume +
           0.1 * std::abs(hull.surface_area - debris.surface_area) / debris.surface_area +
           0.8 * std::abs(q_n) / debris.l_c();
}

/// Propellant mass from uniformly sampled thrust histories, trapezoidal rule.
/// m_prop = sum_MU int ||F|| dt / (g_e I_sp)
inline double integrate_fuel(const std::vector<std::vector<Vec3>>& thrust_history, double dt,
                             double i_sp) {
    double total = 0.0;
    for (const auto& series : thrust_history) {
        if (series.size() < 2) continue;
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < series.size(); ++k)
            integral += 0.5 * (series[k].norm() + series[k + 1].norm()) * dt;
        total += integral;
    }
    return total / (kEarthG * i_sp);
}

/// Penalized scalar objective: fuel on success, log-penalty otherwise.
inline double evaluate_objective(const SimOutcome& outcome, const ObjectiveConfig& config) {
    if (outcome.cqi_final <= config.cqi_threshold && outcome.n_locked == config.n_l_required &&
        !outcome.tension_failed) {
        return outcome.m_prop;
    }
    const double dc = outcome.cqi_final - config.cqi_threshold;
    const double dn = static_cast<double>(outcome.n_locked - config.n_l_required);
    return std::log(dc * dc + 1.0) + std::log(dn * dn + 1.0) + config.beta;
}

}  // namespace tethernet

#endif  // TETHERNET_METRICS_HPP
