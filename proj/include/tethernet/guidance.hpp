#ifndef TETHERNET_GUIDANCE_HPP
#define TETHERNET_GUIDANCE_HPP

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "tethernet/catalog.hpp"
#include "tethernet/common.hpp"

namespace tethernet {

struct AimingSolution {
    std::array<Vec3, 4> r_final;
    std::array<Vec3, 4> v_final;
};

/// State of one MU: [position; velocity].
using State6 = Eigen::Matrix<double, 6, 1>;

struct ReferenceTrajectory {
    double dt = 0.05;  // 20 Hz
    std::vector<State6> samples;

    /// Sample at tick k, holding the terminal state past the end.
    const State6& at(std::size_t k) const {
        return k < samples.size() ? samples[k] : samples.back();
    }
};

/// Aiming points on the plane 5 m behind the debris CoM. The nominal points
/// form a 24 m x 24 m square around the debris; per-MU offsets shift them.
/// Sign patterns per MU (x, y): (-,+), (+,-), (-,-), (+,+).
inline std::array<Vec3, 4> compute_aiming_points(const ContinuousVector& cont,
                                                 const Vec3& debris_com) {
    static constexpr double kNominalOffset = 12.0;
    static constexpr double kPlaneOffset = 5.0;
    static constexpr int sign_x[4] = {-1, +1, -1, +1};
    static constexpr int sign_y[4] = {+1, -1, -1, +1};
    std::array<Vec3, 4> out;
    for (int i = 0; i < 4; ++i) {
        out[i] = Vec3(debris_com.x() + kNominalOffset * sign_x[i] + cont.dx[i],
                      debris_com.y() + kNominalOffset * sign_y[i] + cont.dy[i],
                      debris_com.z() - kPlaneOffset);
    }
    return out;
}

/// v_final = (||dr||/t_f + v_i) * dr/||dr||, with the requested speed clamped
/// at zero when the delta would make it negative.
inline std::array<Vec3, 4> compute_final_velocities(const ContinuousVector& cont,
                                                    const std::array<Vec3, 4>& r_final,
                                                    const std::array<Vec3, 4>& r_0, double t_f) {
    std::array<Vec3, 4> out;
    for (int i = 0; i < 4; ++i) {
        const Vec3 dr = r_final[i] - r_0[i];
        const double dist = dr.norm();
        if (dist <= 0.0) throw ConfigError("aiming point coincides with initial MU position");
        const double speed = std::max(0.0, dist / t_f + cont.v[i]);
        out[i] = speed * dr / dist;
    }
    return out;
}

/// Minimum-energy (min integral ||u||^2) double-integrator transfer between
/// boundary states, via the controllability-Gramian closed form. Per axis the
/// costate gives u(t) = eta_p (t_f - t) + eta_v, so the path is cubic in time.
inline ReferenceTrajectory min_energy_reference(const State6& s_0, const State6& s_f, double t_f,
                                                double rate_hz = 20.0) {
    if (t_f <= 0.0) throw ConfigError("maneuver time must be positive");
    const double T = t_f;
    // Gramian of the double integrator: [[T^3/3, T^2/2], [T^2/2, T]].
    const double det = T * T * T * T / 12.0;
    const double wi00 = T / det;
    const double wi01 = -T * T / 2.0 / det;
    const double wi11 = T * T * T / 3.0 / det;

    std::array<double, 3> eta_p, eta_v;
    for (int ax = 0; ax < 3; ++ax) {
        const double p0 = s_0[ax], v0 = s_0[3 + ax];
        const double pf = s_f[ax], vf = s_f[3 + ax];
        const double bp = pf - (p0 + v0 * T);  // s_f - e^{AT} s_0
        const double bv = vf - v0;
        eta_p[ax] = wi00 * bp + wi01 * bv;
        eta_v[ax] = wi01 * bp + wi11 * bv;
    }

    ReferenceTrajectory traj;
    traj.dt = 1.0 / rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(t_f * rate_hz));
    traj.samples.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        // The final sample sits exactly at t_f even when t_f * rate_hz is not
        // an integer, so the trajectory meets the boundary state exactly.
        const double t = k == n ? t_f : std::min(static_cast<double>(k) * traj.dt, t_f);
        State6 s;
        for (int ax = 0; ax < 3; ++ax) {
            const double p0 = s_0[ax], v0 = s_0[3 + ax];
            s[ax] = p0 + v0 * t + eta_p[ax] * (T * t * t / 2.0 - t * t * t / 6.0) +
                    eta_v[ax] * t * t / 2.0;
            s[3 + ax] = v0 + eta_p[ax] * (T * t - t * t / 2.0) + eta_v[ax] * t;
        }
        traj.samples.push_back(s);
    }
    return traj;
}

/// Exact ZOH discretization of m * xddot = u (force input), per axis:
/// A = [[1, dt], [0, 1]], B = [dt^2/(2m), dt/m].
inline void discretize_model(double mass, double dt, Eigen::Matrix<double, 6, 6>& A,
                             Eigen::Matrix<double, 6, 3>& B) {
    if (mass <= 0.0 || dt <= 0.0) throw ConfigError("discretize_model: mass and dt must be > 0");
    A.setIdentity();
    B.setZero();
    for (int ax = 0; ax < 3; ++ax) {
        A(ax, 3 + ax) = dt;
        B(ax, ax) = dt * dt / (2.0 * mass);
        B(3 + ax, ax) = dt / mass;
    }
}

struct MPCConfig {
    int horizon = 10;      // N_h
    double q_pos = 10.0;   // Q, Q_N position weight
    double q_vel = 1.0;    // Q, Q_N velocity weight
    double r_input = 0.01;
    double dt = 0.05;      // 20 Hz
    double u_max = 8.9 / std::sqrt(3.0);  // per-axis bound F_T,max/sqrt(3)
    double mass = 2.6;     // MU body + thruster
    double kkt_tol = 1e-8;
    int max_iterations = 20000;
};

/// Receding-horizon tracking controller. The per-axis dynamics, weights, and
/// box bounds all decouple, so the QP splits into three condensed problems of
/// dimension N_h solved by accelerated projected gradient.
class MpcController {
public:
    explicit MpcController(const MPCConfig& config) : cfg_(config) {
        const int N = cfg_.horizon;
        // Per-axis 2-state model.
        Eigen::Matrix2d A;
        A << 1.0, cfg_.dt, 0.0, 1.0;
        Eigen::Vector2d B(cfg_.dt * cfg_.dt / (2.0 * cfg_.mass), cfg_.dt / cfg_.mass);

        // Prediction over steps 1..N: x_k = A^k x_0 + sum_j A^{k-1-j} B u_j.
        sx_ = MatX::Zero(2 * N, 2);
        su_ = MatX::Zero(2 * N, N);
        Eigen::Matrix2d Ak = A;
        for (int k = 1; k <= N; ++k) {
            sx_.block<2, 2>(2 * (k - 1), 0) = Ak;
            Ak = A * Ak;
        }
        for (int k = 1; k <= N; ++k) {
            Eigen::Matrix2d Aj = Eigen::Matrix2d::Identity();
            for (int j = k - 1; j >= 0; --j) {
                su_.block<2, 1>(2 * (k - 1), j) = Aj * B;
                Aj = A * Aj;
            }
        }
        VecX qdiag(2 * N);
        for (int k = 0; k < N; ++k) {
            qdiag[2 * k] = cfg_.q_pos;
            qdiag[2 * k + 1] = cfg_.q_vel;
        }
        q_ = qdiag.asDiagonal();
        hess_ = su_.transpose() * q_ * su_ + cfg_.r_input * MatX::Identity(N, N);
        hess_llt_.compute(hess_);
        Eigen::SelfAdjointEigenSolver<MatX> es(hess_);
        lipschitz_ = es.eigenvalues().maxCoeff();
    }

    const MPCConfig& config() const { return cfg_; }
    bool last_hit_iteration_cap() const { return hit_cap_; }

    /// First input of the horizon-optimal sequence. `reference` must provide
    /// N_h + 1 states (current tick through the horizon end).
    Vec3 step(const State6& state, const std::vector<State6>& reference) {
        const int N = cfg_.horizon;
        if (static_cast<int>(reference.size()) < N + 1)
            throw ConfigError("mpc_step: reference window must hold N_h + 1 states");
        Vec3 u;
        hit_cap_ = false;
        for (int ax = 0; ax < 3; ++ax) {
            Eigen::Vector2d x0(state[ax], state[3 + ax]);
            VecX ref(2 * N);
            for (int k = 1; k <= N; ++k) {
                ref[2 * (k - 1)] = reference[static_cast<std::size_t>(k)][ax];
                ref[2 * (k - 1) + 1] = reference[static_cast<std::size_t>(k)][3 + ax];
            }
            const VecX grad_lin = su_.transpose() * (q_ * (sx_ * x0 - ref));
            u[ax] = solve_axis(grad_lin)[0];
        }
        return u;
    }

private:
    VecX solve_axis(const VecX& g) {
        const double ub = cfg_.u_max;
        // Unconstrained minimizer; accept it when it is already feasible.
        VecX u = hess_llt_.solve(-g);
        if (u.cwiseAbs().maxCoeff() <= ub) return u;

        auto project = [&](VecX& v) { v = v.cwiseMax(-ub).cwiseMin(ub); };
        project(u);
        VecX y = u, u_prev = u;
        double t_acc = 1.0;
        const double step = 1.0 / lipschitz_;
        for (int it = 0; it < cfg_.max_iterations; ++it) {
            VecX grad = hess_ * y + g;
            VecX u_next = y - step * grad;
            project(u_next);

            // KKT residual: fixed point of the projected gradient map,
            // r = u - proj(u - grad f(u)).
            VecX fixed_point = u_next - (hess_ * u_next + g);
            project(fixed_point);
            if ((u_next - fixed_point).cwiseAbs().maxCoeff() <= cfg_.kkt_tol) return u_next;

            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
            y = u_next + ((t_acc - 1.0) / t_next) * (u_next - u_prev);
            t_acc = t_next;
            u_prev = u_next;
            u = u_next;
        }
        hit_cap_ = true;  // best feasible iterate
        return u;
    }

    MPCConfig cfg_;
    MatX sx_, su_, q_, hess_;
    Eigen::LLT<MatX> hess_llt_;
    double lipschitz_ = 1.0;
    bool hit_cap_ = false;
};

inline Vec3 mpc_step(const State6& state, const std::vector<State6>& reference,
                     const MPCConfig& config) {
    MpcController controller(config);
    return controller.step(state, reference);
}

}  // namespace tethernet

#endif  // TETHERNET_GUIDANCE_HPP
