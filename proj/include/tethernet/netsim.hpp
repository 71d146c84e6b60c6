#ifndef TETHERNET_NETSIM_HPP
#define TETHERNET_NETSIM_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "tethernet/catalog.hpp"
#include "tethernet/common.hpp"
#include "tethernet/guidance.hpp"
#include "tethernet/metrics.hpp"

namespace tethernet {

enum class ElementKind { mesh, corner, closing, main_tether };

struct SpringElement {
    int i = 0;
    int j = 0;  // -1 = chaser anchor (fixed)
    double rest_length = 1.0;
    double stiffness = 0.0;      // E A / rest_length, unscaled
    double damping = 0.0;        // from the axial damping ratio, unscaled
    double tension_limit = 0.0;  // sigma_ult * A, unscaled
    ElementKind kind = ElementKind::mesh;
};

/// Lumped-mass tension-only net. Positions are in a local frame with the net
/// flat in the x-y plane, centered at the origin; the simulation translates it
/// to the deployment pose.
struct NetModel {
    int n_k = 0;
    std::vector<Vec3> positions;
    std::vector<double> masses;
    std::vector<SpringElement> elements;
    std::array<int, 4> mu_indices{};     // corner knots carrying MU + thruster mass
    std::vector<int> closing_nodes;      // 12 perimeter knots in cycle order
    std::vector<int> closing_elements;   // 12 element ids, same order
    int main_tether_element = -1;
    int center_knot = -1;

    int knot(int ix, int iy) const { return iy * n_k + ix; }
};

struct ScenarioSpec {
    Vec3 target_position{9.0, 9.0, -60.0};
    Vec3 euler_321_deg{60.0, 40.0, 0.0};  // yaw-pitch-roll about z, y, x
    Vec3 omega_body_deg{10.0, 30.0, 10.0};
};

struct SimConfig {
    double dt = 1e-3;
    double t_thrust = 25.0;  // thrust cutoff = closing activation
    double t_end = 35.0;
    double ctrl_dt = 0.05;   // 20 Hz controller tick

    double k_contact = 5e4;
    double c_contact = 200.0;
    double c_tangent = 50.0;

    /// Desk-scale axial stiffness factor applied to element stiffness (with
    /// sqrt-scaled damping, preserving the damping ratio) so the default dt
    /// stays inside the stability bound of the semi-implicit integrator.
    /// Tension limits are absolute forces and are not scaled.
    double stiffness_scale = 2e-3;

    double closing_rest_fraction = 0.10;  // final rest length fraction
    double lock_fraction = 0.25;          // lock when length <= this fraction
    /// Extra stiffness factor on active closing segments (winch abstraction;
    /// the bare thread compliance under-gathers the mouth). Damping keeps the
    /// same ratio via a sqrt factor.
    double closing_stiffness_boost = 5.0;

    ScenarioSpec scenario;
    Vec3 anchor{0.0, 0.0, 0.0};
    double net_offset = 2.0;        // net plane distance below the anchor
    double main_tether_rest = 62.0;
    double damping_ratio = 0.106;

    bool enable_thrust = true;
    bool enable_contact = true;
    bool enable_damping = true;
    bool enable_closing = true;
    bool enable_tension_check = true;

    DebrisSpec debris;
    double mpc_kkt_tol = 1e-8;
};

struct DebrisState {
    Vec3 com_position = Vec3::Zero();
    Vec3 com_velocity = Vec3::Zero();
    Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();  // body -> world
    Vec3 angular_velocity = Vec3::Zero();                       // body frame

    static DebrisState from_scenario(const ScenarioSpec& s) {
        DebrisState d;
        d.com_position = s.target_position;
        const double deg = M_PI / 180.0;
        const double psi = s.euler_321_deg[0] * deg;
        const double theta = s.euler_321_deg[1] * deg;
        const double phi = s.euler_321_deg[2] * deg;
        d.orientation = (Eigen::AngleAxisd(psi, Vec3::UnitZ()) *
                         Eigen::AngleAxisd(theta, Vec3::UnitY()) *
                         Eigen::AngleAxisd(phi, Vec3::UnitX()))
                            .toRotationMatrix();
        d.angular_velocity = s.omega_body_deg * deg;
        return d;
    }
};

inline NetModel build_net(const CombNode& comb, const ContinuousVector& cont) {
    NetModel m;
    const int n = comb.shape.n_k;
    m.n_k = n;
    const double mesh = cont.l_net / (n - 1);
    const int total = n * n;
    m.positions.resize(total);
    m.masses.assign(total, 0.0);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            m.positions[m.knot(ix, iy)] =
                Vec3(ix * mesh - cont.l_net / 2.0, iy * mesh - cont.l_net / 2.0, 0.0);

    const double area_thread = M_PI * cont.r_thread * cont.r_thread;
    const double area_corner = M_PI * cont.r_corner * cont.r_corner;
    const auto& mat = comb.material;

    auto add_element = [&](int i, int j, double rest, double area, ElementKind kind) {
        SpringElement e;
        e.i = i;
        e.j = j;
        e.rest_length = rest;
        e.stiffness = mat.e_n * area / rest;
        e.tension_limit = mat.ultimate_stress * area;
        e.kind = kind;
        m.elements.push_back(e);
        return static_cast<int>(m.elements.size()) - 1;
    };

    // Mesh threads between adjacent knots; thread mass lumped half per endpoint.
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            if (ix + 1 < n) add_element(m.knot(ix, iy), m.knot(ix + 1, iy), mesh, area_thread, ElementKind::mesh);
            if (iy + 1 < n) add_element(m.knot(ix, iy), m.knot(ix, iy + 1), mesh, area_thread, ElementKind::mesh);
        }
    for (const auto& e : m.elements) {
        const double half = mat.rho_n * area_thread * e.rest_length / 2.0;
        m.masses[e.i] += half;
        m.masses[e.j] += half;
    }

    // MU corners; ordering matches the aiming-point sign patterns
    // (-,+), (+,-), (-,-), (+,+).
    m.mu_indices = {m.knot(0, n - 1), m.knot(n - 1, 0), m.knot(0, 0), m.knot(n - 1, n - 1)};
    for (int idx : m.mu_indices) m.masses[idx] += cont.m_mu + comb.thruster.m_t;

    // Corner attachment threads: compliance E A / l_ct, no initial tension.
    for (int c = 0; c < 4; ++c) {
        const int corner = m.mu_indices[c];
        const int ix = corner % n, iy = corner / n;
        const int dix = ix == 0 ? 1 : -1;
        const int diy = iy == 0 ? 1 : -1;
        const int diag = m.knot(ix + dix, iy + diy);
        SpringElement e;
        e.i = corner;
        e.j = diag;
        e.rest_length = (m.positions[corner] - m.positions[diag]).norm();
        e.stiffness = mat.e_n * area_corner / cont.l_ct;
        e.tension_limit = mat.ultimate_stress * area_corner;
        e.kind = ElementKind::corner;
        m.elements.push_back(e);
        const double half = mat.rho_n * area_corner * cont.l_ct / 2.0;
        m.masses[e.i] += half;
        m.masses[e.j] += half;
    }

    // Closing mechanism: 12 perimeter nodes (4 corners + symmetric pairs per
    // edge at the K_cls-dependent offset), chained into 12 segments.
    const int center = (n - 1) / 2;
    const int off = (center - 1) - (comb.shape.k_cls - Catalog::k_cls_min(n));
    auto edge_nodes = [&](int corner_a_x, int corner_a_y, int dx, int dy) {
        // two closing nodes of the edge starting at corner A, walking (dx,dy)
        std::array<int, 2> out{};
        out[0] = m.knot(corner_a_x + dx * (center - off), corner_a_y + dy * (center - off));
        out[1] = m.knot(corner_a_x + dx * (center + off), corner_a_y + dy * (center + off));
        return out;
    };
    const int last = n - 1;
    m.closing_nodes.clear();
    auto push_edge = [&](int cx, int cy, int dx, int dy) {
        m.closing_nodes.push_back(m.knot(cx, cy));
        auto en = edge_nodes(cx, cy, dx, dy);
        m.closing_nodes.push_back(en[0]);
        m.closing_nodes.push_back(en[1]);
    };
    push_edge(0, 0, 1, 0);
    push_edge(last, 0, 0, 1);
    push_edge(last, last, -1, 0);
    push_edge(0, last, 0, -1);

    for (std::size_t s = 0; s < m.closing_nodes.size(); ++s) {
        const int a = m.closing_nodes[s];
        const int b = m.closing_nodes[(s + 1) % m.closing_nodes.size()];
        const double rest = (m.positions[a] - m.positions[b]).norm();
        m.closing_elements.push_back(add_element(a, b, rest, area_thread, ElementKind::closing));
    }

    m.center_knot = m.knot(center, center);
    {
        SpringElement e;
        e.i = m.center_knot;
        e.j = -1;  // anchor
        e.rest_length = 1.0;  // overwritten by the simulation config
        e.stiffness = 0.0;
        e.tension_limit = mat.ultimate_stress * area_thread;
        e.kind = ElementKind::main_tether;
        m.elements.push_back(e);
        m.main_tether_element = static_cast<int>(m.elements.size()) - 1;
    }
    return m;
}

/// Tension-only axial force. Returns the scalar tension (>= 0); the force on
/// endpoint i is +tension * dir_ij, on j the opposite.
inline double element_tension(const SpringElement& e, const Vec3& pi, const Vec3& pj,
                              const Vec3& vi, const Vec3& vj, double k_scale, double c_scale,
                              Vec3& dir) {
    const Vec3 d = pj - pi;
    const double len = d.norm();
    if (len <= 1e-12) {
        dir = Vec3::Zero();  // degenerate direction
        return 0.0;
    }
    dir = d / len;
    const double ext = len - e.rest_length;
    if (ext <= 0.0) return 0.0;
    const double rate = dir.dot(vj - vi);
    return std::max(0.0, k_scale * e.stiffness * ext + c_scale * e.damping * rate);
}

struct ContactGeometry {
    bool touching = false;
    double penetration = 0.0;
    Vec3 normal = Vec3::Zero();     // world frame, outward from the cylinder
    Vec3 v_surface = Vec3::Zero();  // velocity of the contacted surface point
};

/// Cylinder (lateral surface + end caps) vs point: minimum-penetration normal.
inline ContactGeometry contact_geometry(const Vec3& knot_pos, const DebrisState& debris,
                                        const DebrisSpec& spec) {
    ContactGeometry out;
    const Vec3 q = debris.orientation.transpose() * (knot_pos - debris.com_position);
    const double h = spec.length / 2.0;
    const double rad = spec.diameter / 2.0;
    const double rho = std::hypot(q.x(), q.y());
    if (std::abs(q.z()) >= h || rho >= rad) return out;

    const double pen_lat = rad - rho;
    const double pen_cap = h - std::abs(q.z());
    Vec3 n_body;
    if (pen_lat <= pen_cap) {
        out.penetration = pen_lat;
        n_body = rho > 1e-9 ? Vec3(q.x() / rho, q.y() / rho, 0.0) : Vec3(1.0, 0.0, 0.0);
    } else {
        out.penetration = pen_cap;
        n_body = Vec3(0.0, 0.0, q.z() >= 0.0 ? 1.0 : -1.0);
    }
    out.normal = debris.orientation * n_body;
    const Vec3 omega_world = debris.orientation * debris.angular_velocity;
    out.v_surface = debris.com_velocity + omega_world.cross(knot_pos - debris.com_position);
    out.touching = true;
    return out;
}

/// Penalty contact of one knot against the rigid cylinder. Returns the force
/// on the knot; the equal-and-opposite reaction is applied to the debris at
/// the knot position. Normal: k_c * penetration plus compression-only damping;
/// tangential: viscous.
inline Vec3 contact_force(const Vec3& knot_pos, const Vec3& knot_vel, const DebrisState& debris,
                          const DebrisSpec& spec, const SimConfig& cfg) {
    const ContactGeometry g = contact_geometry(knot_pos, debris, spec);
    if (!g.touching) return Vec3::Zero();
    const Vec3 v_rel = knot_vel - g.v_surface;
    const double v_n = v_rel.dot(g.normal);  // > 0: separating

    double f_n = cfg.k_contact * g.penetration;
    if (v_n < 0.0) f_n += cfg.c_contact * (-v_n);
    f_n = std::max(0.0, f_n);

    const Vec3 v_t = v_rel - v_n * g.normal;
    return f_n * g.normal - cfg.c_tangent * v_t;
}

/// Velocity impulse for one integration step of the same contact model, with
/// the spring-damper treated implicitly along the normal (backward Euler in
/// the knot's normal velocity, penetration extrapolated one step). For small
/// k_c * dt^2 / m this reduces to contact_force * dt / m; for the default
/// gains against gram-scale knots it is what keeps the step stable.
inline Vec3 contact_impulse(const Vec3& knot_pos, const Vec3& knot_vel, double mass,
                            const DebrisState& debris, const DebrisSpec& spec,
                            const SimConfig& cfg) {
    const ContactGeometry g = contact_geometry(knot_pos, debris, spec);
    if (!g.touching) return Vec3::Zero();
    const double dt = cfg.dt;
    const Vec3 v_rel = knot_vel - g.v_surface;
    const double v_n = v_rel.dot(g.normal);

    // m (v+ - v) = dt [k (pen - dt v+) - c v+ (approach only)]
    const double c_eff = v_n < 0.0 ? cfg.c_contact : 0.0;
    const double denom = mass + dt * dt * cfg.k_contact + dt * c_eff;
    const double v_n_next = (mass * v_n + dt * cfg.k_contact * g.penetration) / denom;
    const double dv_n = std::max(0.0, v_n_next - v_n);  // push-only

    const Vec3 v_t = v_rel - v_n * g.normal;
    const Vec3 dv_t = v_t * (mass / (mass + dt * cfg.c_tangent)) - v_t;  // implicit viscous drag
    return mass * (dv_n * g.normal + dv_t);
}

struct MuTickRecord {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    Vec3 force = Vec3::Zero();
};

class NetSimulation {
public:
    NetSimulation(const DesignPoint& design, const SimConfig& config)
        : cfg_(config), design_(design), model_(build_net(design.comb, design.cont)) {
        // Finalize element damping from the axial damping ratio and the
        // endpoint reduced mass.
        for (auto& e : model_.elements) {
            const double mi = model_.masses[e.i];
            const double mj = e.j >= 0 ? model_.masses[e.j] : 1e12;
            const double m_red = mi * mj / (mi + mj);
            e.damping = 2.0 * cfg_.damping_ratio * std::sqrt(e.stiffness * m_red);
        }
        model_.elements[model_.main_tether_element].rest_length = cfg_.main_tether_rest;
        // Main tether shares the net thread cross-section.
        const double area = M_PI * design.cont.r_thread * design.cont.r_thread;
        auto& tether = model_.elements[model_.main_tether_element];
        tether.stiffness = design.comb.material.e_n * area / cfg_.main_tether_rest;
        tether.damping = 2.0 * cfg_.damping_ratio *
                         std::sqrt(tether.stiffness * model_.masses[tether.i]);

        // Deploy pose: flat net below the anchor.
        const Vec3 shift = cfg_.anchor + Vec3(0.0, 0.0, -cfg_.net_offset);
        positions_ = model_.positions;
        for (auto& p : positions_) p += shift;
        velocities_.assign(positions_.size(), Vec3::Zero());
        rest_lengths_.resize(model_.elements.size());
        for (std::size_t k = 0; k < model_.elements.size(); ++k)
            rest_lengths_[k] = model_.elements[k].rest_length;
        locked_.assign(model_.closing_elements.size(), false);

        debris_ = DebrisState::from_scenario(cfg_.scenario);
        inertia_ = cfg_.debris.inertia();

        setup_guidance();
    }

    const NetModel& model() const { return model_; }
    const std::vector<Vec3>& positions() const { return positions_; }
    const std::vector<Vec3>& velocities() const { return velocities_; }
    std::vector<Vec3>& mutable_velocities() { return velocities_; }
    const DebrisState& debris() const { return debris_; }
    double time() const { return t_; }
    double max_tension_last_step() const { return max_tension_; }
    const std::vector<std::vector<MuTickRecord>>& mu_records() const { return mu_records_; }

    int count_locked() const {
        return static_cast<int>(std::count(locked_.begin(), locked_.end(), true));
    }

    double net_kinetic_energy() const {
        double e = 0.0;
        for (std::size_t i = 0; i < positions_.size(); ++i)
            e += 0.5 * model_.masses[i] * velocities_[i].squaredNorm();
        return e;
    }

    double net_elastic_energy() const {
        double e = 0.0;
        for (std::size_t k = 0; k < model_.elements.size(); ++k) {
            const auto& el = model_.elements[k];
            if (el.j < 0) continue;
            const double len = (positions_[el.j] - positions_[el.i]).norm();
            const double ext = len - rest_lengths_[k];
            if (ext > 0.0) e += 0.5 * cfg_.stiffness_scale * el.stiffness * ext * ext;
        }
        return e;
    }

    /// Mass-weighted net centroid, MU masses included.
    Vec3 net_com() const {
        Vec3 com = Vec3::Zero();
        double m = 0.0;
        for (std::size_t i = 0; i < positions_.size(); ++i) {
            com += model_.masses[i] * positions_[i];
            m += model_.masses[i];
        }
        return com / m;
    }

    /// Advance one dt. Throws SimError on divergence.
    void step() {
        const double dt = cfg_.dt;
        const double k_scale = cfg_.stiffness_scale;
        const double c_scale = cfg_.enable_damping ? std::sqrt(cfg_.stiffness_scale) : 0.0;

        if (cfg_.enable_thrust && t_ < cfg_.t_thrust - 0.5 * dt) {
            if (step_index_ % ctrl_every_ == 0) controller_tick();
        } else {
            for (auto& f : thrust_) f = Vec3::Zero();
            if (!thrust_cut_recorded_ && t_ >= cfg_.t_thrust - 0.5 * dt) {
                record_tick(Vec3::Zero());
                thrust_cut_recorded_ = true;
            }
        }

        if (cfg_.enable_closing && t_ >= cfg_.t_thrust - 0.5 * dt) update_closing();

        std::vector<Vec3> force(positions_.size(), Vec3::Zero());
        Vec3 debris_force = Vec3::Zero();
        Vec3 debris_torque = Vec3::Zero();  // world frame, about CoM
        max_tension_ = 0.0;
        tension_exceeded_ = false;

        for (std::size_t k = 0; k < model_.elements.size(); ++k) {
            SpringElement e = model_.elements[k];
            e.rest_length = rest_lengths_[k];
            const bool winched = closing_active_ && e.kind == ElementKind::closing;
            const double ks = winched ? k_scale * cfg_.closing_stiffness_boost : k_scale;
            const double cs = winched ? c_scale * std::sqrt(cfg_.closing_stiffness_boost) : c_scale;
            const Vec3 pj = e.j >= 0 ? positions_[e.j] : cfg_.anchor;
            const Vec3 vj = e.j >= 0 ? velocities_[e.j] : Vec3::Zero();
            Vec3 dir;
            const double tension =
                element_tension(e, positions_[e.i], pj, velocities_[e.i], vj, ks, cs, dir);
            if (tension > max_tension_) max_tension_ = tension;
            if (cfg_.enable_tension_check && tension > e.tension_limit)
                tension_exceeded_ = true;
            force[e.i] += tension * dir;
            if (e.j >= 0) force[e.j] -= tension * dir;
        }

        if (cfg_.enable_thrust && t_ < cfg_.t_thrust - 0.5 * dt) {
            for (int m = 0; m < 4; ++m) force[model_.mu_indices[m]] += thrust_[m];
        }

        // Semi-implicit Euler: elements and thrust first, then contact as a
        // per-knot implicit velocity update (the default contact gains sit far
        // outside the explicit stability bound for gram-scale knots), then
        // positions.
        for (std::size_t i = 0; i < positions_.size(); ++i)
            velocities_[i] += force[i] / model_.masses[i] * dt;

        if (cfg_.enable_contact) {
            for (std::size_t i = 0; i < positions_.size(); ++i) {
                const Vec3 impulse = contact_impulse(positions_[i], velocities_[i],
                                                     model_.masses[i], debris_, cfg_.debris, cfg_);
                if (impulse.isZero(0.0)) continue;
                velocities_[i] += impulse / model_.masses[i];
                debris_force -= impulse / dt;
                debris_torque += (positions_[i] - debris_.com_position).cross(-impulse / dt);
            }
        }

        for (std::size_t i = 0; i < positions_.size(); ++i) positions_[i] += velocities_[i] * dt;
        debris_.com_velocity += debris_force / cfg_.debris.mass * dt;
        debris_.com_position += debris_.com_velocity * dt;
        const Vec3 torque_body = debris_.orientation.transpose() * debris_torque;
        const Vec3& w = debris_.angular_velocity;
        const Vec3 wdot =
            (torque_body - w.cross(inertia_.asDiagonal() * w)).array() / inertia_.array();
        debris_.angular_velocity += wdot * dt;
        Eigen::Matrix3d skew;
        skew << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
        debris_.orientation += debris_.orientation * skew * dt;
        orthonormalize(debris_.orientation);

        t_ += dt;
        ++step_index_;

        for (const auto& p : positions_)
            if (!p.allFinite())
                throw SimError("simulation diverged at step " + std::to_string(step_index_));
    }

    SimOutcome run() {
        SimOutcome out;
        const long steps = std::lround(cfg_.t_end / cfg_.dt);
        for (long s = 0; s < steps; ++s) {
            step();
            if (tension_exceeded_) {
                out.tension_failed = true;
                out.cqi_final = 50.0;
                out.n_locked = 0;
                finalize_history(out);
                out.success = false;
                return out;
            }
        }
        const HullResult hull = convex_hull(positions_);
        const double q_n = (net_com() - debris_.com_position).norm();
        out.cqi_final = compute_cqi(hull, cfg_.debris, q_n);
        out.n_locked = count_locked();
        finalize_history(out);
        out.success = out.cqi_final <= 2.5 && out.n_locked == 12 && !out.tension_failed;
        return out;
    }

private:
    void setup_guidance() {
        const double t_f = cfg_.t_thrust;
        const auto aims = compute_aiming_points(design_.cont, cfg_.scenario.target_position);
        std::array<Vec3, 4> r0;
        for (int m = 0; m < 4; ++m) r0[m] = positions_[model_.mu_indices[m]];
        const auto v_final = compute_final_velocities(design_.cont, aims, r0, t_f);
        MPCConfig mpc;
        mpc.dt = cfg_.ctrl_dt;
        mpc.mass = design_.cont.m_mu + design_.comb.thruster.m_t;
        mpc.u_max = design_.comb.thruster.f_t_max / std::sqrt(3.0);
        mpc.kkt_tol = cfg_.mpc_kkt_tol;
        controller_.emplace(mpc);
        for (int m = 0; m < 4; ++m) {
            State6 s0, sf;
            s0 << r0[m], Vec3::Zero();
            sf << aims[m], v_final[m];
            references_[m] = min_energy_reference(s0, sf, t_f, 1.0 / cfg_.ctrl_dt);
        }
        ctrl_every_ = std::max(1L, std::lround(cfg_.ctrl_dt / cfg_.dt));
        thrust_.fill(Vec3::Zero());
        mu_records_.assign(4, {});
    }

    void controller_tick() {
        const std::size_t tick = static_cast<std::size_t>(step_index_ / ctrl_every_);
        const int N = controller_->config().horizon;
        for (int m = 0; m < 4; ++m) {
            State6 s;
            s << positions_[model_.mu_indices[m]], velocities_[model_.mu_indices[m]];
            std::vector<State6> window;
            window.reserve(N + 1);
            for (int k = 0; k <= N; ++k) window.push_back(references_[m].at(tick + k));
            thrust_[m] = controller_->step(s, window);
        }
        record_tick_all();
    }

    void record_tick_all() {
        for (int m = 0; m < 4; ++m) {
            MuTickRecord rec;
            rec.t = t_;
            rec.position = positions_[model_.mu_indices[m]];
            rec.velocity = velocities_[model_.mu_indices[m]];
            rec.force = thrust_[m];
            mu_records_[m].push_back(rec);
        }
    }

    void record_tick(const Vec3& force) {
        for (int m = 0; m < 4; ++m) {
            MuTickRecord rec;
            rec.t = t_;
            rec.position = positions_[model_.mu_indices[m]];
            rec.velocity = velocities_[model_.mu_indices[m]];
            rec.force = force;
            mu_records_[m].push_back(rec);
        }
    }

    void update_closing() {
        if (!closing_active_) {
            closing_active_ = true;
            activation_lengths_.resize(model_.closing_elements.size());
            activation_rest_.resize(model_.closing_elements.size());
            for (std::size_t s = 0; s < model_.closing_elements.size(); ++s) {
                const auto& e = model_.elements[model_.closing_elements[s]];
                activation_lengths_[s] = (positions_[e.j] - positions_[e.i]).norm();
                activation_rest_[s] = rest_lengths_[model_.closing_elements[s]];
            }
        }
        const double duration = cfg_.t_end - cfg_.t_thrust;
        const double phase = std::clamp((t_ - cfg_.t_thrust) / duration, 0.0, 1.0);
        for (std::size_t s = 0; s < model_.closing_elements.size(); ++s) {
            if (locked_[s]) continue;
            const int k = model_.closing_elements[s];
            const auto& e = model_.elements[k];
            const double len = (positions_[e.j] - positions_[e.i]).norm();
            if (len <= cfg_.lock_fraction * activation_lengths_[s]) {
                locked_[s] = true;  // rest length frozen
                continue;
            }
            rest_lengths_[k] =
                activation_rest_[s] * (1.0 - (1.0 - cfg_.closing_rest_fraction) * phase);
        }
    }

    void finalize_history(SimOutcome& out) {
        out.thrust_dt = cfg_.ctrl_dt;
        out.thrust_history.assign(4, {});
        for (int m = 0; m < 4; ++m)
            for (const auto& rec : mu_records_[m]) out.thrust_history[m].push_back(rec.force);
        out.m_prop = integrate_fuel(out.thrust_history, cfg_.ctrl_dt, design_.comb.thruster.i_sp);
    }

    static void orthonormalize(Eigen::Matrix3d& r) {
        Vec3 x = r.col(0).normalized();
        Vec3 y = (r.col(1) - x * x.dot(r.col(1))).normalized();
        r.col(0) = x;
        r.col(1) = y;
        r.col(2) = x.cross(y);
    }

    SimConfig cfg_;
    DesignPoint design_;
    NetModel model_;
    std::vector<Vec3> positions_;
    std::vector<Vec3> velocities_;
    std::vector<double> rest_lengths_;
    std::vector<bool> locked_;
    DebrisState debris_;
    Vec3 inertia_;

    std::optional<MpcController> controller_;
    std::array<ReferenceTrajectory, 4> references_;
    std::array<Vec3, 4> thrust_;
    std::vector<std::vector<MuTickRecord>> mu_records_;
    long ctrl_every_ = 50;
    long step_index_ = 0;
    double t_ = 0.0;
    double max_tension_ = 0.0;
    bool tension_exceeded_ = false;
    bool closing_active_ = false;
    bool thrust_cut_recorded_ = false;
    std::vector<double> activation_lengths_;
    std::vector<double> activation_rest_;
};

/// Full capture run: thrust on [0, t_thrust), closing on [t_thrust, t_end],
/// CQI evaluated at t_end. Tension violations terminate with the worst-case
/// outcome (CQI 50, zero locked segments).
inline SimOutcome run_capture(const DesignPoint& design, const SimConfig& config) {
    NetSimulation sim(design, config);
    return sim.run();
}

}  // namespace tethernet

#endif  // TETHERNET_NETSIM_HPP
