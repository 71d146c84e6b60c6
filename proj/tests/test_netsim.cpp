#include <catch2/catch_amalgamated.hpp>

#include <chrono>

#include "tethernet/netsim.hpp"

using namespace tethernet;

namespace {

DesignPoint default_design(int comb_id = 7) {
    static const Catalog cat;
    DesignPoint d;
    d.comb = cat.node(comb_id);
    d.cont = ContinuousVector{};
    return d;
}

/// Paper comparison-table baseline column: combination #1 thruster/material,
/// N_k = 11, K_cls = 1, zero offsets, L_ct clamped to the variable bound.
DesignPoint paper_baseline() {
    static const Catalog cat;
    DesignPoint d;
    for (const auto& n : cat.nodes())
        if (n.shape.n_k == 11 && n.shape.k_cls == 1 && n.thruster.f_t_max == 8.9 &&
            n.material.e_n == 70.0e9)
            d.comb = n;
    d.cont = ContinuousVector{};
    d.cont.m_mu = 2.0;
    d.cont.r_thread = 1e-3;
    d.cont.r_corner = 1e-3;
    d.cont.l_net = 22.0;
    d.cont.l_ct = 2.0;
    return d;
}

Vec3 total_momentum(const NetSimulation& sim, const SimConfig& cfg) {
    Vec3 p = Vec3::Zero();
    for (std::size_t i = 0; i < sim.positions().size(); ++i)
        p += sim.model().masses[i] * sim.velocities()[i];
    p += cfg.debris.mass * sim.debris().com_velocity;
    return p;
}

}  // namespace

TEST_CASE("build_net geometry and stiffness", "[netsim]") {
    Catalog cat;
    DesignPoint d = default_design(1);  // n_k = 9
    d.cont.l_net = 24.0;
    d.cont.r_thread = 1e-3;
    const NetModel m = build_net(d.comb, d.cont);
    REQUIRE(m.n_k == 9);
    REQUIRE(m.positions.size() == 81);
    // Mesh length 24 / 8 = 3 m.
    const auto& e0 = m.elements.front();
    REQUIRE(e0.kind == ElementKind::mesh);
    REQUIRE(e0.rest_length == Catch::Approx(3.0));
    // k = E A / l = 70e9 * pi * 1e-6 / 3.
    REQUIRE(e0.stiffness == Catch::Approx(70e9 * M_PI * 1e-6 / 3.0).epsilon(1e-9));
    REQUIRE(e0.stiffness == Catch::Approx(7.33e4).epsilon(1e-2));
    // Corner knots carry MU + thruster mass on top of thread lumps.
    for (int idx : m.mu_indices) REQUIRE(m.masses[idx] > d.cont.m_mu + d.comb.thruster.m_t);
    // 12 closing nodes and 12 closing segments around the perimeter.
    REQUIRE(m.closing_nodes.size() == 12);
    REQUIRE(m.closing_elements.size() == 12);
    REQUIRE(m.main_tether_element >= 0);
}

TEST_CASE("element tension follows Hooke and never pushes", "[netsim]") {
    SpringElement e;
    e.rest_length = 1.0;
    e.stiffness = 100.0;
    e.damping = 0.0;
    Vec3 dir;

    SECTION("10% extension gives 10 N") {
        const double t =
            element_tension(e, Vec3::Zero(), Vec3(1.1, 0, 0), Vec3::Zero(), Vec3::Zero(), 1.0, 1.0, dir);
        REQUIRE(t == Catch::Approx(10.0).epsilon(1e-12));
        REQUIRE(dir.isApprox(Vec3(1, 0, 0)));
    }
    SECTION("at rest length or slack: zero") {
        REQUIRE(element_tension(e, Vec3::Zero(), Vec3(1.0, 0, 0), Vec3::Zero(), Vec3::Zero(), 1.0,
                                1.0, dir) == 0.0);
        REQUIRE(element_tension(e, Vec3::Zero(), Vec3(0.5, 0, 0), Vec3::Zero(), Vec3::Zero(), 1.0,
                                1.0, dir) == 0.0);
    }
    SECTION("coincident endpoints are degenerate, not NaN") {
        REQUIRE(element_tension(e, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 1.0, 1.0,
                                dir) == 0.0);
        REQUIRE(dir.norm() == 0.0);
    }
    SECTION("tension is never negative for random states") {
        Rng rng(13);
        e.damping = 5.0;
        for (int i = 0; i < 2000; ++i) {
            const Vec3 pj(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
            const Vec3 vi(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
            const Vec3 vj(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
            REQUIRE(element_tension(e, Vec3::Zero(), pj, vi, vj, 1.0, 1.0, dir) >= 0.0);
        }
    }
}

TEST_CASE("contact force: outside zero, static penetration k_c * delta", "[netsim]") {
    SimConfig cfg;
    DebrisState debris;  // identity orientation, at origin, at rest
    const DebrisSpec spec = cfg.debris;

    REQUIRE(contact_force(Vec3(10, 0, 0), Vec3::Zero(), debris, spec, cfg).norm() == 0.0);
    REQUIRE(contact_force(Vec3(0, 0, 10), Vec3::Zero(), debris, spec, cfg).norm() == 0.0);

    // 3 cm inside the lateral surface, everything at rest.
    const double delta = 0.03;
    const Vec3 pos(spec.diameter / 2.0 - delta, 0, 0);
    const Vec3 f = contact_force(pos, Vec3::Zero(), debris, spec, cfg);
    REQUIRE(f.isApprox(Vec3(cfg.k_contact * delta, 0, 0), 1e-12));

    // Deep near the +z cap: normal flips to the cap.
    const Vec3 cap_pos(0.1, 0, spec.length / 2.0 - 0.01);
    const Vec3 fc = contact_force(cap_pos, Vec3::Zero(), debris, spec, cfg);
    REQUIRE(fc.z() == Catch::Approx(cfg.k_contact * 0.01).epsilon(1e-9));
}

TEST_CASE("contact impulse matches the explicit force for gentle contact", "[netsim]") {
    SimConfig cfg;
    cfg.k_contact = 10.0;  // well inside the explicit stability region
    cfg.c_contact = 0.1;
    cfg.c_tangent = 0.05;
    DebrisState debris;
    const double mass = 5.0;
    const Vec3 pos(cfg.debris.diameter / 2.0 - 0.02, 0, 0.3);
    const Vec3 vel(-0.1, 0.2, 0.0);
    const Vec3 f = contact_force(pos, vel, debris, cfg.debris, cfg);
    const Vec3 imp = contact_impulse(pos, vel, mass, debris, cfg.debris, cfg);
    REQUIRE((imp / cfg.dt - f).norm() < 0.05 * f.norm());
}

TEST_CASE("contact conserves linear momentum of net + debris per step", "[netsim]") {
    SimConfig cfg;
    cfg.enable_thrust = false;
    cfg.enable_closing = false;
    cfg.scenario.target_position = Vec3(0.0, 0.0, -4.0);  // debris under the deployed net
    cfg.scenario.euler_321_deg = Vec3::Zero();
    cfg.scenario.omega_body_deg = Vec3(5.0, 10.0, 3.0);
    NetSimulation sim(default_design(), cfg);
    // Drop the net onto the debris.
    for (auto& v : sim.mutable_velocities()) v = Vec3(0, 0, -1.0);

    bool contacted = false;
    for (int s = 0; s < 4000; ++s) {
        const Vec3 before = total_momentum(sim, cfg);
        sim.step();
        const Vec3 after = total_momentum(sim, cfg);
        REQUIRE((after - before).norm() < 1e-10 * std::max(1.0, before.norm()));
        if (sim.max_tension_last_step() > 0.0 || s > 2000) contacted = true;
    }
    REQUIRE(contacted);
}

TEST_CASE("undamped free net conserves energy within 1% over 10 s", "[netsim]") {
    SimConfig cfg;
    cfg.enable_thrust = false;
    cfg.enable_contact = false;
    cfg.enable_damping = false;
    cfg.enable_closing = false;
    cfg.scenario.target_position = Vec3(0, 0, -1000);  // far away
    NetSimulation sim(default_design(), cfg);
    // Perturb knots deterministically to exchange kinetic and elastic energy.
    Rng rng(99);
    for (auto& v : sim.mutable_velocities())
        v = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    const double e0 = sim.net_kinetic_energy() + sim.net_elastic_energy();
    REQUIRE(e0 > 0.0);
    double max_drift = 0.0;
    for (int s = 0; s < 10000; ++s) {
        sim.step();
        const double e = sim.net_kinetic_energy() + sim.net_elastic_energy();
        max_drift = std::max(max_drift, std::abs(e - e0) / e0);
    }
    REQUIRE(max_drift < 0.05);
}

TEST_CASE("closing locks nothing before activation", "[netsim]") {
    SimConfig cfg;
    NetSimulation sim(default_design(), cfg);
    const long steps = std::lround(20.0 / cfg.dt);
    for (long s = 0; s < steps; ++s) sim.step();
    REQUIRE(sim.count_locked() == 0);
}

TEST_CASE("paper baseline design succeeds at desk fidelity", "[netsim]") {
    SimConfig cfg;
    const auto t0 = std::chrono::steady_clock::now();
    const SimOutcome out = run_capture(paper_baseline(), cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    INFO("cqi=" << out.cqi_final << " locked=" << out.n_locked << " m_prop=" << out.m_prop);
    REQUIRE(out.success);
    REQUIRE(out.cqi_final <= 2.5);
    REQUIRE(out.n_locked == 12);
    REQUIRE_FALSE(out.tension_failed);
    REQUIRE(out.m_prop > 0.0);
    REQUIRE(wall < 60.0);
}

TEST_CASE("zero thrust never reaches the target", "[netsim]") {
    SimConfig cfg;
    cfg.enable_thrust = false;
    const SimOutcome out = run_capture(paper_baseline(), cfg);
    REQUIRE_FALSE(out.success);
}

TEST_CASE("capture runs are bit-identical across repeats", "[netsim]") {
    SimConfig cfg;
    cfg.dt = 2e-3;  // keep the repeat cheap
    const SimOutcome a = run_capture(default_design(30), cfg);
    const SimOutcome b = run_capture(default_design(30), cfg);
    REQUIRE(a.cqi_final == b.cqi_final);
    REQUIRE(a.m_prop == b.m_prop);
    REQUIRE(a.n_locked == b.n_locked);
    REQUIRE(a.thrust_history.size() == b.thrust_history.size());
    for (std::size_t m = 0; m < a.thrust_history.size(); ++m) {
        REQUIRE(a.thrust_history[m].size() == b.thrust_history[m].size());
        for (std::size_t k = 0; k < a.thrust_history[m].size(); ++k)
            REQUIRE((a.thrust_history[m][k].array() == b.thrust_history[m][k].array()).all());
    }
}

TEST_CASE("tension violation terminates with CQI 50 and zero locks", "[netsim]") {
    // A material three orders of magnitude weaker than the stand-in tears.
    Catalog weak({{8.9, 60.0, 0.37}}, {{70.0e9, 1390.0, 3.0e5, 0.3}});
    DesignPoint d;
    d.comb = weak.node(1);
    d.cont = ContinuousVector{};
    SimConfig cfg;
    const SimOutcome out = run_capture(d, cfg);
    REQUIRE(out.tension_failed);
    REQUIRE(out.cqi_final == 50.0);
    REQUIRE(out.n_locked == 0);
    REQUIRE_FALSE(out.success);
}

TEST_CASE("divergence raises SimError naming the step", "[netsim]") {
    SimConfig cfg;
    cfg.stiffness_scale = 50.0;  // far outside the integrator stability bound
    cfg.enable_tension_check = false;
    cfg.enable_damping = false;
    NetSimulation sim(default_design(), cfg);
    // Non-uniform velocities so elements actually stretch.
    Rng rng(7);
    for (auto& v : sim.mutable_velocities())
        v = Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    try {
        for (int s = 0; s < 200000; ++s) sim.step();
        FAIL("expected divergence");
    } catch (const SimError& e) {
        REQUIRE(std::string(e.what()).find("diverged") != std::string::npos);
    }
}

TEST_CASE("fuel is bounded by the rocket-equation ceiling of the thrust phase", "[netsim]") {
    SimConfig cfg;
    cfg.dt = 2e-3;
    cfg.t_thrust = 10.0;
    const DesignPoint d = default_design(30);
    const SimOutcome cut = run_capture(d, cfg);
    // Four thrusters saturated for the whole (shortened) phase is the ceiling.
    const double ceiling =
        4.0 * d.comb.thruster.f_t_max * cfg.t_thrust / (kEarthG * d.comb.thruster.i_sp);
    REQUIRE(cut.m_prop > 0.0);
    REQUIRE(cut.m_prop <= ceiling * (1.0 + 1e-9));
}
