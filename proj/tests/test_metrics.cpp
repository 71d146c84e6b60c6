#include <catch2/catch_amalgamated.hpp>

#include "tethernet/metrics.hpp"

using namespace tethernet;

namespace {
HullResult fake_hull(double volume, double area) {
    HullResult h;
    h.volume = volume;
    h.surface_area = area;
    return h;
}
}  // namespace

TEST_CASE("CQI is zero for perfect enclosure", "[metrics]") {
    DebrisSpec debris;
    REQUIRE(compute_cqi(fake_hull(debris.volume, debris.surface_area), debris, 0.0) == 0.0);
}

TEST_CASE("CQI term evaluations match Eq. 1", "[metrics]") {
    DebrisSpec debris;
    // q_n = L_c contributes exactly the 0.8 CoM term.
    REQUIRE(compute_cqi(fake_hull(debris.volume, debris.surface_area), debris, debris.l_c()) ==
            Catch::Approx(0.8).epsilon(1e-12));
    // Doubled volume contributes exactly the 0.1 volume term.
    REQUIRE(compute_cqi(fake_hull(2.0 * debris.volume, debris.surface_area), debris, 0.0) ==
            Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("fuel integration matches the constant-thrust closed form", "[metrics]") {
    // 4 MUs at constant 6.1 N for 25 s, I_sp = 277 s (thruster #3):
    // 4 * 6.1 * 25 / (9.81 * 277) = 0.2244817... kg
    const double dt = 0.05;
    const std::size_t n = 501;  // covers [0, 25] inclusive
    std::vector<std::vector<Vec3>> hist(4, std::vector<Vec3>(n, Vec3(6.1, 0, 0)));
    const double m = integrate_fuel(hist, dt, 277.0);
    const double expected = 4.0 * 6.1 * 25.0 / (kEarthG * 277.0);
    REQUIRE(m == Catch::Approx(expected).epsilon(1e-3));
    REQUIRE(expected == Catch::Approx(0.22448).epsilon(1e-4));
}

TEST_CASE("fuel is zero without thrust and linear in 1/I_sp", "[metrics]") {
    std::vector<std::vector<Vec3>> zero(4, std::vector<Vec3>(100, Vec3::Zero()));
    REQUIRE(integrate_fuel(zero, 0.05, 100.0) == 0.0);

    Rng rng(5);
    std::vector<std::vector<Vec3>> hist(4);
    for (auto& s : hist)
        for (int k = 0; k < 100; ++k)
            s.emplace_back(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const double m1 = integrate_fuel(hist, 0.05, 100.0);
    const double m2 = integrate_fuel(hist, 0.05, 200.0);
    REQUIRE(m1 == Catch::Approx(2.0 * m2).epsilon(1e-12));
}

TEST_CASE("trapezoid rule is exact for linear ramps", "[metrics]") {
    // ||F|| = t over [0, 1]: integral = 0.5 exactly under the trapezoid rule.
    std::vector<Vec3> ramp;
    const int n = 21;
    for (int k = 0; k < n; ++k) ramp.emplace_back(k * 0.05, 0.0, 0.0);
    const double m = integrate_fuel({ramp}, 0.05, 1.0);
    REQUIRE(m == Catch::Approx(0.5 / kEarthG).epsilon(1e-12));
}

TEST_CASE("objective returns fuel on success and the log penalty otherwise", "[metrics]") {
    ObjectiveConfig obj;
    obj.beta = 2.0;

    SimOutcome ok;
    ok.cqi_final = 1.2;
    ok.n_locked = 12;
    ok.m_prop = 0.33;
    REQUIRE(evaluate_objective(ok, obj) == 0.33);

    // Tension failure: CQI 50, N_L 0 -> ln(47.5^2+1) + ln(145) + beta.
    SimOutcome failed;
    failed.cqi_final = 50.0;
    failed.n_locked = 0;
    failed.tension_failed = true;
    const double expected = std::log(47.5 * 47.5 + 1.0) + std::log(145.0) + obj.beta;
    REQUIRE(evaluate_objective(failed, obj) == Catch::Approx(expected).epsilon(1e-12));
    REQUIRE(expected - obj.beta == Catch::Approx(12.6989).epsilon(1e-4));

    // All locked but CQI over threshold: ln(1.25) + ln(1) + beta.
    SimOutcome over;
    over.cqi_final = 3.0;
    over.n_locked = 12;
    REQUIRE(evaluate_objective(over, obj) ==
            Catch::Approx(std::log(1.25) + obj.beta).epsilon(1e-12));
    REQUIRE(std::log(1.25) == Catch::Approx(0.22314).epsilon(1e-4));
}

TEST_CASE("every failure scores at least beta above zero", "[metrics]") {
    ObjectiveConfig obj;
    obj.beta = 1.5;
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        SimOutcome o;
        o.cqi_final = rng.uniform(0, 50);
        o.n_locked = static_cast<int>(rng.index(13));
        o.m_prop = rng.uniform(0, 1);
        if (o.cqi_final <= obj.cqi_threshold && o.n_locked == 12) continue;
        REQUIRE(evaluate_objective(o, obj) >= obj.beta);
    }
}

TEST_CASE("debris inertia is the solid-cylinder closed form", "[metrics]") {
    DebrisSpec d;
    const Vec3 inertia = d.inertia();
    const double r = d.diameter / 2.0;
    REQUIRE(inertia.z() == Catch::Approx(0.5 * d.mass * r * r).epsilon(1e-12));
    REQUIRE(inertia.x() ==
            Catch::Approx(d.mass * (3 * r * r + d.length * d.length) / 12.0).epsilon(1e-12));
    REQUIRE(inertia.x() == inertia.y());
}
