#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "tethernet/catalog.hpp"

using namespace tethernet;

TEST_CASE("catalog enumerates exactly 180 unique combinations", "[catalog]") {
    Catalog cat;
    REQUIRE(cat.nodes().size() == 180);
    std::set<std::tuple<double, double, int, int>> unique;
    for (const auto& n : cat.nodes())
        unique.insert({n.thruster.f_t_max, n.material.e_n, n.shape.n_k, n.shape.k_cls});
    REQUIRE(unique.size() == 180);
}

TEST_CASE("per-shape K_cls counts are 3/4/5", "[catalog]") {
    Catalog cat;
    int c9 = 0, c11 = 0, c13 = 0;
    for (const auto& s : cat.shapes()) {
        if (s.n_k == 9) ++c9;
        if (s.n_k == 11) ++c11;
        if (s.n_k == 13) ++c13;
    }
    REQUIRE(c9 == 3);
    REQUIRE(c11 == 4);
    REQUIRE(c13 == 5);
    // 45 nodes carry n_k=9: 5 thrusters x 3 materials x 3 K_cls values.
    int n9 = 0;
    for (const auto& n : cat.nodes())
        if (n.shape.n_k == 9) ++n9;
    REQUIRE(n9 == 45);
}

TEST_CASE("node ids are a dense 1..180 bijection in thruster-major order", "[catalog]") {
    Catalog cat;
    for (int i = 1; i <= 180; ++i) REQUIRE(cat.node(i).index == i);
    // First node: thruster #1, material #1, first shape (9, -2).
    const auto f = cat.node(1).feature();
    const std::array<double, 7> expected{8.9, 60.0, 0.37, 70.0e9, 1390.0, 9.0, -2.0};
    for (int j = 0; j < 7; ++j) REQUIRE(f[j] == Catch::Approx(expected[j]).epsilon(1e-14));
    REQUIRE_THROWS_AS(cat.node(0), ConfigError);
    REQUIRE_THROWS_AS(cat.node(181), ConfigError);
}

TEST_CASE("continuous bounds validation names the offending variable", "[catalog]") {
    Catalog cat;
    const auto& b = Catalog::continuous_bounds();
    std::array<double, ContinuousVector::kDim> lo{}, hi{};
    for (int i = 0; i < ContinuousVector::kDim; ++i) {
        lo[i] = b[i].lo;
        hi[i] = b[i].hi;
    }
    REQUIRE_NOTHROW(cat.validate_continuous(lo));
    REQUIRE_NOTHROW(cat.validate_continuous(hi));
    auto bad = lo;
    bad[0] = 5.1;
    try {
        cat.validate_continuous(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("dx[0]") != std::string::npos);
        REQUIRE(std::string(e.what()).find("exceeds 5") != std::string::npos);
    }
}

TEST_CASE("normalization maps bounds to the unit box and back", "[catalog]") {
    Catalog cat;
    const auto& b = Catalog::continuous_bounds();
    std::array<double, ContinuousVector::kDim> lo{}, hi{};
    for (int i = 0; i < ContinuousVector::kDim; ++i) {
        lo[i] = b[i].lo;
        hi[i] = b[i].hi;
    }
    const auto u_lo = cat.normalize_cont(ContinuousVector::from_flat(lo));
    const auto u_hi = cat.normalize_cont(ContinuousVector::from_flat(hi));
    for (int i = 0; i < ContinuousVector::kDim; ++i) {
        REQUIRE(u_lo[i] == Catch::Approx(0.0).margin(1e-15));
        REQUIRE(u_hi[i] == Catch::Approx(1.0).margin(1e-15));
    }
    // dx[0] = 0 sits at the midpoint of [-5, 5].
    ContinuousVector mid;
    mid.dx[0] = 0.0;
    REQUIRE(cat.normalize_cont(mid)[0] == Catch::Approx(0.5));
    // Round trip.
    Rng rng(7);
    std::array<double, ContinuousVector::kDim> u{};
    for (auto& x : u) x = rng.uniform();
    const auto back = cat.normalize_cont(cat.denormalize_cont(u));
    for (int i = 0; i < ContinuousVector::kDim; ++i)
        REQUIRE(back[i] == Catch::Approx(u[i]).margin(1e-12));
}

TEST_CASE("combinatorial features normalize into [0,1]", "[catalog]") {
    Catalog cat;
    for (const auto& n : cat.nodes()) {
        const auto f = cat.normalize_comb(n);
        for (double x : f) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
        }
    }
}

TEST_CASE("catalog hash is stable and sensitive to the tables", "[catalog]") {
    Catalog a, b;
    REQUIRE(a.hash() == b.hash());
    Catalog c({{1.0, 2.0, 3.0}}, {{1e9, 1000.0, 3e9, 0.3}});
    REQUIRE(c.hash() != a.hash());
}
