#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "frameflow/lp.hpp"
#include "frameflow/measure.hpp"
#include "frameflow/serialize.hpp"
#include "frameflow/shadow.hpp"
#include "oracles.hpp"

using namespace frameflow;

namespace {

DiscreteMeasure dirac(const Vec& p, GeometryKind geom) {
    DiscreteMeasure m;
    m.dim = static_cast<int>(p.size());
    m.geometry = geom;
    m.points = {p};
    m.weights = {1.0};
    return m;
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int atoms) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DiscreteMeasure m;
    m.dim = 2;
    m.geometry = GeometryKind::Torus;
    double total = 0.0;
    for (int i = 0; i < atoms; ++i) {
        m.points.push_back({u(rng), u(rng)});
        double w = 0.05 + u(rng);
        m.weights.push_back(w);
        total += w;
    }
    for (double& w : m.weights) w /= total;
    return m;
}

PeriodicOrbit cat_two_cycle() {
    PeriodicOrbit o;
    o.point = {0.2, 0.4};
    o.period = 2.0;
    o.residual = 0.0;
    o.verified = true;
    o.multipliers = {0.1458980337503155, 6.854101966249685};  // eigenvalues of A^2
    o.exponents = {std::log(o.multipliers[0]) / 2, std::log(o.multipliers[1]) / 2};
    o.index = 1;
    return o;
}

}  // namespace

TEST_CASE("simplex solves a small known program") {
    LinearProgram lp;
    lp.nvars = 2;
    lp.objective = {1.0, 1.0};
    lp.add_row({1.0, 0.0}, 1.0);
    lp.add_row({0.0, 1.0}, 2.0);
    lp.add_row({1.0, 1.0}, 2.5);
    auto sol = solve_lp_max(lp);
    CHECK(sol.value == doctest::Approx(2.5).epsilon(1e-12));

    LinearProgram unbounded;
    unbounded.nvars = 1;
    unbounded.objective = {1.0};
    unbounded.add_row({-1.0}, 1.0);
    CHECK_THROWS_AS(solve_lp_max(unbounded), numeric_error);
}

TEST_CASE("empirical measure of short map orbits") {
    SystemSpec cat = make_system("cat");
    // the origin is the fixed point: empirical measure is a Dirac there
    Trajectory fixed = iterate_map(cat, {0.0, 0.0}, 10);
    DiscreteMeasure m = empirical_measure(cat, fixed, 10);
    m.validate();
    Observable f{[](const Vec& w) { return std::cos(2 * M_PI * w[0]) + w[1]; }, 2 * M_PI, 2.0};
    CHECK(integrate(m, f) == doctest::Approx(1.0));

    // a genuine period-2 orbit alternates between two atoms
    Trajectory two = iterate_map(cat, {0.2, 0.4}, 4);
    DiscreteMeasure m2 = empirical_measure(cat, two, 4);
    Observable first{[](const Vec& w) { return w[0]; }, 1.0, 1.0};
    CHECK(integrate(m2, first) == doctest::Approx(0.5 * (0.2 + 0.8)).epsilon(1e-12));

    CHECK_THROWS_AS(empirical_measure(cat, Trajectory{}, 1), numeric_error);
}

TEST_CASE("long cat orbit equidistributes against a Fourier mode") {
    SystemSpec cat = make_system("cat");
    Trajectory traj = iterate_map(cat, {0.135642, 0.463533}, 100000);
    DiscreteMeasure m = empirical_measure(cat, traj, 100000);
    Observable mode{[](const Vec& w) { return std::cos(2 * M_PI * w[0]); }, 2 * M_PI, 1.0};
    CHECK(std::fabs(integrate(m, mode)) < 5e-3);
}

TEST_CASE("periodic measures: Dirac at fixed point, uniform on cycles") {
    SystemSpec cat = make_system("cat");
    PeriodicOrbit fixed;
    fixed.point = {0.0, 0.0};
    fixed.period = 1.0;
    fixed.residual = 0.0;
    fixed.verified = true;
    fixed.multipliers = {0.3819660112501051, 2.618033988749895};
    fixed.exponents = {std::log(fixed.multipliers[0]), std::log(fixed.multipliers[1])};
    fixed.index = 1;
    DiscreteMeasure dm = periodic_measure(cat, fixed);
    CHECK(dm.size() == 1);
    CHECK(dm.weights[0] == doctest::Approx(1.0));

    DiscreteMeasure two = periodic_measure(cat, cat_two_cycle());
    CHECK(two.size() == 2);
    CHECK(two.weights[0] == doctest::Approx(0.5));
    CHECK(torus_distance(two.points[1], {0.8, 0.6}) < 1e-12);

    PeriodicOrbit bogus = cat_two_cycle();
    bogus.verified = false;
    CHECK_THROWS_AS(periodic_measure(cat, bogus), numeric_error);
}

TEST_CASE("periodic measures are invariant under the pushforward") {
    SystemSpec cat = make_system("cat");
    DiscreteMeasure m = periodic_measure(cat, cat_two_cycle());
    DiscreteMeasure pushed = pushforward(cat, m);
    Observable f{[](const Vec& w) { return std::sin(2 * M_PI * w[1]) + 0.3 * w[0]; },
                 2 * M_PI + 0.3, 1.3};
    CHECK(integrate(pushed, f) == doctest::Approx(integrate(m, f)).epsilon(1e-9));
}

TEST_CASE("flow periodic measure weights sum to one") {
    SystemSpec susp = make_system("suspension:cat");
    PeriodicOrbit orbit;
    orbit.point = {0.0, 0.0, 0.0};
    orbit.period = 1.0;
    orbit.residual = 0.0;
    orbit.verified = true;
    orbit.is_map_orbit = false;
    DiscreteMeasure m = periodic_measure(susp, orbit, 1e-2);
    m.validate();
    CHECK(m.size() == 100);
    CHECK(m.weights[0] == doctest::Approx(0.01));
}

TEST_CASE("BL distance of a Dirac pair has the closed form 2t/(2+t)") {
    for (double t : {0.1, 0.5, 1.0}) {
        DiscreteMeasure a = dirac({0.0, 0.0}, GeometryKind::Box);
        DiscreteMeasure b = dirac({t, 0.0}, GeometryKind::Box);
        CHECK(std::fabs(bl_distance(a, b) - 2 * t / (2 + t)) < 1e-9);
    }
    // same formula on the torus while t stays below the injectivity radius
    DiscreteMeasure a = dirac({0.1, 0.2}, GeometryKind::Torus);
    DiscreteMeasure b = dirac({0.4, 0.2}, GeometryKind::Torus);
    CHECK(std::fabs(bl_distance(a, b) - 2 * 0.3 / 2.3) < 1e-9);
}

TEST_CASE("BL distance is zero on identical measures") {
    std::mt19937_64 rng(5);
    DiscreteMeasure m = random_measure(rng, 6);
    CHECK(bl_distance(m, m) < 1e-11);
}

TEST_CASE("transportation route agrees with the explicit LP route") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 8; ++trial) {
        DiscreteMeasure m1 = random_measure(rng, 3 + trial * 3);
        DiscreteMeasure m2 = random_measure(rng, 4 + trial * 2);
        double fast = bl_distance(m1, m2);
        double lp = bl_distance_lp(m1, m2);
        CHECK(std::fabs(fast - lp) < 5e-8);
    }
}

TEST_CASE("BL metric axioms on random triples") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 25; ++trial) {
        DiscreteMeasure m1 = random_measure(rng, 2 + trial % 5);
        DiscreteMeasure m2 = random_measure(rng, 2 + (trial + 2) % 5);
        DiscreteMeasure m3 = random_measure(rng, 2 + (trial + 4) % 5);
        double d12 = bl_distance(m1, m2);
        double d21 = bl_distance(m2, m1);
        double d13 = bl_distance(m1, m3);
        double d23 = bl_distance(m2, m3);
        CHECK(std::fabs(d12 - d21) < 1e-9);
        CHECK(d12 >= 0.0);
        CHECK(d13 <= d12 + d23 + 1e-9);
    }
}

TEST_CASE("duality bound links integration and BL distance") {
    std::mt19937_64 rng(77);
    Observable obs[] = {
        {[](const Vec& w) { return 0.5 * std::cos(2 * M_PI * w[0]); }, M_PI, 0.5},
        {[](const Vec& w) { return 0.2 * std::sin(2 * M_PI * (w[0] + w[1])); }, 0.4 * M_PI * 1.5,
         0.2}};
    for (int trial = 0; trial < 10; ++trial) {
        DiscreteMeasure m1 = random_measure(rng, 5);
        DiscreteMeasure m2 = random_measure(rng, 4);
        double d = bl_distance(m1, m2);
        for (const Observable& f : obs) {
            double gap = std::fabs(integrate(m1, f) - integrate(m2, f));
            CHECK(gap <= (f.sup_bound + f.lip_bound) * d + 1e-9);
        }
    }
}

TEST_CASE("geometry mismatch is rejected") {
    DiscreteMeasure a = dirac({0.0, 0.0}, GeometryKind::Box);
    DiscreteMeasure b = dirac({0.0, 0.0}, GeometryKind::Torus);
    CHECK_THROWS_AS(bl_distance(a, b), numeric_error);
}

TEST_CASE("measures round-trip through their JSON form") {
    std::mt19937_64 rng(31);
    DiscreteMeasure m = random_measure(rng, 7);
    m.provenance = Provenance::Empirical;
    m.origin = "empirical(N=7)";
    nlohmann::json doc = to_json(m);
    CHECK(doc.at("geometry") == "torus");
    CHECK(doc.at("provenance") == "empirical");
    CHECK(doc.at("atoms").size() == 7);
    DiscreteMeasure back = measure_from_json(doc);
    CHECK(back.size() == m.size());
    CHECK(bl_distance(m, back) < 1e-12);
}

TEST_CASE("coarsening keeps mass and stays BL-close") {
    std::mt19937_64 rng(404);
    DiscreteMeasure m = random_measure(rng, 300);
    DiscreteMeasure c = coarsen_measure(m, 8);
    c.validate();
    CHECK(c.size() <= 64);
    // moving each atom to its cell centroid moves mass at most half the
    // cell diagonal, 1/16 * sqrt(2)
    CHECK(bl_distance(m, c) <= std::sqrt(2.0) / 16 + 1e-9);
}
