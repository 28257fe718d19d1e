#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "zk/errors.hpp"
#include "zk/evolution.hpp"
#include "zk/experiments.hpp"

using namespace zk;
using zk::test::lab;
using zk::test::rel;

namespace {

Field2D wave(const Grid2D& g, double c, double x0 = 0.0, double y0 = 0.0) {
    return place_profile(lab().profile(), g, x0, y0, c);
}

Field2D run(const Field2D& v0, double dt, int n) {
    Evolver ev(v0, dt);
    ev.advance(n);
    return ev.field();
}

}  // namespace

TEST_SUITE("evolution") {
    TEST_CASE("the ground state is a steady state") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 256, 256);
        const Field2D q = wave(g, 1.0);
        EvolutionConfig cfg;
        cfg.dt = 0.02;
        cfg.t_end = 10.0;
        const EvolutionResult r = evolve(q, cfg);
        CHECK(r.t == doctest::Approx(10.0));
        CHECK(h1_norm(r.v - q) <= 1e-6);
    }

    TEST_CASE("zero stays zero") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 64, 64);
        CHECK(run(Field2D(g), 0.05, 20).max_abs() == 0.0);
    }

    TEST_CASE("config validation") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 128, 128);
        EvolutionConfig c;
        CHECK_NOTHROW(c.validate(g));
        EvolutionConfig bad = c;
        bad.dt = 0.0;
        CHECK_THROWS_AS(bad.validate(g), ConfigError);
        bad = c;
        bad.t_end = -1.0;
        CHECK_THROWS_AS(bad.validate(g), ConfigError);
        bad = c;
        bad.snapshot_every = -2;
        CHECK_THROWS_AS(bad.validate(g), ConfigError);
        bad = c;
        bad.dt = 1.0;
        CHECK_THROWS_AS(bad.validate(g), ConfigError);
    }

    TEST_CASE("guard against blow-up") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 64, 64);
        Evolver ev(wave(g, 1.0), 0.01, true, 1.0);
        CHECK_THROWS_AS(ev.advance(1), BlowUpError);
    }

    TEST_CASE("callbacks and early stop") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 64, 64);
        EvolutionConfig cfg;
        cfg.dt = 0.05;
        cfg.t_end = 1.0;
        cfg.snapshot_every = 5;
        std::vector<double> times;
        const EvolutionResult r = evolve(wave(g, 1.0), cfg, [&](double t, const Field2D&) {
            times.push_back(t);
            return true;
        });
        CHECK(r.steps == 20);
        REQUIRE(times.size() == 5);
        CHECK(times.front() == 0.0);
        CHECK(times.back() == doctest::Approx(1.0));
        int calls = 0;
        const EvolutionResult s = evolve(wave(g, 1.0), cfg, [&](double, const Field2D&) { return ++calls < 2; });
        CHECK(s.stopped_early);
        CHECK(s.steps == 5);
    }

    TEST_CASE("energy scaling of the travelling waves") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 256, 256);
        const Invariants a = invariants_of(wave(g, 1.0)), b = invariants_of(wave(g, 1.2));
        CHECK(rel(b.energy_original, 1.44 * a.energy_original) < 1e-8);
        // mass scales like c
        CHECK(rel(b.mass, 1.2 * a.mass) < 1e-8);
        CHECK(rel(a.mean, lab().constants().int_q) < 1e-8);
    }

    TEST_CASE("conservation along a moving wave") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 128, 128);
        const Field2D v0 = wave(g, 1.2, -2.0, 0.3);
        const Invariants i0 = invariants_of(v0);
        const Invariants i1 = invariants_of(run(v0, 0.01, 300));
        CHECK(std::abs(i1.mean - i0.mean) <= 1e-12 * std::abs(i0.mean));
        CHECK(rel(i1.mass, i0.mass) <= 1e-8);
        CHECK(rel(i1.energy, i0.energy) <= 1e-6);
    }

    TEST_CASE("time reversal") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 128, 128);
        const Field2D v0 = wave(g, 1.2, -1.0);
        // the dealiased run starts from the masked initial data
        const Field2D start = run(v0, 0.005, 0);
        CHECK(h1_norm(run(run(v0, 0.005, 200), -0.005, 200) - start) <= 1e-7);
        Evolver fw(v0, 0.005, false);
        fw.advance(200);
        Evolver bw(fw.field(), -0.005, false);
        bw.advance(200);
        CHECK(h1_norm(bw.field() - v0) <= 1e-7);
    }

    TEST_CASE("restart continues the same run") {
        const Grid2D g = Grid2D::make(24.0, 24.0, 64, 64);
        Evolver a(wave(g, 1.1, -1.0), 0.02);
        a.advance(10);
        Evolver b(a.state(), g, 0.02);
        a.advance(10);
        b.advance(10);
        CHECK(a.field().v == b.field().v);
    }

    TEST_CASE("fourth order in time") {
        const Grid2D g = Grid2D::make(28.0, 28.0, 64, 64);
        // a wave plus a bump, so the solution is not a pure translation
        Field2D v0 = wave(g, 1.3, -2.0) + 0.3 * wave(g, 1.0, 1.5, 1.0);
        const double t = 2.0;
        const Field2D ref = run(v0, 0.003125, 640);
        double prev = 0.0;
        for (double dt : {0.05, 0.025, 0.0125}) {
            const double err = h1_norm(run(v0, dt, static_cast<int>(std::lround(t / dt))) - ref);
            if (prev > 0.0) {
                MESSAGE("dt " << dt << " observed order " << std::log2(prev / err));
                CHECK(std::log2(prev / err) >= 3.5);
            }
            prev = err;
        }
        for (double dt : {0.05, 0.025}) {
            Evolver l(v0, dt, true, 10.0, Scheme::lawson);
            l.advance(static_cast<int>(std::lround(t / dt)));
            CHECK(h1_norm(l.field() - ref) <= 1e-3 * h1_norm(ref));
        }
    }

    TEST_CASE("single wave moves at c - 1") {
        SingleSolitonConfig cfg;
        cfg.N = 128;
        cfg.t_end = 5.0;
        cfg.dt = 0.01;
        const SingleSolitonReport r = run_single_soliton(lab().profile(), cfg);
        MESSAGE("speed " << r.speed << ", H1 error " << r.h1_error);
        CHECK(r.speed_error <= 1e-4);
        CHECK(r.mass_drift <= 1e-8);
        CHECK(r.energy_drift <= 1e-6);
    }
}
