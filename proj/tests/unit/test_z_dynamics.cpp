#include <doctest.h>

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "support.hpp"
#include "zk/errors.hpp"
#include "zk/z_dynamics.hpp"

using namespace zk;
using zk::test::lab;
using zk::test::rel;

TEST_SUITE("z_dynamics") {
    TEST_CASE("Hamiltonian") {
        const ZDynamics& zd = lab().zdyn();
        const double lam = zd.lam_q_q();
        CHECK(zd.hamiltonian(9.0, 0.0) == doctest::Approx(2.0 / lam * zd.F(9.0)).epsilon(1e-15));
        for (double nu : {-0.1, 0.0, 0.1}) CHECK(zd.hamiltonian(9.0, 0.3, nu) < zd.hamiltonian(9.0, 0.3, nu + 0.01));
        const ZTrajectory tr = zd.integrate(12.0, 50.0);
        CHECK(rel(tr.h0, 2.0 * tr.mu0 * tr.mu0) < 1e-14);
    }

    TEST_CASE("mu0 and Z0 inversion") {
        const ZDynamics& zd = lab().zdyn();
        for (double z0 : {6.0, 10.0, 17.5, 25.0}) CHECK(std::abs(zd.z0_from_mu0(zd.mu0_from_z0(z0)) - z0) < 1e-8);
        const double oracle = std::sqrt(overlap_integral(lab().profile(), 12.0) / zd.lam_q_q());
        CHECK(rel(zd.mu0_from_z0(12.0), oracle) < 1e-8);
        double lo = 1e300, hi = 0.0;
        for (double z0 = 10.0; z0 <= 25.0; z0 += 0.5) {
            const double m = zd.mu0_from_z0(z0);
            const double v = m * m * std::sqrt(z0) * std::exp(z0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi / lo <= 1.3);
        CHECK_THROWS_AS(zd.z0_from_mu0(10.0), std::domain_error);
    }

    TEST_CASE("trajectory invariants") {
        const ZDynamics& zd = lab().zdyn();
        const ZTrajectory tr = zd.integrate(10.0, 200.0);
        CHECK(tr.max_drift <= 1e-10);
        // even in t, minimum at t = 0, convex
        bool even = true, convex = true, monotone = true;
        const auto& s = tr.samples;
        for (std::size_t k = 0; k < s.size(); ++k) {
            const ZSample& m = s[s.size() - 1 - k];
            even = even && std::abs(s[k].t + m.t) < 1e-12 && std::abs(s[k].Z - m.Z) < 1e-12 &&
                   std::abs(s[k].Zdot + m.Zdot) < 1e-12;
            convex = convex && zd.accel(s[k].Z) > 0.0;
            if (k > 0) monotone = monotone && ((s[k].t <= 0.0) ? s[k].Z <= s[k - 1].Z : s[k].Z >= s[k - 1].Z);
            CHECK(s[k].Z >= tr.Z0 - 1e-12);
        }
        CHECK(even);
        CHECK(convex);
        CHECK(monotone);
        const ZSample at0 = zd.state_at(tr, 0.0);
        CHECK(at0.Z == doctest::Approx(10.0).epsilon(1e-14));
        CHECK(std::abs(at0.Zdot) < 1e-14);
        CHECK_THROWS_AS(zd.integrate(4.0, 10.0), std::domain_error);
        CHECK_THROWS_AS(zd.integrate(10.0, 10.0, 1e-6), std::invalid_argument);
    }

    TEST_CASE("velocity tends to 2 mu0 and the asymptote is stable") {
        const ZDynamics& zd = lab().zdyn();
        ZTrajectory a = zd.integrate(6.0, 600.0);
        const ZSample end = a.samples.back();
        REQUIRE(zd.F(end.Z) <= 1e-12 * a.mu0 * a.mu0);
        CHECK(std::abs(end.Zdot - 2.0 * a.mu0) <= 1e-6 * a.mu0);
        const AsymptoteFit fa = zd.asymptote(a);
        CHECK(fa.slope_rel_error <= 1e-6);
        CHECK(rel(fa.slope, end.Zdot) < 1e-6);
        ZTrajectory b = zd.integrate(6.0, 900.0);
        const AsymptoteFit fb = zd.asymptote(b);
        CHECK(std::abs(fa.intercept - fb.intercept) < 1e-6 * std::abs(fa.intercept));
        // the gap to the asymptote keeps shrinking, down to the integration noise floor
        double prev = 1e300;
        for (double t = 0.0; t <= 600.0; t += 20.0) {
            const double gap = std::abs(zd.state_at(a, t).Z - 2.0 * a.mu0 * t - fa.intercept);
            CHECK(gap <= prev + 1e-9);
            prev = gap;
        }
        CHECK(prev < 1e-8);
        ZTrajectory short_run = zd.integrate(6.0, 20.0);
        CHECK_THROWS_AS(zd.asymptote(short_run), HypothesisError);
    }

    TEST_CASE("characteristic times") {
        const ZDynamics& zd = lab().zdyn();
        const double rho = 0.02, eta = 0.5, M = 20.0;
        double lo = 1e300, hi = 0.0;
        for (double mu0 : {0.08, 0.15, 0.25}) {
            const double z0 = zd.z0_from_mu0(mu0);
            const ZTrajectory tr = zd.integrate(z0, (z0 / rho) / (2.0 * mu0) + 200.0);
            const CharacteristicTimes ct = zd.characteristic_times(tr, rho, eta, M);
            CHECK(ct.ordered);
            CHECK(zd.state_at(tr, ct.T1).Zdot / mu0 >= 1.0);
            CHECK(std::abs(zd.state_at(tr, ct.T1).Z - z0 / rho) < 1e-8);
            CHECK(std::abs(zd.state_at(tr, ct.T2).Z - z0 - eta * eta) < 1e-10);
            const double r = zd.state_at(tr, ct.T2).Zdot / (mu0 * eta);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        CHECK(lo > 0.0);
        CHECK(hi / lo < 1.3);
        const ZTrajectory tr = zd.integrate(10.0, 50.0);
        CHECK_THROWS_AS(zd.characteristic_times(tr, 0.05, eta, M), std::invalid_argument);
    }

    TEST_CASE("orbit classes") {
        const ZDynamics& zd = lab().zdyn();
        CHECK(zd.classify_orbit(0.0, 0.0) == OrbitClass::fixed_point);
        CHECK(zd.classify_orbit(20.0, 0.0) == OrbitClass::turning_point);
        CHECK(zd.classify_orbit(20.0, 5.0) == OrbitClass::crossing);
        // equal H pins down the turning point: the orbit through a later state
        // rests at the same Z0
        const ZTrajectory tr = zd.integrate(9.0, 30.0);
        const ZSample s = zd.state_at(tr, 17.0);
        const double h = zd.hamiltonian(s.Z, s.Zdot);
        CHECK(std::abs(zd.z0_from_mu0(std::sqrt(0.5 * h)) - 9.0) < 1e-8);
    }

    TEST_CASE("comparison envelope") {
        const ZDynamics& zd = lab().zdyn();
        const double z0 = 10.0;
        const ZTrajectory tr = zd.integrate(z0, 60.0);
        std::vector<ZSample> fwd;
        for (const auto& s : tr.samples)
            if (s.t >= 0.0) fwd.push_back(s);
        // nu at the level of the integrator's energy drift
        const EnvelopeReport exact = zd.comparison_envelope(fwd, 1e-10, 0.0, tr.h0);
        CHECK(exact.max_deviation < 1e-9);

        // trajectory of the nu-perturbed ODE, kept where the level hypothesis holds
        const double nu = 1e-3, nup = -0.5 * nu;
        namespace odeint = boost::numeric::odeint;
        using S = std::array<double, 2>;
        S y{z0, 0.0};
        std::vector<ZSample> pert;
        const double h = tr.h0;
        odeint::integrate_const(
            odeint::make_controlled(1e-13, 1e-13, odeint::runge_kutta_dopri5<S>()),
            [&](const S& x, S& d, double) {
                d[0] = x[1];
                d[1] = (1.0 + nup) * zd.accel(x[0]);
            },
            y, 0.0, 30.0, 0.5, [&](const S& x, double t) {
                if (zd.hamiltonian(x[0], x[1], -nu) <= h && h <= zd.hamiltonian(x[0], x[1], nu))
                    pert.push_back({t, x[0], x[1], 0.0});
            });
        REQUIRE(pert.size() > 5);
        const EnvelopeReport r = zd.comparison_envelope(pert, nu, 0.0, h);
        MESSAGE("envelope constant " << r.constant << " over " << r.n_samples << " samples");
        CHECK(r.max_deviation > 0.0);
        CHECK(r.constant < 10.0);
        std::vector<ZSample> bad{{0.0, z0, 0.5, 0.0}};
        CHECK_THROWS_AS(zd.comparison_envelope(bad, nu, 0.0, h), HypothesisError);
    }
}
