#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/numeric/odeint.hpp>

#include "support.hpp"
#include "zk/bessel.hpp"
#include "zk/errors.hpp"
#include "zk/profile.hpp"

using namespace zk;
using zk::test::lab;
using zk::test::rel;

namespace {

// Independent shooting for Q(0): Bulirsch-Stoer on the radial ODE, bisection on
// the initial height until the bracket is 1e-13 wide.
double oracle_q0() {
    namespace odeint = boost::numeric::odeint;
    using S = std::array<double, 2>;
    auto rhs = [](const S& s, S& d, double r) {
        d[0] = s[1];
        d[1] = s[0] - s[0] * s[0] - s[1] / r;
    };
    // +1: overshoots through zero, -1: turns back up before reaching zero
    auto shoot = [&](double a) {
        const double r0 = 1e-4;
        S s{a + 0.25 * (a - a * a) * r0 * r0, 0.5 * (a - a * a) * r0};
        odeint::bulirsch_stoer<S> bs(1e-14, 1e-14);
        double r = r0, dr = 1e-3;
        while (r < 40.0) {
            if (bs.try_step(rhs, s, r, dr) != odeint::success) continue;
            if (s[0] < 0.0) return +1;
            if (s[1] > 0.0) return -1;
        }
        return 0;
    };
    double lo = 1.5, hi = 4.0;
    REQUIRE(shoot(lo) == -1);
    REQUIRE(shoot(hi) == +1);
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        const int s = shoot(mid);
        if (s == 0) return mid;
        (s > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// K0 from its integral representation, for the tail oracle.
double k0_quadrature(double r) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([r](double t) { return std::exp(-r * std::cosh(t)); }, 1e-14);
}

}  // namespace

TEST_SUITE("ground_state") {
    TEST_CASE("profile invariants") {
        const RadialProfile& p = lab().profile();
        CHECK(p.dq.front() == 0.0);
        CHECK(p.eval(0.0, 1) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(p.q.back() < 1e-10 * p.q0());
        bool positive = true, decreasing = true;
        for (std::size_t i = 1; i + 1 < p.q.size(); ++i) {
            positive = positive && p.q[i] > 0.0;
            decreasing = decreasing && p.q[i + 1] < p.q[i] && p.dq[i] < 0.0;
        }
        CHECK(positive);
        CHECK(decreasing);
        CHECK(profile_residual(p) <= p.residual_tol);
    }

    TEST_CASE("Q(0) against independent shooting") {
        const double q0 = oracle_q0();
        CHECK(rel(lab().profile().q0(), q0) < 1e-9);
    }

    TEST_CASE("tail continuation matches kappa K0 from quadrature") {
        const RadialProfile& p = lab().profile();
        for (double dr : {0.5, 2.0, 5.0}) {
            const double r = p.r_max + dr;
            CHECK(rel(p.eval(r), p.tail.kappa_match * k0_quadrature(r)) < 1e-2);
        }
        // continuity across r_max
        CHECK(rel(p.eval(p.r_max - 1e-9), p.eval(p.r_max + 1e-9)) < 1e-6);
    }

    TEST_CASE("tail consistency over the fit window") {
        const RadialProfile& p = lab().profile();
        const KappaEstimate k = estimate_kappa(p);
        for (double r = p.r_max - 5.0; r <= p.r_max; r += 0.25)
            CHECK(std::abs(p.eval(r) / bessel_k0(r) - k.kappa) <= 1e-3 * k.kappa);
    }

    TEST_CASE("interpolated value survives a finer re-solve") {
        const RadialProfile& p = lab().profile();
        const RadialProfile fine = solve_ground_state(1e-8, 30.0, 0.5 * p.h);
        CHECK(rel(p.eval(5.0), fine.eval(5.0)) < 1e-7);
        CHECK(rel(p.eval(2.3, 1), fine.eval(2.3, 1)) < 1e-7);
    }

    TEST_CASE("identities of the constants") {
        const GroundStateConstants& c = lab().constants();
        CHECK(std::abs(c.int_q2 - c.int_q) / c.int_q < 1e-6);
        CHECK(std::abs(c.lam_q_q / c.int_q - 0.5) < 1e-6);
        CHECK(c.dxinv_dyq_dyq < 0.0);
        CHECK(c.c_q > 0.0);
        CHECK(c.bessel_q_q > 0.0);
        CHECK(c.kappa > 0.0);
        // integrating g d_x^{-1} g along each row leaves -(1/2)(int g dx)^2
        CHECK(rel(-c.dxinv_dyq_dyq, c.c_q) < 1e-6);
    }

    TEST_CASE("int Q against a composite Simpson oracle at double resolution") {
        const RadialProfile& p = lab().profile();
        const double h = 0.5 * p.h;
        const int n = static_cast<int>(std::lround(p.r_max / h));
        double s = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double r = i * h;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s += w * p.eval(r) * r;
        }
        const double oracle = 2.0 * M_PI * s * h / 3.0;
        CHECK(rel(lab().constants().int_q, oracle) < 1e-8);
    }

    TEST_CASE("cache round trip") {
        const RadialProfile& p = lab().profile();
        const auto path = std::filesystem::temp_directory_path() / "zk_test_profile.txt";
        save_profile(p, path.string());
        const RadialProfile back = load_profile(path.string());
        std::filesystem::remove(path);
        CHECK(back.q.size() == p.q.size());
        CHECK(back.q0() == p.q0());
        CHECK(back.eval(7.3) == doctest::Approx(p.eval(7.3)).epsilon(1e-15));
    }

    TEST_CASE("preconditions") {
        CHECK_THROWS_AS(solve_ground_state(1e-5, 30.0), std::invalid_argument);
        CHECK_THROWS_AS(solve_ground_state(1e-8, 10.0), std::invalid_argument);
    }
}
