#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "zk/errors.hpp"
#include "zk/linearized.hpp"

using namespace zk;
using zk::test::lab;
using zk::test::rel;

namespace {

const Grid2D& box() {
    static const Grid2D g = Grid2D::make(24.0, 24.0, 256, 256);
    return g;
}

const Field2D& qfield() {
    static const Field2D q = place_profile(lab().profile(), box(), 0.0, 0.0);
    return q;
}

const EigenPair& ground_pair() {
    static const EigenPair e = negative_eigenpair(qfield(), 1e-10);
    return e;
}

// sum of a few Gaussian bumps near the origin
Field2D bumps(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Field2D f(box());
    for (int b = 0; b < 4; ++b) {
        const double x0 = u(rng), y0 = u(rng), a = u(rng);
        for (int i = 0; i < box().Nx; ++i)
            for (int j = 0; j < box().Ny; ++j) {
                const double dx = box().x(i) - x0, dy = box().y(j) - y0;
                f(i, j) += a * std::exp(-0.5 * (dx * dx + dy * dy));
            }
    }
    return f;
}

}  // namespace

TEST_SUITE("linearized_spectrum") {
    TEST_CASE("kernel and the scaling direction") {
        const Field2D& q = qfield();
        const Field2D dxq = derivative(q, Axis::x, 1), dyq = derivative(q, Axis::y, 1);
        CHECK(l2_norm(apply_L(dxq, q)) <= 1e-8 * l2_norm(dxq));
        CHECK(l2_norm(apply_L(dyq, q)) <= 1e-8 * l2_norm(dxq));
        const Field2D lq = place_profile(lab().profile(), box(), 0.0, 0.0, 1.0, ProfileKind::Lambda);
        CHECK(l2_norm(apply_L(lq, q) + q) <= 1e-6 * l2_norm(q));
        CHECK(apply_L(Field2D(box()), q).max_abs() == 0.0);
    }

    TEST_CASE("self-adjointness") {
        const Field2D& q = qfield();
        const Field2D f = bumps(1), g = bumps(2);
        const double a = inner_product(apply_L(f, q), g), b = inner_product(f, apply_L(g, q));
        CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), l2_norm(f) * l2_norm(g)));
    }

    TEST_CASE("negative eigenpair") {
        const EigenPair& e = ground_pair();
        CHECK(e.lambda0 > 0.0);
        CHECK(e.residual <= 1e-8);
        CHECK(l2_norm(apply_L(e.chi0, qfield()) + e.lambda0 * e.chi0) <= 1e-8);
        CHECK(l2_norm(e.chi0) == doctest::Approx(1.0).epsilon(1e-12));
        // positive where it is above round-off
        double worst = 0.0;
        for (double v : e.chi0.v) worst = std::min(worst, v);
        CHECK(worst >= -1e-14 * e.chi0.max_abs());
        CHECK(angular_variance(e.chi0, 0.0, 0.0, {0.5, 1.0, 2.0, 3.0, 4.0, 6.0}) <= 1e-6);
        const TailRatio tr = chi0_tail_ratio(e, 0.0, 0.0, 6.0, 12.0);
        MESSAGE("lambda0 = " << e.lambda0 << ", kappa0 = " << tr.mean << " (spread " << tr.spread << ")");
        CHECK(tr.spread <= 0.01);
        CHECK_THROWS_AS(negative_eigenpair(qfield(), 1e-6), std::invalid_argument);
    }

    TEST_CASE("eigenvalue under grid refinement") {
        const Grid2D coarse = Grid2D::make(24.0, 24.0, 128, 128);
        const EigenPair c = negative_eigenpair(place_profile(lab().profile(), coarse, 0.0, 0.0), 1e-10);
        CHECK(rel(c.lambda0, ground_pair().lambda0) <= 1e-4);
    }

    TEST_CASE("constrained inversion") {
        const Field2D& q = qfield();
        const Field2D lq = place_profile(lab().profile(), box(), 0.0, 0.0, 1.0, ProfileKind::Lambda);
        const SolveReport s = solve_L(-1.0 * q, q);
        CHECK(l2_norm(s.f - lq) <= 1e-5 * l2_norm(lq));
        // radial in, radial out
        const Field2D h = q * q - 0.3 * q;
        const SolveReport r = solve_L(h, q);
        CHECK(angular_variance(r.f, 0.0, 0.0, {0.5, 1.0, 2.0, 3.0, 4.0}) <= 1e-6);
        CHECK(l2_norm(apply_L(r.f, q) - h) <= 1e-8 * l2_norm(h));
        CHECK(solve_L(Field2D(box()), q).f.max_abs() == 0.0);
        CHECK_THROWS_AS(solve_L(derivative(q, Axis::x, 1), q), IllPosedError);
    }

    TEST_CASE("sampled coercivity and its controls") {
        const Field2D& q = qfield();
        const CoercivityReport c = coercivity_sample(q, 100, 3);
        MESSAGE("min Rayleigh quotient " << c.min_quotient);
        CHECK(c.n_samples == 100);
        CHECK(c.min_quotient > 0.0);
        CHECK(rayleigh_quotient(ground_pair().chi0, q) == doctest::Approx(-ground_pair().lambda0).epsilon(1e-8));
        CHECK(std::abs(rayleigh_quotient(derivative(q, Axis::x, 1), q)) < 1e-8);
        CHECK_THROWS_AS(coercivity_sample(q, 10), std::invalid_argument);
    }
}
