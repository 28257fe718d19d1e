#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "support.hpp"
#include "zk/errors.hpp"
#include "zk/field.hpp"

using namespace zk;
using zk::test::lab;
using zk::test::rel;

namespace {

const Grid2D& box() {
    static const Grid2D g = Grid2D::make(28.0, 28.0, 256, 256);
    return g;
}

Field2D from_fn(const Grid2D& g, auto f) {
    Field2D out(g);
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < g.Ny; ++j) out(i, j) = f(g.x(i), g.y(j));
    return out;
}

double max_diff(const Field2D& a, const Field2D& b) { return (a - b).max_abs(); }

}  // namespace

TEST_SUITE("spectral_core") {
    TEST_CASE("grid layout") {
        const Grid2D& g = box();
        CHECK(g.dx() == doctest::Approx(56.0 / 256));
        CHECK(g.x(0) == -28.0);
        CHECK_THROWS_AS(Grid2D::make(10.0, 10.0, 100, 64), ConfigError);
        CHECK_THROWS_AS(Grid2D::make(-1.0, 10.0, 64, 64), ConfigError);
    }

    TEST_CASE("single Fourier mode derivative") {
        const Grid2D g = Grid2D::make(8.0, 4.0, 64, 32);
        const double k = M_PI / g.Lx;
        const Field2D f = from_fn(g, [&](double x, double) { return std::sin(k * x); });
        const Field2D want = from_fn(g, [&](double x, double) { return k * std::cos(k * x); });
        CHECK(max_diff(derivative(f, Axis::x, 1), want) < 1e-12);
        const Field2D want2 = from_fn(g, [&](double x, double) { return -k * k * std::sin(k * x); });
        CHECK(max_diff(derivative(f, Axis::x, 2), want2) < 1e-12);
    }

    TEST_CASE("derivative composition and antisymmetry of d_x Q") {
        const Field2D q = place_profile(lab().profile(), box(), 0.0, 0.0);
        const Field2D dx = derivative(q, Axis::x, 1);
        CHECK(max_diff(derivative(dx, Axis::x, 1), derivative(q, Axis::x, 2)) < 1e-10);
        const Grid2D& g = box();
        double worst = 0.0;
        for (int i = 1; i < g.Nx; ++i)
            for (int j = 0; j < g.Ny; ++j) worst = std::max(worst, std::abs(dx(i, j) + dx(g.Nx - i, j)));
        CHECK(worst < 1e-10);
    }

    TEST_CASE("spectral round trip") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> n;
        Field2D f(box());
        for (auto& v : f.v) v = n(rng);
        CHECK(max_diff(inverse(forward(f), box()), f) <= 1e-13 * f.max_abs() * 10);
    }

    TEST_CASE("Bessel potential inverts the Helmholtz operator") {
        const Field2D q = place_profile(lab().profile(), box(), 1.5, -2.0);
        CHECK(max_diff(bessel_potential(helmholtz(q)), q) < 1e-12);
    }

    TEST_CASE("ground-state relation through the Bessel potential") {
        const Field2D q = place_profile(lab().profile(), box(), 0.0, 0.0);
        CHECK(max_diff(bessel_potential(q * q), q) < 1e-8);
    }

    TEST_CASE("Bessel potential preserves parity in y") {
        const Field2D q = place_profile(lab().profile(), box(), 1.3, 0.0);
        const Field2D f = from_fn(box(), [](double x, double) { return x; }) * q;
        const Field2D b = bessel_potential(f);
        const Grid2D& g = box();
        double worst = 0.0;
        for (int i = 0; i < g.Nx; ++i)
            for (int j = 1; j < g.Ny; ++j) worst = std::max(worst, std::abs(b(i, j) - b(i, g.Ny - j)));
        CHECK(worst < 1e-15 * 100);
    }

    TEST_CASE("antiderivative undoes d_x with the right sign") {
        const Field2D g = place_profile(lab().profile(), box(), 0.5, 1.0);
        const Field2D f = derivative(g, Axis::x, 1);
        CHECK(max_diff(antiderivative_x(f), -1.0 * g) < 1e-9);
    }

    TEST_CASE("W has a nonzero plateau on the left and vanishes on the right") {
        const Field2D lq = place_profile(lab().profile(), box(), 0.0, 0.0, 1.0, ProfileKind::Lambda);
        const Field2D w = antiderivative_x(bessel_potential(lq));
        const Grid2D& g = box();
        const int j0 = g.Ny / 2;
        CHECK(std::abs(w(g.Nx - 1, j0)) < 1e-8);
        CHECK(std::abs(w(0, j0)) > 0.1);
        // the left limit is the full row integral
        double row = 0.0;
        const Field2D b = bessel_potential(lq);
        for (int i = 0; i < g.Nx; ++i) row += b(i, j0) * g.dx();
        CHECK(rel(w(0, j0), row) < 1e-8);
    }

    TEST_CASE("antiderivative commutes with the Bessel potential") {
        const Field2D f = derivative(place_profile(lab().profile(), box(), 1.0, 0.5), Axis::x, 1);
        const Field2D a = antiderivative_x(bessel_potential(f));
        const Field2D b = bessel_potential(antiderivative_x(f));
        CHECK(max_diff(a, b) < 1e-8);
    }

    TEST_CASE("antiderivative refuses non-decaying input") {
        const Field2D f(box(), 1.0);
        CHECK_THROWS_AS(antiderivative_x(f), NonDecayingError);
    }

    TEST_CASE("inner products and norms") {
        const Field2D q = place_profile(lab().profile(), box(), 0.0, 0.0);
        const Field2D dx = derivative(q, Axis::x, 1), dy = derivative(q, Axis::y, 1);
        CHECK(std::abs(inner_product(q, dx)) < 1e-10);
        const Norms n = norms(q);
        CHECK(n.l2 * n.l2 == doctest::Approx(inner_product(q, q)).epsilon(1e-15));
        CHECK(n.h1 * n.h1 == doctest::Approx(inner_product(q, q) + inner_product(dx, dx) + inner_product(dy, dy))
                                 .epsilon(1e-12));
        // <d_x^{-1} d_y Q, d_y Q> with d_x^{-1} = -antiderivative_x
        const double v = inner_product(-1.0 * antiderivative_x(dy), dy);
        CHECK(v < 0.0);
        CHECK(rel(-v, lab().constants().c_q) < 1e-6);
        const Field2D other(Grid2D::make(28.0, 28.0, 128, 128));
        CHECK_THROWS_AS(inner_product(q, other), GridMismatchError);
    }

    TEST_CASE("restricted H1 norm") {
        const Field2D q = place_profile(lab().profile(), box(), 0.0, 0.0);
        CHECK(restricted_h1(q, -100.0) == doctest::Approx(h1_norm(q)).epsilon(1e-12));
        CHECK(restricted_h1(q, 100.0) == 0.0);
        double prev = h1_norm(q) * (1 + 1e-12);
        for (double x = -20.0; x <= 20.0; x += 1.0) {
            const double r = restricted_h1(q, x);
            CHECK(r <= prev);
            prev = r;
        }
    }

    TEST_CASE("profile placement") {
        const RadialProfile& p = lab().profile();
        const Field2D q = place_profile(p, box(), 0.0, 0.0);
        CHECK(q.max_abs() == doctest::Approx(p.q0()).epsilon(1e-14));
        const Field2D qc = place_profile(p, box(), 0.0, 0.0, 1.2);
        CHECK(inner_product(qc, qc) / inner_product(q, q) == doctest::Approx(1.2).epsilon(1e-6));
        const Field2D lq = place_profile(p, box(), 0.0, 0.0, 1.0, ProfileKind::Lambda);
        double int_q = 0.0;
        for (double v : q.v) int_q += v;
        int_q *= box().dx() * box().dy();
        CHECK(inner_product(lq, q) / int_q == doctest::Approx(0.5).epsilon(1e-6));
        CHECK_THROWS_AS(place_profile(p, Grid2D::make(10.0, 10.0, 64, 64), 0.0, 0.0), BoxTooSmallError);
        CHECK_FALSE(placement_fits(p, box(), 10.0, 0.0, 1.0));
    }

    TEST_CASE("placed derivatives agree with spectral ones") {
        const RadialProfile& p = lab().profile();
        const Field2D q = place_profile(p, box(), 0.3, -0.2, 1.1);
        CHECK(max_diff(place_profile(p, box(), 0.3, -0.2, 1.1, ProfileKind::Dx), derivative(q, Axis::x, 1)) < 1e-8);
        CHECK(max_diff(place_profile(p, box(), 0.3, -0.2, 1.1, ProfileKind::Dy), derivative(q, Axis::y, 1)) < 1e-8);
        // Lambda is d/dc of c Q(sqrt(c) x)
        const double h = 1e-5;
        const Field2D fd = (1.0 / (2 * h)) * (place_profile(p, box(), 0.3, -0.2, 1.1 + h) -
                                              place_profile(p, box(), 0.3, -0.2, 1.1 - h));
        CHECK(max_diff(place_profile(p, box(), 0.3, -0.2, 1.1, ProfileKind::Lambda), fd) < 1e-7);
    }

    TEST_CASE("translation and sampling") {
        const RadialProfile& p = lab().profile();
        const Field2D q = place_profile(p, box(), 0.0, 0.0);
        CHECK(max_diff(shift(q, 0.7, -1.1), place_profile(p, box(), 0.7, -1.1)) < 1e-9);
        CHECK(sample_at(q, box().x(130), box().y(120)) == doctest::Approx(q(130, 120)).epsilon(1e-12));
        CHECK(sample_at(q, 1.234, -0.5) == doctest::Approx(p.eval(std::hypot(1.234, 0.5))).epsilon(1e-9));
    }

    TEST_CASE("snapshot round trip") {
        const Field2D q = place_profile(lab().profile(), box(), 0.0, 0.0);
        const auto base = (std::filesystem::temp_directory_path() / "zk_test_field").string();
        save_field(q, base, 3.25);
        double t = 0.0;
        const Field2D back = load_field(base, &t);
        std::filesystem::remove(base + ".bin");
        std::filesystem::remove(base + ".meta");
        CHECK(t == 3.25);
        CHECK(back.grid == q.grid);
        CHECK(back.v == q.v);
    }
}
