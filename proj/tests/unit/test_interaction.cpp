#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support.hpp"
#include "zk/errors.hpp"
#include "zk/interaction.hpp"

using namespace zk;
using zk::test::lab;
using zk::test::rel;

namespace {

// sup and spread of a normalized quantity over a z window of the lab table
struct Window {
    double lo = 1e300, hi = 0.0;
    double spread() const { return (hi - lo) / hi; }
};

Window window(const InteractionTable& t, double zlo, double zhi, bool g) {
    Window w;
    for (std::size_t i = 0; i < t.z_values.size(); ++i) {
        if (t.z_values[i] < zlo || t.z_values[i] > zhi) continue;
        const double v = g ? t.normalized_G(i) : t.normalized_F(i);
        w.lo = std::min(w.lo, v);
        w.hi = std::max(w.hi, v);
    }
    return w;
}

}  // namespace

TEST_SUITE("interaction") {
    TEST_CASE("G vanishes at zero separation") {
        CHECK(std::abs(attraction_integral(lab().profile(), 0.0)) < 1e-12);
    }

    TEST_CASE("table positivity and monotonicity") {
        const InteractionTable& t = lab().table();
        bool pos = true, dec = true;
        for (std::size_t i = 0; i < t.z_values.size(); ++i) {
            if (t.z_values[i] >= 1.0) pos = pos && t.G[i] > 0.0 && t.F[i] > 0.0;
            if (i > 0) dec = dec && t.F[i] < t.F[i - 1];
        }
        CHECK(pos);
        CHECK(dec);
    }

    TEST_CASE("dF/dz = -G and dG/dz against finite differences") {
        const RadialProfile& p = lab().profile();
        for (double z : {3.0, 8.0, 14.0}) {
            const double h = 1e-3;
            const double dF = (overlap_integral(p, z + h) - overlap_integral(p, z - h)) / (2 * h);
            const double dG = (attraction_integral(p, z + h) - attraction_integral(p, z - h)) / (2 * h);
            CHECK(rel(-dF, attraction_integral(p, z)) < 1e-6);
            CHECK(rel(attraction_derivative(p, z), dG) < 1e-6);
        }
    }

    TEST_CASE("G and F against a grid quadrature") {
        const RadialProfile& p = lab().profile();
        const Grid2D g = Grid2D::make(40.0, 32.0, 512, 256);
        const double z = 6.0;
        const Field2D q = place_profile(p, g, 3.0, 0.0);
        const Field2D qs = place_profile(p, g, 3.0 - z, 0.0);  // Q(x + z)
        const Field2D q2 = q * q;
        CHECK(rel(inner_product(qs, derivative(q2, Axis::x, 1)), attraction_integral(p, z)) < 1e-7);
        CHECK(rel(inner_product(qs, q2), overlap_integral(p, z)) < 1e-7);
    }

    TEST_CASE("normalized G and F plateau") {
        const InteractionTable& t = lab().table();
        CHECK(window(t, 15.0, 25.0, true).spread() <= 0.02);
        CHECK(window(t, 15.0, 25.0, false).spread() <= 0.02);
    }

    TEST_CASE("|G - F| z e^z stays bounded") {
        const InteractionTable& t = lab().table();
        auto sup = [&](double lo, double hi) {
            double s = 0.0;
            for (std::size_t i = 0; i < t.z_values.size(); ++i) {
                const double z = t.z_values[i];
                if (z >= lo && z <= hi) s = std::max(s, std::abs(t.G[i] - t.F[i]) * z * std::exp(z));
            }
            return s;
        };
        CHECK(sup(10.0, 25.0) <= 2.0 * sup(10.0, 15.0));
    }

    TEST_CASE("interpolating model") {
        const InteractionModel m(lab().table());
        const InteractionTable& t = m.table();
        for (std::size_t i = 4; i < t.z_values.size(); i += 17) {
            CHECK(rel(m.F(t.z_values[i]), t.F[i]) < 1e-12);
            CHECK(rel(m.G(t.z_values[i]), t.G[i]) < 1e-10);
        }
        // between nodes, against direct quadrature
        const RadialProfile& p = lab().profile();
        for (double z : {7.13, 12.61, 21.37}) {
            CHECK(rel(m.F(z), overlap_integral(p, z)) < 1e-8);
            CHECK(rel(m.G(z), attraction_integral(p, z)) < 1e-6);
        }
        CHECK_THROWS_AS(m.F(t.z_max() + 1.0), TableRangeError);
    }

    TEST_CASE("table round trip") {
        InteractionTable t = build_interaction_table(lab().profile(), 2.0, 4.0, 0.5);
        const auto path = (std::filesystem::temp_directory_path() / "zk_test_table.txt").string();
        save_interaction_table(t, path);
        const InteractionTable back = load_interaction_table(path);
        std::filesystem::remove(path);
        CHECK(back.z_values == t.z_values);
        for (std::size_t i = 0; i < t.G.size(); ++i) CHECK(back.G[i] == doctest::Approx(t.G[i]).epsilon(1e-15));
    }

    TEST_CASE("auxiliary profiles: parity and the <2QW, d_x Q> identity") {
        const RadialProfile& p = lab().profile();
        const Grid2D g = Grid2D::make(32.0, 32.0, 256, 256);
        const AuxProfiles a = auxiliary_profiles(p, g);
        const Field2D q = place_profile(p, g, 0.0, 0.0);
        const Field2D dxq = place_profile(p, g, 0.0, 0.0, 1.0, ProfileKind::Dx);
        const Field2D lq = place_profile(p, g, 0.0, 0.0, 1.0, ProfileKind::Lambda);
        CHECK(std::abs(inner_product(2.0 * (q * a.X), dxq)) < 1e-10);
        CHECK(std::abs(inner_product(2.0 * (q * a.Y), lq)) < 1e-10);
        const double half_int_q = 0.5 * lab().constants().int_q;
        CHECK(std::abs(inner_product(2.0 * (q * a.W), dxq) - half_int_q) < 1e-5 * half_int_q);
        CHECK(std::abs(lab().coefficients().w_dxq() - half_int_q) < 1e-5 * half_int_q);
        CHECK(std::isfinite(lab().coefficients().w_lambda()));
        // h is odd in y, l even
        for (int j = 1; j < g.Ny; ++j) {
            CHECK(std::abs(a.h[j] + a.h[g.Ny - j]) < 1e-12);
            CHECK(std::abs(a.l[j] - a.l[g.Ny - j]) < 1e-12);
        }
    }

    TEST_CASE("plateau between two centers") {
        const RadialProfile& p = lab().profile();
        const Grid2D g = Grid2D::make(64.0, 32.0, 512, 256);
        const double z1 = 15.0, z2 = -15.0;
        const Field2D P = plateau(p, g, z1, z2);
        const AuxProfiles a = auxiliary_profiles(p, Grid2D::make(32.0, 32.0, 256, 256));
        const double l0 = a.l[128];
        CHECK(std::abs(l0) > 0.0);
        // bounded by a single W, whatever the separation
        CHECK(P.max_abs() <= w_profile(p, g, 0.0).max_abs() * (1.0 + 1e-6));
        const int j0 = g.Ny / 2;
        for (double x : {-5.0, 0.0, 5.0}) {
            const int i = static_cast<int>(std::lround((x + g.Lx) / g.dx()));
            CHECK(std::abs(std::abs(P(i, j0)) - std::abs(l0)) < 1e-3 * std::abs(l0));
        }
    }

    TEST_CASE("coefficient symmetries and decay") {
        const CoefficientModel& cm = lab().coefficients();
        const double lam = lab().constants().lam_q_q;
        double lo = 1e300, hi = 0.0;
        for (double z = 10.0; z <= 25.0; z += 2.5) {
            const AnsatzCoefficients c = cm.at(z);
            CHECK(c.alpha2 == c.alpha1);
            CHECK(c.beta1 == 0.0);
            CHECK(c.beta2 == 0.0);
            CHECK(c.gamma1 + c.gamma2 == 0.0);
            CHECK(rel(std::abs(c.gamma1), attraction_integral(lab().profile(), z) / lam) < 1e-12);
            const double v = std::abs(c.gamma1) * std::sqrt(z) * std::exp(z);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            CHECK(std::isfinite(c.alpha1));
        }
        CHECK(hi / lo < 1.1);
        CHECK_THROWS_AS(cm.at(4.0), SeparationError);
    }

    TEST_CASE("product decay spot check") {
        // sup_x |d^j Q(x + z) d^k Q(x)| sqrt(z) e^z for |j|, |k| <= 1, along the axis
        const RadialProfile& p = lab().profile();
        auto sup = [&](double z) {
            double s = 0.0;
            for (double x = -z - 2.0; x <= 2.0; x += 0.01)
                for (int j = 0; j <= 1; ++j)
                    for (int k = 0; k <= 1; ++k)
                        s = std::max(s, std::abs(p.eval(std::abs(x + z), j) * p.eval(std::abs(x), k)));
            return s * std::sqrt(z) * std::exp(z);
        };
        CHECK(sup(20.0) <= 2.0 * sup(10.0));
    }
}
