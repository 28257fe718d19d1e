#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "zk/ansatz.hpp"
#include "zk/errors.hpp"

using namespace zk;
using zk::test::lab;

namespace {

const Grid2D& box() {
    static const Grid2D g = Grid2D::make(32.0, 26.0, 256, 256);
    return g;
}

ModulationState state(double z, double mu1 = 0.0, double mu2 = 0.0, double w1 = 0.0, double w2 = 0.0) {
    ModulationState s;
    s.z1 = 0.5 * z;
    s.z2 = -0.5 * z;
    s.mu1 = mu1;
    s.mu2 = mu2;
    s.w1 = w1;
    s.w2 = w2;
    return s;
}

double max_diff(const Field2D& a, const Field2D& b) { return (a - b).max_abs(); }

}  // namespace

TEST_SUITE("ansatz") {
    TEST_CASE("bundle identities") {
        const AnsatzBundle b = build_ansatz(state(10.0, 0.05, -0.03, 0.2, -0.1), box(), lab().ansatz());
        CHECK(max_diff(b.V, b.R1 + b.R2 + b.VA) < 1e-15);
        const Field2D S = 2.0 * (b.R1 * b.R2 - b.R1t * b.R2t) + 2.0 * ((b.R1 + b.R2) * b.VA) + b.VA * b.VA;
        CHECK(max_diff(b.S, S) < 1e-15);
        CHECK(max_diff(ansatz_field(state(10.0, 0.05, -0.03, 0.2, -0.1), box(), lab().ansatz()), b.V) < 1e-15);
    }

    TEST_CASE("reflection symmetries") {
        const Grid2D& g = box();
        // x -> -x needs equal scales; y -> -y holds for any speeds when w = 0
        const AnsatzBundle s = build_ansatz(state(10.0), g, lab().ansatz());
        double wx = 0.0;
        for (int i = 1; i < g.Nx; ++i)
            for (int j = 0; j < g.Ny; ++j) wx = std::max(wx, std::abs(s.V(i, j) - s.V(g.Nx - i, j)));
        CHECK(wx < 1e-8);
        const AnsatzBundle t = build_ansatz(state(10.0, 0.05, -0.05), g, lab().ansatz());
        double wy = 0.0;
        for (int i = 0; i < g.Nx; ++i)
            for (int j = 1; j < g.Ny; ++j) wy = std::max(wy, std::abs(t.V(i, j) - t.V(i, g.Ny - j)));
        CHECK(wy < 1e-12);
    }

    TEST_CASE("V_A decay with the separation") {
        double lo = 1e300, hi = 0.0, h1_first = 0.0, h1_last = 0.0;
        for (double z : {8.0, 10.0, 12.0, 14.0}) {
            const AnsatzBundle b = build_ansatz(state(z), box(), lab().ansatz());
            const double sup = b.VA.max_abs() * std::sqrt(z) * std::exp(z);
            lo = std::min(lo, sup);
            hi = std::max(hi, sup);
            const double h1 = h1_norm(b.VA) * std::exp(15.0 / 16.0 * z);
            if (z == 8.0) h1_first = h1;
            h1_last = h1;
        }
        MESSAGE("||V_A||_inf sqrt(z) e^z in [" << lo << ", " << hi << "]");
        CHECK(hi / lo < 3.0);
        CHECK(h1_last <= 1.5 * h1_first);
    }

    TEST_CASE("Sigma orthogonality") {
        for (double z : {8.0, 12.0}) {
            const SigmaReport r = sigma_orthogonality(z, box(), lab().ansatz());
            CHECK(r.max_normalized() <= 1e-6);
            // the d_y residuals vanish by parity, with or without gamma
            const SigmaReport r0 = sigma_orthogonality(z, box(), lab().ansatz(), true);
            for (int i = 0; i < 2; ++i) {
                CHECK(std::abs(r.residuals[i][1]) <= 1e-12 * r.sigma_l2[i] * r.q_h1);
                CHECK(std::abs(r0.residuals[i][1]) <= 1e-12 * r0.sigma_l2[i] * r0.q_h1);
            }
        }
    }

    TEST_CASE("V_A rate matches a finite difference") {
        const ModulationState g = state(10.0);
        const AnsatzBundle b = build_ansatz(g, box(), lab().ansatz());
        const double dz1 = 0.3, dz2 = -0.2, h = 1e-4;
        ModulationState gp = g, gm = g;
        gp.z1 += h * dz1;
        gp.z2 += h * dz2;
        gm.z1 -= h * dz1;
        gm.z2 -= h * dz2;
        const Field2D fd = (1.0 / (2 * h)) * (build_ansatz(gp, box(), lab().ansatz()).VA -
                                              build_ansatz(gm, box(), lab().ansatz()).VA);
        const Field2D an = va_rate(b, g, box(), lab().ansatz(), dz1, dz2);
        CHECK(max_diff(an, fd) <= 1e-5 * an.max_abs());
    }

    TEST_CASE("residual decomposition with free rates") {
        ModulationState g = state(10.0, 0.02, -0.02);
        const AnsatzCoefficients a = lab().coefficients().at(g.z());
        g.rates = free_rates(g, a);
        const ResidualReport r = residual_EV(g, box(), lab().ansatz());
        for (const auto& m : r.m)
            for (double v : m) CHECK(std::abs(v) <= 1e-15);
        CHECK(r.mr_l2 <= 1e-15);
        CHECK(r.defect_l2 <= 1e-6 * r.ev_l2);
    }

    TEST_CASE("residual decomposition with arbitrary rates") {
        // the defect is round-off lifted by the third derivative, so keep the
        // interaction (and with it T and S) well above that floor
        ModulationState g = state(7.0, 0.03, -0.01, 0.1, -0.05);
        g.rates = ModulationRates{0.05, -0.02, 0.01, -0.01, 1e-4, -2e-4};
        const ResidualReport r = residual_EV(g, box(), lab().ansatz());
        CHECK(r.mr_l2 > 0.0);
        CHECK(r.defect_l2 <= 1e-6 * (r.t_l2 + r.dxs_l2));
    }

    TEST_CASE("errors") {
        ModulationState g = state(10.0);
        CHECK_THROWS_AS(residual_EV(g, box(), lab().ansatz()), MissingRatesError);
        ModulationState bad = state(10.0);
        bad.z1 = -6.0;
        CHECK_THROWS_AS(build_ansatz(bad, box(), lab().ansatz()), SeparationError);
        CHECK_THROWS_AS(build_ansatz(state(3.0), box(), lab().ansatz()), SeparationError);
        CHECK_THROWS_AS(build_ansatz(state(10.0, -1.5), box(), lab().ansatz()), std::invalid_argument);
    }
}
