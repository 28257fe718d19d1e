#include "zk/ansatz.hpp"

#include <algorithm>
#include <cmath>

#include "zk/errors.hpp"

namespace zk {

ModulationState ModulationState::unpack(const std::array<double, 6>& a) {
    ModulationState g;
    g.z1 = a[0];
    g.z2 = a[1];
    g.w1 = a[2];
    g.w2 = a[3];
    g.mu1 = a[4];
    g.mu2 = a[5];
    return g;
}

void ModulationState::validate() const {
    if (!(z() > 0.0)) throw SeparationError("modulation state: need z1 > z2");
    if (!(1.0 + mu1 > 0.0 && 1.0 + mu2 > 0.0))
        throw std::invalid_argument("modulation state: need 1 + mu_i > 0");
}

namespace {

void check_ctx(const AnsatzContext& ctx) {
    if (!ctx.profile || !ctx.coeffs) throw std::invalid_argument("ansatz: incomplete context");
}

Field2D placed(const AnsatzContext& ctx, const Grid2D& g, double x0, double y0, double c,
               ProfileKind k = ProfileKind::Q) {
    return place_profile(*ctx.profile, g, x0, y0, c, k);
}

// d_x(Delta f - f + f^2) is split by the caller; this is d_x(Delta f - f)
Field2D linear_flux(const Field2D& f) { return derivative(laplacian(f) - f, Axis::x, 1); }

}  // namespace

AnsatzBundle build_ansatz(const ModulationState& g, const Grid2D& grid, const AnsatzContext& ctx) {
    check_ctx(ctx);
    g.validate();
    AnsatzBundle b;
    b.coefficients = ctx.coeffs->at(g.z());
    const auto& a = b.coefficients;
    b.R1 = placed(ctx, grid, g.z1, g.w1, 1.0 + g.mu1);
    b.R2 = placed(ctx, grid, g.z2, g.w2, 1.0 + g.mu2);
    b.R1t = placed(ctx, grid, g.z1, 0.0, 1.0);
    b.R2t = placed(ctx, grid, g.z2, 0.0, 1.0);
    b.F = bessel_potential(2.0 * (b.R1t * b.R2t));
    b.X1 = -1.0 * bessel_potential(b.R1t);
    b.X2 = -1.0 * bessel_potential(b.R2t);
    b.W1 = w_profile(*ctx.profile, grid, g.z1);
    b.W2 = w_profile(*ctx.profile, grid, g.z2);
    // beta = 0, so no Y terms
    b.VA = b.F;
    b.VA.axpy(a.alpha1, b.X1).axpy(a.alpha2, b.X2);
    b.VA.axpy(a.gamma1, b.W1).axpy(a.gamma2, b.W2);
    b.V = b.R1 + b.R2 + b.VA;
    const Field2D rsum = b.R1 + b.R2;
    b.S = 2.0 * (b.R1 * b.R2 - b.R1t * b.R2t) + 2.0 * (rsum * b.VA) + b.VA * b.VA;
    return b;
}

Field2D ansatz_field(const ModulationState& g, const Grid2D& grid, const AnsatzContext& ctx) {
    check_ctx(ctx);
    g.validate();
    const auto a = ctx.coeffs->at(g.z());
    const Field2D r1t = placed(ctx, grid, g.z1, 0.0, 1.0);
    const Field2D r2t = placed(ctx, grid, g.z2, 0.0, 1.0);
    // F + alpha (X1 + X2) in a single Bessel potential
    Field2D src = 2.0 * (r1t * r2t);
    src.axpy(-a.alpha1, r1t).axpy(-a.alpha2, r2t);
    Field2D v = bessel_potential(src);
    v.axpy(a.gamma1, w_profile(*ctx.profile, grid, g.z1));
    v.axpy(a.gamma2, w_profile(*ctx.profile, grid, g.z2));
    v += placed(ctx, grid, g.z1, g.w1, 1.0 + g.mu1);
    v += placed(ctx, grid, g.z2, g.w2, 1.0 + g.mu2);
    return v;
}

double SigmaReport::max_normalized() const {
    double m = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 3; ++k)
            m = std::max(m, std::abs(residuals[i][k]) / (sigma_l2[i] * q_h1));
    return m;
}

SigmaReport sigma_orthogonality(double z, const Grid2D& grid, const AnsatzContext& ctx,
                                bool zero_gamma) {
    check_ctx(ctx);
    SigmaReport rep;
    rep.coefficients = ctx.coeffs->at(z);
    const auto& a = rep.coefficients;
    const double g1 = zero_gamma ? 0.0 : a.gamma1, g2 = zero_gamma ? 0.0 : a.gamma2;
    const double z1 = 0.5 * z, z2 = -0.5 * z;
    const Field2D r1 = placed(ctx, grid, z1, 0.0, 1.0);
    const Field2D r2 = placed(ctx, grid, z2, 0.0, 1.0);
    const Field2D F = bessel_potential(2.0 * (r1 * r2));

    Field2D va1 = F;
    va1.axpy(-a.alpha1, bessel_potential(r1)).axpy(g1, w_profile(*ctx.profile, grid, z1));
    Field2D va2 = F;
    va2.axpy(-a.alpha2, bessel_potential(r2)).axpy(g2, w_profile(*ctx.profile, grid, z2));
    // p_1 . n(y): the row limit l(y) of W_1, constant in x
    const Field2D w0 = w_profile(*ctx.profile, grid, 0.0);
    Field2D lrow(grid);
    for (int i = 0; i < grid.Nx; ++i)
        for (int j = 0; j < grid.Ny; ++j) lrow(i, j) = w0(0, j);
    va2.axpy(g1, lrow);

    const Field2D sig[2] = {2.0 * (r1 * va1), 2.0 * (r2 * va2)};
    const double zc[2] = {z1, z2};
    for (int i = 0; i < 2; ++i) {
        const Field2D dirs[3] = {placed(ctx, grid, zc[i], 0.0, 1.0, ProfileKind::Dx),
                                 placed(ctx, grid, zc[i], 0.0, 1.0, ProfileKind::Dy),
                                 placed(ctx, grid, zc[i], 0.0, 1.0, ProfileKind::Lambda)};
        for (int k = 0; k < 3; ++k) rep.residuals[i][k] = inner_product(sig[i], dirs[k]);
        rep.sigma_l2[i] = l2_norm(sig[i]);
    }
    rep.q_h1 = h1_norm(placed(ctx, grid, 0.0, 0.0, 1.0));
    return rep;
}

ModulationRates free_rates(const ModulationState& g, const AnsatzCoefficients& a) {
    ModulationRates r;
    r.dz1 = g.mu1 + a.alpha1;
    r.dz2 = g.mu2 + a.alpha2;
    r.dw1 = r.dw2 = 0.0;
    r.dmu1 = -a.gamma1;
    r.dmu2 = -a.gamma2;
    return r;
}

Field2D va_rate(const AnsatzBundle& b, const ModulationState& g, const Grid2D& grid,
                const AnsatzContext& ctx, double dz1, double dz2) {
    check_ctx(ctx);
    const auto& a = b.coefficients;
    const double zdot = dz1 - dz2;
    const double da = ctx.coeffs->dalpha(g.z()), dg = ctx.coeffs->dgamma(g.z());
    const Field2D dx1 = placed(ctx, grid, g.z1, 0.0, 1.0, ProfileKind::Dx);
    const Field2D dx2 = placed(ctx, grid, g.z2, 0.0, 1.0, ProfileKind::Dx);
    // the tilde profiles see z_i only
    Field2D src = -2.0 * dz1 * (dx1 * b.R2t) - 2.0 * dz2 * (b.R1t * dx2);
    // d_x X_i = -(-Delta+1)^{-1} d_x R~_i,  d_x W_i = -(-Delta+1)^{-1} Lambda R~_i
    src.axpy(a.alpha1 * dz1, dx1).axpy(a.alpha2 * dz2, dx2);
    if (a.gamma1 * dz1 != 0.0) src.axpy(a.gamma1 * dz1, placed(ctx, grid, g.z1, 0.0, 1.0, ProfileKind::Lambda));
    if (a.gamma2 * dz2 != 0.0) src.axpy(a.gamma2 * dz2, placed(ctx, grid, g.z2, 0.0, 1.0, ProfileKind::Lambda));
    Field2D out = bessel_potential(src);
    out.axpy(da * zdot, b.X1 + b.X2);
    out.axpy(dg * zdot, b.W1 - b.W2);
    return out;
}

ResidualReport residual_EV(const ModulationState& g, const Grid2D& grid, const AnsatzContext& ctx) {
    if (!g.rates) throw MissingRatesError("residual_EV: modulation state carries no rates");
    const ModulationRates& r = *g.rates;
    const AnsatzBundle b = build_ansatz(g, grid, ctx);
    const auto& a = b.coefficients;

    const double zs[2] = {g.z1, g.z2}, ws[2] = {g.w1, g.w2}, cs[2] = {1.0 + g.mu1, 1.0 + g.mu2};
    const double dz[2] = {r.dz1, r.dz2}, dw[2] = {r.dw1, r.dw2}, dmu[2] = {r.dmu1, r.dmu2};
    const double mus[2] = {g.mu1, g.mu2};
    const double alpha[2] = {a.alpha1, a.alpha2}, beta[2] = {a.beta1, a.beta2},
                 gamma[2] = {a.gamma1, a.gamma2};

    std::array<std::array<Field2D, 3>, 2> MR, MRt;
    for (int i = 0; i < 2; ++i) {
        MR[i] = {placed(ctx, grid, zs[i], ws[i], cs[i], ProfileKind::Dx),
                 placed(ctx, grid, zs[i], ws[i], cs[i], ProfileKind::Dy),
                 placed(ctx, grid, zs[i], ws[i], cs[i], ProfileKind::Lambda)};
        MRt[i] = {placed(ctx, grid, zs[i], 0.0, 1.0, ProfileKind::Dx),
                  placed(ctx, grid, zs[i], 0.0, 1.0, ProfileKind::Dy),
                  placed(ctx, grid, zs[i], 0.0, 1.0, ProfileKind::Lambda)};
    }

    const Field2D dVA = va_rate(b, g, grid, ctx, r.dz1, r.dz2);

    Field2D dV = dVA;
    for (int i = 0; i < 2; ++i) {
        dV.axpy(-dz[i], MR[i][0]).axpy(-dw[i], MR[i][1]).axpy(dmu[i], MR[i][2]);
    }

    ResidualReport rep;
    rep.EV = dV + linear_flux(b.V) + derivative(b.V * b.V, Axis::x, 1);

    rep.MR = Field2D(grid);
    rep.T = dVA;
    for (int i = 0; i < 2; ++i) {
        rep.m[i] = {-dz[i] + mus[i] + alpha[i], -dw[i] + beta[i], dmu[i] + gamma[i]};
        const double p[3] = {alpha[i], beta[i], gamma[i]};
        for (int k = 0; k < 3; ++k) {
            rep.MR.axpy(rep.m[i][k], MR[i][k]);
            rep.T.axpy(p[k], MRt[i][k] - MR[i][k]);
        }
    }
    rep.dxS = derivative(b.S, Axis::x, 1);
    const Field2D defect = rep.EV - rep.MR - rep.T - rep.dxS;
    rep.ev_l2 = l2_norm(rep.EV);
    rep.mr_l2 = l2_norm(rep.MR);
    rep.dxs_l2 = l2_norm(rep.dxS);
    rep.t_l2 = l2_norm(rep.T);
    rep.t_h1 = h1_norm(rep.T);
    rep.defect_l2 = l2_norm(defect);
    return rep;
}

}  // namespace zk
