#pragma once

#include <array>
#include <optional>

#include "zk/field.hpp"
#include "zk/interaction.hpp"
#include "zk/profile.hpp"

namespace zk {

// Time derivatives of the six geometric parameters.
struct ModulationRates {
    double dz1 = 0.0, dz2 = 0.0, dw1 = 0.0, dw2 = 0.0, dmu1 = 0.0, dmu2 = 0.0;
};

// Gamma: x-centers z_i, y-centers w_i, speed offsets mu_i (soliton scale 1 + mu_i).
struct ModulationState {
    double z1 = 0.0, z2 = 0.0, w1 = 0.0, w2 = 0.0, mu1 = 0.0, mu2 = 0.0;
    std::optional<ModulationRates> rates;

    double z() const { return z1 - z2; }
    // packed as (z1, z2, w1, w2, mu1, mu2)
    std::array<double, 6> packed() const { return {z1, z2, w1, w2, mu1, mu2}; }
    static ModulationState unpack(const std::array<double, 6>& a);
    void validate() const;  // z > 0, 1 + mu_i > 0
};

struct AnsatzBundle {
    Field2D V, R1, R2, VA;
    Field2D R1t, R2t;  // unit-scale copies on the y = 0 axis
    Field2D F;         // (-Delta+1)^{-1}(2 R1t R2t)
    Field2D X1, X2, W1, W2;
    Field2D S;
    AnsatzCoefficients coefficients;
};

// Everything needed to assemble V for a given grid.
struct AnsatzContext {
    const RadialProfile* profile = nullptr;
    const CoefficientModel* coeffs = nullptr;
};

AnsatzBundle build_ansatz(const ModulationState& g, const Grid2D& grid, const AnsatzContext& ctx);
// V alone, without the intermediate fields
Field2D ansatz_field(const ModulationState& g, const Grid2D& grid, const AnsatzContext& ctx);

struct SigmaReport {
    // residuals[i][k] = <Sigma_i, M_k R~_i> for k = d_x, d_y, Lambda
    std::array<std::array<double, 3>, 2> residuals{};
    std::array<double, 2> sigma_l2{};
    double q_h1 = 0.0;
    AnsatzCoefficients coefficients;
    double max_normalized() const;  // max |residual| / (||Sigma_i|| ||Q||_{H1})
};

// Sigma_1 = 2 R~_1 V_{A,1}, Sigma_2 = 2 R~_2 V_{A,2} at z1 = z/2, z2 = -z/2.
// With zero_gamma the gamma terms are left out (the d_y residual must vanish anyway).
SigmaReport sigma_orthogonality(double z, const Grid2D& grid, const AnsatzContext& ctx,
                                bool zero_gamma = false);

// d/dt V_A when z_1, z_2 move at rates dz1, dz2 (V_A does not see w_i or mu_i).
Field2D va_rate(const AnsatzBundle& b, const ModulationState& g, const Grid2D& grid,
                const AnsatzContext& ctx, double dz1, double dz2);

struct ResidualReport {
    Field2D EV, T, dxS, MR;  // MR = sum_i m_i . MR_i
    std::array<std::array<double, 3>, 2> m{};
    double ev_l2 = 0.0, mr_l2 = 0.0, dxs_l2 = 0.0, t_l2 = 0.0, t_h1 = 0.0;
    double defect_l2 = 0.0;  // ||EV - MR - T - d_x S||
};

// E(V) = d_t V + d_x(Delta V - V + V^2) with d_t V from the chain rule through Gamma.
// Throws MissingRatesError when g carries no rates.
ResidualReport residual_EV(const ModulationState& g, const Grid2D& grid, const AnsatzContext& ctx);

// Rates for which every m_i vanishes: dz_i = mu_i + alpha_i, dw_i = 0, dmu_i = -gamma_i.
ModulationRates free_rates(const ModulationState& g, const AnsatzCoefficients& a);

}  // namespace zk
