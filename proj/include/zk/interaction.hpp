#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "zk/detail/quintic_hermite.hpp"

#include "zk/field.hpp"
#include "zk/profile.hpp"

namespace zk {

// Radial function tabulated with two derivatives on a uniform grid, zero past r_end.
class RadialTable {
public:
    RadialTable() = default;
    RadialTable(double h, std::vector<double> u, std::vector<double> du, std::vector<double> d2u);
    double eval(double r, int deriv = 0) const;
    double r_end() const { return h_ * (n_ - 1); }

private:
    using Interp = detail::UniformQuinticHermite;
    double h_ = 0.0;
    std::size_t n_ = 0;
    std::shared_ptr<Interp> interp_;
};

// (-Delta+1)^{-1} f for radial f, through the Green's function
//   u(r) = K0(r) int_0^r I0 f s ds + I0(r) int_r^inf K0 f s ds.
RadialTable radial_bessel_potential(const std::function<double(double)>& f, double r_end,
                                    double h = 0.01);

// int over the plane of f(r, cos theta) Q(|x + (z,0)|)-type integrands, in polar
// coordinates about the origin; inner(r, theta) is the full integrand without
// the Jacobian r.
double polar_integral(const std::function<double(double, double)>& inner, double r_end,
                      double tol = 1e-11);

double attraction_integral(const RadialProfile& p, double z);       // G(z) = int Q(x+z,y) d_x(Q^2)
double overlap_integral(const RadialProfile& p, double z);          // F(z) = int Q(x+z,y) Q^2
double attraction_derivative(const RadialProfile& p, double z);     // G'(z)

struct InteractionTable {
    std::vector<double> z_values, G, F, dG;

    double normalized_G(std::size_t i) const;  // G sqrt(z) e^z
    double normalized_F(std::size_t i) const;
    double z_min() const { return z_values.front(); }
    double z_max() const { return z_values.back(); }
};

InteractionTable build_interaction_table(const RadialProfile& p, double z_min, double z_max,
                                         double step);
void save_interaction_table(const InteractionTable& t, const std::string& path);
InteractionTable load_interaction_table(const std::string& path);

// Smooth interpolation of F and G over a table. ln F is interpolated by quintic
// Hermite with derivatives -G/F and -G'/F - (G/F)^2, and G is then read off as
// -F d(ln F)/dz, so that dF/dz = -G holds exactly for the interpolant.
class InteractionModel {
public:
    explicit InteractionModel(InteractionTable table);
    double F(double z) const;
    double G(double z) const;
    const InteractionTable& table() const { return table_; }

private:
    using Interp = detail::UniformQuinticHermite;
    InteractionTable table_;
    std::shared_ptr<Interp> lnf_;
    void check_range(double z) const;
};

// Shapes living on a grid, centered at the origin with unit scale:
//   X = -(-Delta+1)^{-1} Q,  Y = -d_x^{-1}(-Delta+1)^{-1} d_y Q,  W = -d_x^{-1}(-Delta+1)^{-1} Lambda Q
// and the row limits h(y), l(y) of Y and W as x -> -inf.
struct AuxProfiles {
    Field2D X, Y, W;
    std::vector<double> h, l;  // indexed by grid row j
};

AuxProfiles auxiliary_profiles(const RadialProfile& p, const Grid2D& g);

// W translated to (xc, 0): -d_x^{-1}(-Delta+1)^{-1} Lambda Q(. - (xc, 0))
Field2D w_profile(const RadialProfile& p, const Grid2D& g, double xc);
// P = W_1 - W_2 for centers (z1, 0), (z2, 0)
Field2D plateau(const RadialProfile& p, const Grid2D& g, double z1, double z2);

struct AnsatzCoefficients {
    double z = 0.0;
    double alpha1 = 0.0, alpha2 = 0.0;
    double beta1 = 0.0, beta2 = 0.0;
    double gamma1 = 0.0, gamma2 = 0.0;
};

// Everything the coefficient formulas need that does not depend on z.
class CoefficientModel {
public:
    // grid is the dedicated box used for <2QW, Lambda Q>
    CoefficientModel(const RadialProfile& p, const GroundStateConstants& gc, double z_star = 5.0);

    AnsatzCoefficients at(double z) const;
    // centered differences, step 1e-3
    double dalpha(double z) const;
    double dgamma(double z) const;

    double lam_q_q() const { return lam_q_q_; }
    double c() const { return c_; }
    double w_lambda() const { return w_lambda_; }  // <2QW, Lambda Q>
    double w_dxq() const { return w_dxq_; }        // <2QW, d_x Q>
    double z_star() const { return z_star_; }
    double phi(double r) const;                   // 2Q (-Delta+1)^{-1}(2Q Lambda Q)
    double cross_integral(double z) const;         // <2Q (-Delta+1)^{-1}(2Q Q(.+z)), Lambda Q>

private:
    const RadialProfile* p_;
    double lam_q_q_ = 0.0, c_ = 0.0, w_lambda_ = 0.0, w_dxq_ = 0.0, z_star_ = 5.0;
    RadialTable bl_;  // (-Delta+1)^{-1}(2Q Lambda Q)
};

}  // namespace zk
