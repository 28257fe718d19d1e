#pragma once

#include <memory>
#include <string>
#include <vector>

#include "zk/detail/quintic_hermite.hpp"

namespace zk {

// Continuation of the table past r_max by kappa * K0(r).
struct TailModel {
    double kappa = 0.0;        // window-mean of Q/K0 on [r_max-5, r_max]
    double kappa_match = 0.0;  // constant used to launch the inward shot at r_max
};

struct RadialProfile {
    double r_max = 0.0;
    double h = 0.0;
    double residual_tol = 0.0;
    double max_residual = 0.0;   // measured radial-ODE residual over the nodes
    std::vector<double> nodes;
    std::vector<double> q, dq, d2q;
    TailModel tail;

    double q0() const { return q.front(); }
    double eval(double r, int deriv = 0) const;
    // (1 + r/2 d/dr) Q and r/2 d/dr (1 + r/2 d/dr) Q
    double eval_lambda(double r) const;
    double eval_lambda2(double r) const;

    void build_interpolant();

private:
    using Interp = detail::UniformQuinticHermite;
    std::shared_ptr<Interp> interp_;
};

RadialProfile solve_ground_state(double residual_tol, double r_max, double h = 0.01);
double eval_profile(const RadialProfile& p, double r, int deriv);

// max over nodes of |-Q'' - Q'/r + Q - Q^2| with Q'' taken from a 4th-order
// difference of the stored Q' (not from the ODE itself)
double profile_residual(const RadialProfile& p);

void save_profile(const RadialProfile& p, const std::string& path);
RadialProfile load_profile(const std::string& path);

// Solve, or reuse a cached table when the file exists and matches (r_max, tol).
RadialProfile cached_ground_state(const std::string& cache_path, double residual_tol = 1e-8,
                                  double r_max = 30.0);

struct GroundStateConstants {
    double int_q = 0.0;          // int Q
    double int_q2 = 0.0;         // int Q^2
    double lam_q_q = 0.0;        // <Lambda Q, Q>
    double q3 = 0.0;             // int Q^3
    double dxq2 = 0.0;           // int (d_x Q)^2
    double dxinv_dyq_dyq = 0.0;  // <d_x^{-1} d_y Q, d_y Q>
    double bessel_q_q = 0.0;     // <(-Delta+1)^{-1} Q, Q>
    double c_q = 0.0;            // 1/2 int_y (int_x d_y Q dx)^2 dy
    double kappa = 0.0;
    double kappa_deviation = 0.0;
    double c_int = 0.0;          // kappa a_0 int e^{-x} Q^2
};

GroundStateConstants ground_state_constants(const RadialProfile& p);

// 2 pi int_0^R f(r) r dr, adaptive Gauss-Kronrod
template <class F>
double radial_integral(F&& f, double R);

}  // namespace zk

#include "zk/detail/radial_integral.hpp"
