#pragma once

#include <cstdint>
#include <vector>

#include "zk/field.hpp"

namespace zk {

struct EigenPair {
    double lambda0 = 0.0;  // L chi0 = -lambda0 chi0
    Field2D chi0;          // unit L2 norm, positive
    double residual = 0.0; // ||L chi0 + lambda0 chi0||_{L2}
    int iterations = 0;
};

// L f = -Delta f + f - 2 Q f
Field2D apply_L(const Field2D& f, const Field2D& q);

// Bottom of the spectrum through the Birman-Schwinger form
//   chi = (-Delta + 1 + lambda)^{-1} (2 Q chi),
// iterated with lambda updated from the Rayleigh quotient.
EigenPair negative_eigenpair(const Field2D& q, double tol = 1e-10, int max_iter = 2000);

struct SolveReport {
    Field2D f;
    double residual = 0.0;  // ||L f - h|| / ||h||
    int iterations = 0;
};

// L f = h with f orthogonal to d_x Q and d_y Q, by GMRES on the projected,
// Bessel-preconditioned system  P (I - (-Delta+1)^{-1} 2Q) f = P (-Delta+1)^{-1} h.
// h must be orthogonal to the kernel to within tol * ||h|| ||d Q|| (IllPosedError).
SolveReport solve_L(const Field2D& h, const Field2D& q, double tol = 1e-10, int max_iter = 400);

struct CoercivityReport {
    double min_quotient = 0.0;  // min <Lf, f> / ||f||^2 over the samples
    double max_quotient = 0.0;
    int n_samples = 0;
};

// Random smooth fields (sums of Gaussian bumps near the soliton) projected
// L2-orthogonal to d_x Q, d_y Q and Q.
CoercivityReport coercivity_sample(const Field2D& q, int n_samples, std::uint64_t seed = 1);

double rayleigh_quotient(const Field2D& f, const Field2D& q);

// chi0 along the positive x axis through the centre, divided by
// K0(sqrt(1 + lambda0) r), on grid points with r in [r_lo, r_hi].
struct TailRatio {
    double mean = 0.0, spread = 0.0;  // spread = (max - min) / mean
    std::vector<double> r, ratio;
};
TailRatio chi0_tail_ratio(const EigenPair& e, double x0, double y0, double r_lo, double r_hi);

// Angular variance on circles of the given radii about (x0, y0), relative to
// the squared ring mean; max over rings.
double angular_variance(const Field2D& f, double x0, double y0, const std::vector<double>& radii,
                        int n_angles = 32);

}  // namespace zk
