#pragma once

#include <vector>

namespace zk {

struct RadialProfile;

// K0 and its first two derivatives, r > 0.
double bessel_k0(double r, int deriv = 0);

// I0 by its (positive-term) power series; used for radial Green's functions.
double bessel_i0(double r);
double bessel_i1(double r);  // = I0'

// Coefficient a_l of the large-r series of K0.
double lk_coefficient(int l);

// Truncated series e^{-r} r^{-1/2} sum_{l<=k} a_l r^{-l} and derivatives.
// Refuses orders past the optimal truncation at r.
double lk_series(double r, int k, int deriv = 0);

struct KappaEstimate {
    double kappa = 0.0;
    double max_deviation = 0.0;  // max |Q/K0 - kappa| over the window
    double r_lo = 0.0;
    double r_hi = 0.0;
};

// Mean of Q/K0 over [r_max - width, r_max].
KappaEstimate estimate_kappa(const RadialProfile& p, double width = 5.0);
KappaEstimate estimate_kappa_window(const RadialProfile& p, double r_lo, double r_hi);

struct PqTerm {
    int q = 0;
    int px = 0;  // power of x
    int py = 0;  // power of y
    double coef = 0.0;
};

struct SeriesCoefficients {
    int q_max = 0;
    std::vector<double> a;     // a_0..a_K
    std::vector<PqTerm> pq;    // sparse monomials of P_0..P_qmax

    double eval_pq(int q, double x, double y) const;
};

SeriesCoefficients pq_coefficients(int q_max);

// kappa e^{-z} z^{-1/2} e^{-x} (a_0 + sum_{q=1..n} P_q(x,y) z^{-q})
double q_translated_expansion(double x, double y, double z, int n,
                              const SeriesCoefficients& sc, double kappa);

}  // namespace zk
