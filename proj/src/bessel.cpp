#include "zk/bessel.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "zk/profile.hpp"

namespace zk {

namespace {

// Above this radius the asymptotic series is cheaper and still at round-off.
constexpr double kSeriesRadius = 25.0;

// int_0^inf (+-cosh t)^d exp(-r cosh t) dt by the trapezoidal rule, which is
// spectrally accurate for this doubly-decaying even integrand.
double k0_trapezoid(double r, int deriv) {
    const double t_end = std::acosh(1.0 + 60.0 / r);
    int n = static_cast<int>(std::ceil(t_end / 0.04));
    if (n < 64) n = 64;
    const double h = t_end / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double c = std::cosh(i * h);
        double f = std::exp(-r * c);
        if (deriv == 1) f *= -c;
        if (deriv == 2) f *= c * c;
        sum += (i == 0) ? 0.5 * f : f;
    }
    return h * sum;
}

double series_term(double r, int l, int deriv) {
    const double p = l + 0.5;
    double f = lk_coefficient(l) * std::exp(-r) * std::pow(r, -p);
    if (deriv == 1) f *= -(1.0 + p / r);
    if (deriv == 2) f *= (1.0 + p / r) * (1.0 + p / r) + p / (r * r);
    return f;
}

double k0_asymptotic(double r, int deriv) {
    double sum = 0.0;
    double prev = INFINITY;
    for (int l = 0; l < 80; ++l) {
        const double t = series_term(r, l, deriv);
        if (std::abs(t) > std::abs(prev)) break;  // optimal truncation
        sum += t;
        if (std::abs(t) < 1e-18 * std::abs(sum)) break;
        prev = t;
    }
    return sum;
}

// generalized binomial coefficient
double binom(double alpha, int n) {
    double c = 1.0;
    for (int i = 0; i < n; ++i) c *= (alpha - i) / (i + 1);
    return c;
}

// Bivariate polynomial in (X, Y^2), keyed by (power of X, power of Y^2).
using Poly = std::map<std::pair<int, int>, double>;

Poly poly_mul(const Poly& a, const Poly& b, int max_weight) {
    Poly out;
    for (const auto& [ka, va] : a) {
        for (const auto& [kb, vb] : b) {
            const int m = ka.first + kb.first;
            const int j = ka.second + kb.second;
            if (m + 2 * j > max_weight) continue;
            out[{m, j}] += va * vb;
        }
    }
    return out;
}

}  // namespace

double bessel_i0(double r) {
    const double q = 0.25 * r * r;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 400; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double bessel_i1(double r) {
    const double q = 0.25 * r * r;
    double term = 0.5 * r;
    double sum = term;
    for (int k = 1; k < 400; ++k) {
        term *= q / (static_cast<double>(k) * (k + 1));
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_k0(double r, int deriv) {
    if (!(r > 0.0)) throw std::domain_error("bessel_k0: r must be positive");
    if (deriv < 0 || deriv > 2) throw std::invalid_argument("bessel_k0: deriv must be 0, 1 or 2");
    if (r >= kSeriesRadius) return k0_asymptotic(r, deriv);
    return k0_trapezoid(r, deriv);
}

double lk_coefficient(int l) {
    if (l < 0) throw std::invalid_argument("lk_coefficient: negative order");
    double c = std::sqrt(std::numbers::pi / 2.0);
    for (int j = 1; j <= l; ++j) {
        const double odd = 2.0 * j - 1.0;
        c *= -odd * odd / (8.0 * j);
    }
    return c;
}

double lk_series(double r, int k, int deriv) {
    if (!(r > 0.0)) throw std::domain_error("lk_series: r must be positive");
    if (deriv < 0 || deriv > 2) throw std::invalid_argument("lk_series: deriv must be 0, 1 or 2");
    for (int l = 1; l <= k; ++l) {
        if (std::abs(lk_coefficient(l)) / std::pow(r, l) >
            std::abs(lk_coefficient(l - 1)) / std::pow(r, l - 1)) {
            throw std::domain_error("lk_series: order " + std::to_string(k) +
                                    " is past optimal truncation at r=" + std::to_string(r));
        }
    }
    double sum = 0.0;
    for (int l = 0; l <= k; ++l) sum += series_term(r, l, deriv);
    return sum;
}

KappaEstimate estimate_kappa_window(const RadialProfile& p, double r_lo, double r_hi) {
    if (r_hi > p.r_max + 1e-12 || r_lo < 1.0 || r_hi <= r_lo)
        throw std::invalid_argument("estimate_kappa: bad window");
    KappaEstimate est;
    est.r_lo = r_lo;
    est.r_hi = r_hi;
    std::vector<double> ratios;
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        const double r = p.nodes[i];
        if (r < r_lo - 1e-12 || r > r_hi + 1e-12) continue;
        ratios.push_back(p.q[i] / bessel_k0(r));
    }
    if (ratios.empty()) throw std::invalid_argument("estimate_kappa: empty window");
    double s = 0.0;
    for (double v : ratios) s += v;
    est.kappa = s / ratios.size();
    for (double v : ratios) est.max_deviation = std::max(est.max_deviation, std::abs(v - est.kappa));
    if (!(est.kappa > 0.0) || est.max_deviation > 1e-2 * est.kappa)
        throw std::runtime_error("estimate_kappa: window instability, deviation " +
                                 std::to_string(est.max_deviation));
    return est;
}

KappaEstimate estimate_kappa(const RadialProfile& p, double width) {
    return estimate_kappa_window(p, p.r_max - width, p.r_max);
}

double SeriesCoefficients::eval_pq(int q, double x, double y) const {
    double s = 0.0;
    for (const auto& t : pq) {
        if (t.q != q) continue;
        s += t.coef * std::pow(x, t.px) * std::pow(y, t.py);
    }
    return s;
}

SeriesCoefficients pq_coefficients(int q_max) {
    if (q_max < 0 || q_max > 3)
        throw std::invalid_argument("pq_coefficients: supported orders are 0..3");
    const int W = q_max;
    SeriesCoefficients sc;
    sc.q_max = q_max;
    for (int l = 0; l <= W; ++l) sc.a.push_back(lk_coefficient(l));

    // b[l][s][t]: r^{-(1/2+l)} written in X = x/z, Y = y/z.
    // |x + (z,0)|^{-(1/2+l)} = z^{-(1/2+l)} (1+X)^{-(1/2+l)} (1 + Y^2/(1+X)^2)^{-(1/2+l)/2}
    auto b = [&](int l, int s, int t) {
        const double e = 0.5 + l;
        return sc.a[l] * binom(-0.5 * e, t) * binom(-e - 2.0 * t, s);
    };

    // A(X,Y) = sum_j Y^{2j} sum_m c_{j+1,m} X^m with c_{j,m} = binom(1/2,j) binom(-2j,m)
    Poly A;
    for (int j = 0; 2 * j <= W; ++j)
        for (int m = 0; m + 2 * j <= W; ++m)
            A[{m, j}] = binom(0.5, j + 1) * binom(-2.0 * (j + 1), m);

    // d[p] = (-1)^p / p! (1+X)^p A^p, truncated at weight W
    std::vector<Poly> d(W + 1);
    Poly one_plus_x{{{0, 0}, 1.0}, {{1, 0}, 1.0}};
    Poly power{{{0, 0}, 1.0}};
    double fact = 1.0;
    for (int p = 0; p <= W; ++p) {
        if (p > 0) {
            power = poly_mul(poly_mul(power, one_plus_x, W), A, W);
            fact *= p;
        }
        Poly dp;
        const double sign = (p % 2 == 0) ? 1.0 : -1.0;
        for (const auto& [k, v] : power) dp[k] = sign * v / fact;
        d[p] = dp;
    }

    std::map<std::tuple<int, int, int>, double> acc;
    for (int l = 0; l <= W; ++l)
        for (int s = 0; l + s <= W; ++s)
            for (int t = 0; l + s + 2 * t <= W; ++t)
                for (int p = 0; l + s + 2 * t + p <= W; ++p)
                    for (const auto& [k, v] : d[p]) {
                        const int m = k.first;
                        const int j = k.second;
                        const int q = l + s + 2 * t + 2 * j + m + p;
                        if (q > W) continue;
                        acc[{q, s + m, 2 * (t + j + p)}] += b(l, s, t) * v;
                    }
    for (const auto& [k, v] : acc) {
        if (v == 0.0) continue;
        sc.pq.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
    }
    return sc;
}

double q_translated_expansion(double x, double y, double z, int n, const SeriesCoefficients& sc,
                              double kappa) {
    if (!(z > 4.0)) throw std::domain_error("q_translated_expansion: z must exceed 4");
    if (std::hypot(x, y) >= std::sqrt(z))
        throw std::domain_error("q_translated_expansion: |x| must stay below z^(1/2)");
    if (n < 0 || n > sc.q_max) throw std::domain_error("q_translated_expansion: order above table");
    double s = sc.a[0];
    for (int q = 1; q <= n; ++q) s += sc.eval_pq(q, x, y) / std::pow(z, q);
    return kappa * std::exp(-z - x) / std::sqrt(z) * s;
}

}  // namespace zk
