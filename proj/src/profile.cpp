#include "zk/profile.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "zk/bessel.hpp"
#include "zk/errors.hpp"

namespace zk {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;
using Stepper = odeint::runge_kutta_fehlberg78<State>;

constexpr double kOdeTol = 1e-13;
// the tail values drop to ~1e-13, so error control must be relative
constexpr double kOdeAbs = 1e-24;
constexpr double kMatchRadius = 8.0;

void radial_rhs(const State& s, State& d, double r) {
    d[0] = s[1];
    d[1] = -s[1] / r + s[0] - s[0] * s[0];
}

// Taylor start at small r; removes the 1/r term.
State series_start(double q0, double r) {
    const double c1 = 0.25 * (q0 - q0 * q0);
    const double c2 = (1.0 - 2.0 * q0) * c1 / 16.0;
    const double c3 = ((1.0 - 2.0 * q0) * c2 - c1 * c1) / 36.0;
    const double r2 = r * r;
    return {q0 + r2 * (c1 + r2 * (c2 + r2 * c3)),
            r * (2.0 * c1 + r2 * (4.0 * c2 + r2 * 6.0 * c3))};
}

// +1: orbit crosses zero (q0 too large); -1: turns back or runs away upward
// (q0 too small); 0: survived to r_end.
int classify_shot(double q0, double r_end) {
    auto stepper = odeint::make_controlled(kOdeAbs, kOdeTol, Stepper());
    double r = 0.01;
    State s = series_start(q0, r);
    double dr = 0.01;
    while (r < r_end) {
        dr = std::min(dr, r_end - r);
        if (stepper.try_step(radial_rhs, s, r, dr) != odeint::success) continue;
        if (s[0] < 0.0) return +1;
        if (s[1] > 0.0 || s[0] > 2.0 * q0) return -1;
    }
    return 0;
}

State shoot_out(double q0, double r_to) {
    State s = series_start(q0, 0.01);
    odeint::integrate_adaptive(odeint::make_controlled(kOdeAbs, kOdeTol, Stepper()), radial_rhs, s,
                               0.01, r_to, 0.01);
    return s;
}

State shoot_in(double kappa, double r_from, double r_to) {
    State s{kappa * bessel_k0(r_from), kappa * bessel_k0(r_from, 1)};
    odeint::integrate_adaptive(odeint::make_controlled(kOdeAbs, kOdeTol, Stepper()), radial_rhs, s,
                               r_from, r_to, -0.01);
    return s;
}

RadialProfile solve_on_grid(double residual_tol, double r_max, double h) {
    // bracket
    double lo = 1.5, hi = 4.0;
    if (classify_shot(lo, r_max) != -1 || classify_shot(hi, r_max) != +1)
        throw NoBracketError("solve_ground_state: no bracket in [1.5, 4]");
    for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const int c = classify_shot(mid, r_max);
        if (c == 0) {
            lo = hi = mid;
            break;
        }
        (c > 0 ? hi : lo) = mid;
    }
    double q0 = 0.5 * (lo + hi);

    // The bisected orbit leaves the profile near r ~ 15; refine by matching an
    // outward shot to an inward one launched on the K0 tail.
    const double rm = kMatchRadius;
    double kappa = shoot_out(q0, rm)[0] / bessel_k0(rm);
    auto mismatch = [&](double a, double k) {
        const State o = shoot_out(a, rm);
        const State i = shoot_in(k, r_max, rm);
        return std::array<double, 2>{o[0] - i[0], o[1] - i[1]};
    };
    for (int it = 0; it < 12; ++it) {
        const auto f = mismatch(q0, kappa);
        if (std::abs(f[0]) + std::abs(f[1]) < 1e-15) break;
        const double da = 1e-7, dk = 1e-7 * kappa;
        const auto fa = mismatch(q0 + da, kappa);
        const auto fk = mismatch(q0, kappa + dk);
        const double j00 = (fa[0] - f[0]) / da, j10 = (fa[1] - f[1]) / da;
        const double j01 = (fk[0] - f[0]) / dk, j11 = (fk[1] - f[1]) / dk;
        const double det = j00 * j11 - j01 * j10;
        const double sa = (f[0] * j11 - f[1] * j01) / det;
        const double sk = (j00 * f[1] - j10 * f[0]) / det;
        q0 -= sa;
        kappa -= sk;
        if (std::abs(sa) < 1e-15 * q0 && std::abs(sk) < 1e-15 * kappa) break;
    }

    RadialProfile p;
    p.r_max = r_max;
    p.h = h;
    p.residual_tol = residual_tol;
    const auto n = static_cast<std::size_t>(std::llround(r_max / h));
    p.nodes.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) p.nodes[i] = i * h;
    p.nodes.back() = r_max;
    p.q.assign(n + 1, 0.0);
    p.dq.assign(n + 1, 0.0);
    const auto im = static_cast<std::size_t>(std::llround(rm / h));

    // Both fills overlap on [rm - 2.5, rm + 2.5] and are blended there with a C2
    // ramp: a hard switch would turn their ~1e-13 mismatch into a 1/h^2 kink.
    const auto nb = static_cast<std::size_t>(std::llround(2.5 / h));
    const std::size_t i_lo = im - nb, i_hi = im + nb;
    std::vector<double> oq(i_hi + 1), odq(i_hi + 1);
    oq[0] = q0;
    odq[0] = 0.0;
    {
        auto stepper = odeint::make_controlled(kOdeAbs, kOdeTol, Stepper());
        State s = series_start(q0, h);
        oq[1] = s[0];
        odq[1] = s[1];
        for (std::size_t i = 2; i <= i_hi; ++i) {
            odeint::integrate_adaptive(stepper, radial_rhs, s, p.nodes[i - 1], p.nodes[i], h);
            oq[i] = s[0];
            odq[i] = s[1];
        }
    }
    {
        auto stepper = odeint::make_controlled(kOdeAbs, kOdeTol, Stepper());
        State s{kappa * bessel_k0(r_max), kappa * bessel_k0(r_max, 1)};
        p.q[n] = s[0];
        p.dq[n] = s[1];
        for (std::size_t i = n - 1; i >= i_lo; --i) {
            odeint::integrate_adaptive(stepper, radial_rhs, s, p.nodes[i + 1], p.nodes[i], -h);
            p.q[i] = s[0];
            p.dq[i] = s[1];
        }
    }
    for (std::size_t i = 0; i < i_lo; ++i) {
        p.q[i] = oq[i];
        p.dq[i] = odq[i];
    }
    const double width = p.nodes[i_hi] - p.nodes[i_lo];
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
        // w = 1 on the outward side, 0 on the inward side
        const double t = (p.nodes[i] - p.nodes[i_lo]) / width;
        const double w = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        const double dw = -30.0 * t * t * (1.0 - t) * (1.0 - t) / width;
        const double dlt = oq[i] - p.q[i];
        p.dq[i] += w * (odq[i] - p.dq[i]) + dw * dlt;
        p.q[i] += w * dlt;
    }
    p.d2q.resize(n + 1);
    p.d2q[0] = 0.5 * (q0 - q0 * q0);
    for (std::size_t i = 1; i <= n; ++i)
        p.d2q[i] = -p.dq[i] / p.nodes[i] + p.q[i] - p.q[i] * p.q[i];

    p.tail.kappa_match = kappa;
    p.tail.kappa = estimate_kappa(p).kappa;
    p.build_interpolant();
    p.max_residual = profile_residual(p);
    return p;
}

}  // namespace

void RadialProfile::build_interpolant() {
    interp_ = std::make_shared<Interp>(std::vector<double>(q), std::vector<double>(dq),
                                       std::vector<double>(d2q), 0.0, h);
}

double RadialProfile::eval(double r, int deriv) const {
    double sign = 1.0;
    if (r < 0.0) {
        r = -r;
        if (deriv == 1) sign = -1.0;
    }
    if (r > r_max) return sign * tail.kappa * bessel_k0(r, deriv);
    if (!interp_) throw std::logic_error("RadialProfile: interpolant not built");
    r = std::min(r, h * (q.size() - 1));
    switch (deriv) {
        case 0: return (*interp_)(r);
        case 1: return sign * interp_->prime(r);
        case 2: return interp_->double_prime(r);
        default: throw std::invalid_argument("RadialProfile::eval: deriv must be 0, 1 or 2");
    }
}

double RadialProfile::eval_lambda(double r) const { return eval(r) + 0.5 * r * eval(r, 1); }

double RadialProfile::eval_lambda2(double r) const {
    return 0.75 * r * eval(r, 1) + 0.25 * r * r * eval(r, 2);
}

double eval_profile(const RadialProfile& p, double r, int deriv) { return p.eval(r, deriv); }

double profile_residual(const RadialProfile& p) {
    const std::size_t n = p.q.size() - 1;
    const double h = p.h;
    // dq is odd in r, so mirror it across the origin for the central stencil.
    auto dq_at = [&](long i) { return i < 0 ? -p.dq[-i] : p.dq[i]; };
    double worst = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        double d2;
        if (i + 2 <= n) {
            const long k = static_cast<long>(i);
            d2 = (dq_at(k - 2) - 8.0 * dq_at(k - 1) + 8.0 * dq_at(k + 1) - dq_at(k + 2)) / (12.0 * h);
        } else {
            d2 = (25.0 * p.dq[i] - 48.0 * p.dq[i - 1] + 36.0 * p.dq[i - 2] - 16.0 * p.dq[i - 3] +
                  3.0 * p.dq[i - 4]) / (12.0 * h);
        }
        const double q = p.q[i];
        const double res = (i == 0) ? -2.0 * d2 + q - q * q
                                    : -d2 - p.dq[i] / p.nodes[i] + q - q * q;
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

RadialProfile solve_ground_state(double residual_tol, double r_max, double h) {
    if (!(residual_tol > 0.0) || residual_tol > 1e-6)
        throw std::invalid_argument("solve_ground_state: residual_tol must lie in (0, 1e-6]");
    if (r_max < 20.0) throw std::invalid_argument("solve_ground_state: r_max must be >= 20");
    if (h > 0.01) throw std::invalid_argument("solve_ground_state: node spacing must be <= 0.01");
    for (int refine = 0; refine <= 3; ++refine, h *= 0.5) {
        RadialProfile p = solve_on_grid(residual_tol, r_max, h);
        if (p.max_residual <= residual_tol) return p;
    }
    throw ToleranceNotMetError("solve_ground_state: residual tolerance not met after refinement");
}

void save_profile(const RadialProfile& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_profile: cannot open " + path);
    out << std::setprecision(17);
    out << "# zk-radial-profile v1\n";
    out << "r_max " << p.r_max << "\nn " << p.nodes.size() << "\nresidual_tol " << p.residual_tol
        << "\nkappa_local " << p.tail.kappa << "\nkappa_match " << p.tail.kappa_match << "\nh "
        << p.h << "\nmax_residual " << p.max_residual << "\n";
    out << "# r Q dQ d2Q\n";
    for (std::size_t i = 0; i < p.nodes.size(); ++i)
        out << p.nodes[i] << ' ' << p.q[i] << ' ' << p.dq[i] << ' ' << p.d2q[i] << '\n';
}

RadialProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_profile: cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "# zk-radial-profile v1") throw std::runtime_error("load_profile: bad header in " + path);
    RadialProfile p;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.rfind("# r", 0) == 0) break;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "r_max") ss >> p.r_max;
        else if (key == "n") ss >> n;
        else if (key == "residual_tol") ss >> p.residual_tol;
        else if (key == "kappa_local") ss >> p.tail.kappa;
        else if (key == "kappa_match") ss >> p.tail.kappa_match;
        else if (key == "h") ss >> p.h;
        else if (key == "max_residual") ss >> p.max_residual;
    }
    p.nodes.resize(n);
    p.q.resize(n);
    p.dq.resize(n);
    p.d2q.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> p.nodes[i] >> p.q[i] >> p.dq[i] >> p.d2q[i]))
            throw std::runtime_error("load_profile: truncated table in " + path);
    }
    p.build_interpolant();
    return p;
}

RadialProfile cached_ground_state(const std::string& cache_path, double residual_tol, double r_max) {
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
        try {
            RadialProfile p = load_profile(cache_path);
            if (p.r_max == r_max && p.residual_tol <= residual_tol) return p;
        } catch (const std::runtime_error&) {
        }
    }
    RadialProfile p = solve_ground_state(residual_tol, r_max);
    if (!cache_path.empty()) save_profile(p, cache_path);
    return p;
}

namespace {

using boost::math::quadrature::gauss_kronrod;

double gk(const std::function<double(double)>& f, double a, double b) {
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-12, &err);
    if (!std::isfinite(v)) throw QuadratureError("ground_state_constants: quadrature did not converge");
    return v;
}

double panels(const std::function<double(double)>& f, double a, double b) { return gk(f, a, b); }

}  // namespace

GroundStateConstants ground_state_constants(const RadialProfile& p) {
    GroundStateConstants c;
    const double R = p.r_max + 12.0;
    auto Q = [&](double r) { return p.eval(r); };
    auto dQ = [&](double r) { return p.eval(r, 1); };

    c.int_q = radial_integral(Q, R);
    c.int_q2 = radial_integral([&](double r) { return Q(r) * Q(r); }, R);
    c.q3 = radial_integral([&](double r) { return Q(r) * Q(r) * Q(r); }, R);
    c.lam_q_q = radial_integral([&](double r) { return p.eval_lambda(r) * Q(r); }, R);
    c.dxq2 = 0.5 * radial_integral([&](double r) { return dQ(r) * dQ(r); }, R);

    // <(-Delta+1)^{-1} Q, Q> with the radial Green's function
    //   u(r) = K0(r) int_0^r I0 Q s ds + I0(r) int_r^inf K0 Q s ds,
    // so <u, Q> = 2 * 2pi int_0^inf K0(r) Q(r) r (int_0^r I0 Q s ds) dr.
    {
        using S2 = std::array<double, 2>;
        auto rhs = [&](const S2& s, S2& d, double r) {
            d[0] = bessel_i0(r) * Q(r) * r;
            d[1] = bessel_k0(r) * Q(r) * r * s[0];
        };
        const double r0 = 1e-6;
        S2 s{0.5 * p.q0() * r0 * r0, 0.0};
        odeint::integrate_adaptive(
            odeint::make_controlled(1e-14, 1e-13, odeint::runge_kutta_fehlberg78<S2>()), rhs, s, r0,
            R, 0.01);
        c.bessel_q_q = 2.0 * 2.0 * std::numbers::pi * s[1];
    }

    // c_Q: A(y) = int_x d_y Q dx, even in x, odd in y.
    auto dyq = [&](double x, double y) {
        const double r = std::hypot(x, y);
        return r == 0.0 ? 0.0 : dQ(r) * y / r;
    };
    auto A = [&](double y) {
        return 2.0 * panels([&](double x) { return dyq(x, y); }, 0.0, R);
    };
    c.c_q = 0.5 * 2.0 * panels([&](double y) { return A(y) * A(y); }, 0.0, R);

    // Per row int (d_x^{-1} g) g dx = -(int g)^2 / 2, so this is -c_Q; the
    // grid antiderivative is checked against it in the tests.
    c.dxinv_dyq_dyq = -c.c_q;

    const KappaEstimate ke = estimate_kappa(p);
    c.kappa = ke.kappa;
    c.kappa_deviation = ke.max_deviation;
    // int e^{-x} Q^2 over the plane is the radial integral of I0(r) Q^2
    c.c_int = c.kappa * lk_coefficient(0) *
              radial_integral([&](double r) { return bessel_i0(r) * Q(r) * Q(r); }, R);
    return c;
}

}  // namespace zk
