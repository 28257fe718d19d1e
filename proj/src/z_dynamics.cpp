#include "zk/z_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "zk/errors.hpp"

namespace zk {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;
using Stepper = odeint::runge_kutta_fehlberg78<State>;

}  // namespace

std::string to_string(OrbitClass c) {
    switch (c) {
        case OrbitClass::fixed_point: return "fixed-point";
        case OrbitClass::separatrix: return "separatrix";
        case OrbitClass::turning_point: return "turning-point";
        case OrbitClass::crossing: return "crossing";
    }
    return "?";
}

ZDynamics::ZDynamics(InteractionModel model, double lam_q_q, double q3)
    : model_(std::move(model)), lam_q_q_(lam_q_q), q3_(q3) {
    z_hi_ = model_.table().z_max();
}

double ZDynamics::F(double z) const {
    z = std::abs(z);
    if (z <= z_hi_) return model_.F(z);
    return model_.F(z_hi_) * std::sqrt(z_hi_ / z) * std::exp(-(z - z_hi_));
}

double ZDynamics::G(double z) const {
    const double s = z < 0.0 ? -1.0 : 1.0;
    z = std::abs(z);
    if (z <= z_hi_) return s * model_.G(z);
    return s * F(z) * (1.0 + 0.5 / z);
}

double ZDynamics::hamiltonian(double y0, double y1, double nu) const {
    return 0.5 * y1 * y1 + 2.0 * (1.0 + nu) / lam_q_q_ * F(y0);
}

double ZDynamics::mu0_from_z0(double z0) const { return std::sqrt(F(z0) / lam_q_q_); }

double ZDynamics::z0_from_mu0(double mu0) const {
    const double target = lam_q_q_ * mu0 * mu0;
    if (!(mu0 > 0.0) || target >= F(0.0))
        throw std::domain_error("z0_from_mu0: mu0 above the separatrix threshold");
    double lo = 0.0, hi = 1.0;
    while (F(hi) > target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ZTrajectory ZDynamics::integrate(double z0, double t_end, double tol) const {
    if (z0 < 5.0) throw std::domain_error("integrate: Z0 must be >= 5");
    if (!(tol > 0.0) || tol > 1e-9) throw std::invalid_argument("integrate: tol must be <= 1e-9");
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
    ZTrajectory tr;
    tr.Z0 = z0;
    tr.mu0 = mu0_from_z0(z0);
    tr.h0 = hamiltonian(z0, 0.0);
    tr.tol = tol;
    tr.t_end = t_end;

    auto rhs = [this](const State& s, State& d, double) {
        d[0] = s[1];
        d[1] = accel(s[0]);
    };
    const int n_out = static_cast<int>(std::ceil(t_end / std::min(0.05, t_end / 200.0)));
    std::vector<double> times(n_out + 1);
    for (int k = 0; k <= n_out; ++k) times[k] = t_end * k / n_out;
    std::vector<ZSample> fwd;
    State s{z0, 0.0};
    odeint::integrate_times(odeint::make_controlled(tol * 1e-3, tol, Stepper()), rhs, s, times.begin(),
                            times.end(), 1e-3, [&](const State& st, double t) {
                                fwd.push_back({t, st[0], st[1], hamiltonian(st[0], st[1])});
                            });
    for (auto it = fwd.rbegin(); it != fwd.rend(); ++it)
        if (it->t > 0.0) tr.samples.push_back({-it->t, it->Z, -it->Zdot, it->H});
    tr.samples.insert(tr.samples.end(), fwd.begin(), fwd.end());
    for (const auto& smp : tr.samples)
        tr.max_drift = std::max(tr.max_drift, std::abs(smp.H - tr.h0) / tr.h0);
    return tr;
}

ZSample ZDynamics::state_at(const ZTrajectory& traj, double t) const {
    const double at = std::abs(t);
    // samples for t >= 0 start at index n_neg
    const std::size_t n_neg = (traj.samples.size() - 1) / 2;
    const double step = traj.samples[n_neg + 1].t;
    std::size_t k = static_cast<std::size_t>(std::floor(at / step));
    k = std::min(k, traj.samples.size() - 1 - n_neg);
    const ZSample& base = traj.samples[n_neg + k];
    State s{base.Z, base.Zdot};
    if (at > base.t) {
        auto rhs = [this](const State& st, State& d, double) {
            d[0] = st[1];
            d[1] = accel(st[0]);
        };
        odeint::integrate_adaptive(odeint::make_controlled(traj.tol * 1e-3, traj.tol, Stepper()), rhs,
                                   s, base.t, at, std::min(1e-2, at - base.t));
    }
    const double sg = t < 0.0 ? -1.0 : 1.0;
    return {t, s[0], sg * s[1], hamiltonian(s[0], s[1])};
}

double ZDynamics::time_at_level(const ZTrajectory& traj, double level) const {
    if (level <= traj.Z0) return 0.0;
    double lo = 0.0, hi = std::max(traj.t_end, 1.0);
    while (state_at(traj, hi).Z < level) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8) throw HypothesisError("time_at_level: level not reached");
    }
    // narrow with the stored samples first
    for (const auto& s : traj.samples) {
        if (s.t < 0.0 || s.t > hi) continue;
        if (s.Z < level) lo = std::max(lo, s.t);
        else hi = std::min(hi, s.t);
    }
    auto f = [&](double t) { return state_at(traj, t).Z - level; };
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(
        f, lo, hi, [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, b); },
        iters);
    return 0.5 * (r.first + r.second);
}

AsymptoteFit ZDynamics::asymptote(ZTrajectory& traj) const {
    const double mu0 = traj.mu0;
    const ZSample& last = traj.samples.back();
    if (F(last.Z) > 1e-12 * mu0 * mu0)
        throw HypothesisError("asymptote: trajectory too short, F(Z(t_end)) above 1e-12 mu0^2");
    AsymptoteFit fit;
    std::vector<const ZSample*> tail;
    for (const auto& s : traj.samples)
        if (s.t >= 0.0 && F(s.Z) <= 1e-6 * mu0 * mu0) tail.push_back(&s);
    fit.window_start = tail.front()->t;
    double st = 0, sz = 0, stt = 0, stz = 0;
    const double n = static_cast<double>(tail.size());
    for (const ZSample* s : tail) {
        st += s->t;
        sz += s->Z;
        stt += s->t * s->t;
        stz += s->t * s->Z;
    }
    fit.slope = (n * stz - st * sz) / (n * stt - st * st);
    fit.slope_rel_error = std::abs(fit.slope - 2.0 * mu0) / (2.0 * mu0);
    // Z - 2 mu0 t decreases to l; what is left past t_end is bounded by
    // int_{t_end}^inf (2 mu0 - Zdot) dt, which the F-condition makes negligible
    fit.intercept = last.Z - 2.0 * mu0 * last.t;
    traj.l_offset = fit.intercept;
    // decay rate from the log of Z - 2 mu0 t - l on the part above round-off
    double a = 0, b = 0, c = 0, d = 0;
    int m = 0;
    for (const auto& s : traj.samples) {
        if (s.t <= 0.0) continue;
        const double g = s.Z - 2.0 * mu0 * s.t - fit.intercept;
        if (g < 1e-9 * std::max(1.0, std::abs(fit.intercept)) || g > 1e-2) continue;
        const double y = std::log(g);
        a += s.t;
        b += y;
        c += s.t * s.t;
        d += s.t * y;
        ++m;
    }
    if (m >= 2) fit.decay_rate = -(m * d - a * b) / (m * c - a * a);
    return fit;
}

CharacteristicTimes ZDynamics::characteristic_times(const ZTrajectory& traj, double rho, double eta,
                                                    double M) const {
    if (!(rho > 0.0 && rho < 1.0 / 32.0)) throw std::invalid_argument("characteristic_times: need 0 < rho < 1/32");
    if (!(M > 10.0)) throw std::invalid_argument("characteristic_times: need M > 10");
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("characteristic_times: need 0 < eta < 1");
    CharacteristicTimes ct;
    const double z0 = traj.Z0, mu0 = traj.mu0;
    ct.T1 = time_at_level(traj, z0 / rho);
    ct.T2 = time_at_level(traj, z0 + eta * eta);
    // level Z with Z^{-1/2} e^{-Z} = target: the left side is decreasing
    auto level_for = [&](double target) -> std::optional<double> {
        double lo = 1e-3, hi = 1.0;
        if (std::exp(-lo) / std::sqrt(lo) < target) return std::nullopt;
        while (std::exp(-hi) / std::sqrt(hi) > target) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (std::exp(-mid) / std::sqrt(mid) > target ? lo : hi) = mid;
        }
        const double zl = 0.5 * (lo + hi);
        if (zl <= z0 + eta * eta || zl >= z0 / rho) return std::nullopt;
        return zl;
    };
    if (auto l3 = level_for(mu0 * mu0 / z0)) ct.T3 = time_at_level(traj, *l3);
    if (auto l4 = level_for(mu0 * mu0 / (z0 * M))) ct.T4 = time_at_level(traj, *l4);
    ct.ordered = ct.T2 < ct.T1;
    if (ct.T3) ct.ordered = ct.ordered && ct.T2 < *ct.T3 && *ct.T3 < ct.T1;
    if (ct.T4) ct.ordered = ct.ordered && ct.T2 < *ct.T4 && *ct.T4 < ct.T1;
    return ct;
}

double ZDynamics::separatrix_level() const { return 2.0 * (2.0 / lam_q_q_) * q3_; }

OrbitClass ZDynamics::classify_orbit(double y0, double y1) const {
    const double s = separatrix_level();
    if (std::abs(y0) < 1e-12 && std::abs(y1) < 1e-12) return OrbitClass::fixed_point;
    const double two_h = 2.0 * hamiltonian(y0, y1);
    if (std::abs(two_h - s) <= 1e-10 * s) return OrbitClass::separatrix;
    return two_h < s ? OrbitClass::turning_point : OrbitClass::crossing;
}

EnvelopeReport ZDynamics::comparison_envelope(const std::vector<ZSample>& z_samples, double nu,
                                              double eps0, double h) const {
    if (z_samples.empty()) throw std::invalid_argument("comparison_envelope: no samples");
    for (std::size_t k = 0; k < z_samples.size(); ++k) {
        const auto& s = z_samples[k];
        const double lo = hamiltonian(s.Z, s.Zdot, -nu), hi = hamiltonian(s.Z, s.Zdot, nu);
        if (!(lo <= h && h <= hi))
            throw HypothesisError("comparison_envelope: H_-nu <= h <= H_+nu fails at sample " +
                                  std::to_string(k) + " (t=" + std::to_string(s.t) + ")");
    }
    const double z0 = z0_from_mu0(std::sqrt(0.5 * h));
    double t_max = 0.0;
    for (const auto& s : z_samples) t_max = std::max(t_max, std::abs(s.t));
    const ZTrajectory ref = integrate(z0, std::max(t_max, 1.0), 1e-12);
    const double d0 = std::abs(z_samples.front().Z - state_at(ref, z_samples.front().t).Z);
    if (d0 > eps0 * (1.0 + 1e-9) + 1e-12)
        throw HypothesisError("comparison_envelope: |z(t0) - Z(t0)| exceeds eps0");
    EnvelopeReport rep;
    rep.n_samples = z_samples.size();
    for (const auto& s : z_samples)
        rep.max_deviation = std::max(rep.max_deviation, std::abs(s.Z - state_at(ref, s.t).Z));
    rep.constant = (nu + eps0) > 0.0 ? rep.max_deviation / (nu + eps0) : 0.0;
    return rep;
}

}  // namespace zk
