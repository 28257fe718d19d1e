#include "zk/evolution.hpp"

#include <cmath>
#include <numbers>

#include "zk/errors.hpp"

namespace zk {

void EvolutionConfig::validate(const Grid2D& g) const {
    if (!(dt != 0.0) || !std::isfinite(dt)) throw ConfigError("evolution: dt must be nonzero");
    if (!(t_end >= 0.0)) throw ConfigError("evolution: t_end must be >= 0");
    if (snapshot_every < 0) throw ConfigError("evolution: snapshot_every must be >= 0");
    if (!(cfl_guard > 0.0)) throw ConfigError("evolution: cfl_guard must be positive");
    // the nonlinear multiplier is masked to the 2/3 band when dealiasing
    const double kmax = (dealias ? 2.0 / 3.0 : 1.0) * std::numbers::pi / g.dx();
    if (std::abs(dt) * kmax * cfl_guard > 2.0 * std::sqrt(2.0))
        throw ConfigError("evolution: dt too large for the nonlinear stage at this resolution");
}

Invariants invariants_of(const Field2D& v) {
    const Grid2D& g = v.grid;
    const double cell = g.dx() * g.dy();
    Invariants inv;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (double x : v.v) {
        s1 += x;
        s2 += x * x;
        s3 += x * x * x;
    }
    inv.mean = s1 * cell;
    inv.mass = s2 * cell;
    const Field2D vx = derivative(v, Axis::x, 1), vy = derivative(v, Axis::y, 1);
    const double grad = inner_product(vx, vx) + inner_product(vy, vy);
    inv.energy_original = 0.5 * grad - s3 * cell / 3.0;
    inv.energy = inv.energy_original + 0.5 * inv.mass;
    return inv;
}

Evolver::Evolver(const Field2D& v0, double dt, bool dealias, double cfl_guard, Scheme scheme)
    : grid_(v0.grid), scheme_(scheme), dt_(dt), guard_(cfl_guard), dealias_(dealias), state_(forward(v0)) {
    init();
}

Evolver::Evolver(const Spectrum& state, const Grid2D& g, double dt, bool dealias, double cfl_guard,
                 Scheme scheme)
    : grid_(g), scheme_(scheme), dt_(dt), guard_(cfl_guard), dealias_(dealias), state_(state) {
    if (state_.size() != g.spec_size()) throw GridMismatchError("Evolver: spectrum does not match grid");
    init();
}

void Evolver::init() {
    const Grid2D& g = grid_;
    const double dt = dt_;
    const bool dealias = dealias_;
    const int nyh = g.Ny / 2 + 1;
    const std::size_t n = g.spec_size();
    e_full_.resize(n);
    e_half_.resize(n);
    nl_mult_.resize(n);
    lin_.resize(n);
    mask_.assign(n, 1);
    const double kxc = (2.0 / 3.0) * std::numbers::pi / g.dx(), kyc = (2.0 / 3.0) * std::numbers::pi / g.dy();
    for (int i = 0; i < g.Nx; ++i) {
        const bool nyq = i == g.Nx / 2;
        const double kx = nyq ? 0.0 : g.kx(i);
        for (int j = 0; j < nyh; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * nyh + j;
            const double ky = g.ky(j);
            const double w = kx * (1.0 + g.kx(i) * g.kx(i) + ky * ky);
            lin_[k] = std::complex<double>(0.0, w);
            e_full_[k] = std::polar(1.0, w * dt);
            e_half_[k] = std::polar(1.0, 0.5 * w * dt);
            if (dealias && (std::abs(g.kx(i)) > kxc || std::abs(ky) > kyc)) mask_[k] = 0;
            nl_mult_[k] = mask_[k] ? std::complex<double>(0.0, -kx) : 0.0;
        }
    }
    if (dealias)
        for (std::size_t k = 0; k < n; ++k)
            if (!mask_[k]) state_[k] = 0.0;
    if (scheme_ == Scheme::etdrk4) {
        // phi-function weights by the contour mean over the full unit circle about
        // z = L dt, which avoids cancellation for small |z|
        constexpr int M = 32;
        std::vector<std::complex<double>> roots(M);
        for (int m = 0; m < M; ++m) roots[m] = std::polar(1.0, 2.0 * std::numbers::pi * (m + 0.5) / M);
        q_.resize(n);
        f1_.resize(n);
        f2_.resize(n);
        f3_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<double> sq = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (int m = 0; m < M; ++m) {
                const std::complex<double> z = lin_[k] * dt + roots[m];
                const std::complex<double> ez = std::exp(z), ez2 = std::exp(0.5 * z), z3 = z * z * z;
                sq += (ez2 - 1.0) / z;
                s1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                s2 += (2.0 + z + ez * (z - 2.0)) / z3;
                s3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            q_[k] = dt * sq / double(M);
            f1_[k] = dt * s1 / double(M);
            f2_[k] = dt * s2 / double(M);
            f3_[k] = dt * s3 / double(M);
        }
    }
}

Spectrum Evolver::nonlinear(const Spectrum& s) const {
    Spectrum m = s;
    if (dealias_)
        for (std::size_t k = 0; k < m.size(); ++k)
            if (!mask_[k]) m[k] = 0.0;
    Field2D v = inverse(m, grid_);
    for (double& x : v.v) x *= x;
    Spectrum out = forward(v);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= nl_mult_[k];
    return out;
}

void Evolver::step() {
    if (scheme_ == Scheme::etdrk4) step_etd();
    else step_lawson();
    t_ += dt_;
}

void Evolver::step_etd() {
    const std::size_t n = state_.size();
    const Spectrum& v = state_;
    const Spectrum nv = nonlinear(v);
    Spectrum a(n), b(n), c(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = e_half_[k] * v[k] + q_[k] * nv[k];
    const Spectrum na = nonlinear(a);
    for (std::size_t k = 0; k < n; ++k) b[k] = e_half_[k] * v[k] + q_[k] * na[k];
    const Spectrum nb = nonlinear(b);
    for (std::size_t k = 0; k < n; ++k) c[k] = e_half_[k] * a[k] + q_[k] * (2.0 * nb[k] - nv[k]);
    const Spectrum nc = nonlinear(c);
    for (std::size_t k = 0; k < n; ++k)
        state_[k] = e_full_[k] * v[k] + f1_[k] * nv[k] + 2.0 * f2_[k] * (na[k] + nb[k]) + f3_[k] * nc[k];
}

void Evolver::step_lawson() {
    const std::size_t n = state_.size();
    const Spectrum& v = state_;
    const Spectrum k1 = nonlinear(v);
    Spectrum a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = e_half_[k] * (v[k] + 0.5 * dt_ * k1[k]);
    const Spectrum k2 = nonlinear(a);
    for (std::size_t k = 0; k < n; ++k) a[k] = e_half_[k] * v[k] + 0.5 * dt_ * k2[k];
    const Spectrum k3 = nonlinear(a);
    for (std::size_t k = 0; k < n; ++k) a[k] = e_full_[k] * v[k] + dt_ * e_half_[k] * k3[k];
    const Spectrum k4 = nonlinear(a);
    for (std::size_t k = 0; k < n; ++k)
        state_[k] = e_full_[k] * v[k] +
                    dt_ / 6.0 * (e_full_[k] * k1[k] + 2.0 * e_half_[k] * (k2[k] + k3[k]) + k4[k]);
}

void Evolver::advance(int n_steps) {
    for (int s = 0; s < n_steps; ++s) step();
    const Field2D v = field();
    if (!(v.max_abs() <= guard_))
        throw BlowUpError("evolution: max |v| exceeded the guard at t = " + std::to_string(t_));
}

Field2D Evolver::field() const { return inverse(state_, grid_); }

EvolutionResult evolve(const Field2D& v0, const EvolutionConfig& cfg, const EvolutionCallback& cb) {
    cfg.validate(v0.grid);
    Evolver ev(v0, cfg.dt, cfg.dealias, cfg.cfl_guard, cfg.scheme);
    const int n = static_cast<int>(std::llround(cfg.t_end / std::abs(cfg.dt)));
    const int every = cfg.snapshot_every > 0 ? cfg.snapshot_every : std::max(n, 1);
    EvolutionResult res;
    if (cb && !cb(ev.time(), ev.field())) {
        res.v = ev.field();
        res.stopped_early = true;
        return res;
    }
    int done = 0;
    while (done < n) {
        const int chunk = std::min(every, n - done);
        ev.advance(chunk);
        done += chunk;
        if (cb && !cb(ev.time(), ev.field())) {
            res.stopped_early = true;
            break;
        }
    }
    res.v = ev.field();
    res.t = ev.time();
    res.steps = done;
    return res;
}

double boundary_strip_mass(const Field2D& v, double width) {
    const Grid2D& g = v.grid;
    double s = 0.0;
    for (int i = 0; i < g.Nx; ++i) {
        const bool bx = std::abs(g.x(i)) > g.Lx - width;
        for (int j = 0; j < g.Ny; ++j)
            if (bx || std::abs(g.y(j)) > g.Ly - width) s += v(i, j) * v(i, j);
    }
    return s * g.dx() * g.dy();
}

}  // namespace zk
