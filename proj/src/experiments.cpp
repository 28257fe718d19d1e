#include "zk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "zk/errors.hpp"

namespace zk {

Lab::Lab(Paths paths) : paths_(std::move(paths)) {}

const RadialProfile& Lab::profile() {
    if (!profile_) profile_ = cached_ground_state(paths_.profile);
    return *profile_;
}

const GroundStateConstants& Lab::constants() {
    if (!constants_) constants_ = ground_state_constants(profile());
    return *constants_;
}

const CoefficientModel& Lab::coefficients() {
    if (!coeffs_) coeffs_ = std::make_unique<CoefficientModel>(profile(), constants());
    return *coeffs_;
}

const InteractionTable& Lab::table() {
    if (table_) return *table_;
    if (!paths_.table.empty() && std::filesystem::exists(paths_.table)) {
        try {
            InteractionTable t = load_interaction_table(paths_.table);
            const std::size_t n = static_cast<std::size_t>(std::lround((table_z_max - table_z_min) / table_step)) + 1;
            if (t.z_values.size() == n && t.z_min() == table_z_min && t.z_max() == table_z_max) {
                table_ = std::move(t);
                return *table_;
            }
        } catch (const std::runtime_error&) {
        }
    }
    table_ = build_interaction_table(profile(), table_z_min, table_z_max, table_step);
    if (!paths_.table.empty()) save_interaction_table(*table_, paths_.table);
    return *table_;
}

const ZDynamics& Lab::zdyn() {
    if (!zdyn_) {
        const auto& gc = constants();
        zdyn_ = std::make_unique<ZDynamics>(InteractionModel(table()), gc.lam_q_q, gc.q3);
    }
    return *zdyn_;
}

AnsatzContext Lab::ansatz() { return {&profile(), &coefficients()}; }

void CollisionConfig::validate() const {
    if (!(mu0 > 0.0 && mu0 < 1.0)) throw ConfigError("collision: mu0 must lie in (0, 1)");
    if (!(rho > 0.0 && rho < 1.0 / 32.0)) throw ConfigError("collision: rho must lie in (0, 1/32)");
    if (!(std::abs(omega0) < mu0)) throw ConfigError("collision: need |omega0| < mu0");
    if (!(dt > 0.0)) throw ConfigError("collision: dt must be positive");
    if (!(fit_every > 0.0)) throw ConfigError("collision: fit_every must be positive");
    const double r = fit_every / dt;
    if (std::abs(r - std::round(r)) > 1e-9 * r) throw ConfigError("collision: fit_every must be a multiple of dt");
    if (!(T >= 0.0)) throw ConfigError("collision: T must be >= 0");
    if (T == 0.0 && !(z_window > 0.0)) throw ConfigError("collision: z_window must be positive");
}

ModulationState collision_initial_state(const ZDynamics& zd, const ZTrajectory& traj, double t,
                                        double omega0) {
    const ZSample s = zd.state_at(traj, t);
    ModulationState g;
    g.z1 = 0.5 * s.Z;
    g.z2 = -0.5 * s.Z;
    g.mu1 = 0.5 * s.Zdot;
    g.mu2 = -0.5 * s.Zdot;
    g.w1 = 0.5 * omega0;
    g.w2 = -0.5 * omega0;
    return g;
}

CollisionReport run_collision(Lab& lab, const CollisionConfig& cfg, const RecordCallback& progress) {
    cfg.validate();
    const Grid2D grid = Grid2D::make(cfg.Lx, cfg.Ly, cfg.Nx, cfg.Ny);
    EvolutionConfig ec;
    ec.dt = cfg.dt;
    ec.dealias = cfg.dealias;
    ec.cfl_guard = cfg.cfl_guard;
    ec.validate(grid);

    const ZDynamics& zd = lab.zdyn();
    CollisionReport rep;
    rep.mu0 = cfg.mu0;
    rep.grid = grid;
    rep.Z0 = zd.z0_from_mu0(cfg.mu0);

    // Z grows like 2 mu0 |t| for large |t|; integrate comfortably past the window
    double T = cfg.T;
    const double t_reach = (cfg.T > 0.0 ? cfg.T : 0.0) + 2.0 * (cfg.z_window + rep.Z0) / cfg.mu0 + 10.0;
    ZTrajectory traj = zd.integrate(rep.Z0, t_reach);
    if (T == 0.0) T = zd.time_at_level(traj, cfg.z_window);
    const int per_fit = static_cast<int>(std::lround(cfg.fit_every / cfg.dt));
    const int n_fits = static_cast<int>(std::ceil(2.0 * T / cfg.fit_every - 1e-9));
    rep.T = 0.5 * n_fits * cfg.fit_every;
    if (rep.T > traj.t_end) traj = zd.integrate(rep.Z0, rep.T + 10.0);

    // both window ends must fit, with the wider (slower) wave
    const RadialProfile& p = lab.profile();
    const double zend = zd.state_at(traj, rep.T).Z;
    const double cmin = std::min(1.0 - cfg.mu0, 1.0);
    for (double xc : {0.5 * zend, -0.5 * zend})
        if (!placement_fits(p, grid, xc, 0.5 * cfg.omega0, cmin))
            throw BoxTooSmallError("collision: waves at Z = " + std::to_string(zend) +
                                   " do not fit the box; enlarge Lx/Ly or lower z_window");

    const AnsatzContext ctx = lab.ansatz();
    const ModulationState g0 = collision_initial_state(zd, traj, -rep.T, cfg.omega0);
    const Field2D v0 = ansatz_field(g0, grid, ctx);

    Modulator mod(grid, ctx, cfg.fit);
    TrackOptions to;
    to.rho = cfg.rho;
    to.mu0 = cfg.mu0;
    to.functionals = cfg.functionals;
    Tracker tracker(mod, g0, to, &zd, &traj);

    Evolver ev(v0, cfg.dt, cfg.dealias, cfg.cfl_guard);
    ev.set_time(-rep.T);
    auto observe = [&](double t, const Field2D& v) {
        const auto& r = tracker.observe(t, v);
        rep.invariants.push_back(invariants_of(v));
        rep.boundary_mass.push_back(boundary_strip_mass(v));
        if (cfg.keep_states) rep.states.emplace_back(t, ev.state());
        if (progress) progress(r);
    };
    try {
        observe(ev.time(), ev.field());
        for (int k = 1; k <= n_fits; ++k) {
            ev.advance(per_fit);
            // time from the step count, free of accumulated rounding
            ev.set_time(-rep.T + k * cfg.fit_every);
            observe(ev.time(), ev.field());
        }
    } catch (const LossOfLockError& e) {
        rep.lost_lock = true;
        rep.message = e.what();
    }
    rep.records = tracker.records();

    // summary
    const double m74 = std::pow(cfg.mu0, 1.75), m34 = std::pow(cfg.mu0, 0.75);
    rep.min_z = INFINITY;
    double prev_mu = NAN;
    for (const auto& r : rep.records) {
        const auto& g = r.gamma;
        rep.min_z = std::min(rep.min_z, g.z());
        if (!(g.z() > 0.0)) rep.crossed = true;
        if (r.z_ref) rep.max_z_err = std::max(rep.max_z_err, std::abs(g.z() - *r.z_ref));
        const double mu = g.mu1 - g.mu2;
        if (r.zdot_ref) rep.max_mu_err = std::max(rep.max_mu_err, std::abs(mu - *r.zdot_ref));
        rep.max_eps_h1 = std::max(rep.max_eps_h1, r.eps_h1);
        rep.max_eps_local = std::max(rep.max_eps_local, r.eps_h1_local);
        rep.max_omega = std::max(rep.max_omega, std::abs(g.w1) + std::abs(g.w2));
        if (std::isfinite(prev_mu)) rep.max_mu_drop = std::max(rep.max_mu_drop, prev_mu - mu);
        prev_mu = mu;
        if (cfg.functionals) {
            const double den = r.f_minus + r.s_h1 * r.s_h1;
            if (den > 0.0) rep.max_coercivity = std::max(rep.max_coercivity, r.eps_h1 * r.eps_h1 / den);
        }
    }
    rep.ratio_z = rep.max_z_err / (rep.Z0 * rep.Z0 * m34);
    rep.ratio_mu = rep.max_mu_err / (rep.Z0 * m74);
    rep.ratio_eps = rep.max_eps_h1 / m74;
    rep.ratio_eps_local = rep.max_eps_local / m74;
    if (!rep.records.empty()) {
        rep.final_mu1 = rep.records.back().gamma.mu1;
        rep.final_mu2 = rep.records.back().gamma.mu2;
        rep.exchange1 = std::abs(rep.final_mu1 - cfg.mu0) / (cfg.mu0 * cfg.mu0);
        rep.exchange2 = std::abs(rep.final_mu2 + cfg.mu0) / (cfg.mu0 * cfg.mu0);
    }
    if (!rep.invariants.empty()) {
        const Invariants& i0 = rep.invariants.front();
        for (const auto& iv : rep.invariants) {
            rep.mass_drift = std::max(rep.mass_drift, std::abs(iv.mass - i0.mass) / i0.mass);
            rep.energy_drift = std::max(rep.energy_drift, std::abs(iv.energy - i0.energy) / std::abs(i0.energy));
        }
    }
    for (double b : rep.boundary_mass) rep.max_boundary_mass = std::max(rep.max_boundary_mass, b);
    return rep;
}

Field2D smooth_perturbation(const Grid2D& g, std::uint64_t seed, double h1) {
    if (!(h1 >= 0.0)) throw std::invalid_argument("smooth_perturbation: norm must be >= 0");
    Field2D f(g);
    if (h1 == 0.0) return f;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    // band-limited random field (|k| <= 2) under a Gaussian envelope about the origin
    const int nyh = g.Ny / 2 + 1;
    Spectrum s(g.spec_size(), 0.0);
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < nyh; ++j) {
            const double k2 = g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j);
            if (k2 > 4.0 || i == g.Nx / 2 || j == g.Ny / 2) continue;
            const double a = std::exp(-0.5 * k2);
            s[static_cast<std::size_t>(i) * nyh + j] = {a * nd(rng), j == 0 ? 0.0 : a * nd(rng)};
        }
    f = inverse(s, g);
    const double w = 12.0;
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < g.Ny; ++j)
            f(i, j) *= std::exp(-(g.x(i) * g.x(i) + g.y(j) * g.y(j)) / (2.0 * w * w));
    f *= h1 / h1_norm(f);
    return f;
}

StabilityReport run_stability_probe(const CollisionConfig& cfg, const CollisionReport& ref,
                                    const StabilityConfig& sc) {
    if (ref.states.empty()) throw std::invalid_argument("stability: the collision run kept no states");
    if (sc.start >= ref.states.size()) throw std::invalid_argument("stability: start index past the run");
    const Grid2D& g = ref.grid;
    StabilityReport rep;
    rep.amplitude = sc.amplitude ? *sc.amplitude : std::pow(ref.Z0, -5.0) * std::pow(cfg.mu0, 1.75);
    rep.t_start = ref.states[sc.start].first;
    for (std::size_t k = sc.start; k < ref.states.size(); ++k) rep.t.push_back(ref.states[k].first);
    const int per_fit = static_cast<int>(std::lround(cfg.fit_every / cfg.dt));
    const double m74 = std::pow(cfg.mu0, 1.75);
    for (std::uint64_t seed : sc.seeds) {
        Spectrum s0 = ref.states[sc.start].second;
        if (rep.amplitude > 0.0) {
            const Field2D d = smooth_perturbation(g, seed, rep.amplitude);
            const Spectrum ds = forward(d);
            for (std::size_t k = 0; k < s0.size(); ++k) s0[k] += ds[k];
        }
        Evolver ev(s0, g, cfg.dt, cfg.dealias, cfg.cfl_guard);
        std::vector<double> diff;
        double worst = 0.0;
        for (std::size_t k = sc.start; k < ref.states.size(); ++k) {
            if (k > sc.start) ev.advance(per_fit);
            Spectrum d = ev.state();
            const Spectrum& r = ref.states[k].second;
            for (std::size_t m = 0; m < d.size(); ++m) d[m] -= r[m];
            const double h = h1_norm_spectrum(d, g);
            diff.push_back(h);
            worst = std::max(worst, h);
        }
        rep.diff_h1.push_back(std::move(diff));
        rep.ratio.push_back(worst / m74);
    }
    for (double r : rep.ratio) {
        rep.max_ratio = std::max(rep.max_ratio, r);
        rep.mean_ratio += r / static_cast<double>(rep.ratio.size());
    }
    return rep;
}

double fit_center_x(const Field2D& v, const RadialProfile& p, double c, double x_guess, double y0) {
    double x = x_guess;
    for (int it = 0; it < 50; ++it) {
        const Field2D d = place_profile(p, v.grid, x, y0, c, ProfileKind::Dx);
        // <v, d_x Q_c(. - x)> vanishes at the center; its x-derivative is -<v, d_xx Q_c>
        const double f = inner_product(v, d);
        const double df = -inner_product(v, derivative(d, Axis::x, 1));
        const double step = f / df;
        x -= step;
        if (std::abs(step) < 1e-13) return x;
    }
    throw NonconvergenceError("fit_center_x: no convergence");
}

SingleSolitonReport run_single_soliton(const RadialProfile& p, const SingleSolitonConfig& cfg) {
    const Grid2D g = Grid2D::make(cfg.L, cfg.L, cfg.N, cfg.N);
    const double c = 1.0 + cfg.mu;
    const Field2D v0 = place_profile(p, g, cfg.x0, 0.0, c);
    EvolutionConfig ec;
    ec.dt = cfg.dt;
    ec.t_end = cfg.t_end;
    ec.dealias = cfg.dealias;
    ec.cfl_guard = 6.0;
    ec.snapshot_every = std::max(1, static_cast<int>(std::lround(1.0 / cfg.dt)));
    const Invariants i0 = invariants_of(v0);
    SingleSolitonReport rep;
    const auto res = evolve(v0, ec, [&](double, const Field2D& v) {
        const Invariants iv = invariants_of(v);
        rep.mass_drift = std::max(rep.mass_drift, std::abs(iv.mass - i0.mass) / i0.mass);
        rep.energy_drift = std::max(rep.energy_drift, std::abs(iv.energy - i0.energy) / std::abs(i0.energy));
        return true;
    });
    const double x1 = fit_center_x(res.v, p, c, cfg.x0 + cfg.mu * res.t);
    rep.speed = (x1 - cfg.x0) / res.t;
    rep.speed_error = std::abs(rep.speed - cfg.mu);
    rep.h1_error = h1_norm(res.v - place_profile(p, g, cfg.x0 + cfg.mu * res.t, 0.0, c));
    return rep;
}

}  // namespace zk
