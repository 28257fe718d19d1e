#include "zk/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "zk/bessel.hpp"
#include "zk/errors.hpp"
#include "zk/experiments.hpp"
#include "zk/io.hpp"
#include "zk/linearized.hpp"
#include "zk/verify.hpp"

namespace zk {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// What every experiment gets: its config (records defaults), output dir, caches.
struct Run {
    std::string experiment;
    KeyValueConfig cfg;
    fs::path out_dir;
    Lab* lab = nullptr;
    std::ostream* out = nullptr;
    std::string exe;  // argv[0], to find sibling binaries

    fs::path file(const std::string& name) const { return out_dir / name; }
    std::string header() const { return csv_header(experiment, cfg); }

    // written last so it sees every default that was read
    void write_json(const std::string& name, json body) const {
        json j;
        j["zklab"] = version();
        j["experiment"] = experiment;
        j["config_hash"] = cfg.hash();
        json c = json::object();
        for (const auto& [k, v] : cfg.values()) c[k] = v;
        j["config"] = c;
        j["result"] = std::move(body);
        std::ofstream os(file(name));
        if (!os) throw std::runtime_error("cannot write " + file(name).string());
        os << std::setw(2) << j << '\n';
    }
};

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) {
            try {
                v.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("not a number in list '" + s + "': " + item);
            }
        }
    return v;
}

// ------------------------------------------------------------------ experiments

int ground_state(Run& r) {
    const double tol = r.cfg.get_double("residual_tol", 1e-8);
    const double r_max = r.cfg.get_double("r_max", 30.0);
    if (!(tol > 0.0 && tol <= 1e-6)) throw ConfigError("residual_tol must lie in (0, 1e-6]");
    if (!(r_max >= 20.0)) throw ConfigError("r_max must be >= 20");
    const bool def = tol == 1e-8 && r_max == 30.0;
    const RadialProfile p = def ? r.lab->profile() : solve_ground_state(tol, r_max);
    const GroundStateConstants gc = def ? r.lab->constants() : ground_state_constants(p);

    std::vector<double> rr, q, dq, d2q;
    for (std::size_t i = 0; i < p.nodes.size(); i += 10) {
        rr.push_back(p.nodes[i]);
        q.push_back(p.q[i]);
        dq.push_back(p.dq[i]);
        d2q.push_back(p.d2q[i]);
    }
    write_csv(r.file("profile.csv").string(), r.header(), {"r", "Q", "dQ", "d2Q"}, {rr, q, dq, d2q});
    std::vector<double> lq;
    for (double x : rr) lq.push_back(std::log10(std::max(p.eval(x), 1e-300)));
    write_svg_plot(r.file("profile.svg").string(), "ground state", "r", "log10 Q", {{"Q", rr, lq}});

    json j;
    j["Q0"] = p.q0();
    j["r_max"] = p.r_max;
    j["h"] = p.h;
    j["max_residual"] = p.max_residual;
    j["int_q"] = gc.int_q;
    j["int_q2"] = gc.int_q2;
    j["lam_q_q"] = gc.lam_q_q;
    j["q3"] = gc.q3;
    j["dxq2"] = gc.dxq2;
    j["dxinv_dyq_dyq"] = gc.dxinv_dyq_dyq;
    j["bessel_q_q"] = gc.bessel_q_q;
    j["c_q"] = gc.c_q;
    j["kappa"] = gc.kappa;
    j["kappa_deviation"] = gc.kappa_deviation;
    j["c_int"] = gc.c_int;
    j["mass_identity"] = std::abs(gc.int_q2 - gc.int_q) / gc.int_q;
    j["lambda_identity"] = std::abs(gc.lam_q_q - 0.5 * gc.int_q) / gc.int_q;
    r.write_json("ground_state.json", j);
    *r.out << std::setprecision(12) << "Q0 = " << p.q0() << "  int Q = " << gc.int_q << "  kappa = " << gc.kappa
           << "\n";
    return 0;
}

int asymptotics(Run& r) {
    const double r_lo = r.cfg.get_double("r_min", 2.0), r_hi = r.cfg.get_double("r_max", 30.0);
    const double step = r.cfg.get_double("step", 0.1);
    if (!(r_lo >= 1.0 && r_hi > r_lo && step > 0.0)) throw ConfigError("need 1 <= r_min < r_max, step > 0");
    const RadialProfile& p = r.lab->profile();
    std::vector<double> xs, k0, ratio;
    std::vector<std::vector<double>> w(4);
    const int n = static_cast<int>(std::floor((r_hi - r_lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) {
        const double x = r_lo + i * step;
        xs.push_back(x);
        k0.push_back(bessel_k0(x));
        for (int k = 0; k < 4; ++k)
            w[k].push_back(std::pow(x, k + 1.5) * std::exp(x) * std::abs(bessel_k0(x) - lk_series(x, k)));
        ratio.push_back(x <= p.r_max ? p.eval(x) / bessel_k0(x) : NAN);
    }
    write_csv(r.file("asymptotics.csv").string(), r.header(),
              {"r", "K0", "w_err_k0", "w_err_k1", "w_err_k2", "w_err_k3", "Q_over_K0"},
              {xs, k0, w[0], w[1], w[2], w[3], ratio});
    write_svg_plot(r.file("asymptotics.svg").string(), "weighted error of L_k", "r", "r^{k+3/2} e^r |K0 - L_k|",
                   {{"k=0", xs, w[0]}, {"k=1", xs, w[1]}, {"k=2", xs, w[2]}, {"k=3", xs, w[3]}});
    const KappaEstimate ke = estimate_kappa(p);
    json j;
    j["kappa"] = ke.kappa;
    j["kappa_max_deviation"] = ke.max_deviation;
    for (int k = 0; k < 4; ++k) j["sup_weighted_k" + std::to_string(k)] = *std::max_element(w[k].begin(), w[k].end());
    r.write_json("asymptotics.json", j);
    *r.out << "kappa = " << std::setprecision(12) << ke.kappa << "\n";
    return 0;
}

int interaction(Run& r) {
    const double zmin = r.cfg.get_double("zmin", 0.0), zmax = r.cfg.get_double("zmax", 30.0);
    const double step = r.cfg.get_double("step", 0.5);
    if (!(zmin >= 0.0 && zmax > zmin && step > 0.0)) throw ConfigError("need 0 <= zmin < zmax, step > 0");
    const InteractionTable t = build_interaction_table(r.lab->profile(), zmin, zmax, step);
    const CoefficientModel& cm = r.lab->coefficients();
    std::vector<double> gn, fn, g1, a1;
    for (std::size_t i = 0; i < t.z_values.size(); ++i) {
        gn.push_back(t.normalized_G(i));
        fn.push_back(t.normalized_F(i));
        if (t.z_values[i] >= cm.z_star()) {
            const auto a = cm.at(t.z_values[i]);
            g1.push_back(a.gamma1);
            a1.push_back(a.alpha1);
        } else {
            g1.push_back(NAN);
            a1.push_back(NAN);
        }
    }
    write_csv(r.file("interaction.csv").string(), r.header(),
              {"z", "G", "F", "G_sqrtz_ez", "F_sqrtz_ez", "gamma1", "alpha1"}, {t.z_values, t.G, t.F, gn, fn, g1, a1});
    std::vector<double> zs, gs, fs;
    for (std::size_t i = 0; i < t.z_values.size(); ++i)
        if (t.z_values[i] >= 1.0) {
            zs.push_back(t.z_values[i]);
            gs.push_back(gn[i]);
            fs.push_back(fn[i]);
        }
    write_svg_plot(r.file("interaction.svg").string(), "normalized interaction integrals", "z",
                   "value * sqrt(z) e^z", {{"G", zs, gs}, {"F", zs, fs}});
    json j;
    j["c_int"] = r.lab->constants().c_int;
    j["w_lambda"] = cm.w_lambda();
    j["w_dxq"] = cm.w_dxq();
    j["n"] = t.z_values.size();
    r.write_json("interaction.json", j);
    *r.out << "table of " << t.z_values.size() << " separations written\n";
    return 0;
}

int z_ode(Run& r) {
    const ZDynamics& zd = r.lab->zdyn();
    const double z0_in = r.cfg.get_double("z0", 0.0);
    const double mu0_in = r.cfg.get_double("mu0", 0.15);
    const double z0 = z0_in > 0.0 ? z0_in : zd.z0_from_mu0(mu0_in);
    const double t_end = r.cfg.get_double("t_end", 100.0);
    const double tol = r.cfg.get_double("tol", 1e-12);
    const double rho = r.cfg.get_double("rho", 0.02), eta = r.cfg.get_double("eta", 0.5);
    const double M = r.cfg.get_double("M", 20.0);
    if (!(rho > 0.0 && rho < 1.0 / 32.0)) throw ConfigError("rho must lie in (0, 1/32)");
    ZTrajectory tr = zd.integrate(z0, t_end, tol);
    std::vector<double> t, Z, Zd, drift;
    for (const auto& s : tr.samples) {
        t.push_back(s.t);
        Z.push_back(s.Z);
        Zd.push_back(s.Zdot);
        drift.push_back(std::abs(s.H - tr.h0) / tr.h0);
    }
    write_csv(r.file("z_ode.csv").string(), r.header(), {"t", "Z", "Zdot", "H_drift"}, {t, Z, Zd, drift});
    write_svg_plot(r.file("z_ode.svg").string(), "distance ODE", "t", "Z, Zdot", {{"Z", t, Z}, {"Zdot", t, Zd}});

    // phase portrait: H on a grid plus a few orbits
    std::vector<double> py0, py1, ph;
    for (int i = 0; i <= 60; ++i)
        for (int k = 0; k <= 40; ++k) {
            const double y0 = 0.25 * i, y1 = -1.0 + 0.05 * k;
            py0.push_back(y0);
            py1.push_back(y1);
            ph.push_back(zd.hamiltonian(y0, y1));
        }
    write_csv(r.file("phase.csv").string(), r.header(), {"Y0", "Y1", "H"}, {py0, py1, ph});
    std::vector<Series> orbits;
    for (double zz : {6.0, 8.0, 10.0, 12.0}) {
        const ZTrajectory o = zd.integrate(zz, 60.0, 1e-10);
        Series s{"Z0=" + std::to_string(static_cast<int>(zz)), {}, {}};
        for (const auto& x : o.samples) {
            s.x.push_back(x.Z);
            s.y.push_back(x.Zdot);
        }
        orbits.push_back(std::move(s));
    }
    write_svg_plot(r.file("phase.svg").string(), "phase portrait", "Z", "Zdot", orbits);

    json j;
    j["Z0"] = z0;
    j["mu0"] = tr.mu0;
    j["h0"] = tr.h0;
    j["max_drift"] = tr.max_drift;
    j["orbit"] = to_string(zd.classify_orbit(z0, 0.0));
    try {
        const AsymptoteFit af = zd.asymptote(tr);
        j["asymptote"] = {{"slope", af.slope},
                          {"intercept", af.intercept},
                          {"decay_rate", af.decay_rate},
                          {"window_start", af.window_start},
                          {"slope_rel_error", af.slope_rel_error}};
    } catch (const std::exception& e) {
        j["asymptote"] = std::string("unavailable: ") + e.what();
    }
    try {
        // T1 sits at Z = Z0/rho, far past t_end in general: integrate long enough
        ZTrajectory full = zd.integrate(z0, (z0 / rho) / (2.0 * tr.mu0) + 200.0, tol);
        const CharacteristicTimes ct = zd.characteristic_times(full, rho, eta, M);
        j["T1"] = ct.T1;
        j["T2"] = ct.T2;
        j["T3"] = ct.T3 ? json(*ct.T3) : json(nullptr);
        j["T4"] = ct.T4 ? json(*ct.T4) : json(nullptr);
        j["ordered"] = ct.ordered;
        j["Zdot_T1_over_mu0"] = zd.state_at(full, ct.T1).Zdot / full.mu0;
        j["Zdot_T2_over_mu0_eta"] = zd.state_at(full, ct.T2).Zdot / (full.mu0 * eta);
    } catch (const std::exception& e) {
        j["times"] = std::string("unavailable: ") + e.what();
    }
    r.write_json("z_ode.json", j);
    *r.out << std::setprecision(10) << "Z0 = " << z0 << "  mu0 = " << tr.mu0 << "  H drift = " << tr.max_drift
           << "\n";
    return 0;
}

int spectrum(Run& r) {
    const double L = r.cfg.get_double("L", 24.0);
    const int N = r.cfg.get_int("N", 256);
    const double tol = r.cfg.get_double("tol", 1e-10);
    const Grid2D g = Grid2D::make(L, L, N, N);
    const RadialProfile& p = r.lab->profile();
    const Field2D q = place_profile(p, g, 0.0, 0.0);
    const EigenPair e = negative_eigenpair(q, tol);
    const Field2D dxq = derivative(q, Axis::x, 1), dyq = derivative(q, Axis::y, 1);
    const Field2D lq = place_profile(p, g, 0.0, 0.0, 1.0, ProfileKind::Lambda);
    const TailRatio tr = chi0_tail_ratio(e, 0.0, 0.0, r.cfg.get_double("tail_lo", 6.0), r.cfg.get_double("tail_hi", 12.0));
    write_csv(r.file("chi0_tail.csv").string(), r.header(), {"r", "chi0_over_K0"}, {tr.r, tr.ratio});
    json j;
    j["lambda0"] = e.lambda0;
    j["residual"] = e.residual;
    j["iterations"] = e.iterations;
    j["kernel_residual_dx"] = l2_norm(apply_L(dxq, q)) / l2_norm(dxq);
    j["kernel_residual_dy"] = l2_norm(apply_L(dyq, q)) / l2_norm(dxq);
    j["L_LambdaQ_plus_Q"] = l2_norm(apply_L(lq, q) + q) / l2_norm(q);
    j["kappa0"] = tr.mean;
    j["kappa0_spread"] = tr.spread;
    j["angular_variance"] = angular_variance(e.chi0, 0.0, 0.0, {0.5, 1.0, 2.0, 3.0, 4.0, 6.0});
    r.write_json("spectrum.json", j);
    *r.out << std::setprecision(12) << "lambda0 = " << e.lambda0 << "  kappa0 = " << tr.mean << " (spread "
           << tr.spread << ")\n";
    return 0;
}

int ansatz(Run& r) {
    const double z = r.cfg.get_double("z", 10.0);
    const double mu1 = r.cfg.get_double("mu1", 0.0), mu2 = r.cfg.get_double("mu2", 0.0);
    const double w = r.cfg.get_double("w", 0.0);
    const Grid2D g = Grid2D::make(r.cfg.get_double("Lx", 64.0), r.cfg.get_double("Ly", 32.0),
                                  r.cfg.get_int("Nx", 512), r.cfg.get_int("Ny", 256));
    const std::vector<double> trend = parse_list(r.cfg.get_string("trend_z", "8,10,12,14,16,18,20"));
    const AnsatzContext ctx = r.lab->ansatz();
    const SigmaReport sr = sigma_orthogonality(z, g, ctx);
    ModulationState s;
    s.z1 = 0.5 * z;
    s.z2 = -0.5 * z;
    s.w1 = 0.5 * w;
    s.w2 = -0.5 * w;
    s.mu1 = mu1;
    s.mu2 = mu2;
    const AnsatzBundle b = build_ansatz(s, g, ctx);
    std::vector<double> tz, va_inf, va_h1, sig;
    for (double zz : trend) {
        ModulationState t;
        t.z1 = 0.5 * zz;
        t.z2 = -0.5 * zz;
        const AnsatzBundle bt = build_ansatz(t, g, ctx);
        tz.push_back(zz);
        va_inf.push_back(bt.VA.max_abs() * std::sqrt(zz) * std::exp(zz));
        va_h1.push_back(h1_norm(bt.VA));
        sig.push_back(sigma_orthogonality(zz, g, ctx).max_normalized());
    }
    write_csv(r.file("ansatz_trend.csv").string(), r.header(),
              {"z", "VA_inf_sqrtz_ez", "VA_h1", "sigma_residual"}, {tz, va_inf, va_h1, sig});
    json j;
    const auto& a = b.coefficients;
    j["coefficients"] = {{"z", a.z},         {"alpha1", a.alpha1}, {"alpha2", a.alpha2}, {"beta1", a.beta1},
                         {"beta2", a.beta2}, {"gamma1", a.gamma1}, {"gamma2", a.gamma2}};
    json res = json::array();
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 3; ++k) res.push_back(sr.residuals[i][k] / (sr.sigma_l2[i] * sr.q_h1));
    j["sigma_residuals_normalized"] = res;
    j["sigma_max_normalized"] = sr.max_normalized();
    j["VA_inf"] = b.VA.max_abs();
    j["VA_h1"] = h1_norm(b.VA);
    j["S_h1"] = h1_norm(b.S);
    r.write_json("ansatz.json", j);
    *r.out << "max normalized Sigma residual = " << sr.max_normalized() << "\n";
    return 0;
}

int single_soliton(Run& r) {
    SingleSolitonConfig c;
    c.mu = r.cfg.get_double("mu", c.mu);
    c.L = r.cfg.get_double("L", c.L);
    c.N = r.cfg.get_int("N", c.N);
    c.dt = r.cfg.get_double("dt", c.dt);
    c.t_end = r.cfg.get_double("t_end", c.t_end);
    c.dealias = r.cfg.get_bool("dealias", c.dealias);
    c.x0 = r.cfg.get_double("x0", c.x0);
    const SingleSolitonReport s = run_single_soliton(r.lab->profile(), c);
    json j;
    j["speed"] = s.speed;
    j["speed_error"] = s.speed_error;
    j["h1_error"] = s.h1_error;
    j["mass_drift"] = s.mass_drift;
    j["energy_drift"] = s.energy_drift;
    r.write_json("single_soliton.json", j);
    *r.out << std::setprecision(10) << "speed = " << s.speed << " (error " << s.speed_error << ")\n";
    return 0;
}

CollisionConfig collision_config(KeyValueConfig& k) {
    CollisionConfig c;
    c.mu0 = k.get_double("mu0", c.mu0);
    c.rho = k.get_double("rho", c.rho);
    c.omega0 = k.get_double("omega0", c.omega0);
    c.Lx = k.get_double("Lx", c.Lx);
    c.Ly = k.get_double("Ly", c.Ly);
    c.Nx = k.get_int("Nx", c.Nx);
    c.Ny = k.get_int("Ny", c.Ny);
    c.dt = k.get_double("dt", c.dt);
    c.z_window = k.get_double("z_window", c.z_window);
    c.T = k.get_double("T", c.T);
    c.fit_every = k.get_double("fit_every", c.fit_every);
    c.dealias = k.get_bool("dealias", c.dealias);
    c.cfl_guard = k.get_double("cfl_guard", c.cfl_guard);
    c.functionals = k.get_bool("functionals", c.functionals);
    c.fit.tol = k.get_double("fit_tol", c.fit.tol);
    c.fit.max_newton = k.get_int("fit_max_newton", c.fit.max_newton);
    c.fit.sigma = k.get_double("fit_sigma", c.fit.sigma);
    if (!(c.mu0 >= 0.08 && c.mu0 <= 0.25)) throw ConfigError("mu0 must lie in [0.08, 0.25] at desk scale");
    c.validate();
    return c;
}

StabilityConfig stability_config(KeyValueConfig& k) {
    StabilityConfig s;
    s.seeds.clear();
    for (double v : parse_list(k.get_string("seeds", "1,2,3"))) {
        if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("seeds must be non-negative integers");
        s.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (k.has("amplitude")) s.amplitude = k.get_double("amplitude", 0.0);
    const int start = k.get_int("start", 0);
    if (start < 0) throw ConfigError("start must be >= 0");
    s.start = static_cast<std::size_t>(start);
    return s;
}

json collision_json(const CollisionReport& c) {
    json j;
    j["Z0"] = c.Z0;
    j["mu0"] = c.mu0;
    j["T"] = c.T;
    j["records"] = c.records.size();
    j["lost_lock"] = c.lost_lock;
    j["message"] = c.message;
    j["crossed"] = c.crossed;
    j["min_z"] = c.min_z;
    j["max_z_err"] = c.max_z_err;
    j["ratio_z"] = c.ratio_z;
    j["max_mu_err"] = c.max_mu_err;
    j["ratio_mu"] = c.ratio_mu;
    j["max_eps_h1"] = c.max_eps_h1;
    j["ratio_eps"] = c.ratio_eps;
    j["max_eps_h1_local"] = c.max_eps_local;
    j["ratio_eps_local"] = c.ratio_eps_local;
    j["final_mu1"] = c.final_mu1;
    j["final_mu2"] = c.final_mu2;
    j["exchange1"] = c.exchange1;
    j["exchange2"] = c.exchange2;
    j["max_omega"] = c.max_omega;
    j["max_mu_drop"] = c.max_mu_drop;
    j["mass_drift"] = c.mass_drift;
    j["energy_drift"] = c.energy_drift;
    j["max_boundary_mass"] = c.max_boundary_mass;
    j["max_coercivity"] = c.max_coercivity;
    return j;
}

void write_collision_files(const Run& r, const CollisionReport& c) {
    write_records_csv(c.records, r.file("collide_records.csv").string(), r.header());
    std::vector<double> t, mean, mass, energy, bm;
    for (std::size_t k = 0; k < c.invariants.size() && k < c.records.size(); ++k) {
        t.push_back(c.records[k].t);
        mean.push_back(c.invariants[k].mean);
        mass.push_back(c.invariants[k].mass);
        energy.push_back(c.invariants[k].energy);
        bm.push_back(c.boundary_mass[k]);
    }
    write_csv(r.file("collide_invariants.csv").string(), r.header(), {"t", "mean", "mass", "energy_sym", "boundary_mass"},
              {t, mean, mass, energy, bm});
    Series z{"z", {}, {}}, Z{"Z", {}, {}}, mu{"mu", {}, {}}, Zd{"Zdot", {}, {}}, eps{"eps H1", {}, {}},
        loc{"eps H1 ahead", {}, {}};
    for (const auto& rec : c.records) {
        z.x.push_back(rec.t);
        z.y.push_back(rec.gamma.z());
        mu.x.push_back(rec.t);
        mu.y.push_back(rec.gamma.mu1 - rec.gamma.mu2);
        eps.x.push_back(rec.t);
        eps.y.push_back(rec.eps_h1);
        loc.x.push_back(rec.t);
        loc.y.push_back(rec.eps_h1_local);
        if (rec.z_ref) {
            Z.x.push_back(rec.t);
            Z.y.push_back(*rec.z_ref);
        }
        if (rec.zdot_ref) {
            Zd.x.push_back(rec.t);
            Zd.y.push_back(*rec.zdot_ref);
        }
    }
    write_svg_plot(r.file("z_vs_Z.svg").string(), "separation", "t", "z", {z, Z});
    write_svg_plot(r.file("mu_vs_Zdot.svg").string(), "relative speed", "t", "mu", {mu, Zd});
    write_svg_plot(r.file("eps.svg").string(), "remainder", "t", "H1 norm", {eps, loc});
}

int collide(Run& r) {
    CollisionConfig c = collision_config(r.cfg);
    const bool snapshots = r.cfg.get_bool("snapshots", false);
    c.keep_states = snapshots;
    const CollisionReport rep = run_collision(*r.lab, c, [&](const ModulationRecord& m) {
        *r.out << std::fixed << std::setprecision(2) << "t=" << m.t << std::defaultfloat << std::setprecision(6)
               << " z=" << m.gamma.z() << " mu=" << m.gamma.mu1 - m.gamma.mu2 << " eps=" << m.eps_h1 << "\n";
    });
    if (snapshots) {
        fs::create_directories(r.file("fields"));
        for (std::size_t k = 0; k < rep.states.size(); ++k) {
            std::ostringstream name;
            name << "snap_" << std::setw(4) << std::setfill('0') << k;
            save_field(inverse(rep.states[k].second, rep.grid), r.file("fields/" + name.str()).string(),
                       rep.states[k].first);
        }
    }
    write_collision_files(r, rep);
    r.write_json("collide.json", collision_json(rep));
    *r.out << "ratios: z " << rep.ratio_z << "  mu " << rep.ratio_mu << "  eps " << rep.ratio_eps << "\n";
    return rep.lost_lock ? 3 : 0;
}

int stability(Run& r) {
    CollisionConfig c = collision_config(r.cfg);
    const StabilityConfig sc = stability_config(r.cfg);
    c.keep_states = true;
    const CollisionReport rep = run_collision(*r.lab, c);
    write_collision_files(r, rep);
    if (rep.lost_lock) throw LossOfLockError(rep.message);
    const StabilityReport s = run_stability_probe(c, rep, sc);
    std::vector<std::string> names{"t"};
    std::vector<std::vector<double>> cols{s.t};
    for (std::size_t k = 0; k < s.diff_h1.size(); ++k) {
        names.push_back("diff_h1_seed" + std::to_string(sc.seeds[k]));
        cols.push_back(s.diff_h1[k]);
    }
    write_csv(r.file("stability.csv").string(), r.header(), names, cols);
    json j;
    j["collision"] = collision_json(rep);
    j["amplitude"] = s.amplitude;
    j["t_start"] = s.t_start;
    j["ratio"] = s.ratio;
    j["max_ratio"] = s.max_ratio;
    j["mean_ratio"] = s.mean_ratio;
    r.write_json("stability.json", j);
    *r.out << "max ||w - v||_H1 / mu0^(7/4) = " << s.max_ratio << "\n";
    return 0;
}

int verify_all(Run& r) {
    VerifyOptions o;
    const std::string which = r.cfg.get_string("criteria", "all");
    if (which != "all")
        for (double v : parse_list(which)) o.only.push_back(static_cast<int>(v));
    o.collision = collision_config(r.cfg);
    o.collision.keep_states = true;
    o.stability = stability_config(r.cfg);
    o.log = [&](const std::string& s) { *r.out << s << "\n" << std::flush; };

    // module invariant suites: the unit-test binary next to this executable
    json suites = json::object();
    if (r.cfg.get_bool("unit_suites", true)) {
        fs::path tests = r.cfg.get_string("unit_tests", "");
        if (tests.empty() && !r.exe.empty()) tests = fs::path(r.exe).parent_path() / "zk_tests";
        if (fs::exists(tests)) {
            for (const char* s : {"ground_state", "asymptotics", "spectral_core", "interaction", "z_dynamics",
                                  "ansatz", "linearized_spectrum", "evolution", "modulation", "cli"}) {
                const std::string cmd = "\"" + tests.string() + "\" -ts=" + s + " > /dev/null 2>&1";
                const bool ok = std::system(cmd.c_str()) == 0;
                suites[s] = ok;
                *r.out << "[" << (ok ? "PASS" : "FAIL") << "] suite " << s << "\n" << std::flush;
            }
        } else {
            *r.out << "unit suites skipped: no zk_tests binary found\n";
        }
    }

    const auto results = run_acceptance(*r.lab, o);
    json crit = json::array();
    bool all = true;
    for (const auto& c : results) {
        json m = json::object();
        for (const auto& [k, v] : c.metrics) m[k] = v;
        crit.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"summary", c.summary}, {"metrics", m}});
        all = all && c.pass;
    }
    for (const auto& [k, v] : suites.items()) all = all && v.get<bool>();
    json j;
    j["suites"] = suites;
    j["criteria"] = crit;
    j["all_pass"] = all;
    r.write_json("verify.json", j);
    return all ? 0 : 1;
}

int track_cmd(Run& r, const std::vector<std::string>& inputs) {
    std::vector<std::string> bases;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<std::string> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.path().extension() == ".meta") found.push_back((e.path().parent_path() / e.path().stem()).string());
            std::sort(found.begin(), found.end());
            bases.insert(bases.end(), found.begin(), found.end());
        } else {
            bases.push_back(in);
        }
    }
    if (bases.empty()) throw ConfigError("track: no snapshots given");
    double t0 = 0.0;
    const Field2D first = load_field(bases.front(), &t0);
    const double mu0 = r.cfg.get_double("mu0", 0.15);
    const double z0_in = r.cfg.get_double("z0", 0.0);
    const ZDynamics& zd = r.lab->zdyn();
    const double z0 = z0_in > 0.0 ? z0_in : zd.z0_from_mu0(mu0);
    const ZTrajectory ref = zd.integrate(z0, std::abs(t0) + r.cfg.get_double("t_span", 200.0));
    ModulationState g0 = collision_initial_state(zd, ref, t0, r.cfg.get_double("omega0", 0.0));
    g0.z1 = r.cfg.get_double("z1", g0.z1);
    g0.z2 = r.cfg.get_double("z2", g0.z2);
    g0.w1 = r.cfg.get_double("w1", g0.w1);
    g0.w2 = r.cfg.get_double("w2", g0.w2);
    g0.mu1 = r.cfg.get_double("mu1", g0.mu1);
    g0.mu2 = r.cfg.get_double("mu2", g0.mu2);
    TrackOptions to;
    to.rho = r.cfg.get_double("rho", to.rho);
    to.mu0 = ref.mu0;
    to.functionals = r.cfg.get_bool("functionals", true);
    const Modulator mod(first.grid, r.lab->ansatz());
    const TrackResult tr = track(bases, mod, g0, to, &zd, &ref);
    write_records_csv(tr.records, r.file("track.csv").string(), r.header());
    json j;
    j["snapshots"] = bases.size();
    j["records"] = tr.records.size();
    j["lost_lock"] = tr.lost_lock;
    j["message"] = tr.message;
    r.write_json("track.json", j);
    *r.out << tr.records.size() << " records" << (tr.lost_lock ? " (lost lock: " + tr.message + ")" : "") << "\n";
    return tr.lost_lock ? 3 : 0;
}

int field_dump(Run& r, const std::string& name) {
    const Grid2D g = Grid2D::make(r.cfg.get_double("Lx", 32.0), r.cfg.get_double("Ly", 24.0),
                                  r.cfg.get_int("Nx", 256), r.cfg.get_int("Ny", 256));
    const std::string kind = r.cfg.get_string("kind", "ansatz");
    Field2D f;
    if (kind == "ansatz") {
        ModulationState s;
        s.z1 = r.cfg.get_double("z1", 5.0);
        s.z2 = r.cfg.get_double("z2", -5.0);
        s.w1 = r.cfg.get_double("w1", 0.0);
        s.w2 = r.cfg.get_double("w2", 0.0);
        s.mu1 = r.cfg.get_double("mu1", 0.0);
        s.mu2 = r.cfg.get_double("mu2", 0.0);
        s.validate();
        f = ansatz_field(s, g, r.lab->ansatz());
    } else if (kind == "soliton") {
        f = place_profile(r.lab->profile(), g, r.cfg.get_double("x0", 0.0), r.cfg.get_double("y0", 0.0),
                          r.cfg.get_double("c", 1.0));
    } else {
        throw ConfigError("field kind must be ansatz or soliton");
    }
    const double t = r.cfg.get_double("t", 0.0);
    save_field(f, r.file(name).string(), t);
    *r.out << "wrote " << r.file(name).string() << ".bin/.meta\n";
    return 0;
}

int field_load(Run& r, const std::string& base) {
    double t = 0.0;
    const Field2D f = load_field(base, &t);
    const Norms n = norms(f);
    const Invariants iv = invariants_of(f);
    json j;
    j["input"] = base;
    j["grid"] = {{"Lx", f.grid.Lx}, {"Ly", f.grid.Ly}, {"Nx", f.grid.Nx}, {"Ny", f.grid.Ny}};
    j["t"] = t;
    j["l2"] = n.l2;
    j["h1"] = n.h1;
    j["l3"] = n.l3;
    j["max_abs"] = f.max_abs();
    j["mean"] = iv.mean;
    j["mass"] = iv.mass;
    j["energy_sym"] = iv.energy;
    j["boundary_mass"] = boundary_strip_mass(f);
    r.write_json("field.json", j);
    *r.out << std::setw(2) << j << "\n";
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"zklab: numerical lab for two-soliton interaction in the 2D Zakharov-Kuznetsov equation"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file, out_dir = "zk_out", profile_cache, table_cache;
    std::vector<std::string> overrides;
    app.add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "override a configuration key (key=value), repeatable");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--profile-cache", profile_cache, "ground-state table to reuse or create");
    app.add_option("--table-cache", table_cache, "interaction table to reuse or create");

    // Flags that are sugar for configuration keys, per subcommand.
    std::vector<std::pair<std::string, std::string>> sugar;
    auto key_opt = [&](CLI::App* sc, const std::string& flag, const std::string& key, const std::string& help) {
        sc->add_option_function<std::string>(
            flag, [&sugar, key](const std::string& v) { sugar.emplace_back(key, v); }, help);
    };
    std::string action;
    auto with_action = [&](CLI::App* sc, const std::string& word) {
        sc->add_option("action", action, "optional action word")->check(CLI::IsMember({word}));
    };

    auto* gs = app.add_subcommand("ground-state", "solve the ground state and its constants");
    key_opt(gs, "--residual-tol", "residual_tol", "ODE residual tolerance");
    key_opt(gs, "--r-max", "r_max", "outer radius");
    auto* as = app.add_subcommand("asymptotics", "K0 against its asymptotic series, Q against kappa K0");
    with_action(as, "verify");
    auto* it = app.add_subcommand("interaction", "tabulate G, F and the ansatz coefficients");
    with_action(it, "table");
    key_opt(it, "--zmin", "zmin", "first separation");
    key_opt(it, "--zmax", "zmax", "last separation");
    key_opt(it, "--step", "step", "separation step");
    auto* zo = app.add_subcommand("z-ode", "distance ODE trajectory, asymptote, times, phase portrait");
    key_opt(zo, "--z0", "z0", "minimal separation (overrides mu0)");
    key_opt(zo, "--mu0", "mu0", "asymptotic half speed");
    key_opt(zo, "--tend", "t_end", "integration horizon");
    auto* sp = app.add_subcommand("spectrum", "negative eigenpair and kernel of the linearized operator");
    auto* an = app.add_subcommand("ansatz", "two-soliton ansatz: coefficients, orthogonality, trends");
    with_action(an, "check");
    key_opt(an, "--z", "z", "separation");
    key_opt(an, "--mu1", "mu1", "speed offset of wave 1");
    key_opt(an, "--mu2", "mu2", "speed offset of wave 2");
    key_opt(an, "--w", "w", "transverse offset between the waves");
    auto* ss = app.add_subcommand("single-soliton", "evolve one solitary wave and measure its speed");
    auto* co = app.add_subcommand("collide", "collision run with modulation tracking");
    auto* st = app.add_subcommand("stability", "collision run plus perturbed re-runs");
    auto* va = app.add_subcommand("verify-all", "unit suites plus acceptance criteria, JSON matrix");
    std::vector<std::string> inputs;
    auto* tk = app.add_subcommand("track", "fit the modulation parameters along stored snapshots");
    tk->add_option("--input", inputs, "snapshot bases or directories")->required();
    key_opt(tk, "--z0", "z0", "reference minimal separation");
    key_opt(tk, "--mu0", "mu0", "reference asymptotic half speed");
    auto* fd = app.add_subcommand("field", "field snapshots");
    fd->require_subcommand(1);
    std::string dump_name = "field", load_base;
    auto* fdump = fd->add_subcommand("dump", "write an ansatz or soliton field");
    fdump->add_option("--name", dump_name, "output base name inside --out");
    auto* fload = fd->add_subcommand("load", "read a snapshot and report norms and invariants");
    fload->add_option("--input", load_base, "snapshot base (without .bin/.meta)")->required();
    for (auto* sc : {co, st, va}) {
        key_opt(sc, "--mu0", "mu0", "asymptotic half speed");
        key_opt(sc, "--seed", "seeds", "perturbation seeds, comma separated");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    const char* env_profile = std::getenv("ZK_PROFILE_CACHE");
    if (profile_cache.empty() && env_profile) profile_cache = env_profile;
    const char* env_table = std::getenv("ZK_TABLE_CACHE");
    if (table_cache.empty() && env_table) table_cache = env_table;

    Run r;
    r.out = &out;
    r.exe = argc > 0 ? argv[0] : "";
    r.out_dir = out_dir;
    try {
        r.cfg = config_file.empty() ? KeyValueConfig{} : KeyValueConfig::from_file(config_file);
        for (const auto& [k, v] : sugar) r.cfg.set(k, v);
        r.cfg.apply_overrides(overrides);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    }
    Lab lab({profile_cache, table_cache});
    r.lab = &lab;

    try {
        fs::create_directories(r.out_dir);
        if (*gs) return r.experiment = "ground-state", ground_state(r);
        if (*as) return r.experiment = "asymptotics", asymptotics(r);
        if (*it) return r.experiment = "interaction", interaction(r);
        if (*zo) return r.experiment = "z-ode", z_ode(r);
        if (*sp) return r.experiment = "spectrum", spectrum(r);
        if (*an) return r.experiment = "ansatz", ansatz(r);
        if (*ss) return r.experiment = "single-soliton", single_soliton(r);
        if (*co) return r.experiment = "collide", collide(r);
        if (*st) return r.experiment = "stability", stability(r);
        if (*va) return r.experiment = "verify-all", verify_all(r);
        if (*tk) return r.experiment = "track", track_cmd(r, inputs);
        if (*fdump) return r.experiment = "field-dump", field_dump(r, dump_name);
        if (*fload) return r.experiment = "field-load", field_load(r, load_base);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {  // parameter outside a routine's domain
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace zk
