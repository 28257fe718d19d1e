#include "zk/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include <Eigen/Dense>

#include "zk/errors.hpp"

namespace zk {

namespace {

struct Shapes {
    Field2D R, Dx, Dy, L;  // R_i, d_x R_i, d_y R_i, Lambda R_i
};

Shapes shapes_of(const AnsatzContext& ctx, const Grid2D& grid, double x0, double y0, double c) {
    const RadialProfile& p = *ctx.profile;
    return {place_profile(p, grid, x0, y0, c, ProfileKind::Q),
            place_profile(p, grid, x0, y0, c, ProfileKind::Dx),
            place_profile(p, grid, x0, y0, c, ProfileKind::Dy),
            place_profile(p, grid, x0, y0, c, ProfileKind::Lambda)};
}

double max_abs(const Constraints& c) {
    double m = 0.0;
    for (double v : c) m = std::max(m, std::abs(v));
    return m;
}

double norm2(const Constraints& c) {
    double s = 0.0;
    for (double v : c) s += v * v;
    return std::sqrt(s);
}

ModulationState shifted(const ModulationState& g, const std::array<double, 6>& d, double s) {
    auto a = g.packed();
    for (int k = 0; k < 6; ++k) a[k] += s * d[k];
    return ModulationState::unpack(a);
}

}  // namespace

Modulator::Modulator(const Grid2D& grid, const AnsatzContext& ctx, FitOptions opt)
    : grid_(grid), ctx_(ctx), opt_(opt) {
    if (!ctx.profile || !ctx.coeffs) throw std::invalid_argument("Modulator: incomplete context");
    if (!(opt.tol > 0.0) || opt.max_newton < 1) throw std::invalid_argument("Modulator: bad options");
    const Field2D q = place_profile(*ctx.profile, grid, 0.0, 0.0, 1.0);
    q_norm2_ = inner_product(q, q);
    q_h1_ = h1_norm(q);
    sigma_ = opt.sigma > 0.0 ? opt.sigma : 0.3 * q_h1_;
}

Constraints Modulator::constraints(const Field2D& w, const ModulationState& g, Field2D* eps) const {
    check_same_grid(w, Field2D(grid_));
    Field2D e = w - ansatz_field(g, grid_, ctx_);
    const double zs[2] = {g.z1, g.z2}, ws[2] = {g.w1, g.w2}, cs[2] = {1.0 + g.mu1, 1.0 + g.mu2};
    Constraints c{};
    for (int i = 0; i < 2; ++i) {
        const RadialProfile& p = *ctx_.profile;
        c[3 * i] = inner_product(e, place_profile(p, grid_, zs[i], ws[i], cs[i], ProfileKind::Dx));
        c[3 * i + 1] = inner_product(e, place_profile(p, grid_, zs[i], ws[i], cs[i], ProfileKind::Dy));
        c[3 * i + 2] = inner_product(e, place_profile(p, grid_, zs[i], ws[i], cs[i], ProfileKind::Q));
    }
    if (eps) *eps = std::move(e);
    return c;
}

Jacobian6 Modulator::jacobian(const Field2D& w, const ModulationState& g) const {
    const AnsatzBundle b = build_ansatz(g, grid_, ctx_);
    const Field2D eps = w - b.V;
    const double zs[2] = {g.z1, g.z2}, ws[2] = {g.w1, g.w2}, cs[2] = {1.0 + g.mu1, 1.0 + g.mu2};
    Jacobian6 J{};
    std::array<Field2D, 6> dV;  // d V / d Gamma_j, packed order
    std::array<Shapes, 2> sh;
    for (int i = 0; i < 2; ++i) {
        sh[i] = shapes_of(ctx_, grid_, zs[i], ws[i], cs[i]);
        dV[i] = -1.0 * sh[i].Dx;
        dV[i] += va_rate(b, g, grid_, ctx_, i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0);
        dV[2 + i] = -1.0 * sh[i].Dy;
        dV[4 + i] = sh[i].L;
    }
    for (int i = 0; i < 2; ++i) {
        const Shapes& s = sh[i];
        const Field2D* phi[3] = {&s.Dx, &s.Dy, &s.R};
        for (int m = 0; m < 3; ++m)
            for (int j = 0; j < 6; ++j) J[3 * i + m][j] = -inner_product(dV[j], *phi[m]);
        // the test directions move with (z_i, w_i, mu_i) only
        const Field2D dxx = derivative(s.Dx, Axis::x, 1), dxy = derivative(s.Dx, Axis::y, 1),
                      dyy = derivative(s.Dy, Axis::y, 1);
        const Field2D dxl = derivative(s.L, Axis::x, 1), dyl = derivative(s.L, Axis::y, 1);
        const Field2D* dphi[3][3] = {{&dxx, &dxy, &dxl}, {&dxy, &dyy, &dyl}, {&s.Dx, &s.Dy, &s.L}};
        const double sgn[3] = {-1.0, -1.0, 1.0};
        const int col[3] = {i, 2 + i, 4 + i};
        for (int m = 0; m < 3; ++m)
            for (int n = 0; n < 3; ++n) J[3 * i + m][col[n]] += sgn[n] * inner_product(eps, *dphi[m][n]);
    }
    return J;
}

Jacobian6 Modulator::jacobian_fd(const Field2D& w, const ModulationState& g, double h) const {
    Jacobian6 J{};
    for (int j = 0; j < 6; ++j) {
        std::array<double, 6> e{};
        e[j] = 1.0;
        const Constraints cp = constraints(w, shifted(g, e, h)), cm = constraints(w, shifted(g, e, -h));
        for (int k = 0; k < 6; ++k) J[k][j] = (cp[k] - cm[k]) / (2.0 * h);
    }
    return J;
}

FitResult Modulator::fit(const Field2D& w, const ModulationState& init) const {
    init.validate();
    FitResult r;
    r.gamma = init;
    r.gamma.rates.reset();
    r.residuals = constraints(w, r.gamma, &r.eps);
    auto trust = [&](const Field2D& e) {
        const double n = h1_norm(e);
        if (!(n <= sigma_))
            throw TrustRegionError("fit: ||w - V||_H1 = " + std::to_string(n) + " exceeds sigma = " +
                                   std::to_string(sigma_));
        return n;
    };
    trust(r.eps);
    const double target = opt_.tol * q_norm2_;
    while (max_abs(r.residuals) > target) {
        if (r.iterations >= opt_.max_newton)
            throw NonconvergenceError("fit: residual " + std::to_string(max_abs(r.residuals)) +
                                      " after " + std::to_string(opt_.max_newton) + " Newton steps");
        const Jacobian6 J = jacobian(w, r.gamma);
        Eigen::Matrix<double, 6, 6> A;
        Eigen::Matrix<double, 6, 1> rhs;
        for (int k = 0; k < 6; ++k) {
            for (int j = 0; j < 6; ++j) A(k, j) = J[k][j];
            rhs(k) = -r.residuals[k];
        }
        const Eigen::Matrix<double, 6, 1> d = A.colPivHouseholderQr().solve(rhs);
        std::array<double, 6> step{};
        for (int k = 0; k < 6; ++k) step[k] = d(k);

        const double n0 = norm2(r.residuals);
        bool accepted = false;
        double s = 1.0;
        for (int h = 0; h <= opt_.max_halvings && !accepted; ++h, s *= 0.5) {
            ModulationState trial = shifted(r.gamma, step, s);
            Field2D e;
            Constraints c;
            try {
                trial.validate();
                c = constraints(w, trial, &e);
            } catch (const SeparationError&) {
                continue;
            } catch (const std::invalid_argument&) {
                continue;
            }
            if (norm2(c) < n0) {
                r.gamma = trial;
                r.residuals = c;
                r.eps = std::move(e);
                accepted = true;
            }
        }
        ++r.iterations;
        if (!accepted)
            throw NonconvergenceError("fit: no decrease along the Newton direction at step " +
                                      std::to_string(r.iterations));
        trust(r.eps);
    }
    r.eps_h1 = h1_norm(r.eps);
    r.eps_l2 = l2_norm(r.eps);
    return r;
}

FitResult fit_parameters(const Field2D& w, const ModulationState& init, const AnsatzContext& ctx,
                         FitOptions opt) {
    return Modulator(w.grid, ctx, opt).fit(w, init);
}

double weight_psi(double x, double rho) {
    return 2.0 / std::numbers::pi * std::atan(std::exp(8.0 * rho * x));
}

double weight_psi_prime(double x, double rho) {
    return 8.0 * rho / (std::numbers::pi * std::cosh(8.0 * rho * x));
}

double energy_functional(const Field2D& eps, const AnsatzBundle& b, const ModulationState& g,
                         double rho, Functional which) {
    check_same_grid(eps, b.V);
    const Grid2D& gr = eps.grid;
    const Field2D ex = derivative(eps, Axis::x, 1), ey = derivative(eps, Axis::y, 1);
    const double mid = 0.5 * (g.z1 + g.z2);
    const double m1 = g.mu1, m2 = g.mu2;
    const double a1 = 1.0 / ((1.0 + m1) * (1.0 + m1)), a2 = 1.0 / ((1.0 + m2) * (1.0 + m2));
    double acc = 0.0;
    for (int i = 0; i < gr.Nx; ++i) {
        const double psi = weight_psi(gr.x(i) - mid, rho);
        for (int j = 0; j < gr.Ny; ++j) {
            const double e = eps(i, j), v = b.V(i, j);
            const double dens = 0.5 * (ex(i, j) * ex(i, j) + ey(i, j) * ey(i, j)) + 0.5 * e * e -
                                (v * e * e + e * e * e / 3.0);
            double term;
            if (which == Functional::plus) {
                term = dens + 0.5 * e * e * (m1 * psi + m2 * (1.0 - psi));
            } else {
                const double pe = a1 * psi + a2 * (1.0 - psi);
                const double pm = m1 * a1 * psi + m2 * a2 * (1.0 - psi);
                term = dens * pe + 0.5 * e * e * pm;
            }
            acc += term - b.S(i, j) * e;
        }
    }
    return acc * gr.dx() * gr.dy();
}

double cutoff_chi(double s) {
    auto f = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    const double a = f(2.0 - s), b = f(s - 1.0);
    return a / (a + b);
}

TransverseFunctionals transverse_functionals(const Field2D& eps, const ModulationState& g,
                                             const Grid2D& grid, const AnsatzContext& ctx, double mu0) {
    if (!(mu0 > 0.0)) throw std::invalid_argument("transverse_functionals: mu0 must be positive");
    check_same_grid(eps, Field2D(grid));
    TransverseFunctionals out;
    const double zs[2] = {g.z1, g.z2}, ws[2] = {g.w1, g.w2}, cs[2] = {1.0 + g.mu1, 1.0 + g.mu2};
    std::vector<double> chi(grid.Nx);
    for (int i = 0; i < grid.Nx; ++i) chi[i] = cutoff_chi(mu0 * grid.x(i));
    for (int s = 0; s < 2; ++s) {
        const Field2D dy = place_profile(*ctx.profile, grid, zs[s], ws[s], cs[s], ProfileKind::Dy);
        // A = int_x^{+inf}; the integral from the left edge is the row total minus A
        const Field2D A = antiderivative_x(dy);
        Field2D K(grid);
        for (int i = 0; i < grid.Nx; ++i)
            for (int j = 0; j < grid.Ny; ++j) K(i, j) = chi[i] * (A(0, j) - A(i, j));
        const double k = inner_product(eps, K);
        if (s == 0) {
            out.k1 = k;
            out.K1 = std::move(K);
        } else {
            out.k2 = k;
            out.K2 = std::move(K);
        }
    }
    return out;
}

Tracker::Tracker(const Modulator& mod, const ModulationState& g0, TrackOptions opt, const ZDynamics* zd,
                 const ZTrajectory* ref)
    : mod_(mod), opt_(opt), zd_(zd), ref_(ref), last_(g0) {}

const ModulationRecord& Tracker::observe(double t, const Field2D& w) {
    ModulationState guess = last_;
    if (last_t_) {
        const double dt = t - *last_t_;
        const auto a = mod_.context().coeffs->at(last_.z());
        guess.z1 += dt * (last_.mu1 + a.alpha1);
        guess.z2 += dt * (last_.mu2 + a.alpha2);
        guess.mu1 -= dt * a.gamma1;
        guess.mu2 -= dt * a.gamma2;
    }
    FitResult f;
    try {
        f = mod_.fit(w, guess);
    } catch (const Error& e) {
        throw LossOfLockError("track: fit failed at t = " + std::to_string(t) + ": " + e.what());
    }
    ModulationRecord rec;
    rec.t = t;
    rec.gamma = f.gamma;
    rec.eps_h1 = f.eps_h1;
    rec.eps_l2 = f.eps_l2;
    rec.eps_h1_local = restricted_h1(f.eps, std::min(f.gamma.z1, f.gamma.z2) - 10.0);
    rec.ortho_residuals = f.residuals;
    rec.iterations = f.iterations;
    if (opt_.functionals) {
        const AnsatzBundle b = build_ansatz(f.gamma, mod_.grid(), mod_.context());
        rec.f_plus = energy_functional(f.eps, b, f.gamma, opt_.rho, Functional::plus);
        rec.f_minus = energy_functional(f.eps, b, f.gamma, opt_.rho, Functional::minus);
        rec.s_h1 = h1_norm(b.S);
        const auto k = transverse_functionals(f.eps, f.gamma, mod_.grid(), mod_.context(), opt_.mu0);
        rec.k1 = k.k1;
        rec.k2 = k.k2;
    }
    if (zd_ && ref_ && std::abs(t) <= ref_->t_end) {
        const ZSample s = zd_->state_at(*ref_, t);
        rec.z_ref = s.Z;
        rec.zdot_ref = s.Zdot;
    }
    last_ = f.gamma;
    last_t_ = t;
    records_.push_back(rec);
    return records_.back();
}

TrackResult track(const std::vector<std::string>& snapshot_bases, const Modulator& mod,
                  const ModulationState& g0, TrackOptions opt, const ZDynamics* zd, const ZTrajectory* ref) {
    Tracker tr(mod, g0, opt, zd, ref);
    TrackResult out;
    for (const auto& base : snapshot_bases) {
        double t = 0.0;
        const Field2D w = load_field(base, &t);
        try {
            tr.observe(t, w);
        } catch (const LossOfLockError& e) {
            out.lost_lock = true;
            out.message = e.what();
            break;
        }
    }
    out.records = tr.records();
    return out;
}

std::vector<ModulationRates> record_rates(const std::vector<ModulationRecord>& recs) {
    std::vector<ModulationRates> out;
    for (std::size_t k = 1; k + 1 < recs.size(); ++k) {
        const auto a = recs[k - 1].gamma.packed(), b = recs[k + 1].gamma.packed();
        const double h = recs[k + 1].t - recs[k - 1].t;
        ModulationRates r;
        r.dz1 = (b[0] - a[0]) / h;
        r.dz2 = (b[1] - a[1]) / h;
        r.dw1 = (b[2] - a[2]) / h;
        r.dw2 = (b[3] - a[3]) / h;
        r.dmu1 = (b[4] - a[4]) / h;
        r.dmu2 = (b[5] - a[5]) / h;
        out.push_back(r);
    }
    return out;
}

void write_records_csv(const std::vector<ModulationRecord>& recs, const std::string& path,
                       const std::string& header_comment) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_records_csv: cannot open " + path);
    os << header_comment;
    os << "t,z1,z2,w1,w2,mu1,mu2,eps_h1,eps_l2,eps_h1_local,z_minus_Z,mu_minus_Zdot,F_plus,F_minus,K1,K2,"
          "max_ortho,iterations\n";
    os << std::setprecision(12);
    for (const auto& r : recs) {
        const auto& g = r.gamma;
        os << r.t << ',' << g.z1 << ',' << g.z2 << ',' << g.w1 << ',' << g.w2 << ',' << g.mu1 << ','
           << g.mu2 << ',' << r.eps_h1 << ',' << r.eps_l2 << ',' << r.eps_h1_local << ',';
        if (r.z_ref) os << g.z() - *r.z_ref;
        os << ',';
        if (r.zdot_ref) os << (g.mu1 - g.mu2) - *r.zdot_ref;
        os << ',' << r.f_plus << ',' << r.f_minus << ',' << r.k1 << ',' << r.k2 << ','
           << max_abs(r.ortho_residuals) << ',' << r.iterations << '\n';
    }
}

}  // namespace zk
