#include "zk/interaction.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "zk/bessel.hpp"
#include "zk/errors.hpp"

namespace zk {

using boost::math::quadrature::gauss_kronrod;

RadialTable::RadialTable(double h, std::vector<double> u, std::vector<double> du,
                         std::vector<double> d2u)
    : h_(h), n_(u.size()) {
    interp_ = std::make_shared<Interp>(std::move(u), std::move(du), std::move(d2u), 0.0, h);
}

double RadialTable::eval(double r, int deriv) const {
    double sign = 1.0;
    if (r < 0.0) {
        r = -r;
        if (deriv == 1) sign = -1.0;
    }
    if (r > r_end()) return 0.0;
    if (deriv == 0) return (*interp_)(r);
    if (deriv == 1) return sign * interp_->prime(r);
    return interp_->double_prime(r);
}

RadialTable radial_bessel_potential(const std::function<double(double)>& f, double r_end, double h) {
    const auto n = static_cast<std::size_t>(std::llround(r_end / h));
    std::vector<double> C(n + 1, 0.0), D(n + 1, 0.0);
    auto gi = [&](double s) { return bessel_i0(s) * f(s) * s; };
    auto gk = [&](double s) { return s > 0.0 ? bessel_k0(s) * f(s) * s : 0.0; };
    for (std::size_t k = 1; k <= n; ++k)
        C[k] = C[k - 1] + gauss_kronrod<double, 15>::integrate(gi, (k - 1) * h, k * h, 0);
    for (std::size_t k = n; k-- > 0;)
        D[k] = D[k + 1] + gauss_kronrod<double, 15>::integrate(gk, k * h, (k + 1) * h, 0);
    std::vector<double> u(n + 1), du(n + 1), d2u(n + 1);
    u[0] = D[0];
    du[0] = 0.0;
    d2u[0] = 0.5 * (u[0] - f(0.0));
    for (std::size_t k = 1; k <= n; ++k) {
        const double r = k * h;
        u[k] = bessel_k0(r) * C[k] + bessel_i0(r) * D[k];
        du[k] = bessel_k0(r, 1) * C[k] + bessel_i1(r) * D[k];
        d2u[k] = -du[k] / r + u[k] - f(r);
    }
    return RadialTable(h, std::move(u), std::move(du), std::move(d2u));
}

double polar_integral(const std::function<double(double, double)>& inner, double r_end, double tol) {
    // integrands here are even in theta, so fold onto [0, pi]
    auto ring = [&](double r) {
        if (r == 0.0) return 0.0;
        auto ang = [&](double th) { return inner(r, th); };
        return 2.0 * r * gauss_kronrod<double, 31>::integrate(ang, 0.0, std::numbers::pi, 15, tol);
    };
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(ring, 0.0, r_end, 15, tol, &err);
    if (!std::isfinite(v)) throw QuadratureError("polar_integral: quadrature did not converge");
    return v;
}

namespace {

double support_radius(const RadialProfile& p) { return p.r_max + 10.0; }

double translated_radius(double r, double th, double z) {
    return std::sqrt(std::max(0.0, r * r + z * z + 2.0 * r * z * std::cos(th)));
}

}  // namespace

double attraction_integral(const RadialProfile& p, double z) {
    return polar_integral(
        [&](double r, double th) {
            return 2.0 * p.eval(r) * p.eval(r, 1) * std::cos(th) * p.eval(translated_radius(r, th, z));
        },
        support_radius(p));
}

double overlap_integral(const RadialProfile& p, double z) {
    return polar_integral(
        [&](double r, double th) {
            const double q = p.eval(r);
            return q * q * p.eval(translated_radius(r, th, z));
        },
        support_radius(p));
}

double attraction_derivative(const RadialProfile& p, double z) {
    return polar_integral(
        [&](double r, double th) {
            const double c = std::cos(th);
            const double rho = translated_radius(r, th, z);
            if (rho == 0.0) return 0.0;
            const double dxq = p.eval(rho, 1) * (r * c + z) / rho;
            return 2.0 * p.eval(r) * p.eval(r, 1) * c * dxq;
        },
        support_radius(p));
}

double InteractionTable::normalized_G(std::size_t i) const {
    return G[i] * std::sqrt(z_values[i]) * std::exp(z_values[i]);
}
double InteractionTable::normalized_F(std::size_t i) const {
    return F[i] * std::sqrt(z_values[i]) * std::exp(z_values[i]);
}

InteractionTable build_interaction_table(const RadialProfile& p, double z_min, double z_max,
                                         double step) {
    if (!(step > 0.0) || z_max <= z_min || z_min < 0.0)
        throw std::invalid_argument("build_interaction_table: bad range");
    InteractionTable t;
    const auto n = static_cast<std::size_t>(std::llround((z_max - z_min) / step));
    for (std::size_t k = 0; k <= n; ++k) {
        const double z = z_min + k * step;
        t.z_values.push_back(z);
        t.G.push_back(attraction_integral(p, z));
        t.F.push_back(overlap_integral(p, z));
        t.dG.push_back(attraction_derivative(p, z));
    }
    return t;
}

void save_interaction_table(const InteractionTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_interaction_table: cannot open " + path);
    out << std::setprecision(17) << "# zk-interaction-table v1\n# z G F dG\n";
    for (std::size_t i = 0; i < t.z_values.size(); ++i)
        out << t.z_values[i] << ' ' << t.G[i] << ' ' << t.F[i] << ' ' << t.dG[i] << '\n';
}

InteractionTable load_interaction_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_interaction_table: cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "# zk-interaction-table v1") throw std::runtime_error("load_interaction_table: bad header");
    InteractionTable t;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double z, g, f, dg;
        ss >> z >> g >> f >> dg;
        t.z_values.push_back(z);
        t.G.push_back(g);
        t.F.push_back(f);
        t.dG.push_back(dg);
    }
    return t;
}

InteractionModel::InteractionModel(InteractionTable table) : table_(std::move(table)) {
    const auto& t = table_;
    const std::size_t n = t.z_values.size();
    if (n < 4) throw std::invalid_argument("InteractionModel: table too short");
    std::vector<double> y(n), dy(n), d2y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = t.G[i] / t.F[i];
        y[i] = std::log(t.F[i]);
        dy[i] = -r;
        d2y[i] = -t.dG[i] / t.F[i] - r * r;
    }
    const double step = t.z_values[1] - t.z_values[0];
    lnf_ = std::make_shared<Interp>(std::move(y), std::move(dy), std::move(d2y), t.z_values[0], step);
}

void InteractionModel::check_range(double z) const {
    if (z < table_.z_min() || z > table_.z_max())
        throw TableRangeError("interaction table does not cover z = " + std::to_string(z));
}

double InteractionModel::F(double z) const {
    check_range(z);
    return std::exp((*lnf_)(z));
}

double InteractionModel::G(double z) const {
    check_range(z);
    return -lnf_->prime(z) * std::exp((*lnf_)(z));
}

Field2D w_profile(const RadialProfile& p, const Grid2D& g, double xc) {
    return antiderivative_x(bessel_potential(place_profile(p, g, xc, 0.0, 1.0, ProfileKind::Lambda)));
}

Field2D plateau(const RadialProfile& p, const Grid2D& g, double z1, double z2) {
    return w_profile(p, g, z1) - w_profile(p, g, z2);
}

AuxProfiles auxiliary_profiles(const RadialProfile& p, const Grid2D& g) {
    AuxProfiles a;
    a.X = -1.0 * bessel_potential(place_profile(p, g, 0.0, 0.0));
    a.Y = antiderivative_x(bessel_potential(place_profile(p, g, 0.0, 0.0, 1.0, ProfileKind::Dy)));
    a.W = w_profile(p, g, 0.0);
    // row limits at the left edge equal the full row integrals
    a.h.resize(g.Ny);
    a.l.resize(g.Ny);
    for (int j = 0; j < g.Ny; ++j) {
        a.h[j] = a.Y(0, j);
        a.l[j] = a.W(0, j);
    }
    return a;
}

CoefficientModel::CoefficientModel(const RadialProfile& p, const GroundStateConstants& gc,
                                   double z_star)
    : p_(&p), z_star_(z_star) {
    lam_q_q_ = gc.lam_q_q;
    c_ = 1.0 / (gc.lam_q_q + gc.bessel_q_q);
    bl_ = radial_bessel_potential(
        [&](double r) { return 2.0 * p.eval(r) * p.eval_lambda(r); }, p.r_max + 10.0);

    const Grid2D g = Grid2D::make(32.0, 32.0, 256, 256);
    const Field2D q = place_profile(p, g, 0.0, 0.0);
    const Field2D lq = place_profile(p, g, 0.0, 0.0, 1.0, ProfileKind::Lambda);
    const Field2D dxq = place_profile(p, g, 0.0, 0.0, 1.0, ProfileKind::Dx);
    const Field2D w = w_profile(p, g, 0.0);
    const Field2D qw = 2.0 * (q * w);
    w_lambda_ = inner_product(qw, lq);
    w_dxq_ = inner_product(qw, dxq);
}

double CoefficientModel::phi(double r) const { return 2.0 * p_->eval(r) * bl_.eval(r); }

double CoefficientModel::cross_integral(double z) const {
    return polar_integral(
        [&](double r, double th) { return phi(r) * p_->eval(translated_radius(r, th, z)); },
        p_->r_max + 10.0);
}

AnsatzCoefficients CoefficientModel::at(double z) const {
    if (z < z_star_)
        throw SeparationError("ansatz coefficients: separation " + std::to_string(z) +
                              " below the validated minimum");
    AnsatzCoefficients a;
    a.z = z;
    const double G = attraction_integral(*p_, z);
    a.gamma1 = -G / lam_q_q_;
    a.gamma2 = -a.gamma1;
    a.alpha1 = c_ * (cross_integral(z) - w_lambda_ / lam_q_q_ * G);
    a.alpha2 = a.alpha1;
    return a;
}

double CoefficientModel::dalpha(double z) const {
    const double s = 1e-3;
    return (at(z + s).alpha1 - at(z - s).alpha1) / (2.0 * s);
}

double CoefficientModel::dgamma(double z) const {
    const double s = 1e-3;
    return (at(z + s).gamma1 - at(z - s).gamma1) / (2.0 * s);
}

}  // namespace zk
