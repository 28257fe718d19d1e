#include "zk/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "zk/bessel.hpp"
#include "zk/errors.hpp"

namespace zk {

namespace {

// (-Delta + 1 + s)^{-1}
Field2D shifted_bessel(const Field2D& f, double s) {
    const Grid2D& g = f.grid;
    Spectrum sp = forward(f);
    const int nyh = g.Ny / 2 + 1;
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < nyh; ++j)
            sp[static_cast<std::size_t>(i) * nyh + j] /= 1.0 + s + g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j);
    return inverse(sp, g);
}

std::pair<int, int> argmax(const Field2D& f) {
    const auto it = std::max_element(f.v.begin(), f.v.end());
    const auto k = static_cast<int>(it - f.v.begin());
    return {k / f.grid.Ny, k % f.grid.Ny};
}

// L2 projection off an orthogonal family
void project_out(Field2D& f, const std::vector<Field2D>& basis) {
    for (const auto& b : basis) f.axpy(-inner_product(f, b) / inner_product(b, b), b);
}

std::vector<Field2D> kernel_of(const Field2D& q) {
    return {derivative(q, Axis::x, 1), derivative(q, Axis::y, 1)};
}

}  // namespace

Field2D apply_L(const Field2D& f, const Field2D& q) {
    check_same_grid(f, q);
    return helmholtz(f) - 2.0 * (q * f);
}

double rayleigh_quotient(const Field2D& f, const Field2D& q) {
    return inner_product(apply_L(f, q), f) / inner_product(f, f);
}

EigenPair negative_eigenpair(const Field2D& q, double tol, int max_iter) {
    if (!(tol > 0.0) || tol > 1e-8) throw std::invalid_argument("negative_eigenpair: tol must be <= 1e-8");
    EigenPair e;
    Field2D chi = q;
    chi *= 1.0 / l2_norm(chi);
    double lam = -rayleigh_quotient(chi, q);
    const Field2D q2 = 2.0 * q;
    for (int it = 1; it <= max_iter; ++it) {
        chi = shifted_bessel(q2 * chi, lam);
        chi *= 1.0 / l2_norm(chi);
        const Field2D lchi = apply_L(chi, q);
        lam = -inner_product(lchi, chi);
        Field2D r = lchi;
        r.axpy(lam, chi);
        e.residual = l2_norm(r);
        e.iterations = it;
        if (e.residual <= tol) break;
    }
    if (e.residual > tol)
        throw NonconvergenceError("negative_eigenpair: residual " + std::to_string(e.residual) +
                                  " after " + std::to_string(max_iter) + " iterations");
    if (inner_product(chi, q) < 0.0) chi *= -1.0;
    e.lambda0 = lam;
    e.chi0 = std::move(chi);
    return e;
}

SolveReport solve_L(const Field2D& h, const Field2D& q, double tol, int max_iter) {
    check_same_grid(h, q);
    SolveReport rep;
    const double hn = l2_norm(h);
    if (hn == 0.0) {
        rep.f = Field2D(h.grid);
        return rep;
    }
    const auto ker = kernel_of(q);
    for (const auto& k : ker) {
        if (std::abs(inner_product(h, k)) > tol * hn * l2_norm(k))
            throw IllPosedError("solve_L: right-hand side has a kernel component");
    }
    Field2D hp = h;
    project_out(hp, ker);

    const Field2D q2 = 2.0 * q;
    auto op = [&](const Field2D& f) {
        Field2D y = f - bessel_potential(q2 * f);
        project_out(y, ker);
        return y;
    };
    Field2D b = bessel_potential(hp);
    project_out(b, ker);
    const double bn = l2_norm(b);

    // restarted GMRES(m), Givens rotations on the Hessenberg matrix
    const int m = 40;
    Field2D x(h.grid);
    int total = 0;
    double rel = 1.0;
    while (total < max_iter) {
        Field2D r = b - op(x);
        double beta = l2_norm(r);
        rel = beta / bn;
        if (rel <= tol) break;
        std::vector<Field2D> V;
        V.push_back((1.0 / beta) * r);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        Eigen::VectorXd cs(m), sn(m), g = Eigen::VectorXd::Zero(m + 1);
        g(0) = beta;
        int k = 0;
        for (; k < m && total < max_iter; ++k, ++total) {
            Field2D w = op(V[k]);
            for (int j = 0; j <= k; ++j) {
                H(j, k) = inner_product(w, V[j]);
                w.axpy(-H(j, k), V[j]);
            }
            H(k + 1, k) = l2_norm(w);
            for (int j = 0; j < k; ++j) {
                const double t = cs(j) * H(j, k) + sn(j) * H(j + 1, k);
                H(j + 1, k) = -sn(j) * H(j, k) + cs(j) * H(j + 1, k);
                H(j, k) = t;
            }
            const double den = std::hypot(H(k, k), H(k + 1, k));
            cs(k) = H(k, k) / den;
            sn(k) = H(k + 1, k) / den;
            H(k, k) = den;
            H(k + 1, k) = 0.0;
            g(k + 1) = -sn(k) * g(k);
            g(k) = cs(k) * g(k);
            const double hk1 = l2_norm(w);
            if (std::abs(g(k + 1)) / bn <= tol || hk1 == 0.0) {
                ++k;
                ++total;
                break;
            }
            V.push_back((1.0 / hk1) * w);
        }
        const Eigen::VectorXd yv =
            H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        for (int j = 0; j < k; ++j) x.axpy(yv(j), V[j]);
    }
    project_out(x, ker);
    Field2D res = apply_L(x, q) - hp;
    rep.residual = l2_norm(res) / hn;
    rep.iterations = total;
    rep.f = std::move(x);
    if (rel > tol && rep.residual > std::sqrt(tol))
        throw NonconvergenceError("solve_L: GMRES stalled at relative residual " + std::to_string(rel));
    return rep;
}

CoercivityReport coercivity_sample(const Field2D& q, int n_samples, std::uint64_t seed) {
    if (n_samples < 100) throw std::invalid_argument("coercivity_sample: need at least 100 samples");
    const Grid2D& g = q.grid;
    const auto [ic, jc] = argmax(q);
    const double xc = g.x(ic), yc = g.y(jc);
    std::vector<Field2D> dirs = kernel_of(q);
    dirs.push_back(q);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CoercivityReport rep;
    rep.min_quotient = std::numeric_limits<double>::infinity();
    rep.max_quotient = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_samples; ++s) {
        Field2D f(g);
        const int bumps = 1 + static_cast<int>(u(rng) * 4.0);
        for (int b = 0; b < bumps; ++b) {
            const double rad = 5.0 * std::sqrt(u(rng)), th = 2.0 * std::numbers::pi * u(rng);
            const double bx = xc + rad * std::cos(th), by = yc + rad * std::sin(th);
            const double w = 0.5 + 2.5 * u(rng), a = 2.0 * u(rng) - 1.0;
            for (int i = 0; i < g.Nx; ++i) {
                const double dx2 = (g.x(i) - bx) * (g.x(i) - bx);
                for (int j = 0; j < g.Ny; ++j) {
                    const double d2 = dx2 + (g.y(j) - by) * (g.y(j) - by);
                    f(i, j) += a * std::exp(-d2 / (w * w));
                }
            }
        }
        project_out(f, dirs);
        const double rq = rayleigh_quotient(f, q);
        rep.min_quotient = std::min(rep.min_quotient, rq);
        rep.max_quotient = std::max(rep.max_quotient, rq);
    }
    rep.n_samples = n_samples;
    return rep;
}

TailRatio chi0_tail_ratio(const EigenPair& e, double x0, double y0, double r_lo, double r_hi) {
    const Grid2D& g = e.chi0.grid;
    const Spectrum s = forward(e.chi0);
    const double k = std::sqrt(1.0 + e.lambda0);
    TailRatio t;
    for (double r = r_lo; r <= r_hi + 1e-12; r += g.dx()) {
        t.r.push_back(r);
        t.ratio.push_back(sample_spectrum(s, g, x0 + r, y0) / bessel_k0(k * r));
    }
    double lo = t.ratio.front(), hi = lo, sum = 0.0;
    for (double v : t.ratio) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    t.mean = sum / static_cast<double>(t.ratio.size());
    t.spread = (hi - lo) / std::abs(t.mean);
    return t;
}

double angular_variance(const Field2D& f, double x0, double y0, const std::vector<double>& radii,
                        int n_angles) {
    const Spectrum s = forward(f);
    double worst = 0.0;
    for (double r : radii) {
        double m = 0.0, m2 = 0.0;
        for (int a = 0; a < n_angles; ++a) {
            const double th = 2.0 * std::numbers::pi * a / n_angles;
            const double v = sample_spectrum(s, f.grid, x0 + r * std::cos(th), y0 + r * std::sin(th));
            m += v;
            m2 += v * v;
        }
        m /= n_angles;
        m2 /= n_angles;
        worst = std::max(worst, (m2 - m * m) / (m * m));
    }
    return worst;
}

}  // namespace zk
