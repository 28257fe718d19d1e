#include "zk/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include <fftw3.h>

#include "zk/errors.hpp"
#include "zk/profile.hpp"

namespace zk {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

// FFTW planning is not thread-safe; execution with new arrays is.
Plans plans_for(int nx, int ny) {
    static std::mutex m;
    static std::map<std::pair<int, int>, Plans> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find({nx, ny});
    if (it != cache.end()) return it->second;
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    const std::size_t ns = static_cast<std::size_t>(nx) * (ny / 2 + 1);
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(ns);
    Plans p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.r2c = fftw_plan_dft_r2c_2d(nx, ny, in, out, flags);
    p.c2r = fftw_plan_dft_c2r_2d(nx, ny, out, in, flags);
    fftw_free(in);
    fftw_free(out);
    cache[{nx, ny}] = p;
    return p;
}

int signed_index(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace

Grid2D Grid2D::make(double Lx, double Ly, int Nx, int Ny) {
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw ConfigError("Grid2D: half-lengths must be positive");
    if (!is_pow2(Nx) || !is_pow2(Ny) || Nx < 4 || Ny < 4)
        throw ConfigError("Grid2D: point counts must be powers of two >= 4");
    Grid2D g;
    g.Lx = Lx;
    g.Ly = Ly;
    g.Nx = Nx;
    g.Ny = Ny;
    return g;
}

double Grid2D::kx(int i) const { return std::numbers::pi / Lx * signed_index(i, Nx); }
double Grid2D::ky(int j) const { return std::numbers::pi / Ly * j; }

Field2D& Field2D::operator+=(const Field2D& o) {
    check_same_grid(*this, o);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += o.v[k];
    return *this;
}
Field2D& Field2D::operator-=(const Field2D& o) {
    check_same_grid(*this, o);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= o.v[k];
    return *this;
}
Field2D& Field2D::operator*=(double s) {
    for (double& x : v) x *= s;
    return *this;
}
Field2D& Field2D::axpy(double a, const Field2D& x) {
    check_same_grid(*this, x);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += a * x.v[k];
    return *this;
}
double Field2D::max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
Field2D operator*(double s, Field2D a) { return a *= s; }
Field2D operator*(const Field2D& a, const Field2D& b) {
    check_same_grid(a, b);
    Field2D out(a.grid);
    for (std::size_t k = 0; k < a.v.size(); ++k) out.v[k] = a.v[k] * b.v[k];
    return out;
}

void check_same_grid(const Field2D& a, const Field2D& b) {
    if (!(a.grid == b.grid)) throw GridMismatchError("fields live on different grids");
}

Spectrum forward(const Field2D& f) {
    const Plans p = plans_for(f.grid.Nx, f.grid.Ny);
    Spectrum s(f.grid.spec_size());
    std::vector<double> in = f.v;
    fftw_execute_dft_r2c(p.r2c, in.data(), reinterpret_cast<fftw_complex*>(s.data()));
    return s;
}

Field2D inverse(const Spectrum& s, const Grid2D& g) {
    const Plans p = plans_for(g.Nx, g.Ny);
    Spectrum tmp = s;  // c2r overwrites its input
    Field2D out(g);
    fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.v.data());
    out *= 1.0 / static_cast<double>(g.size());
    return out;
}

namespace {

template <class Mult>
Field2D apply_multiplier(const Field2D& f, Mult&& mult) {
    Spectrum s = forward(f);
    const Grid2D& g = f.grid;
    const int nyh = g.Ny / 2 + 1;
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < nyh; ++j) s[static_cast<std::size_t>(i) * nyh + j] *= mult(i, j);
    return inverse(s, g);
}

}  // namespace

Field2D derivative(const Field2D& f, Axis axis, int order) {
    if (order < 1 || order > 2) throw std::invalid_argument("derivative: order must be 1 or 2");
    const Grid2D& g = f.grid;
    return apply_multiplier(f, [&](int i, int j) -> std::complex<double> {
        const bool nyq = axis == Axis::x ? (i == g.Nx / 2) : (j == g.Ny / 2);
        const double k = axis == Axis::x ? g.kx(i) : g.ky(j);
        if (order == 1) return nyq ? 0.0 : std::complex<double>(0.0, k);
        return -k * k;
    });
}

Field2D gradient_x(const Field2D& f) { return derivative(f, Axis::x, 1); }

Field2D laplacian(const Field2D& f) {
    const Grid2D& g = f.grid;
    return apply_multiplier(f, [&](int i, int j) -> std::complex<double> {
        return -(g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j));
    });
}

Field2D helmholtz(const Field2D& f) {
    const Grid2D& g = f.grid;
    return apply_multiplier(f, [&](int i, int j) -> std::complex<double> {
        return 1.0 + g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j);
    });
}

Field2D bessel_potential(const Field2D& f) {
    const Grid2D& g = f.grid;
    return apply_multiplier(f, [&](int i, int j) -> std::complex<double> {
        return 1.0 / (1.0 + g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j));
    });
}

Field2D antiderivative_x(const Field2D& f, bool check) {
    const Grid2D& g = f.grid;
    if (check) {
        const double scale = f.max_abs();
        double edge = 0.0;
        for (int j = 0; j < g.Ny; ++j)
            for (int i : {0, 1, g.Nx - 2, g.Nx - 1}) edge = std::max(edge, std::abs(f(i, j)));
        if (edge > 1e-8 * scale)
            throw NonDecayingError("antiderivative_x: input does not decay at the x edges");
    }
    // row means, then the periodic antiderivative P of f - mean
    std::vector<double> mean(g.Ny, 0.0);
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < g.Ny; ++j) mean[j] += f(i, j);
    for (double& m : mean) m /= g.Nx;
    const Field2D P = apply_multiplier(f, [&](int i, int) -> std::complex<double> {
        if (i == 0 || i == g.Nx / 2) return 0.0;
        return 1.0 / std::complex<double>(0.0, g.kx(i));
    });
    // int_x^{Lx} f = m (Lx - x) + P(Lx) - P(x), with P(Lx) = P(-Lx)
    Field2D out(g);
    for (int i = 0; i < g.Nx; ++i)
        for (int j = 0; j < g.Ny; ++j)
            out(i, j) = mean[j] * (g.Lx - g.x(i)) + P(0, j) - P(i, j);
    return out;
}

double inner_product(const Field2D& f, const Field2D& g) {
    check_same_grid(f, g);
    double s = 0.0;
    for (std::size_t k = 0; k < f.v.size(); ++k) s += f.v[k] * g.v[k];
    return s * f.grid.dx() * f.grid.dy();
}

double l2_norm(const Field2D& f) { return std::sqrt(inner_product(f, f)); }

// sum over modes of (1 + |k|^2) |f_k|^2, scaled to the continuous integral
double h1_norm_spectrum(const Spectrum& s, const Grid2D& g) {
    const int nyh = g.Ny / 2 + 1;
    double acc = 0.0;
    for (int i = 0; i < g.Nx; ++i) {
        for (int j = 0; j < nyh; ++j) {
            const double w = (j == 0 || j == g.Ny / 2) ? 1.0 : 2.0;
            const double k2 = g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j);
            acc += w * (1.0 + k2) * std::norm(s[static_cast<std::size_t>(i) * nyh + j]);
        }
    }
    return std::sqrt(acc * g.dx() * g.dy() / static_cast<double>(g.size()));
}

double h1_norm(const Field2D& f) { return h1_norm_spectrum(forward(f), f.grid); }

Norms norms(const Field2D& f) {
    Norms n;
    n.l2 = l2_norm(f);
    n.h1 = h1_norm(f);
    double s3 = 0.0;
    for (double x : f.v) s3 += std::abs(x) * x * x;
    n.l3 = std::cbrt(s3 * f.grid.dx() * f.grid.dy());
    return n;
}

double restricted_h1(const Field2D& f, double x_min) {
    const Grid2D& g = f.grid;
    const Field2D fx = derivative(f, Axis::x, 1);
    const Field2D fy = derivative(f, Axis::y, 1);
    double acc = 0.0;
    for (int i = 0; i < g.Nx; ++i) {
        const double x = g.x(i);
        double w;
        if (x <= x_min) w = 0.0;
        else if (x >= x_min + 1.0) w = 1.0;
        else w = 0.5 * (1.0 - std::cos(std::numbers::pi * (x - x_min)));
        if (w == 0.0) continue;
        for (int j = 0; j < g.Ny; ++j)
            acc += w * (f(i, j) * f(i, j) + fx(i, j) * fx(i, j) + fy(i, j) * fy(i, j));
    }
    return std::sqrt(acc * g.dx() * g.dy());
}

bool placement_fits(const RadialProfile& p, const Grid2D& g, double x0, double y0, double c) {
    if (x0 < -g.Lx || x0 >= g.Lx || y0 < -g.Ly || y0 >= g.Ly) return false;
    const double d = std::min({x0 + g.Lx, g.Lx - x0, y0 + g.Ly, g.Ly - y0});
    return p.eval(std::sqrt(c) * d) <= 1e-10 * p.q0();
}

Field2D place_profile(const RadialProfile& p, const Grid2D& g, double x0, double y0, double c,
                      ProfileKind kind) {
    if (!(c > 0.0)) throw std::invalid_argument("place_profile: scale must be positive");
    if (!placement_fits(p, g, x0, y0, c))
        throw BoxTooSmallError("place_profile: profile tail at the box edge exceeds 1e-10 of peak");
    const double sc = std::sqrt(c);
    Field2D out(g);
    for (int i = 0; i < g.Nx; ++i) {
        const double X = g.x(i) - x0;
        for (int j = 0; j < g.Ny; ++j) {
            const double Y = g.y(j) - y0;
            const double r = sc * std::hypot(X, Y);
            double v = 0.0;
            switch (kind) {
                case ProfileKind::Q: v = c * p.eval(r); break;
                case ProfileKind::Lambda: v = p.eval_lambda(r); break;
                case ProfileKind::Lambda2: v = p.eval_lambda2(r) / c; break;
                case ProfileKind::Dx:
                case ProfileKind::Dy: {
                    if (r == 0.0) break;
                    const double comp = (kind == ProfileKind::Dx ? X : Y) * sc / r;
                    v = c * sc * p.eval(r, 1) * comp;
                    break;
                }
            }
            out(i, j) = v;
        }
    }
    return out;
}

Field2D shift(const Field2D& f, double a, double b) {
    const Grid2D& g = f.grid;
    return apply_multiplier(f, [&](int i, int j) -> std::complex<double> {
        const double ka = (i == g.Nx / 2) ? 0.0 : g.kx(i) * a;
        const double kb = (j == g.Ny / 2) ? 0.0 : g.ky(j) * b;
        std::complex<double> m = std::polar(1.0, -(ka + kb));
        // keep the Nyquist lines real
        if (i == g.Nx / 2) m *= std::cos(g.kx(i) * a);
        if (j == g.Ny / 2) m *= std::cos(g.ky(j) * b);
        return m;
    });
}

double sample_at(const Field2D& f, double x, double y) { return sample_spectrum(forward(f), f.grid, x, y); }

double sample_spectrum(const Spectrum& s, const Grid2D& g, double x, double y) {
    const int nyh = g.Ny / 2 + 1;
    const double xs = x + g.Lx, ys = y + g.Ly;
    // precompute the x phases
    std::vector<std::complex<double>> ex(g.Nx);
    for (int i = 0; i < g.Nx; ++i) {
        const double k = (i == g.Nx / 2) ? 0.0 : g.kx(i);
        ex[i] = std::polar(1.0, k * xs);
        if (i == g.Nx / 2) ex[i] = std::cos(g.kx(i) * xs);
    }
    double acc = 0.0;
    for (int j = 0; j < nyh; ++j) {
        std::complex<double> row = 0.0;
        for (int i = 0; i < g.Nx; ++i) row += s[static_cast<std::size_t>(i) * nyh + j] * ex[i];
        const double w = (j == 0 || j == g.Ny / 2) ? 1.0 : 2.0;
        if (j == g.Ny / 2) acc += w * row.real() * std::cos(g.ky(j) * ys);
        else acc += w * (row * std::polar(1.0, g.ky(j) * ys)).real();
    }
    return acc / static_cast<double>(g.size());
}

void save_field(const Field2D& f, const std::string& base, double t) {
    {
        std::ofstream bin(base + ".bin", std::ios::binary);
        if (!bin) throw std::runtime_error("save_field: cannot open " + base + ".bin");
        bin.write(reinterpret_cast<const char*>(f.v.data()),
                  static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    }
    std::ofstream meta(base + ".meta");
    meta << std::setprecision(17);
    meta << "format zk-field v1\nLx " << f.grid.Lx << "\nLy " << f.grid.Ly << "\nNx " << f.grid.Nx
         << "\nNy " << f.grid.Ny << "\nt " << t << "\nlayout x-major float64\n";
}

Field2D load_field(const std::string& base, double* t) {
    std::ifstream meta(base + ".meta");
    if (!meta) throw std::runtime_error("load_field: cannot open " + base + ".meta");
    double Lx = 0, Ly = 0, tt = 0;
    int Nx = 0, Ny = 0;
    std::string key;
    while (meta >> key) {
        if (key == "Lx") meta >> Lx;
        else if (key == "Ly") meta >> Ly;
        else if (key == "Nx") meta >> Nx;
        else if (key == "Ny") meta >> Ny;
        else if (key == "t") meta >> tt;
        else meta.ignore(1024, '\n');
    }
    Field2D f(Grid2D::make(Lx, Ly, Nx, Ny));
    std::ifstream bin(base + ".bin", std::ios::binary);
    bin.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("load_field: truncated " + base + ".bin");
    if (t) *t = tt;
    return f;
}

}  // namespace zk
