#pragma once

#include <complex>
#include <string>
#include <vector>

namespace zk {

struct RadialProfile;

// Box [-Lx, Lx) x [-Ly, Ly), Nx x Ny points, both powers of two.
struct Grid2D {
    double Lx = 0.0, Ly = 0.0;
    int Nx = 0, Ny = 0;

    static Grid2D make(double Lx, double Ly, int Nx, int Ny);
    double dx() const { return 2.0 * Lx / Nx; }
    double dy() const { return 2.0 * Ly / Ny; }
    double x(int i) const { return -Lx + i * dx(); }
    double y(int j) const { return -Ly + j * dy(); }
    // signed wavenumbers; Nyquist index returns +pi/dx
    double kx(int i) const;
    double ky(int j) const;  // j in [0, Ny/2]
    std::size_t size() const { return static_cast<std::size_t>(Nx) * Ny; }
    std::size_t spec_size() const { return static_cast<std::size_t>(Nx) * (Ny / 2 + 1); }
    bool operator==(const Grid2D& o) const {
        return Lx == o.Lx && Ly == o.Ly && Nx == o.Nx && Ny == o.Ny;
    }
};

using Spectrum = std::vector<std::complex<double>>;

// Values stored x-major: v[i*Ny + j] = f(x_i, y_j).
struct Field2D {
    Grid2D grid;
    std::vector<double> v;

    Field2D() = default;
    explicit Field2D(const Grid2D& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

    double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * grid.Ny + j]; }
    double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * grid.Ny + j]; }

    Field2D& operator+=(const Field2D& o);
    Field2D& operator-=(const Field2D& o);
    Field2D& operator*=(double s);
    Field2D& axpy(double a, const Field2D& x);  // this += a x
    double max_abs() const;
};

Field2D operator+(Field2D a, const Field2D& b);
Field2D operator-(Field2D a, const Field2D& b);
Field2D operator*(double s, Field2D a);
Field2D operator*(const Field2D& a, const Field2D& b);  // pointwise

void check_same_grid(const Field2D& a, const Field2D& b);

Spectrum forward(const Field2D& f);
Field2D inverse(const Spectrum& s, const Grid2D& g);

enum class Axis { x, y };

Field2D derivative(const Field2D& f, Axis axis, int order);
Field2D laplacian(const Field2D& f);
Field2D gradient_x(const Field2D& f);
Field2D helmholtz(const Field2D& f);         // (-Delta + 1) f
Field2D bessel_potential(const Field2D& f);  // (-Delta + 1)^{-1} f

// -d_x^{-1} f = int_x^{+inf} f, by exact integration of the row's trigonometric
// interpolant from the right edge. Throws NonDecayingError when the edge
// columns exceed 1e-8 ||f||_inf (unless check is false).
Field2D antiderivative_x(const Field2D& f, bool check = true);

double inner_product(const Field2D& f, const Field2D& g);
struct Norms {
    double l2 = 0.0, h1 = 0.0, l3 = 0.0;
};
Norms norms(const Field2D& f);
double h1_norm(const Field2D& f);
double h1_norm_spectrum(const Spectrum& s, const Grid2D& g);
double l2_norm(const Field2D& f);
// H1 norm over x > x_min, half-cosine ramp over [x_min, x_min + 1]
double restricted_h1(const Field2D& f, double x_min);

enum class ProfileKind { Q, Lambda, Lambda2, Dx, Dy };

// Samples of c Q(sqrt(c)(x - x0)) and related shapes:
//   Lambda : d/dc of c Q(sqrt(c) x)        = (Lambda Q)(sqrt(c) x)
//   Lambda2: d^2/dc^2 of c Q(sqrt(c) x)    = c^{-1} (r/2 d/dr Lambda Q)(sqrt(c) x)
//   Dx, Dy : spatial derivatives of c Q(sqrt(c) x)
// Throws BoxTooSmallError when the profile at the nearest box edge exceeds
// 1e-10 of its peak.
Field2D place_profile(const RadialProfile& p, const Grid2D& g, double x0, double y0, double c = 1.0,
                      ProfileKind kind = ProfileKind::Q);
bool placement_fits(const RadialProfile& p, const Grid2D& g, double x0, double y0, double c);

// Periodic translation by (a, b) through the spectrum: result(x) = f(x - a, y - b).
Field2D shift(const Field2D& f, double a, double b);

// Trigonometric interpolant at an arbitrary point.
double sample_at(const Field2D& f, double x, double y);
// same, from a precomputed forward(f)
double sample_spectrum(const Spectrum& s, const Grid2D& g, double x, double y);

// Flat binary (<base>.bin, Nx*Ny native doubles) plus text sidecar (<base>.meta).
void save_field(const Field2D& f, const std::string& base, double t = 0.0);
Field2D load_field(const std::string& base, double* t = nullptr);

}  // namespace zk
