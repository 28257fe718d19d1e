#pragma once

#include <functional>
#include <string>
#include <vector>

#include "zk/field.hpp"

namespace zk {

// etdrk4: Cox-Matthews exponential RK4 (keeps steady states fixed);
// lawson: integrating-factor RK4 on exp(-tL) v
enum class Scheme { etdrk4, lawson };

struct EvolutionConfig {
    Scheme scheme = Scheme::etdrk4;
    double dt = 0.02;
    double t_end = 1.0;
    bool dealias = true;
    int snapshot_every = 0;   // steps between callback invocations; 0 = only at the end
    double cfl_guard = 10.0;  // BlowUpError once max |v| exceeds this

    // dt must keep the nonlinear stage stable: dt * k_max * 2 max|v| below the
    // RK4 bound on the imaginary axis (2 sqrt 2), taken with max|v| = cfl_guard / 2
    void validate(const Grid2D& g) const;
};

struct Invariants {
    double mean = 0.0;   // int v
    double mass = 0.0;   // int v^2
    double energy = 0.0; // int |grad v|^2/2 + v^2/2 - v^3/3 (frame of the symmetrized equation)
    double energy_original = 0.0;  // int |grad v|^2/2 - v^3/3
};

Invariants invariants_of(const Field2D& v);

// Exponential RK4 for  d_t v + d_x(Delta v - v + v^2) = 0  on the periodic grid.
// The state lives in Fourier space; the linear part is propagated exactly.
class Evolver {
public:
    Evolver(const Field2D& v0, double dt, bool dealias = true, double cfl_guard = 10.0,
            Scheme scheme = Scheme::etdrk4);
    // restart from a stored spectral state; continues bitwise like the original run
    Evolver(const Spectrum& state, const Grid2D& g, double dt, bool dealias = true,
            double cfl_guard = 10.0, Scheme scheme = Scheme::etdrk4);

    void step();                 // one step of size dt (negative dt runs backwards)
    void advance(int n_steps);
    Field2D field() const;
    double time() const { return t_; }
    void set_time(double t) { t_ = t; }
    double dt() const { return dt_; }
    const Grid2D& grid() const { return grid_; }
    const Spectrum& state() const { return state_; }

private:
    void init();
    Spectrum nonlinear(const Spectrum& s) const;
    void step_lawson();
    void step_etd();
    Grid2D grid_;
    Scheme scheme_;
    double dt_, t_ = 0.0, guard_;
    bool dealias_;
    Spectrum state_;
    std::vector<std::complex<double>> e_full_, e_half_, nl_mult_;  // propagators, -i xi_x with mask
    std::vector<std::complex<double>> lin_;                        // i xi_x (1 + |xi|^2)
    std::vector<std::complex<double>> q_, f1_, f2_, f3_;            // ETDRK4 weights
    std::vector<char> mask_;
};

// Callback at t = 0, every snapshot_every steps and at t_end; returning false stops.
using EvolutionCallback = std::function<bool(double t, const Field2D& v)>;

struct EvolutionResult {
    Field2D v;
    double t = 0.0;
    int steps = 0;
    bool stopped_early = false;
};

EvolutionResult evolve(const Field2D& v0, const EvolutionConfig& cfg, const EvolutionCallback& cb = {});

// Invariant log row and CSV writer
struct InvariantSample {
    double t;
    Invariants inv;
    double boundary_mass;  // int v^2 over the outer strip (periodization health)
};
double boundary_strip_mass(const Field2D& v, double width = 4.0);

}  // namespace zk
