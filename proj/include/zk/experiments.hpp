#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zk/ansatz.hpp"
#include "zk/evolution.hpp"
#include "zk/modulation.hpp"
#include "zk/z_dynamics.hpp"

namespace zk {

// Shared, lazily built objects: profile, constants, coefficient model,
// interaction table and Z dynamics. Empty paths disable caching.
class Lab {
public:
    struct Paths {
        std::string profile;  // ground-state table
        std::string table;    // interaction table
    };
    explicit Lab(Paths paths = {});

    const RadialProfile& profile();
    const GroundStateConstants& constants();
    const CoefficientModel& coefficients();
    const InteractionTable& table();
    const ZDynamics& zdyn();
    AnsatzContext ansatz();

    static constexpr double table_z_min = 0.0, table_z_max = 60.0, table_step = 0.25;

private:
    Paths paths_;
    std::optional<RadialProfile> profile_;
    std::optional<GroundStateConstants> constants_;
    std::unique_ptr<CoefficientModel> coeffs_;
    std::optional<InteractionTable> table_;
    std::unique_ptr<ZDynamics> zdyn_;
};

struct CollisionConfig {
    double mu0 = 0.15;
    double rho = 0.02;
    double omega0 = 0.0;
    double Lx = 64.0, Ly = 32.0;
    int Nx = 512, Ny = 256;
    double dt = 0.02;
    double z_window = 25.0;   // Z(+-T) at the window ends
    double T = 0.0;           // > 0 overrides z_window
    double fit_every = 2.0;   // time between fits (multiple of dt)
    bool dealias = true;
    double cfl_guard = 10.0;
    bool keep_states = true;  // spectral states at fit times, for the stability probe
    bool functionals = true;
    FitOptions fit;

    void validate() const;
};

struct CollisionReport {
    double Z0 = 0.0, mu0 = 0.0, T = 0.0;
    Grid2D grid;
    std::vector<ModulationRecord> records;
    std::vector<std::pair<double, Spectrum>> states;  // (t, state) at record times
    std::vector<Invariants> invariants;
    std::vector<double> boundary_mass;
    bool lost_lock = false;
    std::string message;

    // summary
    double min_z = 0.0;
    double max_z_err = 0.0, ratio_z = 0.0;      // / (Z0^2 mu0^{3/4})
    double max_mu_err = 0.0, ratio_mu = 0.0;    // / (Z0 mu0^{7/4})
    double max_eps_h1 = 0.0, ratio_eps = 0.0;   // / mu0^{7/4}
    double max_eps_local = 0.0, ratio_eps_local = 0.0;
    double final_mu1 = 0.0, final_mu2 = 0.0;
    double exchange1 = 0.0, exchange2 = 0.0;    // |mu1 - mu0| / mu0^2, |mu2 + mu0| / mu0^2
    double max_omega = 0.0;                     // max |w1| + |w2|
    double max_mu_drop = 0.0;                   // largest decrease of mu = mu1 - mu2 between records
    double mass_drift = 0.0, energy_drift = 0.0;
    double max_boundary_mass = 0.0;
    double max_coercivity = 0.0;                // max ||eps||_H1^2 / (F_- + ||S||_H1^2)
    bool crossed = false;
};

using RecordCallback = std::function<void(const ModulationRecord&)>;

// Initial state at -T from the reference Z trajectory: z_1 = Z/2, z_2 = -Z/2,
// mu_1 = Zdot/2, mu_2 = -Zdot/2, w_1 = omega0/2, w_2 = -omega0/2.
ModulationState collision_initial_state(const ZDynamics& zd, const ZTrajectory& traj, double t,
                                        double omega0);

// BoxTooSmallError when the waves at the window ends do not fit the box;
// LossOfLockError is caught and reported through lost_lock.
CollisionReport run_collision(Lab& lab, const CollisionConfig& cfg, const RecordCallback& progress = {});

struct StabilityConfig {
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::optional<double> amplitude;  // ||delta||_H1; unset means Z0^{-5} mu0^{7/4}
    std::size_t start = 0;    // index of the stored state where the perturbation is applied
};

struct StabilityReport {
    double amplitude = 0.0;
    double t_start = 0.0;
    std::vector<double> t;
    std::vector<std::vector<double>> diff_h1;  // per seed, ||w - v||_H1 at the stored times
    std::vector<double> ratio;                 // per seed, max ||w - v||_H1 / mu0^{7/4}
    double max_ratio = 0.0, mean_ratio = 0.0;
};

// Smooth seed-controlled perturbation with the given H1 norm.
Field2D smooth_perturbation(const Grid2D& g, std::uint64_t seed, double h1);

StabilityReport run_stability_probe(const CollisionConfig& cfg, const CollisionReport& ref,
                                    const StabilityConfig& sc);

struct SingleSolitonConfig {
    double mu = 0.1;
    double L = 24.0;
    int N = 256;
    double dt = 0.005;
    double t_end = 20.0;
    bool dealias = true;
    double x0 = -2.0;
};

struct SingleSolitonReport {
    double speed = 0.0, speed_error = 0.0;
    double h1_error = 0.0;  // against the exactly translated wave
    double mass_drift = 0.0, energy_drift = 0.0;
};

// x-center of a single wave of scale c near x_guess: root of <v, d_x Q_c(. - x0)>
double fit_center_x(const Field2D& v, const RadialProfile& p, double c, double x_guess, double y0 = 0.0);

SingleSolitonReport run_single_soliton(const RadialProfile& p, const SingleSolitonConfig& cfg);

}  // namespace zk
