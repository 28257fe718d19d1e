#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "zk/ansatz.hpp"
#include "zk/z_dynamics.hpp"

namespace zk {

struct FitOptions {
    double tol = 1e-11;    // on max |constraint| / ||Q||^2
    int max_newton = 25;
    int max_halvings = 12;
    double sigma = 0.0;    // trust radius on ||w - V||_{H1}; 0 means 0.3 ||Q||_{H1}
};

using Constraints = std::array<double, 6>;
using Jacobian6 = std::array<std::array<double, 6>, 6>;

struct FitResult {
    ModulationState gamma;
    Field2D eps;
    Constraints residuals{};
    int iterations = 0;
    double eps_h1 = 0.0, eps_l2 = 0.0;
};

// Parameter fit of a field against the two-soliton ansatz V(Gamma).
// Constraints, ordered like Gamma's packing per wave i:
//   c[3i] = <eps, d_x R_i>,  c[3i+1] = <eps, d_y R_i>,  c[3i+2] = <eps, R_i>,  eps = w - V(Gamma).
// Unknowns are packed (z1, z2, w1, w2, mu1, mu2).
class Modulator {
public:
    Modulator(const Grid2D& grid, const AnsatzContext& ctx, FitOptions opt = {});

    Constraints constraints(const Field2D& w, const ModulationState& g, Field2D* eps = nullptr) const;
    // J[k][j] = d c_k / d Gamma_j from the shape derivatives of V and of the test directions
    Jacobian6 jacobian(const Field2D& w, const ModulationState& g) const;
    // centered differences of constraints(), step h
    Jacobian6 jacobian_fd(const Field2D& w, const ModulationState& g, double h = 1e-6) const;

    // Newton with the Jacobian refreshed every iteration, step halving when the
    // residual does not drop; TrustRegionError past sigma, NonconvergenceError
    // after max_newton.
    FitResult fit(const Field2D& w, const ModulationState& init) const;

    const Grid2D& grid() const { return grid_; }
    const AnsatzContext& context() const { return ctx_; }
    const FitOptions& options() const { return opt_; }
    double q_norm2() const { return q_norm2_; }
    double q_h1() const { return q_h1_; }
    double sigma() const { return sigma_; }

private:
    Grid2D grid_;
    AnsatzContext ctx_;
    FitOptions opt_;
    double q_norm2_ = 0.0, q_h1_ = 0.0, sigma_ = 0.0;
};

FitResult fit_parameters(const Field2D& w, const ModulationState& init, const AnsatzContext& ctx,
                         FitOptions opt = {});

// psi(x) = (2/pi) arctan(e^{8 rho x})
double weight_psi(double x, double rho);
double weight_psi_prime(double x, double rho);

enum class Functional { plus, minus };

// Localized mass-energy functionals; psi is centered at (z1 + z2)/2.
// V and S come from the bundle built at g.
double energy_functional(const Field2D& eps, const AnsatzBundle& b, const ModulationState& g,
                         double rho, Functional which);

// chi(s) = 1 for s <= 1, 0 for s >= 2, smooth in between
double cutoff_chi(double s);

struct TransverseFunctionals {
    double k1 = 0.0, k2 = 0.0;
    Field2D K1, K2;  // chi(mu0 x) int_{-inf}^x d_y R_i
};
TransverseFunctionals transverse_functionals(const Field2D& eps, const ModulationState& g,
                                             const Grid2D& grid, const AnsatzContext& ctx, double mu0);

struct ModulationRecord {
    double t = 0.0;
    ModulationState gamma;
    double eps_h1 = 0.0, eps_l2 = 0.0;
    double eps_h1_local = 0.0;  // over x > min(z1, z2) - 10, i.e. without the radiation left behind
    Constraints ortho_residuals{};
    double f_plus = 0.0, f_minus = 0.0;
    double k1 = 0.0, k2 = 0.0;
    double s_h1 = 0.0;  // ||S||_{H1}, for the coercivity ratio
    std::optional<double> z_ref, zdot_ref;
    int iterations = 0;
};

struct TrackOptions {
    double rho = 0.02;
    double mu0 = 0.15;
    bool functionals = true;
};

// Warm-started fits along a trajectory. The guess for each new time is the
// previous fit pushed forward with dz_i = mu_i + alpha_i, dmu_i = -gamma_i.
class Tracker {
public:
    Tracker(const Modulator& mod, const ModulationState& g0, TrackOptions opt = {},
            const ZDynamics* zd = nullptr, const ZTrajectory* ref = nullptr);

    // throws LossOfLockError when the fit fails
    const ModulationRecord& observe(double t, const Field2D& w);
    const std::vector<ModulationRecord>& records() const { return records_; }

private:
    const Modulator& mod_;
    TrackOptions opt_;
    const ZDynamics* zd_;
    const ZTrajectory* ref_;
    ModulationState last_;
    std::optional<double> last_t_;
    std::vector<ModulationRecord> records_;
};

struct TrackResult {
    std::vector<ModulationRecord> records;
    bool lost_lock = false;
    std::string message;
};

// Fit a stored sequence of field snapshots (save_field bases, increasing t).
TrackResult track(const std::vector<std::string>& snapshot_bases, const Modulator& mod,
                  const ModulationState& g0, TrackOptions opt = {}, const ZDynamics* zd = nullptr,
                  const ZTrajectory* ref = nullptr);

// Centered differences of Gamma across adjacent records (interior records only).
std::vector<ModulationRates> record_rates(const std::vector<ModulationRecord>& recs);

void write_records_csv(const std::vector<ModulationRecord>& recs, const std::string& path,
                       const std::string& header_comment);

}  // namespace zk
