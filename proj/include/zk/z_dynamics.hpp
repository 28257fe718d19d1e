#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zk/interaction.hpp"

namespace zk {

struct ZSample {
    double t = 0.0, Z = 0.0, Zdot = 0.0, H = 0.0;
};

struct ZTrajectory {
    std::vector<ZSample> samples;  // sorted in t, mirrored about t = 0
    double mu0 = 0.0;
    double Z0 = 0.0;
    double l_offset = 0.0;  // filled by asymptote()
    double h0 = 0.0;        // H(Z0, 0)
    double max_drift = 0.0; // max |H - h0| / h0
    double tol = 1e-12;
    double t_end = 0.0;
};

struct AsymptoteFit {
    double slope = 0.0;        // least-squares slope over the tail window
    double intercept = 0.0;    // l, limit of Z - 2 mu0 t
    double decay_rate = 0.0;   // c in |Z - 2 mu0 t - l| ~ K e^{-c t}
    double window_start = 0.0;
    double slope_rel_error = 0.0;  // |slope - 2 mu0| / (2 mu0)
};

struct CharacteristicTimes {
    double T1 = 0.0, T2 = 0.0;
    std::optional<double> T3, T4;  // absent when the defining level is not reached on (T2, T1)
    bool ordered = false;          // T2 < T3 < T1 and T2 < T4 < T1 where defined
};

enum class OrbitClass { fixed_point, separatrix, turning_point, crossing };
std::string to_string(OrbitClass c);

struct EnvelopeReport {
    double max_deviation = 0.0;
    double constant = 0.0;  // max_deviation / (nu + eps0)
    std::size_t n_samples = 0;
};

class ZDynamics {
public:
    ZDynamics(InteractionModel model, double lam_q_q, double q3);

    // F and G extended evenly/oddly to negative separations
    double F(double z) const;
    double G(double z) const;
    double accel(double z) const { return 2.0 / lam_q_q_ * G(z); }

    double hamiltonian(double y0, double y1, double nu = 0.0) const;
    double mu0_from_z0(double z0) const;
    double z0_from_mu0(double mu0) const;

    ZTrajectory integrate(double z0, double t_end, double tol = 1e-12) const;
    // exact state at any |t| <= t_end by re-integrating from the nearest sample
    ZSample state_at(const ZTrajectory& traj, double t) const;
    AsymptoteFit asymptote(ZTrajectory& traj) const;
    CharacteristicTimes characteristic_times(const ZTrajectory& traj, double rho, double eta,
                                             double M) const;
    // first t >= 0 with Z(t) = level (Z increasing for t > 0)
    double time_at_level(const ZTrajectory& traj, double level) const;

    OrbitClass classify_orbit(double y0, double y1) const;
    double separatrix_level() const;  // 2 kappa ||Q||_{L3}^3 with kappa = 2 / <Lambda Q, Q>

    // Compare samples z(t), t >= t0, against the reference trajectory at level h.
    EnvelopeReport comparison_envelope(const std::vector<ZSample>& z_samples, double nu, double eps0,
                                       double h) const;

    const InteractionModel& model() const { return model_; }
    double lam_q_q() const { return lam_q_q_; }

private:
    InteractionModel model_;
    double lam_q_q_, q3_;
    double z_hi_;  // past this the table is continued by its e^{-z}/sqrt(z) tail
};

}  // namespace zk
