#pragma once

#include <functional>
#include <vector>

#include "csiloc/denoiser.hpp"
#include "csiloc/trajectory.hpp"

namespace csiloc {

/// Solves the symmetric positive-definite tridiagonal system with constant
/// `diag` main diagonal entries except ends handled by the caller. `diag`,
/// `lower` (n-1), `upper` (n-1) and `rhs` describe A x = rhs; returns x.
std::vector<double> solve_tridiagonal(std::vector<double> diag, std::vector<double> lower,
                                      std::vector<double> upper, std::vector<double> rhs);

struct PnpConfig {
    double mu = 1.0;          // positioning-fidelity weight, >= 0
    double rho = 1.0;         // ADMM penalty, > 0
    double denoiser_level = 0.02;  // noise level selecting the prior, meters
    int max_iters = 200;
    double tol = 1e-6;  // primal tolerance on ||L - Z||_F, meters

    void validate() const;
};

/// Per-iteration ADMM bookkeeping.
struct AdmmState {
    std::vector<Vec2> L;
    std::vector<Vec2> Z;
    std::vector<Vec2> p;  // scaled dual
    int iterations = 0;
    std::vector<double> primal_residuals;
    // full iterate history for diagnostics/regression tests
    std::vector<std::vector<Vec2>> L_history;
    std::vector<std::vector<Vec2>> Z_history;
    std::vector<std::vector<Vec2>> p_history;
};

/// Plain denoiser tracking: pick the nearest bank member and denoise.
Trajectory refine_trajectory(const DenoiserBank& bank, const Trajectory& noisy, double level);

/// Sum over steps t = 2..T of the squared mismatch between trajectory
/// differences and the IMU's Cartesian step estimates.
double motion_residual(const Trajectory& traj, const ImuMeasurement& imu);

/// Exact minimizer of
///   motion term + mu * ||noisy - L||^2 + (rho/2) * ||L - Z + p||^2,
/// solved per coordinate by tridiagonal elimination of
///   (2 D^T D + (2 mu + rho) I) l = 2 D^T b + 2 mu * noisy + rho (z - p).
Trajectory l_update(const Trajectory& noisy, const ImuMeasurement& imu,
                    const std::vector<Vec2>& z, const std::vector<Vec2>& dual, double mu,
                    double rho);

/// Prior step: denoise L + p with the bank member nearest `level`. `like`
/// supplies the pattern/seed metadata of the trajectory being refined.
std::vector<Vec2> z_update(const DenoiserBank& bank, const std::vector<Vec2>& l,
                           const std::vector<Vec2>& dual, double level, const Trajectory& like);

using PriorFn = std::function<std::vector<Vec2>(const std::vector<Vec2>&)>;

/// ADMM loop with an arbitrary prior operator (used directly by tests; the
/// identity prior reduces the solve to a quadratic program).
Trajectory pnp_track_with(const PriorFn& prior, const Trajectory& noisy,
                          const ImuMeasurement& imu, const PnpConfig& config, AdmmState* state);

/// Full tracker: Z0 = noisy input, p0 = 0, iterate L-update, denoiser Z-update
/// and dual update until the primal residual drops under tol.
Trajectory pnp_track(const DenoiserBank& bank, const Trajectory& noisy,
                     const ImuMeasurement& imu, const PnpConfig& config,
                     AdmmState* state = nullptr);

}  // namespace csiloc
