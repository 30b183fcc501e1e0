#pragma once

#include <cstdint>
#include <vector>

#include "csiloc/channel.hpp"

namespace csiloc {

enum class MotionPattern {
    kConstantVelocity,      // fixed random velocity vector
    kStraightVariableSpeed, // fixed heading, per-step speed redrawn
    kDirectionChange,       // constant speed, heading redrawn at one step
};

/// Ordered planar positions at unit timestep; T >= 2 and all points inside
/// the generating bounds.
struct Trajectory {
    std::vector<Vec2> points;
    MotionPattern pattern = MotionPattern::kConstantVelocity;
    uint64_t seed = 0;

    int length() const { return static_cast<int>(points.size()); }
};

/// Per-step travelled distance and heading for t = 2..T (T-1 entries).
struct ImuStep {
    double distance = 0.0;  // meters, >= 0
    double heading = 0.0;   // radians
};

struct ImuMeasurement {
    std::vector<ImuStep> steps;
    double snr_db = 0.0;  // +infinity marks the noiseless case
};

struct TrajectoryConfig {
    int length = 5;  // T
    Rect bounds{0.0, 0.0, 1.25, 1.25};
    double speed_min = 0.05;  // meters per step
    double speed_max = 0.25;
};

/// Draws one trajectory of the given pattern. The start point is uniform in
/// bounds; whole trajectories leaving the bounds are rejected and redrawn, up
/// to 1000 attempts. Pattern (c) turns at a step uniform over {2..T-1} and
/// keeps its speed; with T < 3 it degenerates to pattern (a).
Trajectory gen_trajectory(MotionPattern pattern, const TrajectoryConfig& cfg, uint64_t seed);

/// n trajectories with patterns chosen uniformly at random per sample.
std::vector<Trajectory> make_dataset(int n, const TrajectoryConfig& cfg, uint64_t seed);

/// Adds iid zero-mean Gaussian noise of std sigma to every coordinate.
Trajectory add_noise(const Trajectory& traj, double sigma, uint64_t seed);

/// Synthesizes step measurements at the requested SNR: per-step noise stds
/// are |r cos(theta)| / 10^(snr/20) and |r sin(theta)| / 10^(snr/20), floored
/// at 1e-6 m; the noisy Cartesian step is converted back to (distance,
/// heading). snr_db = +infinity returns the exact step lengths and headings.
ImuMeasurement imu_measure(const Trajectory& traj, double snr_db, uint64_t seed);

}  // namespace csiloc
