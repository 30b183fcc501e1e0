#include "csiloc/trajectory.hpp"

#include <cmath>
#include <stdexcept>

#include "csiloc/rng.hpp"

namespace csiloc {

namespace {

constexpr int kMaxRejections = 1000;
constexpr double kImuStdFloor = 1e-6;  // meters

std::vector<Vec2> draw_points(MotionPattern pattern, const TrajectoryConfig& cfg, Rng& rng) {
    const int T = cfg.length;
    std::vector<Vec2> pts(static_cast<size_t>(T));
    pts[0] = {rng.uniform(cfg.bounds.xmin, cfg.bounds.xmax),
              rng.uniform(cfg.bounds.ymin, cfg.bounds.ymax)};
    switch (pattern) {
        case MotionPattern::kConstantVelocity: {
            const double heading = rng.uniform(0.0, 2.0 * M_PI);
            const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
            const Vec2 v{speed * std::cos(heading), speed * std::sin(heading)};
            for (int t = 1; t < T; ++t)
                pts[static_cast<size_t>(t)] = pts[static_cast<size_t>(t - 1)] + v;
            break;
        }
        case MotionPattern::kStraightVariableSpeed: {
            const double heading = rng.uniform(0.0, 2.0 * M_PI);
            const Vec2 dir{std::cos(heading), std::sin(heading)};
            for (int t = 1; t < T; ++t) {
                const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
                pts[static_cast<size_t>(t)] = pts[static_cast<size_t>(t - 1)] + speed * dir;
            }
            break;
        }
        case MotionPattern::kDirectionChange: {
            const double heading1 = rng.uniform(0.0, 2.0 * M_PI);
            const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
            if (T < 3) {
                const Vec2 v{speed * std::cos(heading1), speed * std::sin(heading1)};
                for (int t = 1; t < T; ++t)
                    pts[static_cast<size_t>(t)] = pts[static_cast<size_t>(t - 1)] + v;
                break;
            }
            // turn step uniform over {2..T-1}: transitions before it use the
            // first heading, the rest the second
            const int turn = 2 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(T - 2)));
            const double heading2 = rng.uniform(0.0, 2.0 * M_PI);
            for (int t = 1; t < T; ++t) {
                const double h = t < turn ? heading1 : heading2;
                const Vec2 v{speed * std::cos(h), speed * std::sin(h)};
                pts[static_cast<size_t>(t)] = pts[static_cast<size_t>(t - 1)] + v;
            }
            break;
        }
    }
    return pts;
}

}  // namespace

Trajectory gen_trajectory(MotionPattern pattern, const TrajectoryConfig& cfg, uint64_t seed) {
    if (cfg.length < 2) throw std::invalid_argument("gen_trajectory: length must be >= 2");
    if (cfg.speed_min <= 0.0 || cfg.speed_max < cfg.speed_min)
        throw std::invalid_argument("gen_trajectory: speed range must be positive");
    if (cfg.bounds.width() <= 0.0 || cfg.bounds.height() <= 0.0)
        throw std::invalid_argument("gen_trajectory: bounds must have positive area");
    Rng rng(derive_seed(seed, {0x7a71ull}));
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        std::vector<Vec2> pts = draw_points(pattern, cfg, rng);
        bool inside = true;
        for (const Vec2& p : pts)
            if (!cfg.bounds.contains(p)) {
                inside = false;
                break;
            }
        if (inside) {
            Trajectory traj;
            traj.points = std::move(pts);
            traj.pattern = pattern;
            traj.seed = seed;
            return traj;
        }
    }
    throw std::runtime_error(
        "gen_trajectory: could not fit a trajectory inside the bounds after 1000 attempts");
}

std::vector<Trajectory> make_dataset(int n, const TrajectoryConfig& cfg, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");
    std::vector<MotionPattern> patterns(static_cast<size_t>(n));
    Rng rng(derive_seed(seed, {0x3e7ull}));
    for (auto& p : patterns) p = static_cast<MotionPattern>(rng.uniform_int(3));
    std::vector<Trajectory> out(static_cast<size_t>(n));
#pragma omp parallel for schedule(static) if (n > 1)
    for (int i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] =
            gen_trajectory(patterns[static_cast<size_t>(i)], cfg,
                           derive_seed(seed, {0x7a5ull, static_cast<uint64_t>(i)}));
    return out;
}

Trajectory add_noise(const Trajectory& traj, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
    Trajectory out = traj;
    if (sigma == 0.0) return out;
    Rng rng(derive_seed(seed, {0xadd401ull}));
    for (Vec2& p : out.points) {
        p.x += rng.normal(0.0, sigma);
        p.y += rng.normal(0.0, sigma);
    }
    return out;
}

ImuMeasurement imu_measure(const Trajectory& traj, double snr_db, uint64_t seed) {
    const int T = traj.length();
    if (T < 2) throw std::invalid_argument("imu_measure: trajectory must have >= 2 points");
    ImuMeasurement imu;
    imu.snr_db = snr_db;
    imu.steps.reserve(static_cast<size_t>(T - 1));
    Rng rng(derive_seed(seed, {0x1417ull}));
    const bool noiseless = std::isinf(snr_db);
    const double atten = noiseless ? 0.0 : std::pow(10.0, snr_db / 20.0);
    for (int t = 1; t < T; ++t) {
        const Vec2 d =
            traj.points[static_cast<size_t>(t)] - traj.points[static_cast<size_t>(t - 1)];
        const double r = norm(d);
        const double theta = std::atan2(d.y, d.x);
        if (noiseless) {
            imu.steps.push_back({r, theta});
            continue;
        }
        const double sx = std::max(std::fabs(d.x) / atten, kImuStdFloor);
        const double sy = std::max(std::fabs(d.y) / atten, kImuStdFloor);
        const double vx = d.x + rng.normal(0.0, sx);
        const double vy = d.y + rng.normal(0.0, sy);
        imu.steps.push_back({std::hypot(vx, vy), std::atan2(vy, vx)});
    }
    return imu;
}

}  // namespace csiloc
