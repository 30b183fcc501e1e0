#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "csiloc/rng.hpp"
#include "csiloc/trajectory.hpp"

using namespace csiloc;

namespace {

TrajectoryConfig wide_config(int T = 5) {
    TrajectoryConfig cfg;
    cfg.length = T;
    cfg.bounds = {0.0, 0.0, 10.0, 10.0};  // generous so rejection is rare
    return cfg;
}

double step_heading(const Trajectory& t, int step) {
    const Vec2 d = t.points[static_cast<size_t>(step + 1)] - t.points[static_cast<size_t>(step)];
    return std::atan2(d.y, d.x);
}

}  // namespace

TEST_CASE("constant-velocity pattern takes equal steps") {
    const TrajectoryConfig cfg = wide_config();
    const Trajectory t = gen_trajectory(MotionPattern::kConstantVelocity, cfg, 99);
    REQUIRE(t.length() == 5);
    const Vec2 v = t.points[1] - t.points[0];
    for (int s = 1; s < 4; ++s) {
        const Vec2 d = t.points[static_cast<size_t>(s + 1)] - t.points[static_cast<size_t>(s)];
        CHECK(d.x == doctest::Approx(v.x).epsilon(1e-12));
        CHECK(d.y == doctest::Approx(v.y).epsilon(1e-12));
    }
}

TEST_CASE("straight pattern keeps one heading") {
    const TrajectoryConfig cfg = wide_config();
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const Trajectory t = gen_trajectory(MotionPattern::kStraightVariableSpeed, cfg, seed);
        const double h0 = step_heading(t, 0);
        for (int s = 1; s < 4; ++s) {
            double dh = step_heading(t, s) - h0;
            while (dh > M_PI) dh -= 2 * M_PI;
            while (dh < -M_PI) dh += 2 * M_PI;
            CHECK(std::fabs(dh) <= 1e-12);
        }
    }
}

TEST_CASE("direction-change pattern: constant speed, one heading change") {
    const TrajectoryConfig cfg = wide_config();
    int turns_found = 0;
    for (uint64_t seed = 0; seed < 30; ++seed) {
        const Trajectory t = gen_trajectory(MotionPattern::kDirectionChange, cfg, seed);
        const double speed0 = norm(t.points[1] - t.points[0]);
        int changes = 0;
        for (int s = 0; s < 4; ++s) {
            CHECK(norm(t.points[static_cast<size_t>(s + 1)] - t.points[static_cast<size_t>(s)]) ==
                  doctest::Approx(speed0).epsilon(1e-9));
            if (s > 0 && std::fabs(step_heading(t, s) - step_heading(t, s - 1)) > 1e-9) ++changes;
        }
        CHECK(changes <= 1);
        turns_found += changes;
    }
    CHECK(turns_found > 0);
}

TEST_CASE("turn step is uniform over {2..T-1}") {
    const TrajectoryConfig cfg = wide_config(5);
    const int n = 10000;
    int counts[3] = {0, 0, 0};  // turn step 2, 3, 4
    for (int i = 0; i < n; ++i) {
        const Trajectory t = gen_trajectory(MotionPattern::kDirectionChange, cfg,
                                            derive_seed(4242, {static_cast<uint64_t>(i)}));
        int turn = -1;
        for (int s = 1; s < 4; ++s)
            if (std::fabs(step_heading(t, s) - step_heading(t, s - 1)) > 1e-9) turn = s + 1;
        // the two headings coincide with vanishing probability
        REQUIRE(turn >= 2);
        ++counts[turn - 2];
    }
    // chi-square against uniform, 2 dof; critical value for p = 0.01 is 9.21
    const double expected = n / 3.0;
    double stat = 0.0;
    for (int c : counts) stat += (c - expected) * (c - expected) / expected;
    CHECK(stat < 9.21);
}

TEST_CASE("rejection keeps trajectories inside bounds and errors out when impossible") {
    TrajectoryConfig cfg;
    cfg.length = 5;
    cfg.bounds = {0.0, 0.0, 0.6, 0.6};
    cfg.speed_min = 0.05;
    cfg.speed_max = 0.1;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const Trajectory t = gen_trajectory(MotionPattern::kConstantVelocity, cfg, seed);
        for (const Vec2& p : t.points) CHECK(cfg.bounds.contains(p));
        for (int s = 0; s < 4; ++s) {
            const double sp =
                norm(t.points[static_cast<size_t>(s + 1)] - t.points[static_cast<size_t>(s)]);
            CHECK(sp >= cfg.speed_min - 1e-12);
            CHECK(sp <= cfg.speed_max + 1e-12);
        }
    }
    TrajectoryConfig impossible;
    impossible.length = 50;
    impossible.bounds = {0.0, 0.0, 0.2, 0.2};
    impossible.speed_min = 0.2;
    impossible.speed_max = 0.25;
    CHECK_THROWS_AS(gen_trajectory(MotionPattern::kConstantVelocity, impossible, 1),
                    std::runtime_error);
}

TEST_CASE("make_dataset: forced seeds, pattern frequencies, determinism") {
    const TrajectoryConfig cfg = wide_config();
    SUBCASE("one of each pattern for n=3 under some seed") {
        bool found = false;
        for (uint64_t seed = 0; seed < 64 && !found; ++seed) {
            const auto set = make_dataset(3, cfg, seed);
            bool has[3] = {false, false, false};
            for (const auto& t : set) has[static_cast<int>(t.pattern)] = true;
            found = has[0] && has[1] && has[2];
        }
        CHECK(found);
    }
    SUBCASE("pattern frequencies near 1/3") {
        const auto set = make_dataset(10000, cfg, 7);
        int counts[3] = {0, 0, 0};
        for (const auto& t : set) ++counts[static_cast<int>(t.pattern)];
        for (int c : counts) {
            const double f = c / 10000.0;
            CHECK(f >= 0.30);
            CHECK(f <= 0.37);
        }
    }
    SUBCASE("deterministic per seed") {
        const auto a = make_dataset(50, cfg, 9);
        const auto b = make_dataset(50, cfg, 9);
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].pattern == b[i].pattern);
            for (size_t t = 0; t < a[i].points.size(); ++t) {
                CHECK(a[i].points[t].x == b[i].points[t].x);
                CHECK(a[i].points[t].y == b[i].points[t].y);
            }
        }
    }
}

TEST_CASE("add_noise: zero sigma identity, calibrated std, independence") {
    const TrajectoryConfig cfg = wide_config();
    const Trajectory t = gen_trajectory(MotionPattern::kConstantVelocity, cfg, 4);
    SUBCASE("sigma 0 returns the input") {
        const Trajectory out = add_noise(t, 0.0, 11);
        for (size_t i = 0; i < t.points.size(); ++i) {
            CHECK(out.points[i].x == t.points[i].x);
            CHECK(out.points[i].y == t.points[i].y);
        }
    }
    SUBCASE("empirical std matches sigma = 0.02") {
        const int n = 10000;
        std::vector<double> noise;
        noise.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n / 10; ++i) {
            const Trajectory noisy =
                add_noise(t, 0.02, derive_seed(33, {static_cast<uint64_t>(i)}));
            for (size_t k = 0; k < t.points.size(); ++k) {
                noise.push_back(noisy.points[k].x - t.points[k].x);
                noise.push_back(noisy.points[k].y - t.points[k].y);
            }
        }
        double var = 0.0;
        for (double v : noise) var += v * v;
        var /= static_cast<double>(noise.size());
        const double sd = std::sqrt(var);
        CHECK(sd >= 0.0194);
        CHECK(sd <= 0.0206);
        // lag-1 autocorrelation across the flattened noise stream
        double num = 0.0;
        for (size_t i = 1; i < noise.size(); ++i) num += noise[i] * noise[i - 1];
        const double rho = num / (static_cast<double>(noise.size() - 1) * var);
        CHECK(std::fabs(rho) < 0.03);
    }
    SUBCASE("mean offset shrinks with n") {
        double mean = 0.0;
        const int n = 20000;
        for (int i = 0; i < n / 10; ++i) {
            const Trajectory noisy =
                add_noise(t, 0.05, derive_seed(55, {static_cast<uint64_t>(i)}));
            for (size_t k = 0; k < t.points.size(); ++k)
                mean += (noisy.points[k].x - t.points[k].x) + (noisy.points[k].y - t.points[k].y);
        }
        mean /= n;
        CHECK(std::fabs(mean) <= 4 * 0.05 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("imu_measure noise model") {
    const TrajectoryConfig cfg = wide_config();
    const Trajectory t = gen_trajectory(MotionPattern::kDirectionChange, cfg, 8);
    SUBCASE("infinite SNR reproduces exact step lengths and headings") {
        const ImuMeasurement imu = imu_measure(t, std::numeric_limits<double>::infinity(), 3);
        REQUIRE(imu.steps.size() == 4);
        for (int s = 0; s < 4; ++s) {
            const Vec2 d = t.points[static_cast<size_t>(s + 1)] - t.points[static_cast<size_t>(s)];
            CHECK(imu.steps[static_cast<size_t>(s)].distance == norm(d));
            CHECK(imu.steps[static_cast<size_t>(s)].heading == std::atan2(d.y, d.x));
        }
    }
    SUBCASE("noiseless measurements integrate back to the trajectory") {
        const ImuMeasurement imu = imu_measure(t, std::numeric_limits<double>::infinity(), 3);
        Vec2 pos = t.points[0];
        for (size_t s = 0; s < imu.steps.size(); ++s) {
            pos.x += imu.steps[s].distance * std::cos(imu.steps[s].heading);
            pos.y += imu.steps[s].distance * std::sin(imu.steps[s].heading);
            CHECK(pos.x == doctest::Approx(t.points[s + 1].x).epsilon(1e-12));
            CHECK(pos.y == doctest::Approx(t.points[s + 1].y).epsilon(1e-12));
        }
    }
    SUBCASE("sigma inversion: r=1, theta=pi/4, 20 dB") {
        // direct check of the std the model implies
        const double sigma = std::fabs(1.0 * std::cos(M_PI / 4)) / std::pow(10.0, 20.0 / 20.0);
        CHECK(sigma == doctest::Approx(0.070711).epsilon(1e-4));
        // and the measurement stream realizes it empirically
        Trajectory diag;
        diag.points = {{0.0, 0.0}, {std::sqrt(0.5), std::sqrt(0.5)}};
        double var = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            const ImuMeasurement imu =
                imu_measure(diag, 20.0, derive_seed(77, {static_cast<uint64_t>(i)}));
            const double vx = imu.steps[0].distance * std::cos(imu.steps[0].heading);
            var += (vx - std::sqrt(0.5)) * (vx - std::sqrt(0.5));
        }
        const double sd = std::sqrt(var / n);
        CHECK(sd == doctest::Approx(sigma).epsilon(0.03));
    }
    SUBCASE("mean distance error is larger at 1 dB than at 100 dB") {
        double err_low = 0.0, err_high = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const uint64_t s = derive_seed(88, {static_cast<uint64_t>(i)});
            const ImuMeasurement lo = imu_measure(t, 1.0, s);
            const ImuMeasurement hi = imu_measure(t, 100.0, s);
            for (int k = 0; k < 4; ++k) {
                const Vec2 d =
                    t.points[static_cast<size_t>(k + 1)] - t.points[static_cast<size_t>(k)];
                err_low += std::fabs(lo.steps[static_cast<size_t>(k)].distance - norm(d));
                err_high += std::fabs(hi.steps[static_cast<size_t>(k)].distance - norm(d));
            }
        }
        CHECK(err_low > err_high);
    }
    SUBCASE("distances are always nonnegative") {
        for (uint64_t seed = 0; seed < 200; ++seed) {
            const ImuMeasurement imu = imu_measure(t, 1.0, seed);
            for (const ImuStep& s : imu.steps) CHECK(s.distance >= 0.0);
        }
    }
}
