#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "csiloc/channel.hpp"
#include "csiloc/reference.hpp"
#include "csiloc/rng.hpp"

using namespace csiloc;

namespace {

ChannelConfig small_config(int A, int S, int P, double noise = 0.0) {
    ChannelConfig cfg;
    cfg.num_antennas = A;
    cfg.num_subcarriers = S;
    cfg.center_wavelength = 0.125;
    cfg.antenna_spacing = 0.0625;
    cfg.num_paths = P;
    cfg.noise_std = noise;
    cfg.subcarrier_freqs = default_subcarriers(S, 0.125, 2.0e7);
    return cfg;
}

const Rect kArea{0.0, 0.0, 1.25, 1.25};

}  // namespace

TEST_CASE("build_environment: LOS only, determinism, placement rule") {
    SUBCASE("P=1 gives zero scatterers") {
        const Environment env = build_environment(small_config(4, 4, 1), kArea, 123);
        CHECK(env.scatterers.empty());
    }
    SUBCASE("same inputs give bit-identical environments") {
        const Environment a = build_environment(small_config(4, 8, 5), kArea, 42);
        const Environment b = build_environment(small_config(4, 8, 5), kArea, 42);
        CHECK(a.bs_pos.x == b.bs_pos.x);
        CHECK(a.bs_pos.y == b.bs_pos.y);
        REQUIRE(a.scatterers.size() == b.scatterers.size());
        for (size_t i = 0; i < a.scatterers.size(); ++i) {
            CHECK(a.scatterers[i].x == b.scatterers[i].x);
            CHECK(a.scatterers[i].y == b.scatterers[i].y);
        }
    }
    SUBCASE("P=5 seed=7: placement reproduced by an independent rerun of the rule") {
        const Environment env = build_environment(small_config(4, 4, 5), kArea, 7);
        REQUIRE(env.scatterers.size() == 4);
        // the documented rule: scatterers drawn uniformly (x then y per point)
        // in the bounds expanded by half the width/height per side, from the
        // stream derived with tag 0x5ca77e7e5
        const Rect ext{kArea.xmin - 0.5 * kArea.width(), kArea.ymin - 0.5 * kArea.height(),
                       kArea.xmax + 0.5 * kArea.width(), kArea.ymax + 0.5 * kArea.height()};
        Rng rng(derive_seed(7, {0x5ca77e7e5ull}));
        for (const Vec2& s : env.scatterers) {
            const double x = rng.uniform(ext.xmin, ext.xmax);
            const double y = rng.uniform(ext.ymin, ext.ymax);
            CHECK(s.x == x);
            CHECK(s.y == y);
            CHECK(ext.contains(s));
        }
        // base station sits half a box-width west of the west edge midpoint
        CHECK(env.bs_pos.x == doctest::Approx(kArea.xmin - 0.5 * kArea.width()));
        CHECK(env.bs_pos.y == doctest::Approx(0.5 * (kArea.ymin + kArea.ymax)));
    }
    SUBCASE("degenerate bounds rejected") {
        CHECK_THROWS_AS(build_environment(small_config(4, 4, 2), Rect{0, 0, 0, 1}, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("path_params geometry") {
    const Environment env = build_environment(small_config(4, 4, 1), kArea, 5);
    SUBCASE("broadside location gives aoa pi/2") {
        const Vec2 broadside{0.7, env.bs_pos.y};  // same height as the array
        const PathSet ps = path_params(env, broadside);
        CHECK(ps.aoa[0] == doctest::Approx(M_PI / 2).epsilon(1e-12));
        CHECK(std::cos(ps.aoa[0]) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("LOS delay is distance over c") {
        // larger area so a terminal exactly 3 m from the BS fits inside
        const Environment wide = build_environment(small_config(4, 4, 1), Rect{0, 0, 4, 4}, 5);
        const Vec2 mt{wide.bs_pos.x + 3.0, wide.bs_pos.y};
        REQUIRE(wide.bounds.contains(mt));
        const PathSet ps = path_params(wide, mt);
        CHECK(ps.delay[0] == doctest::Approx(3.0 / 299792458.0).epsilon(1e-15));
        CHECK(ps.delay[0] == doctest::Approx(1.0007e-8).epsilon(1e-3));
    }
    SUBCASE("delay is Lipschitz in location") {
        const Environment env5 = build_environment(small_config(4, 4, 5), kArea, 9);
        Rng rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            const Vec2 a{rng.uniform(0.01, 1.2), rng.uniform(0.01, 1.2)};
            const Vec2 b{a.x + 0.003, a.y + 0.004};  // 5 mm apart
            const PathSet pa = path_params(env5, a);
            const PathSet pb = path_params(env5, b);
            CHECK(std::fabs(pa.delay[0] - pb.delay[0]) <= 0.005 / 299792458.0 + 1e-20);
        }
    }
    SUBCASE("LOS path has the smallest delay") {
        const Environment env5 = build_environment(small_config(4, 4, 6), kArea, 11);
        Rng rng(78);
        for (int trial = 0; trial < 20; ++trial) {
            const Vec2 l{rng.uniform(0.0, 1.25), rng.uniform(0.0, 1.25)};
            const PathSet ps = path_params(env5, l);
            for (size_t p = 1; p < ps.delay.size(); ++p) CHECK(ps.delay[0] <= ps.delay[p]);
        }
    }
    SUBCASE("outside bounds rejected") {
        CHECK_THROWS_AS(path_params(env, Vec2{-1.0, 0.5}), std::invalid_argument);
    }
}

TEST_CASE("csi_from_paths trivial cases") {
    SUBCASE("single path, unit coeff, broadside, zero delay: all entries (1, 0)") {
        ChannelConfig cfg = small_config(4, 6, 1);
        PathSet ps;
        ps.coeff = {std::complex<double>(1.0, 0.0)};
        ps.aoa = {M_PI / 2};
        ps.delay = {0.0};
        const CsiTensor out = csi_from_paths(cfg, ps);
        for (int a = 0; a < 4; ++a)
            for (int s = 0; s < 6; ++s) {
                CHECK(out.at(a, s, 0) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(out.at(a, s, 1) == doctest::Approx(0.0).epsilon(1e-12));
            }
    }
    SUBCASE("single unit path has unit magnitude everywhere") {
        ChannelConfig cfg = small_config(5, 7, 1);
        PathSet ps;
        ps.coeff = {std::polar(1.0, 0.4)};
        ps.aoa = {1.1};
        ps.delay = {3.3e-9};
        const CsiTensor out = csi_from_paths(cfg, ps);
        for (int a = 0; a < 5; ++a)
            for (int s = 0; s < 7; ++s) {
                const double mag = std::hypot(out.at(a, s, 0), out.at(a, s, 1));
                CHECK(mag == doctest::Approx(1.0).epsilon(1e-12));
            }
    }
}

TEST_CASE("csi matches the high-precision per-entry oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int A = 1 + static_cast<int>(rng.uniform_int(8));
        const int S = 1 + static_cast<int>(rng.uniform_int(16));
        const int P = 1 + static_cast<int>(rng.uniform_int(4));
        ChannelConfig cfg = small_config(A, S, P);
        PathSet ps;
        for (int p = 0; p < P; ++p) {
            ps.coeff.push_back(std::polar(rng.uniform(0.05, 1.0), rng.uniform(0.0, 2 * M_PI)));
            ps.aoa.push_back(rng.uniform(0.05, M_PI - 0.05));
            ps.delay.push_back(rng.uniform(0.0, 1e-7));
        }
        const CsiTensor out = csi_from_paths(cfg, ps);
        double worst = 0.0;
        for (int a = 1; a <= A; ++a)
            for (int s = 0; s < S; ++s) {
                const std::complex<double> want = ref::csi_entry(
                    a, cfg.antenna_spacing, cfg.center_wavelength,
                    cfg.subcarrier_freqs[static_cast<size_t>(s)], ps.coeff, ps.aoa, ps.delay);
                worst = std::max(worst, std::fabs(out.at(a - 1, s, 0) - want.real()));
                worst = std::max(worst, std::fabs(out.at(a - 1, s, 1) - want.imag()));
            }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("noiseless csi_at is a pure function; noisy csi_at is reproducible") {
    const Environment env = build_environment(small_config(4, 8, 3), kArea, 21);
    const Vec2 loc{0.3, 0.9};
    const CsiTensor a = csi_at(env, loc);
    const CsiTensor b = csi_at(env, loc);
    CHECK(a.data == b.data);

    Environment noisy_env = env;
    noisy_env.config.noise_std = 0.01;
    const CsiTensor c = csi_at(noisy_env, loc);
    const CsiTensor d = csi_at(noisy_env, loc);
    CHECK(c.data == d.data);
    CHECK(c.data != a.data);
}

TEST_CASE("single-path phase is linear across antennas") {
    const Environment env = build_environment(small_config(16, 4, 1), kArea, 3);
    const Vec2 loc{0.8, 0.31};
    const PathSet ps = path_params(env, loc);
    const CsiTensor out = csi_from_paths(env.config, ps);
    const double slope_want = -2.0 * M_PI * env.config.antenna_spacing * std::cos(ps.aoa[0]) /
                              env.config.center_wavelength;
    // unwrap phases at subcarrier 0, then least-squares fit a line in a
    std::vector<double> phases(16);
    double prev = std::atan2(out.at(0, 0, 1), out.at(0, 0, 0));
    phases[0] = prev;
    for (int a = 1; a < 16; ++a) {
        double ph = std::atan2(out.at(a, 0, 1), out.at(a, 0, 0));
        while (ph - prev > M_PI) ph -= 2 * M_PI;
        while (ph - prev < -M_PI) ph += 2 * M_PI;
        phases[static_cast<size_t>(a)] = ph;
        prev = ph;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int a = 0; a < 16; ++a) {
        sx += a;
        sy += phases[static_cast<size_t>(a)];
        sxx += static_cast<double>(a) * a;
        sxy += a * phases[static_cast<size_t>(a)];
    }
    const double n = 16.0;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double resid = 0.0;
    for (int a = 0; a < 16; ++a) {
        const double e = phases[static_cast<size_t>(a)] - (slope * a + intercept);
        resid += e * e;
    }
    CHECK(resid <= 1e-9);
    CHECK(slope == doctest::Approx(slope_want).epsilon(1e-9));
}

TEST_CASE("sample_dataset consistency, determinism, and uniformity") {
    const Environment env = build_environment(small_config(4, 4, 3, 0.01), kArea, 77);
    SUBCASE("n=1 pair equals csi_at with the same noise draw") {
        const auto set = sample_dataset(env, 1, 5);
        REQUIRE(set.size() == 1);
        const CsiTensor direct = csi_at(env, set[0].pos);
        CHECK(set[0].csi.data == direct.data);
    }
    SUBCASE("same seed twice gives identical datasets") {
        const auto a = sample_dataset(env, 20, 5);
        const auto b = sample_dataset(env, 20, 5);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].pos.x == b[i].pos.x);
            CHECK(a[i].csi.data == b[i].csi.data);
        }
    }
    SUBCASE("locations are uniform: mean within 3 sigma of the box center") {
        const int n = 1000;
        const auto set = sample_dataset(env, n, 6);
        double mx = 0, my = 0;
        for (const auto& s : set) {
            mx += s.pos.x;
            my += s.pos.y;
        }
        mx /= n;
        my /= n;
        const double sigma = (1.25 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
        CHECK(std::fabs(mx - 0.625) <= 3 * sigma);
        CHECK(std::fabs(my - 0.625) <= 3 * sigma);
    }
    SUBCASE("n=0 rejected") { CHECK_THROWS_AS(sample_dataset(env, 0, 1), std::invalid_argument); }
}
