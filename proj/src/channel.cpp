#include "csiloc/channel.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "csiloc/rng.hpp"

namespace csiloc {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

void ChannelConfig::validate() const {
    if (num_antennas < 1) throw std::invalid_argument("channel: num_antennas must be positive");
    if (num_subcarriers < 1)
        throw std::invalid_argument("channel: num_subcarriers must be positive");
    if (center_wavelength <= 0.0)
        throw std::invalid_argument("channel: center_wavelength must be > 0");
    if (antenna_spacing <= 0.0) throw std::invalid_argument("channel: antenna_spacing must be > 0");
    if (num_paths < 1) throw std::invalid_argument("channel: num_paths must be >= 1");
    if (noise_std < 0.0) throw std::invalid_argument("channel: noise_std must be >= 0");
    if (static_cast<int>(subcarrier_freqs.size()) != num_subcarriers)
        throw std::invalid_argument("channel: subcarrier_freqs length must equal num_subcarriers");
    for (size_t s = 1; s < subcarrier_freqs.size(); ++s)
        if (subcarrier_freqs[s] <= subcarrier_freqs[s - 1])
            throw std::invalid_argument("channel: subcarrier_freqs must be strictly increasing");
}

std::vector<double> default_subcarriers(int count, double center_wavelength,
                                        double bandwidth_hz) {
    const double fc = kLightSpeed / center_wavelength;
    std::vector<double> freqs(static_cast<size_t>(count));
    if (count == 1) {
        freqs[0] = fc;
        return freqs;
    }
    const double step = bandwidth_hz / (count - 1);
    for (int s = 0; s < count; ++s)
        freqs[static_cast<size_t>(s)] = fc - bandwidth_hz / 2.0 + step * s;
    return freqs;
}

Environment build_environment(const ChannelConfig& config, const Rect& bounds, uint64_t seed) {
    config.validate();
    if (bounds.width() <= 0.0 || bounds.height() <= 0.0)
        throw std::invalid_argument("build_environment: bounds must have positive area");
    Environment env;
    env.config = config;
    env.bounds = bounds;
    env.seed = seed;
    env.bs_pos = {bounds.xmin - 0.5 * bounds.width(), bounds.ymin + 0.5 * bounds.height()};
    env.array_axis = {0.0, 1.0};
    // scatterers land in the bounds expanded by half the width/height per side
    const Rect ext{bounds.xmin - 0.5 * bounds.width(), bounds.ymin - 0.5 * bounds.height(),
                   bounds.xmax + 0.5 * bounds.width(), bounds.ymax + 0.5 * bounds.height()};
    Rng rng(derive_seed(seed, {0x5ca77e7e5ull}));
    env.scatterers.reserve(static_cast<size_t>(config.num_paths - 1));
    for (int i = 0; i < config.num_paths - 1; ++i) {
        const double x = rng.uniform(ext.xmin, ext.xmax);
        const double y = rng.uniform(ext.ymin, ext.ymax);
        env.scatterers.push_back({x, y});
    }
    return env;
}

namespace {

double bearing_from_axis(Vec2 axis, Vec2 dir) {
    const double d = norm(dir);
    const double c = d > 0.0 ? (axis.x * dir.x + axis.y * dir.y) / d : 0.0;
    return std::acos(std::min(1.0, std::max(-1.0, c)));
}

double path_phase(uint64_t env_seed, int path_index) {
    Rng rng(derive_seed(env_seed, {0x9a7e5ull, static_cast<uint64_t>(path_index)}));
    return 2.0 * M_PI * rng.u01();
}

constexpr double kReflectionLoss = 0.3;

}  // namespace

PathSet path_params(const Environment& env, Vec2 location) {
    if (!env.bounds.contains(location))
        throw std::invalid_argument("path_params: location outside environment bounds");
    const int P = env.config.num_paths;
    PathSet ps;
    ps.coeff.reserve(static_cast<size_t>(P));
    ps.aoa.reserve(static_cast<size_t>(P));
    ps.delay.reserve(static_cast<size_t>(P));

    const Vec2 to_mt = location - env.bs_pos;
    const double los = norm(to_mt);
    ps.delay.push_back(los / kLightSpeed);
    ps.aoa.push_back(bearing_from_axis(env.array_axis, to_mt));
    ps.coeff.push_back(std::polar(1.0 / std::max(los, 1.0), path_phase(env.seed, 1)));

    for (size_t i = 0; i < env.scatterers.size(); ++i) {
        const Vec2 sc = env.scatterers[i];
        const double leg1 = norm(sc - env.bs_pos);
        const double leg2 = norm(location - sc);
        const double total = leg1 + leg2;
        ps.delay.push_back(total / kLightSpeed);
        ps.aoa.push_back(bearing_from_axis(env.array_axis, sc - env.bs_pos));
        ps.coeff.push_back(std::polar(kReflectionLoss / std::max(total, 1.0),
                                      path_phase(env.seed, static_cast<int>(i) + 2)));
    }
    return ps;
}

CsiTensor csi_from_paths(const ChannelConfig& config, const PathSet& paths) {
    config.validate();
    const size_t P = paths.coeff.size();
    if (paths.aoa.size() != P || paths.delay.size() != P)
        throw std::invalid_argument("csi_from_paths: path lists must share length");
    const int A = config.num_antennas;
    const int S = config.num_subcarriers;
    CsiTensor out({A, S, 2});
#pragma omp parallel for schedule(static) if (A > 1)
    for (int a = 1; a <= A; ++a) {
        for (int s = 0; s < S; ++s) {
            std::complex<double> acc(0.0, 0.0);
            for (size_t p = 0; p < P; ++p) {
                const double ant_phase = -2.0 * M_PI * a * config.antenna_spacing *
                                         std::cos(paths.aoa[p]) / config.center_wavelength;
                const double sub_phase =
                    -2.0 * M_PI * config.subcarrier_freqs[static_cast<size_t>(s)] *
                    paths.delay[p];
                acc += paths.coeff[p] * std::polar(1.0, ant_phase) * std::polar(1.0, sub_phase);
            }
            out.at(a - 1, s, 0) = acc.real();
            out.at(a - 1, s, 1) = acc.imag();
        }
    }
    return out;
}

namespace {

uint64_t location_bits(Vec2 p) {
    uint64_t bx, by;
    std::memcpy(&bx, &p.x, sizeof bx);
    std::memcpy(&by, &p.y, sizeof by);
    uint64_t s = bx ^ (by * 0x9e3779b97f4a7c15ull);
    return splitmix64(s);
}

}  // namespace

CsiTensor csi_at(const Environment& env, Vec2 location) {
    CsiTensor out = csi_from_paths(env.config, path_params(env, location));
    if (env.config.noise_std > 0.0) {
        Rng rng(derive_seed(env.seed, {0xc51ull, location_bits(location)}));
        for (auto& v : out.data) v += rng.normal(0.0, env.config.noise_std);
    }
    return out;
}

std::vector<CsiSample> sample_dataset(const Environment& env, int n_points, uint64_t seed) {
    if (n_points < 1) throw std::invalid_argument("sample_dataset: n_points must be >= 1");
    Rng rng(derive_seed(seed, {0xda7a5e7ull}));
    std::vector<Vec2> locs(static_cast<size_t>(n_points));
    for (auto& l : locs) {
        l.x = rng.uniform(env.bounds.xmin, env.bounds.xmax);
        l.y = rng.uniform(env.bounds.ymin, env.bounds.ymax);
    }
    std::vector<CsiSample> out(static_cast<size_t>(n_points));
#pragma omp parallel for schedule(static) if (n_points > 1)
    for (int i = 0; i < n_points; ++i) {
        out[static_cast<size_t>(i)].pos = locs[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)].csi = csi_at(env, locs[static_cast<size_t>(i)]);
    }
    return out;
}

}  // namespace csiloc
