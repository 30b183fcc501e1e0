#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "csiloc/tensor.hpp"

namespace csiloc {

inline constexpr double kLightSpeed = 299792458.0;  // m/s

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 a);

struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    bool contains(Vec2 p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
};

/// Uniform-linear-array channel description.
struct ChannelConfig {
    int num_antennas = 16;       // A
    int num_subcarriers = 16;    // S
    double center_wavelength = 0.125;  // meters
    double antenna_spacing = 0.0625;   // meters
    std::vector<double> subcarrier_freqs;  // Hz, strictly increasing, length S
    int num_paths = 5;           // P (1 direct + P-1 scattered)
    double noise_std = 0.0;      // per-component additive complex-Gaussian std

    void validate() const;
};

/// Evenly spaced subcarriers of total width `bandwidth_hz` centered on the
/// carrier implied by the wavelength.
std::vector<double> default_subcarriers(int count, double center_wavelength,
                                        double bandwidth_hz);

/// Per-path channel parameters. Index 0 is the direct path and always has the
/// smallest delay.
struct PathSet {
    std::vector<std::complex<double>> coeff;
    std::vector<double> aoa;    // radians in (0, pi), measured from the array axis
    std::vector<double> delay;  // seconds
};

/// Fixed multipath geometry. Immutable after construction, so the channel
/// response is a pure function of the terminal location.
struct Environment {
    ChannelConfig config;
    Rect bounds;
    Vec2 bs_pos;
    Vec2 array_axis;  // unit vector along the ULA
    std::vector<Vec2> scatterers;
    uint64_t seed = 0;
};

/// Channel response split into real/imaginary planes, shape (A, S, 2).
using CsiTensor = Tensor;

struct CsiSample {
    CsiTensor csi;
    Vec2 pos;
};

/// Places the base station half a box-width outside the midpoint of the west
/// edge, with the array axis vertical, and drops P-1 scatterers uniformly in
/// the bounds expanded by half its width/height on every side.
Environment build_environment(const ChannelConfig& config, const Rect& bounds, uint64_t seed);

/// Path delays, arrival angles, and coefficients for a terminal at `location`.
/// Coefficient phases are drawn from a hash of (environment seed, path index);
/// magnitudes fall off as 1/distance, scattered paths additionally carry a
/// fixed 0.3 reflection loss.
PathSet path_params(const Environment& env, Vec2 location);

/// Channel response synthesized from explicit path parameters:
/// entry (a, s) = sum_p c_p * exp(-j 2 pi a d cos(aoa_p) / wavelength)
///                      * exp(-j 2 pi f_s delay_p), with a = 1..A.
CsiTensor csi_from_paths(const ChannelConfig& config, const PathSet& paths);

/// csi_from_paths at the location's path parameters plus complex Gaussian
/// noise of std `noise_std` per real component. The noise stream is derived
/// from (environment seed, location bits), so the result is a pure function
/// of (environment, location).
CsiTensor csi_at(const Environment& env, Vec2 location);

/// `n_points` uniform locations in bounds with their channel responses.
std::vector<CsiSample> sample_dataset(const Environment& env, int n_points, uint64_t seed);

}  // namespace csiloc
