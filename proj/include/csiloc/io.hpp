#pragma once

#include <string>
#include <vector>

#include "csiloc/channel.hpp"
#include "csiloc/denoiser.hpp"
#include "csiloc/posnet.hpp"
#include "csiloc/trajectory.hpp"

// Versioned little-endian binary containers. Magics: "ENV1" environment,
// "CSI1" channel-response dataset, "TRJ1" trajectory dataset, "IMU1" step
// measurements, "PNM1" position model, "PNC1" training checkpoint, "DNB1"
// denoiser bank. Every writer goes through a temp-file-then-rename so partial
// files never land under the final name. Readers throw bad_magic_error,
// bad_version_error or truncated_file_error as appropriate.

namespace csiloc {

/// Writes `bytes` to `path` atomically (write temp, rename).
void atomic_write_file(const std::string& path, const std::string& bytes);

void save_environment(const std::string& path, const Environment& env);
Environment load_environment(const std::string& path);

// CSI1: magic, A, S, count (u32 LE), then per record the 2x f64 location and
// A*S*2 f32 values row-major (antenna outer, subcarrier inner, re then im).
void save_csi_dataset(const std::string& path, const std::vector<CsiSample>& samples, int A,
                      int S);
std::vector<CsiSample> load_csi_dataset(const std::string& path, int* A = nullptr,
                                        int* S = nullptr);

// TRJ1: magic, T, count, then per record T x 2 f64.
void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> load_trajectories(const std::string& path);

// IMU1: magic, T, count, then per record f64 snr_db followed by (T-1) x 2 f64
// (distance, heading).
void save_imu(const std::string& path, const std::vector<ImuMeasurement>& measurements,
              int traj_len);
std::vector<ImuMeasurement> load_imu(const std::string& path, int* traj_len = nullptr);

// PNM1: magic, version, config block, meta, shape-prefixed f64 arrays in
// canonical parameter order. Roundtrips are bit-exact.
void save_model(const std::string& path, const PositionModel& model);
PositionModel load_model(const std::string& path);

// PNC1: full training state (current params, best params, Adam moments,
// epoch counter) so a resumed run replays an uninterrupted one bit for bit.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

// DNB1: magic, version, model count, then per model T, level and the six
// shape-prefixed f64 arrays.
void save_bank(const std::string& path, const DenoiserBank& bank);
DenoiserBank load_bank(const std::string& path);

}  // namespace csiloc
