#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csiloc/channel.hpp"
#include "csiloc/denoiser.hpp"
#include "csiloc/pnp.hpp"
#include "csiloc/posnet.hpp"
#include "csiloc/trajectory.hpp"

namespace csiloc {

/// Parsed "[section] / key = value" file. '#' and ';' start comments.
struct KvFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
};

KvFile parse_kv(const std::string& text);
KvFile parse_kv_file(const std::string& path);

struct DataCounts {
    int train = 1000;
    double val_fraction = 0.1;  // carved from the train set
    int test = 500;
};

struct TrajectoryCounts {
    int train = 10000;
    int tune = 200;
    int test = 1000;
};

struct SweepConfig {
    std::vector<double> snr_db{1, 10, 20, 40, 60, 80, 100};
    std::vector<double> mu_grid{0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
    std::vector<double> rho_grid{0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
    bool use_model = false;  // true: drive the baseline with a trained network
};

struct AblationConfig {
    std::vector<uint64_t> seeds{1, 2, 3};
};

/// Everything one experiment run needs; all randomness flows from `seed`.
struct ExperimentConfig {
    std::string label = "run";
    uint64_t seed = 1;
    ChannelConfig channel;
    Rect area{0.0, 0.0, 1.25, 1.25};
    DataCounts data;
    NetworkConfig network;
    TrainHyper train;
    TrajectoryConfig trajectory;
    TrajectoryCounts traj_counts;
    std::vector<double> denoiser_levels;  // meters
    DenoiserHyper denoiser;
    double position_noise_std = 0.02;  // meters, synthetic positioning error
    PnpConfig pnp;
    SweepConfig sweep;
    AblationConfig ablation;

    void validate() const;
};

/// Defaults tuned for desk-scale runs (16x16 CSI, narrow network).
ExperimentConfig default_experiment_config();

ExperimentConfig experiment_config_from_kv(const KvFile& kv);
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical text form: sorted sections and keys, numbers at full precision.
/// Two configs serialize identically iff their semantic fields agree.
std::string canonical_config_text(const ExperimentConfig& cfg);

/// FNV-1a 64 over the canonical text, as 16 hex chars.
std::string config_hash(const ExperimentConfig& cfg);

std::vector<double> parse_double_list(const std::string& text);
std::string format_double(double v);  // shortest round-trip decimal

}  // namespace csiloc
