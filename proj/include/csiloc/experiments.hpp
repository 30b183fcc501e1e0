#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "csiloc/config.hpp"
#include "csiloc/denoiser.hpp"
#include "csiloc/io.hpp"
#include "csiloc/pnp.hpp"
#include "csiloc/posnet.hpp"

namespace csiloc {

struct MetricsRecord {
    std::string label;
    std::string metric;
    double value = 0.0;
    std::string unit;
    uint64_t seed = 0;
    std::string config_hash;
};

/// label,metric,value,unit,seed,config_hash with round-trip number formatting.
std::string metrics_csv(const std::vector<MetricsRecord>& records);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);

/// Sorted (error, cumulative fraction) pairs as CSV rows.
std::string cdf_csv(std::vector<double> errors_m);
void emit_cdf(const std::vector<double>& errors_m, const std::string& path);

/// Mean squared error of the last trajectory step (m^2).
double final_step_mse(const std::vector<Trajectory>& clean,
                      const std::vector<Trajectory>& estimate);

/// Mean squared error over all trajectory steps (m^2).
double full_traj_mse(const std::vector<Trajectory>& clean,
                     const std::vector<Trajectory>& estimate);

/// Per-sample position errors (meters) of a trained model on a sample set.
std::vector<double> position_errors(const PositionModel& model,
                                    const std::vector<CsiSample>& samples);

/// Gaussian position noise applied to every trajectory, seeded per index.
std::vector<Trajectory> noisy_synthetic(const std::vector<Trajectory>& clean, double sigma,
                                        uint64_t seed);

/// Positioning-network estimates along each trajectory's channel responses.
std::vector<Trajectory> noisy_from_model(const PositionModel& model, const Environment& env,
                                         const std::vector<Trajectory>& clean);

struct AblationOutcome {
    std::vector<MetricsRecord> records;
    int ordered_seeds = 0;  // seeds where full <= no-attention <= plain ordering held
    int total_seeds = 0;
    bool majority() const { return 2 * ordered_seeds >= total_seeds + 1; }
};

/// Trains the full network, the variant without attention blocks, and the
/// variant with bare pooling instead of pooling blocks, once per ablation
/// seed, on one synthetic environment; reports test MSEs.
AblationOutcome run_ablation(const ExperimentConfig& cfg, std::ostream* log);

struct SnrSweepRow {
    double snr_db = 0.0;
    std::string method;  // "positioning" | "dnn_prior" | "pnp"
    double final_mse_m2 = 0.0;
    double mu = 0.0;   // tuned values, pnp rows only
    double rho = 0.0;
};

struct TrackingSets {
    std::vector<Trajectory> tune_clean, tune_noisy;
    std::vector<Trajectory> test_clean, test_noisy;
};

/// Builds tune/test trajectory sets with synthetic positioning noise.
TrackingSets make_tracking_sets(const ExperimentConfig& cfg);

std::string sweep_csv(const std::vector<SnrSweepRow>& rows);

/// For each SNR: evaluates the noisy baseline, the plain denoiser refinement
/// and the PnP tracker with (mu, rho) tuned on the tuning set.
std::vector<SnrSweepRow> run_snr_sweep(const ExperimentConfig& cfg, const DenoiserBank& bank,
                                       const TrackingSets& sets, std::ostream* log);

}  // namespace csiloc
