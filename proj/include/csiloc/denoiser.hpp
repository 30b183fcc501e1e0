#pragma once

#include <cstdint>
#include <vector>

#include "csiloc/autograd.hpp"
#include "csiloc/trajectory.hpp"

namespace csiloc {

/// 3-layer MLP trajectory denoiser. Trajectories are flattened t-major,
/// coordinate-minor: [x1, y1, x2, y2, ...].
struct DenoiserModel {
    int traj_len = 0;          // T
    double noise_level = 0.0;  // training noise std, meters
    Parameter w1, b1, w2, b2, w3, b3;  // (2T,h), (h), (h,h), (h), (h,2T), (2T)

    int hidden() const { return w1.value.ndim() == 2 ? w1.value.dim(1) : 0; }
    std::vector<Parameter*> all_params();
    std::vector<const Parameter*> all_params() const;
};

inline constexpr int kDenoiserHidden = 128;

/// Freshly initialized model (Kaiming-uniform weights, zero biases).
DenoiserModel init_denoiser(int traj_len, double noise_level, int hidden, uint64_t seed);

/// Forward pass: flatten, affine+activation twice, affine, reshape.
Trajectory denoise(const DenoiserModel& model, const Trajectory& noisy);

struct DenoiserHyper {
    int epochs = 300;
    int batch_size = 128;
    double lr = 1e-3;
    int lr_halve_every = 200;
    double val_fraction = 0.1;
    uint64_t seed = 1;
};

/// Trains one Gaussian denoiser at the given noise level. Noise is redrawn
/// every epoch; a held-out slice with frozen noise picks the best checkpoint.
DenoiserModel train_denoiser(const std::vector<Trajectory>& clean, double noise_level,
                             const DenoiserHyper& hyper);

/// Sorted-by-level family of denoisers sharing one trajectory length.
struct DenoiserBank {
    std::vector<DenoiserModel> models;
};

/// One model per grid level (levels must be distinct); training jobs run
/// independently and may execute concurrently.
DenoiserBank train_bank(const std::vector<Trajectory>& clean, std::vector<double> levels,
                        const DenoiserHyper& hyper);

/// Member whose trained level is nearest the request; ties pick the lower
/// level, out-of-range requests clamp to the end members.
const DenoiserModel& select_denoiser(const DenoiserBank& bank, double level);

}  // namespace csiloc
