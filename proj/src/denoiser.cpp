#include "csiloc/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "csiloc/errors.hpp"
#include "csiloc/kernels.hpp"
#include "csiloc/rng.hpp"

namespace csiloc {

std::vector<Parameter*> DenoiserModel::all_params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

std::vector<const Parameter*> DenoiserModel::all_params() const {
    return {&w1, &b1, &w2, &b2, &w3, &b3};
}

namespace {

Parameter mlp_weight(const std::string& name, int in, int out, Rng& rng) {
    Parameter p{Tensor({in, out}), name};
    const double gain =
        std::sqrt(2.0 / (1.0 + kernels::kLeakyReluSlope * kernels::kLeakyReluSlope));
    const double bound = gain * std::sqrt(3.0 / in);
    for (auto& v : p.value.data) v = rng.uniform(-bound, bound);
    return p;
}

void flatten_into(const Trajectory& traj, double* out) {
    for (size_t t = 0; t < traj.points.size(); ++t) {
        out[2 * t] = traj.points[t].x;
        out[2 * t + 1] = traj.points[t].y;
    }
}

}  // namespace

DenoiserModel init_denoiser(int traj_len, double noise_level, int hidden, uint64_t seed) {
    if (traj_len < 1) throw std::invalid_argument("denoiser: traj_len must be >= 1");
    if (noise_level < 0.0) throw std::invalid_argument("denoiser: noise level must be >= 0");
    if (hidden < 1) throw std::invalid_argument("denoiser: hidden width must be >= 1");
    Rng rng(derive_seed(seed, {0xd302ull}));
    DenoiserModel m;
    m.traj_len = traj_len;
    m.noise_level = noise_level;
    const int io = 2 * traj_len;
    m.w1 = mlp_weight("w1", io, hidden, rng);
    m.b1 = {Tensor({hidden}), "b1"};
    m.w2 = mlp_weight("w2", hidden, hidden, rng);
    m.b2 = {Tensor({hidden}), "b2"};
    m.w3 = mlp_weight("w3", hidden, io, rng);
    m.b3 = {Tensor({io}), "b3"};
    return m;
}

Trajectory denoise(const DenoiserModel& model, const Trajectory& noisy) {
    if (noisy.length() != model.traj_len)
        throw std::invalid_argument("denoise: trajectory length does not match the model");
    const int io = 2 * model.traj_len;
    const int h = model.hidden();
    std::vector<double> x(static_cast<size_t>(io));
    flatten_into(noisy, x.data());
    std::vector<double> h1(static_cast<size_t>(h)), h2(static_cast<size_t>(h));
    std::vector<double> out(static_cast<size_t>(io));
    kernels::affine_forward(x.data(), 1, io, model.w1.value.data.data(), h,
                            model.b1.value.data.data(), h1.data());
    kernels::leaky_relu_forward(h1.data(), h, kernels::kLeakyReluSlope, h1.data());
    kernels::affine_forward(h1.data(), 1, h, model.w2.value.data.data(), h,
                            model.b2.value.data.data(), h2.data());
    kernels::leaky_relu_forward(h2.data(), h, kernels::kLeakyReluSlope, h2.data());
    kernels::affine_forward(h2.data(), 1, h, model.w3.value.data.data(), io,
                            model.b3.value.data.data(), out.data());
    Trajectory refined = noisy;
    for (int t = 0; t < model.traj_len; ++t) {
        refined.points[static_cast<size_t>(t)].x = out[static_cast<size_t>(2 * t)];
        refined.points[static_cast<size_t>(t)].y = out[static_cast<size_t>(2 * t + 1)];
    }
    return refined;
}

DenoiserModel train_denoiser(const std::vector<Trajectory>& clean, double noise_level,
                             const DenoiserHyper& hyper) {
    if (clean.empty()) throw std::invalid_argument("train_denoiser: empty trajectory set");
    const int T = clean.front().length();
    for (const auto& traj : clean)
        if (traj.length() != T)
            throw std::invalid_argument("train_denoiser: inconsistent trajectory lengths");
    if (noise_level < 0.0) throw std::invalid_argument("train_denoiser: noise level must be >= 0");

    const int n = static_cast<int>(clean.size());
    const int n_val = std::max(1, static_cast<int>(std::floor(n * hyper.val_fraction)));
    const int n_fit = std::max(1, n - n_val);
    const int io = 2 * T;

    // clean targets, flattened once
    std::vector<double> flat(static_cast<size_t>(n) * io);
    for (int i = 0; i < n; ++i) flatten_into(clean[static_cast<size_t>(i)], &flat[static_cast<size_t>(i) * io]);

    // frozen noisy validation inputs (tail slice)
    Rng val_rng(derive_seed(hyper.seed, {0x7a1ull}));
    std::vector<double> val_x(static_cast<size_t>(n_val) * io);
    for (int i = 0; i < n_val; ++i)
        for (int j = 0; j < io; ++j)
            val_x[static_cast<size_t>(i) * io + j] =
                flat[static_cast<size_t>(n_fit + i) * io + j] + val_rng.normal(0.0, noise_level);

    DenoiserModel model = init_denoiser(T, noise_level, kDenoiserHidden, hyper.seed);
    DenoiserModel best = model;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Parameter*> params = model.all_params();
    AdamState adam;
    adam.base_lr = hyper.lr;
    adam.halve_every = hyper.lr_halve_every;

    const int batch = std::max(1, std::min(hyper.batch_size, n_fit));
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Rng erng(derive_seed(hyper.seed, {0xe90cull, static_cast<uint64_t>(epoch)}));
        std::vector<int> idx(static_cast<size_t>(n_fit));
        for (int i = 0; i < n_fit; ++i) idx[static_cast<size_t>(i)] = i;
        for (int i = n_fit - 1; i > 0; --i)
            std::swap(idx[static_cast<size_t>(i)],
                      idx[static_cast<size_t>(erng.uniform_int(static_cast<uint64_t>(i + 1)))]);

        for (int start = 0; start < n_fit; start += batch) {
            const int bsz = std::min(batch, n_fit - start);
            Tensor x({bsz, io});
            Tensor y({bsz, io});
            for (int i = 0; i < bsz; ++i) {
                const int s = idx[static_cast<size_t>(start + i)];
                for (int j = 0; j < io; ++j) {
                    const double clean_v = flat[static_cast<size_t>(s) * io + j];
                    x.at(i, j) = clean_v + erng.normal(0.0, noise_level);  // fresh noise per epoch
                    y.at(i, j) = clean_v;
                }
            }
            Tape t;
            Var xs = t.input(std::move(x));
            Var h = t.leaky_relu(t.affine(xs, t.param(model.w1), t.param(model.b1)),
                                 kernels::kLeakyReluSlope);
            h = t.leaky_relu(t.affine(h, t.param(model.w2), t.param(model.b2)),
                             kernels::kLeakyReluSlope);
            Var pred = t.affine(h, t.param(model.w3), t.param(model.b3));
            // Eq-of-record loss: mean over samples and steps of squared step error
            Var loss = t.scale(t.sum_sq(t.sub(pred, t.input(std::move(y)))),
                               1.0 / (static_cast<double>(bsz) * T));
            if (!std::isfinite(t.value(loss)[0]))
                throw numeric_error("train_denoiser: loss diverged at epoch " +
                                    std::to_string(epoch));
            t.backward(loss);
            std::vector<Tensor> grads;
            grads.reserve(params.size());
            for (const Parameter* p : params) grads.push_back(t.grad_of(*p));
            adam_step(params, grads, adam, epoch);
        }

        // validation on the frozen noisy slice
        double val_mse = 0.0;
        for (int i = 0; i < n_val; ++i) {
            Trajectory noisy = clean[static_cast<size_t>(n_fit + i)];
            for (int t2 = 0; t2 < T; ++t2) {
                noisy.points[static_cast<size_t>(t2)].x = val_x[static_cast<size_t>(i) * io + 2 * t2];
                noisy.points[static_cast<size_t>(t2)].y =
                    val_x[static_cast<size_t>(i) * io + 2 * t2 + 1];
            }
            const Trajectory refined = denoise(model, noisy);
            for (int t2 = 0; t2 < T; ++t2) {
                const Vec2 d = refined.points[static_cast<size_t>(t2)] -
                               clean[static_cast<size_t>(n_fit + i)].points[static_cast<size_t>(t2)];
                val_mse += d.x * d.x + d.y * d.y;
            }
        }
        val_mse /= static_cast<double>(n_val) * T;
        if (val_mse < best_val) {
            best_val = val_mse;
            best = model;
        }
    }
    return best;
}

DenoiserBank train_bank(const std::vector<Trajectory>& clean, std::vector<double> levels,
                        const DenoiserHyper& hyper) {
    if (levels.empty()) throw std::invalid_argument("train_bank: empty level grid");
    std::set<double> uniq(levels.begin(), levels.end());
    if (uniq.size() != levels.size())
        throw std::invalid_argument("train_bank: duplicate noise levels");
    std::sort(levels.begin(), levels.end());
    DenoiserBank bank;
    bank.models.resize(levels.size());
    const int n = static_cast<int>(levels.size());
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (int i = 0; i < n; ++i) {
        DenoiserHyper h = hyper;
        h.seed = derive_seed(hyper.seed, {0xba9cull, static_cast<uint64_t>(i)});
        bank.models[static_cast<size_t>(i)] =
            train_denoiser(clean, levels[static_cast<size_t>(i)], h);
    }
    return bank;
}

const DenoiserModel& select_denoiser(const DenoiserBank& bank, double level) {
    if (bank.models.empty()) throw std::invalid_argument("select_denoiser: empty bank");
    size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < bank.models.size(); ++i) {
        const double d = std::fabs(bank.models[i].noise_level - level);
        const bool tie_lower =
            d == best_dist && bank.models[i].noise_level < bank.models[best].noise_level;
        if (d < best_dist || tie_lower) {
            best_dist = d;
            best = i;
        }
    }
    return bank.models[best];
}

}  // namespace csiloc
