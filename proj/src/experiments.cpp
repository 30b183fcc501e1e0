#include "csiloc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "csiloc/rng.hpp"

namespace csiloc {

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
    std::ostringstream out;
    out << "label,metric,value,unit,seed,config_hash\n";
    for (const MetricsRecord& r : records)
        out << r.label << "," << r.metric << "," << format_double(r.value) << "," << r.unit << ","
            << r.seed << "," << r.config_hash << "\n";
    return out.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    atomic_write_file(path, metrics_csv(records));
}

std::string cdf_csv(std::vector<double> errors_m) {
    if (errors_m.empty()) throw std::invalid_argument("cdf: empty error list");
    std::sort(errors_m.begin(), errors_m.end());
    std::ostringstream out;
    out << "error_m,cum_fraction\n";
    const double n = static_cast<double>(errors_m.size());
    for (size_t i = 0; i < errors_m.size(); ++i)
        out << format_double(errors_m[i]) << ","
            << format_double(static_cast<double>(i + 1) / n) << "\n";
    return out.str();
}

void emit_cdf(const std::vector<double>& errors_m, const std::string& path) {
    atomic_write_file(path, cdf_csv(errors_m));
}

double final_step_mse(const std::vector<Trajectory>& clean,
                      const std::vector<Trajectory>& estimate) {
    if (clean.empty() || clean.size() != estimate.size())
        throw std::invalid_argument("final_step_mse: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < clean.size(); ++i) {
        const Vec2 d = clean[i].points.back() - estimate[i].points.back();
        acc += d.x * d.x + d.y * d.y;
    }
    return acc / static_cast<double>(clean.size());
}

double full_traj_mse(const std::vector<Trajectory>& clean,
                     const std::vector<Trajectory>& estimate) {
    if (clean.empty() || clean.size() != estimate.size())
        throw std::invalid_argument("full_traj_mse: size mismatch");
    double acc = 0.0;
    int64_t count = 0;
    for (size_t i = 0; i < clean.size(); ++i) {
        if (clean[i].points.size() != estimate[i].points.size())
            throw std::invalid_argument("full_traj_mse: trajectory length mismatch");
        for (size_t t = 0; t < clean[i].points.size(); ++t) {
            const Vec2 d = clean[i].points[t] - estimate[i].points[t];
            acc += d.x * d.x + d.y * d.y;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

std::vector<double> position_errors(const PositionModel& model,
                                    const std::vector<CsiSample>& samples) {
    const int n = static_cast<int>(samples.size());
    std::vector<double> errs(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (int i = 0; i < n; ++i) {
        const Vec2 pred = predict(model, samples[static_cast<size_t>(i)].csi);
        errs[static_cast<size_t>(i)] = norm(pred - samples[static_cast<size_t>(i)].pos);
    }
    return errs;
}

std::vector<Trajectory> noisy_synthetic(const std::vector<Trajectory>& clean, double sigma,
                                        uint64_t seed) {
    std::vector<Trajectory> out(clean.size());
    const int n = static_cast<int>(clean.size());
#pragma omp parallel for schedule(static) if (n > 1)
    for (int i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] =
            add_noise(clean[static_cast<size_t>(i)], sigma,
                      derive_seed(seed, {0x90515eull, static_cast<uint64_t>(i)}));
    return out;
}

std::vector<Trajectory> noisy_from_model(const PositionModel& model, const Environment& env,
                                         const std::vector<Trajectory>& clean) {
    std::vector<Trajectory> out(clean.size());
    const int n = static_cast<int>(clean.size());
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (int i = 0; i < n; ++i) {
        Trajectory est = clean[static_cast<size_t>(i)];
        for (Vec2& p : est.points) p = predict(model, csi_at(env, p));
        out[static_cast<size_t>(i)] = std::move(est);
    }
    return out;
}

AblationOutcome run_ablation(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    const Environment env = build_environment(cfg.channel, cfg.area, cfg.seed);

    struct Variant {
        const char* name;
        bool attention;
        bool pooling_blocks;
    };
    const Variant variants[] = {
        {"aarescnn", true, true},
        {"aarescnn_aarb0", false, true},
        {"aarescnn_pb0_aarb0", false, false},
    };

    AblationOutcome outcome;
    outcome.total_seeds = static_cast<int>(cfg.ablation.seeds.size());
    for (uint64_t seed : cfg.ablation.seeds) {
        // fresh data per seed, shared across the three variants
        const auto all_train = sample_dataset(env, cfg.data.train,
                                              derive_seed(seed, {0xab1da7aull}));
        const auto test = sample_dataset(env, cfg.data.test, derive_seed(seed, {0xab17e57ull}));
        const int n_val = std::max(1, static_cast<int>(std::floor(cfg.data.train *
                                                                  cfg.data.val_fraction)));
        const int n_fit = cfg.data.train - n_val;
        const std::vector<CsiSample> train(all_train.begin(), all_train.begin() + n_fit);
        const std::vector<CsiSample> val(all_train.begin() + n_fit, all_train.end());

        double mse[3] = {0, 0, 0};
        for (int v = 0; v < 3; ++v) {
            NetworkConfig net = cfg.network;
            net.use_attention = variants[v].attention;
            net.use_pooling_blocks = variants[v].pooling_blocks;
            TrainHyper hyper = cfg.train;
            hyper.seed = derive_seed(seed, {0xab17124ull});
            if (log)
                *log << "[ablation] seed " << seed << " variant " << variants[v].name
                     << " training " << hyper.epochs << " epochs\n";
            const PositionModel model = train_position_net(net, train, val, hyper);
            mse[v] = eval_mse(model, test);
            if (log)
                *log << "[ablation] seed " << seed << " variant " << variants[v].name
                     << " test mse " << mse[v] << " m^2\n";
            outcome.records.push_back({variants[v].name, "test_mse", mse[v], "m2", seed, hash});
            outcome.records.push_back(
                {variants[v].name, "test_mse_mm2", mse[v] * 1e6, "mm2", seed, hash});
            outcome.records.push_back({variants[v].name, "test_rmse_mm",
                                       std::sqrt(mse[v]) * 1e3, "mm", seed, hash});
        }
        if (mse[0] <= mse[1] && mse[1] <= mse[2]) ++outcome.ordered_seeds;
    }
    return outcome;
}

TrackingSets make_tracking_sets(const ExperimentConfig& cfg) {
    TrackingSets sets;
    sets.tune_clean = make_dataset(cfg.traj_counts.tune, cfg.trajectory,
                                   derive_seed(cfg.seed, {0x7e57ull, 1}));
    sets.test_clean = make_dataset(cfg.traj_counts.test, cfg.trajectory,
                                   derive_seed(cfg.seed, {0x7e57ull, 2}));
    sets.tune_noisy = noisy_synthetic(sets.tune_clean, cfg.position_noise_std,
                                      derive_seed(cfg.seed, {0x9015ull, 1}));
    sets.test_noisy = noisy_synthetic(sets.test_clean, cfg.position_noise_std,
                                      derive_seed(cfg.seed, {0x9015ull, 2}));
    return sets;
}

std::string sweep_csv(const std::vector<SnrSweepRow>& rows) {
    std::ostringstream out;
    out << "snr_db,method,final_mse_m2,final_mse_mm2,mu,rho\n";
    for (const SnrSweepRow& r : rows)
        out << format_double(r.snr_db) << "," << r.method << "," << format_double(r.final_mse_m2)
            << "," << format_double(r.final_mse_m2 * 1e6) << "," << format_double(r.mu) << ","
            << format_double(r.rho) << "\n";
    return out.str();
}

namespace {

std::vector<ImuMeasurement> imu_for(const std::vector<Trajectory>& clean, double snr_db,
                                    uint64_t seed) {
    std::vector<ImuMeasurement> out(clean.size());
    const int n = static_cast<int>(clean.size());
#pragma omp parallel for schedule(static) if (n > 1)
    for (int i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] =
            imu_measure(clean[static_cast<size_t>(i)], snr_db,
                        derive_seed(seed, {0x101ull, static_cast<uint64_t>(i)}));
    return out;
}

double pnp_final_mse(const DenoiserBank& bank, const std::vector<Trajectory>& clean,
                     const std::vector<Trajectory>& noisy,
                     const std::vector<ImuMeasurement>& imu, const PnpConfig& config) {
    const int n = static_cast<int>(clean.size());
    std::vector<double> sq(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic) if (n > 1)
    for (int i = 0; i < n; ++i) {
        const Trajectory tracked = pnp_track(bank, noisy[static_cast<size_t>(i)],
                                             imu[static_cast<size_t>(i)], config, nullptr);
        const Vec2 d = tracked.points.back() - clean[static_cast<size_t>(i)].points.back();
        sq[static_cast<size_t>(i)] = d.x * d.x + d.y * d.y;
    }
    double acc = 0.0;
    for (double v : sq) acc += v;
    return acc / n;
}

}  // namespace

std::vector<SnrSweepRow> run_snr_sweep(const ExperimentConfig& cfg, const DenoiserBank& bank,
                                       const TrackingSets& sets, std::ostream* log) {
    cfg.validate();
    std::vector<SnrSweepRow> rows;

    const double baseline = final_step_mse(sets.test_clean, sets.test_noisy);

    std::vector<Trajectory> refined(sets.test_noisy.size());
    {
        const int n = static_cast<int>(sets.test_noisy.size());
#pragma omp parallel for schedule(static) if (n > 1)
        for (int i = 0; i < n; ++i)
            refined[static_cast<size_t>(i)] = refine_trajectory(
                bank, sets.test_noisy[static_cast<size_t>(i)], cfg.position_noise_std);
    }
    const double refined_mse = final_step_mse(sets.test_clean, refined);

    for (size_t si = 0; si < cfg.sweep.snr_db.size(); ++si) {
        const double snr = cfg.sweep.snr_db[si];
        const auto tune_imu = imu_for(sets.tune_clean, snr,
                                      derive_seed(cfg.seed, {0x171ull, si, 1}));
        const auto test_imu = imu_for(sets.test_clean, snr,
                                      derive_seed(cfg.seed, {0x171ull, si, 2}));

        PnpConfig best = cfg.pnp;
        double best_tune = std::numeric_limits<double>::infinity();
        for (double mu : cfg.sweep.mu_grid)
            for (double rho : cfg.sweep.rho_grid) {
                PnpConfig cand = cfg.pnp;
                cand.mu = mu;
                cand.rho = rho;
                const double tune_mse =
                    pnp_final_mse(bank, sets.tune_clean, sets.tune_noisy, tune_imu, cand);
                if (tune_mse < best_tune) {
                    best_tune = tune_mse;
                    best = cand;
                }
            }
        const double pnp_mse =
            pnp_final_mse(bank, sets.test_clean, sets.test_noisy, test_imu, best);
        if (log)
            *log << "[sweep] snr " << snr << " dB: positioning " << baseline << ", prior "
                 << refined_mse << ", pnp " << pnp_mse << " (mu=" << best.mu
                 << ", rho=" << best.rho << ")\n";

        rows.push_back({snr, "positioning", baseline, 0.0, 0.0});
        rows.push_back({snr, "dnn_prior", refined_mse, 0.0, 0.0});
        rows.push_back({snr, "pnp", pnp_mse, best.mu, best.rho});
    }
    return rows;
}

}  // namespace csiloc
