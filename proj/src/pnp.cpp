#include "csiloc/pnp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "csiloc/errors.hpp"

namespace csiloc {

std::vector<double> solve_tridiagonal(std::vector<double> diag, std::vector<double> lower,
                                      std::vector<double> upper, std::vector<double> rhs) {
    const size_t n = diag.size();
    if (n == 0 || lower.size() != n - 1 || upper.size() != n - 1 || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: inconsistent band sizes");
    // Thomas forward sweep
    for (size_t i = 1; i < n; ++i) {
        const double m = lower[i - 1] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    return rhs;
}

void PnpConfig::validate() const {
    if (mu < 0.0) throw std::invalid_argument("pnp: mu must be >= 0");
    if (rho <= 0.0) throw std::invalid_argument("pnp: rho must be > 0");
    if (denoiser_level < 0.0) throw std::invalid_argument("pnp: denoiser level must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("pnp: max_iters must be >= 1");
    if (tol <= 0.0) throw std::invalid_argument("pnp: tol must be > 0");
}

Trajectory refine_trajectory(const DenoiserBank& bank, const Trajectory& noisy, double level) {
    return denoise(select_denoiser(bank, level), noisy);
}

double motion_residual(const Trajectory& traj, const ImuMeasurement& imu) {
    const int T = traj.length();
    if (static_cast<int>(imu.steps.size()) != T - 1)
        throw std::invalid_argument("motion_residual: IMU step count must be T - 1");
    double acc = 0.0;
    for (int t = 1; t < T; ++t) {
        const ImuStep& s = imu.steps[static_cast<size_t>(t - 1)];
        const Vec2 d = traj.points[static_cast<size_t>(t)] - traj.points[static_cast<size_t>(t - 1)];
        const double ex = d.x - s.distance * std::cos(s.heading);
        const double ey = d.y - s.distance * std::sin(s.heading);
        acc += ex * ex + ey * ey;
    }
    return acc;
}

Trajectory l_update(const Trajectory& noisy, const ImuMeasurement& imu,
                    const std::vector<Vec2>& z, const std::vector<Vec2>& dual, double mu,
                    double rho) {
    if (rho <= 0.0) throw std::invalid_argument("l_update: rho must be > 0");
    const int T = noisy.length();
    if (static_cast<int>(z.size()) != T || static_cast<int>(dual.size()) != T)
        throw std::invalid_argument("l_update: Z and dual must match the trajectory length");
    const bool has_motion = T >= 2;
    if (has_motion && static_cast<int>(imu.steps.size()) != T - 1)
        throw std::invalid_argument("l_update: IMU step count must be T - 1");

    // 2 D^T D is tridiagonal with diag [2, 4, ..., 4, 2] and off-diagonals -2
    std::vector<double> diag(static_cast<size_t>(T), 2.0 * mu + rho);
    std::vector<double> lower(static_cast<size_t>(T > 0 ? T - 1 : 0), -2.0);
    std::vector<double> upper(lower);
    if (has_motion) {
        for (int t = 0; t < T; ++t) {
            const double dd = (t == 0 || t == T - 1) ? 2.0 : 4.0;
            diag[static_cast<size_t>(t)] += dd;
        }
    }

    Trajectory out = noisy;
    for (int coord = 0; coord < 2; ++coord) {
        std::vector<double> rhs(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) {
            const Vec2& nz = noisy.points[static_cast<size_t>(t)];
            const Vec2& zz = z[static_cast<size_t>(t)];
            const Vec2& pp = dual[static_cast<size_t>(t)];
            const double noisy_c = coord == 0 ? nz.x : nz.y;
            const double zc = coord == 0 ? zz.x : zz.y;
            const double pc = coord == 0 ? pp.x : pp.y;
            rhs[static_cast<size_t>(t)] = 2.0 * mu * noisy_c + rho * (zc - pc);
        }
        if (has_motion) {
            // 2 D^T b: entry j gets +2 b_j (step ending at j) - 2 b_{j+1}
            for (int t = 1; t < T; ++t) {
                const ImuStep& s = imu.steps[static_cast<size_t>(t - 1)];
                const double b =
                    coord == 0 ? s.distance * std::cos(s.heading) : s.distance * std::sin(s.heading);
                rhs[static_cast<size_t>(t)] += 2.0 * b;
                rhs[static_cast<size_t>(t - 1)] -= 2.0 * b;
            }
        }
        const std::vector<double> sol = T >= 2
                                            ? solve_tridiagonal(diag, lower, upper, rhs)
                                            : std::vector<double>{rhs[0] / diag[0]};
        for (int t = 0; t < T; ++t) {
            if (coord == 0)
                out.points[static_cast<size_t>(t)].x = sol[static_cast<size_t>(t)];
            else
                out.points[static_cast<size_t>(t)].y = sol[static_cast<size_t>(t)];
        }
    }
    return out;
}

std::vector<Vec2> z_update(const DenoiserBank& bank, const std::vector<Vec2>& l,
                           const std::vector<Vec2>& dual, double level, const Trajectory& like) {
    if (l.size() != dual.size())
        throw std::invalid_argument("z_update: L and dual must share length");
    Trajectory arg = like;
    arg.points.resize(l.size());
    for (size_t t = 0; t < l.size(); ++t) arg.points[t] = l[t] + dual[t];
    return denoise(select_denoiser(bank, level), arg).points;
}

Trajectory pnp_track_with(const PriorFn& prior, const Trajectory& noisy,
                          const ImuMeasurement& imu, const PnpConfig& config, AdmmState* state) {
    config.validate();
    const int T = noisy.length();
    if (static_cast<int>(imu.steps.size()) != T - 1)
        throw std::invalid_argument("pnp_track: IMU step count must be T - 1");

    AdmmState local;
    AdmmState& st = state ? *state : local;
    st = AdmmState{};
    st.Z = noisy.points;
    st.p.assign(static_cast<size_t>(T), Vec2{0.0, 0.0});

    Trajectory l_traj = noisy;
    std::vector<Vec2> lp(static_cast<size_t>(T));
    for (int k = 0; k < config.max_iters; ++k) {
        l_traj = l_update(noisy, imu, st.Z, st.p, config.mu, config.rho);
        st.L = l_traj.points;
        for (int t = 0; t < T; ++t)
            lp[static_cast<size_t>(t)] = st.L[static_cast<size_t>(t)] + st.p[static_cast<size_t>(t)];
        st.Z = prior(lp);
        double res_sq = 0.0;
        for (int t = 0; t < T; ++t) {
            const Vec2 d = st.L[static_cast<size_t>(t)] - st.Z[static_cast<size_t>(t)];
            st.p[static_cast<size_t>(t)] = st.p[static_cast<size_t>(t)] + d;  // p <- p + L - Z
            res_sq += d.x * d.x + d.y * d.y;
        }
        const double residual = std::sqrt(res_sq);
        st.iterations = k + 1;
        st.primal_residuals.push_back(residual);
        st.L_history.push_back(st.L);
        st.Z_history.push_back(st.Z);
        st.p_history.push_back(st.p);
        for (const Vec2& v : st.L)
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                throw numeric_error("pnp_track: non-finite iterate at iteration " +
                                    std::to_string(k + 1));
        if (residual <= config.tol) break;
    }
    l_traj.points = st.L;
    return l_traj;
}

Trajectory pnp_track(const DenoiserBank& bank, const Trajectory& noisy,
                     const ImuMeasurement& imu, const PnpConfig& config, AdmmState* state) {
    const DenoiserModel& model = select_denoiser(bank, config.denoiser_level);
    PriorFn prior = [&](const std::vector<Vec2>& arg) {
        Trajectory tmp = noisy;
        tmp.points = arg;
        return denoise(model, tmp).points;
    };
    return pnp_track_with(prior, noisy, imu, config, state);
}

}  // namespace csiloc
