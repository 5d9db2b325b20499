#include "l96/reduced_model.hpp"

#include <cmath>

#include "l96/errors.hpp"
#include "l96/noise.hpp"

namespace l96 {

std::string parameterization_id(const Parameterization& param) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, VarxModel>) {
                return "varx(p=" + std::to_string(m.spec.p) +
                       ",cov=" + to_string(m.spec.covariance) + ")";
            } else if constexpr (std::is_same_v<T, NarmaxModel>) {
                return "narmax(" + to_string(m.variant) + ")";
            } else {
                return "zero";
            }
        },
        param);
}

int min_init_rows(const Parameterization& param) {
    return std::visit(
        [](const auto& m) -> int {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, VarxModel>) {
                return m.spec.p + 1;
            } else if constexpr (std::is_same_v<T, NarmaxModel>) {
                return 3;
            } else {
                return 1;
            }
        },
        param);
}

bool parameterization_unstable(const Parameterization& param) {
    if (const auto* varx = std::get_if<VarxModel>(&param)) {
        return varx->spec.use_endogenous && !varx->stability.stable;
    }
    if (const auto* narmax = std::get_if<NarmaxModel>(&param)) {
        return std::abs(narmax->a1) >= 1.0;
    }
    return false;
}

namespace {

void advection(const Eigen::VectorXd& x, Eigen::VectorXd& out) {
    const auto K = x.size();
    for (Eigen::Index k = 0; k < K; ++k) {
        out[k] = x[(k - 1 + K) % K] * (x[(k + 1) % K] - x[(k - 2 + K) % K]);
    }
}

void check_admissible(const Eigen::VectorXd& x, std::int64_t step, double t) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceLimit) {
        throw DivergenceError("reduced model diverged at step " + std::to_string(step),
                              step, t);
    }
}

}  // namespace

Eigen::VectorXd rk2_step_reduced(const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                                 const ModelConfig& cfg) {
    const double dt = cfg.dt_reduced;
    Eigen::VectorXd adv(x.size());
    advection(x, adv);
    const Eigen::VectorXd half =
        x + (0.5 * dt) * (adv - x + Eigen::VectorXd::Constant(x.size(), cfg.F) + b);
    advection(half, adv);
    Eigen::VectorXd next =
        x + dt * (adv - half + Eigen::VectorXd::Constant(x.size(), cfg.F) + b);
    if (!next.allFinite()) {
        throw DivergenceError("reduced step produced non-finite state", -1, 0.0);
    }
    return next;
}

WarmStart warm_start_from_series(const SampleSeries& series, std::int64_t rows) {
    if (rows < 1 || rows > series.rows()) {
        throw DataError("warm start needs " + std::to_string(rows) +
                        " rows but series has " + std::to_string(series.rows()));
    }
    WarmStart ws;
    ws.x_rows = series.X.bottomRows(rows);
    ws.b_rows = series.B.bottomRows(rows);
    return ws;
}

ReducedTrajectory simulate_reduced(const ModelConfig& cfg, const Parameterization& param,
                                   const WarmStart& init, std::uint64_t seed,
                                   std::int64_t n_steps) {
    const int K = cfg.K;
    if (init.x_rows.cols() != K || init.b_rows.cols() != K ||
        init.x_rows.rows() != init.b_rows.rows()) {
        throw DataError("warm-start block shape does not match config K");
    }
    const int need = min_init_rows(param);
    if (init.rows() < need) {
        throw DataError("warm start requires at least " + std::to_string(need) +
                        " rows for " + parameterization_id(param));
    }
    if (const auto* varx = std::get_if<VarxModel>(&param)) {
        if (varx->spec.K != K) throw DataError("VARX model K does not match config");
    }
    if (n_steps < 0) throw DataError("n_steps must be >= 0");

    ReducedTrajectory traj;
    traj.seed = seed;
    traj.model_id = parameterization_id(param);
    traj.stability_warning = parameterization_unstable(param);
    traj.Xtilde.resize(n_steps, K);
    traj.Btilde.resize(n_steps, K);
    if (n_steps == 0) return traj;

    RandomSource rng(seed);
    Eigen::VectorXd x_now = init.x_rows.row(init.rows() - 1).transpose();
    Eigen::VectorXd xi(K);
    Eigen::VectorXd b(K);

    // per-variant history
    LagBuffer lags;
    Eigen::VectorXd z_prev, xi_prev, x_prev, x_prev2;
    if (const auto* varx = std::get_if<VarxModel>(&param)) {
        lags = LagBuffer(varx->spec.p, K);
        // rows -p..-1: everything before the final (current-state) row
        for (std::int64_t r = init.rows() - 1 - varx->spec.p; r < init.rows() - 1; ++r) {
            lags.push(init.b_rows.row(r).transpose());
        }
    } else if (std::holds_alternative<NarmaxModel>(param)) {
        z_prev = init.b_rows.row(init.rows() - 2).transpose();
        x_prev = init.x_rows.row(init.rows() - 2).transpose();
        x_prev2 = init.x_rows.row(init.rows() - 3).transpose();
        xi_prev = Eigen::VectorXd::Zero(K);  // pre-sample innovations
    }

    const auto* narmax = std::get_if<NarmaxModel>(&param);
    const double narmax_sd = narmax ? std::sqrt(narmax->sigma2) : 0.0;

    for (std::int64_t step = 0; step < n_steps; ++step) {
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, VarxModel>) {
                    rng.fill_normal({xi.data(), static_cast<std::size_t>(K)});
                    b = varx_step(m, lags, x_now, xi);
                    lags.push(b);
                } else if constexpr (std::is_same_v<T, NarmaxModel>) {
                    for (int k = 0; k < K; ++k) xi[k] = narmax_sd * rng.normal();
                    for (int k = 0; k < K; ++k) {
                        NarmaxInputs in;
                        in.z_prev = z_prev[k];
                        in.x_prev = x_prev[k];
                        in.x_prev2 = x_prev2[k];
                        in.xi_prev = xi_prev[k];
                        in.xi_now = xi[k];
                        in.x_prev_m1 = x_prev[(k - 1 + K) % K];
                        in.x_prev_p1 = x_prev[(k + 1) % K];
                        in.x_prev_m2 = x_prev[(k - 2 + K) % K];
                        const auto out = narmax_step(m, in, cfg);
                        b[k] = out.phi + out.xi_now;
                    }
                    z_prev = b;
                    xi_prev = xi;
                } else {
                    b.setZero();
                }
            },
            param);

        traj.Xtilde.row(step) = x_now.transpose();
        traj.Btilde.row(step) = b.transpose();

        if (narmax) {
            x_prev2 = x_prev;
            x_prev = x_now;
        }
        x_now = rk2_step_reduced(x_now, b, cfg);
        check_admissible(x_now, step, static_cast<double>(step + 1) * cfg.dt_reduced);
    }
    return traj;
}

}  // namespace l96
