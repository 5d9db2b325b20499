#include "l96/full_model.hpp"

#include <cmath>
#include <string>

#include "l96/errors.hpp"
#include "l96/noise.hpp"

namespace l96 {

FullState FullState::zeros(const ModelConfig& cfg) {
    FullState s;
    s.x = Eigen::VectorXd::Zero(cfg.K);
    s.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.J) * cfg.K);
    s.t = 0.0;
    return s;
}

bool FullState::finite() const {
    return x.allFinite() && y.allFinite();
}

Eigen::VectorXd feedback(const FullState& state, const ModelConfig& cfg) {
    if (state.x.size() != cfg.K || state.y.size() != static_cast<Eigen::Index>(cfg.J) * cfg.K) {
        throw ConfigError("feedback: state dimensions do not match config (K=" +
                          std::to_string(cfg.K) + ", J=" + std::to_string(cfg.J) + ")");
    }
    Eigen::VectorXd b(cfg.K);
    const double scale = cfg.h_x / cfg.J;
    for (int k = 0; k < cfg.K; ++k) {
        b[k] = scale * state.y.segment(static_cast<Eigen::Index>(k) * cfg.J, cfg.J).sum();
    }
    return b;
}

void tendency_full(const FullState& state, const ModelConfig& cfg,
                   Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
    const int K = cfg.K;
    const auto M = state.y.size();
    dx.resize(K);
    dy.resize(M);

    const Eigen::VectorXd b = feedback(state, cfg);
    const double* x = state.x.data();
    for (int k = 0; k < K; ++k) {
        const double xm1 = x[(k - 1 + K) % K];
        const double xp1 = x[(k + 1) % K];
        const double xm2 = x[(k - 2 + K) % K];
        dx[k] = xm1 * (xp1 - xm2) - x[k] + cfg.F + b[k];
    }

    const double inv_eps = 1.0 / cfg.epsilon;
    const double hy = cfg.h_y;
    const double* y = state.y.data();
    double* d = dy.data();
    // Interior of the flat ring without wrap arithmetic; the ring order makes
    // m+1 the next small-scale point even across column boundaries.
    for (Eigen::Index m = 1; m + 2 < M; ++m) {
        const int k = static_cast<int>(m / cfg.J);
        d[m] = inv_eps * (y[m + 1] * (y[m - 1] - y[m + 2]) - y[m] + hy * x[k]);
    }
    const auto wrap = [M](Eigen::Index m) { return ((m % M) + M) % M; };
    for (Eigen::Index m : {Eigen::Index{0}, M - 2, M - 1}) {
        const int k = static_cast<int>(m / cfg.J);
        d[m] = inv_eps *
               (y[wrap(m + 1)] * (y[wrap(m - 1)] - y[wrap(m + 2)]) - y[m] + hy * x[k]);
    }
}

namespace {

void check_admissible(const FullState& state, std::int64_t step) {
    const bool ok = state.finite() &&
                    state.x.cwiseAbs().maxCoeff() <= kDivergenceLimit &&
                    (state.y.size() == 0 || state.y.cwiseAbs().maxCoeff() <= kDivergenceLimit);
    if (!ok) {
        throw DivergenceError("full model diverged at step " + std::to_string(step) +
                                  " (t=" + std::to_string(state.t) + ")",
                              step, state.t);
    }
}

struct Rk2Workspace {
    FullState half;
    Eigen::VectorXd dx, dy;
};

void rk2_step_full_ws(FullState& state, const ModelConfig& cfg, Rk2Workspace& ws) {
    const double dt = cfg.dt_full;
    tendency_full(state, cfg, ws.dx, ws.dy);
    ws.half.x = state.x + (0.5 * dt) * ws.dx;
    ws.half.y = state.y + (0.5 * dt) * ws.dy;
    ws.half.t = state.t + 0.5 * dt;
    tendency_full(ws.half, cfg, ws.dx, ws.dy);
    state.x += dt * ws.dx;
    state.y += dt * ws.dy;
    state.t += dt;
}

}  // namespace

void rk2_step_full(FullState& state, const ModelConfig& cfg) {
    Rk2Workspace ws;
    rk2_step_full_ws(state, cfg, ws);
    check_admissible(state, -1);
}

SampleSeries simulate_full(const ModelConfig& cfg, std::uint64_t seed,
                           const SampleObserver& observer) {
    cfg.validate();
    RandomSource rng(seed);

    FullState state = FullState::zeros(cfg);
    const double amp = cfg.F / 10.0;
    for (int k = 0; k < cfg.K; ++k) state.x[k] = rng.uniform(-1.0, 1.0) * amp;

    Rk2Workspace ws;
    std::int64_t step = 0;
    const auto burn_steps =
        static_cast<std::int64_t>(std::llround(cfg.burn_in / cfg.dt_full));
    for (std::int64_t i = 0; i < burn_steps; ++i) {
        rk2_step_full_ws(state, cfg, ws);
        ++step;
        check_admissible(state, step);
    }

    SampleSeries series;
    series.sample_interval = cfg.sample_interval;
    series.config_hash = cfg.hash();
    series.X.resize(cfg.n_samples, cfg.K);
    series.B.resize(cfg.n_samples, cfg.K);
    if (cfg.n_samples == 0) return series;

    const int stride = cfg.steps_per_sample();
    for (std::int64_t n = 0; n < cfg.n_samples; ++n) {
        if (n > 0) {
            for (int i = 0; i < stride; ++i) {
                rk2_step_full_ws(state, cfg, ws);
                ++step;
                check_admissible(state, step);
            }
        }
        const Eigen::VectorXd b = feedback(state, cfg);
        series.X.row(n) = state.x.transpose();
        series.B.row(n) = b.transpose();
        if (observer) observer(state, state.x, b);
    }
    return series;
}

FullState rotate_state(const FullState& state, const ModelConfig& cfg) {
    FullState out = state;
    const int K = cfg.K;
    const int J = cfg.J;
    for (int k = 0; k < K; ++k) {
        out.x[k] = state.x[(k + 1) % K];
        out.y.segment(static_cast<Eigen::Index>(k) * J, J) =
            state.y.segment(static_cast<Eigen::Index>((k + 1) % K) * J, J);
    }
    return out;
}

}  // namespace l96
