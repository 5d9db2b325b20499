#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "l96/config.hpp"

namespace l96 {

/// Instantaneous state of the full two-layer model.
///
/// The small-scale variables are stored as one flat ring of length J*K in
/// the order y_{1,1}..y_{J,1}, y_{1,2}..: advancing the flat index past the
/// end of column k lands at the start of column k+1, which is exactly the
/// cross-column boundary condition y_{j+J,k} = y_{j,k+1}. All neighbor
/// arithmetic on x and on the flat y ring is cyclic.
struct FullState {
    Eigen::VectorXd x;  // size K
    Eigen::VectorXd y;  // size J*K, flat ring
    double t = 0.0;

    static FullState zeros(const ModelConfig& cfg);
    bool finite() const;
};

/// Training records sampled from a full-model run: row n of B is the
/// small-scale feedback at the same instant as row n of X.
struct SampleSeries {
    Eigen::MatrixXd X;  // N x K
    Eigen::MatrixXd B;  // N x K
    double sample_interval = 0.0;
    std::uint64_t config_hash = 0;

    std::int64_t rows() const { return X.rows(); }
    int cols() const { return static_cast<int>(X.cols()); }
};

/// Small-scale feedback b_k = (h_x / J) * sum_j y_{j,k}.
Eigen::VectorXd feedback(const FullState& state, const ModelConfig& cfg);

/// Time derivatives of the coupled system; writes into dx (size K) and
/// dy (size J*K).
void tendency_full(const FullState& state, const ModelConfig& cfg,
                   Eigen::VectorXd& dx, Eigen::VectorXd& dy);

/// One midpoint Runge-Kutta step of the joint (x, y) system: half-step
/// predictor, full-step corrector. Throws DivergenceError if the result
/// leaves the admissible region.
void rk2_step_full(FullState& state, const ModelConfig& cfg);

/// Called at every sampling instant with the full state and the recorded row.
using SampleObserver =
    std::function<void(const FullState&, const Eigen::VectorXd& x, const Eigen::VectorXd& b)>;

/// Integrates from a seeded initial condition (x uniform in [-1,1] scaled by
/// F/10, y = 0), discards burn_in time units, then records cfg.n_samples rows
/// of (x, b) every sample_interval. Throws DivergenceError with the failing
/// step index if the state diverges.
SampleSeries simulate_full(const ModelConfig& cfg, std::uint64_t seed,
                           const SampleObserver& observer = nullptr);

/// Rotates a state by one grid index: x_k -> x_{k+1}, y_{j,k} -> y_{j,k+1}.
FullState rotate_state(const FullState& state, const ModelConfig& cfg);

/// Absolute values above this abort integration (divergence guard).
inline constexpr double kDivergenceLimit = 1e6;

}  // namespace l96
