#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>

#include "l96/config.hpp"
#include "l96/narmax.hpp"
#include "l96/varx.hpp"

namespace l96 {

/// The b = 0 reference (reduced model with no parameterization).
struct ZeroParameterization {};

using Parameterization = std::variant<VarxModel, NarmaxModel, ZeroParameterization>;

/// Short human-readable provenance tag ("varx(p=14,cov=diagonal_iso)", ...).
std::string parameterization_id(const Parameterization& param);

/// Rows of reference data required to seed the history: VARX needs p+1,
/// NARMAX 3, the zero model 1.
int min_init_rows(const Parameterization& param);

/// Whether a fitted parameterization carries an instability verdict.
bool parameterization_unstable(const Parameterization& param);

/// Consecutive (x, b) reference rows, oldest first; the last row provides the
/// initial reduced state.
struct WarmStart {
    Eigen::MatrixXd x_rows;
    Eigen::MatrixXd b_rows;
    std::int64_t rows() const { return x_rows.rows(); }
};

struct ReducedTrajectory {
    Eigen::MatrixXd Xtilde;  // n_steps x K
    Eigen::MatrixXd Btilde;  // n_steps x K
    std::uint64_t seed = 0;
    std::string model_id;
    bool stability_warning = false;
};

/// One two-stage Runge-Kutta update of the reduced state with the
/// parameterization output held fixed across both stages:
///   x' = x + dt/2 (adv(x) - x + F + b),  x+ = x + dt (adv(x') - x' + F + b)
/// where adv(x)_k = x_{k-1}(x_{k+1} - x_{k-2}) with cyclic indices and
/// dt = cfg.dt_reduced.
Eigen::VectorXd rk2_step_reduced(const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                                 const ModelConfig& cfg);

/// Alternates one parameterization draw and one rk2_step_reduced per step,
/// starting from the warm-start block. All randomness comes from a single
/// generator seeded with `seed`, consumed as one length-K noise vector per
/// step ordered by gridpoint; identical seeds give identical trajectories.
/// Throws DivergenceError (with step index) if the state escapes.
ReducedTrajectory simulate_reduced(const ModelConfig& cfg, const Parameterization& param,
                                   const WarmStart& init, std::uint64_t seed,
                                   std::int64_t n_steps);

/// Takes the last `rows` rows of a series as a warm-start block.
WarmStart warm_start_from_series(const SampleSeries& series, std::int64_t rows);

}  // namespace l96
