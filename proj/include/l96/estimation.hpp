#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "l96/full_model.hpp"
#include "l96/varx.hpp"

namespace l96 {

/// Assembled pooled regression problem: one row per (time, gridpoint) pair
/// with n in [p+1, N], ordered by time then gridpoint. Columns follow
/// [intercept, x (if exogenous), lagged b (lag p only, or lags 1..p when
/// spec.all_lags)].
struct RegressionProblem {
    Eigen::MatrixXd Z;
    Eigen::VectorXd target;
    std::vector<std::string> column_names;
};

RegressionProblem build_regressor_matrix(const SampleSeries& series, const VarxSpec& spec);

/// Least squares via Householder QR (never the normal equations). Optional
/// row weights w apply as sqrt(w)-scaled rows (uniform by default). Throws
/// EstimationError naming the collinear column on rank deficiency.
Eigen::VectorXd ols_fit(const Eigen::MatrixXd& Z, const Eigen::VectorXd& target,
                        std::span<const double> weights = {},
                        const std::vector<std::string>& column_names = {});

/// Drift residuals b - prediction, shape (N - p) x K.
Eigen::MatrixXd residuals(const SampleSeries& series, const VarxModel& model);

/// Isotropic noise root: arithmetic mean over gridpoints of the per-column
/// unbiased (n-1) sample standard deviations.
double fit_sigma_diag(const Eigen::MatrixXd& R);

/// Dense noise root: Cholesky factor of the K x K sample covariance of the
/// residual rows. On a numerically non-PD covariance, retries once with
/// diagonal loading 1e-12 * trace / K, then throws EstimationError.
Eigen::MatrixXd fit_sigma_dense(const Eigen::MatrixXd& R);

struct FitInfo {
    std::int64_t rows = 0;        // pooled regression rows K * (N - p)
    double residual_mean = 0.0;
    double residual_std = 0.0;
};

/// Full pipeline: regressors -> pooled least squares -> residual noise fit ->
/// a-posteriori stability verdict. Streams row blocks through an incremental
/// QR so no K(N-p) x cols matrix is ever materialized; results match the
/// in-memory path to 1e-10.
VarxModel fit_parameterization(const SampleSeries& series, const VarxSpec& spec,
                               FitInfo* info = nullptr);

/// Sample partial autocorrelation at lags 1..max_lag via the Durbin-Levinson
/// recursion on the biased sample ACF.
std::vector<double> pacf(std::span<const double> series, int max_lag);

/// Column-pooled variant (per-column PACF averaged over columns).
std::vector<double> pacf(const Eigen::MatrixXd& series, int max_lag);

/// Independent route for checking the recursion: for each order l, solves the
/// Yule-Walker normal equations built from the same sample ACF with a dense
/// LU factorization and returns the coefficient of the last lag.
std::vector<double> pacf_via_normal_equations(std::span<const double> series, int max_lag);

}  // namespace l96
