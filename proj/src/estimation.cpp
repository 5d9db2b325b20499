#include "l96/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "l96/diagnostics.hpp"
#include "l96/errors.hpp"

namespace l96 {

namespace {

void check_series_for_fit(const SampleSeries& series, const VarxSpec& spec) {
    if (series.cols() != spec.K) {
        throw DataError("series has K=" + std::to_string(series.cols()) +
                        " but spec expects K=" + std::to_string(spec.K));
    }
    if (series.rows() <= spec.p + 10) {
        throw DataError("series too short for order p=" + std::to_string(spec.p) +
                        ": need N > p + 10, got N=" + std::to_string(series.rows()));
    }
}

std::vector<std::string> regressor_names(const VarxSpec& spec) {
    std::vector<std::string> names{"intercept"};
    if (spec.use_exogenous) names.emplace_back("x");
    if (spec.use_endogenous) {
        if (spec.all_lags) {
            for (int i = 1; i <= spec.p; ++i) names.emplace_back("b_lag_" + std::to_string(i));
        } else {
            names.emplace_back("b_lag_" + std::to_string(spec.p));
        }
    }
    return names;
}

/// Fills one pooled regression row for sample index n, gridpoint k.
template <typename Row>
void fill_row(Row&& row, const SampleSeries& series, const VarxSpec& spec,
              Eigen::Index n, Eigen::Index k) {
    int c = 0;
    row(c++) = 1.0;
    if (spec.use_exogenous) row(c++) = series.X(n, k);
    if (spec.use_endogenous) {
        if (spec.all_lags) {
            for (int i = 1; i <= spec.p; ++i) row(c++) = series.B(n - i, k);
        } else {
            row(c++) = series.B(n - spec.p, k);
        }
    }
}

void coefficients_to_model(const Eigen::VectorXd& coef, const VarxSpec& spec, VarxModel& model) {
    model.spec = spec;
    model.lag_coeffs.assign(static_cast<std::size_t>(spec.p), 0.0);
    int c = 0;
    model.a0 = coef[c++];
    model.d = spec.use_exogenous ? coef[c++] : 0.0;
    if (spec.use_endogenous) {
        if (spec.all_lags) {
            for (int i = 1; i <= spec.p; ++i) model.lag_coeffs[static_cast<std::size_t>(i - 1)] = coef[c++];
        } else {
            model.lag_coeffs.back() = coef[c++];
        }
    }
}

void check_triangle_rank(const Eigen::MatrixXd& R, const std::vector<std::string>& names) {
    const int c = static_cast<int>(R.cols());
    double max_diag = 0.0;
    for (int i = 0; i < c; ++i) max_diag = std::max(max_diag, std::abs(R(i, i)));
    for (int i = 0; i < c; ++i) {
        if (std::abs(R(i, i)) <= 1e-10 * max_diag) {
            const std::string name =
                i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                                   : ("column " + std::to_string(i));
            throw EstimationError("regressor matrix is rank deficient (collinear column: " +
                                  name + ")");
        }
    }
}

}  // namespace

RegressionProblem build_regressor_matrix(const SampleSeries& series, const VarxSpec& spec) {
    spec.validate();
    check_series_for_fit(series, spec);

    const auto N = series.rows();
    const int K = spec.K;
    const int cols = spec.regressor_count();
    const Eigen::Index rows = static_cast<Eigen::Index>(N - spec.p) * K;

    RegressionProblem problem;
    problem.column_names = regressor_names(spec);
    problem.Z.resize(rows, cols);
    problem.target.resize(rows);
    Eigen::Index r = 0;
    for (Eigen::Index n = spec.p; n < N; ++n) {
        for (int k = 0; k < K; ++k, ++r) {
            fill_row([&](int c) -> double& { return problem.Z(r, c); }, series, spec, n, k);
            problem.target[r] = series.B(n, k);
        }
    }
    return problem;
}

Eigen::VectorXd ols_fit(const Eigen::MatrixXd& Z, const Eigen::VectorXd& target,
                        std::span<const double> weights,
                        const std::vector<std::string>& column_names) {
    if (Z.rows() != target.size()) throw DataError("ols_fit: row count mismatch");
    if (Z.rows() < Z.cols()) throw DataError("ols_fit: fewer rows than columns");
    if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != Z.rows()) {
        throw DataError("ols_fit: weight vector length mismatch");
    }

    Eigen::MatrixXd A = Z;
    Eigen::VectorXd y = target;
    if (!weights.empty()) {
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            const double w = std::sqrt(weights[static_cast<std::size_t>(r)]);
            A.row(r) *= w;
            y[r] *= w;
        }
    }

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::MatrixXd R =
        qr.matrixQR().topRows(A.cols()).triangularView<Eigen::Upper>();
    check_triangle_rank(R, column_names);
    return qr.solve(y);
}

Eigen::MatrixXd residuals(const SampleSeries& series, const VarxModel& model) {
    model.validate();
    check_series_for_fit(series, model.spec);
    const auto N = series.rows();
    const int K = model.spec.K;
    const int p = model.spec.p;

    Eigen::MatrixXd R(N - p, K);
    for (Eigen::Index n = p; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            double pred = model.a0;
            if (model.spec.use_exogenous) pred += model.d * series.X(n, k);
            if (model.spec.use_endogenous) {
                for (int i = 1; i <= p; ++i) {
                    const double c = model.lag_coeffs[static_cast<std::size_t>(i - 1)];
                    if (c != 0.0) pred += c * series.B(n - i, k);
                }
            }
            R(n - p, k) = series.B(n, k) - pred;
        }
    }
    return R;
}

double fit_sigma_diag(const Eigen::MatrixXd& R) {
    if (R.rows() < 2) throw DataError("fit_sigma_diag: need at least 2 residual rows");
    const double n = static_cast<double>(R.rows());
    double acc = 0.0;
    for (Eigen::Index k = 0; k < R.cols(); ++k) {
        const double mean = R.col(k).mean();
        const double var = (R.col(k).array() - mean).square().sum() / (n - 1.0);
        acc += std::sqrt(var);
    }
    return acc / static_cast<double>(R.cols());
}

namespace {

Eigen::MatrixXd cholesky_of_covariance(const Eigen::MatrixXd& cov) {
    // Collinear residual columns make the covariance structurally singular;
    // catch them before loading can paper over the deficiency.
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
        if (!(cov(i, i) > 0.0)) {
            throw EstimationError("residual column " + std::to_string(i) +
                                  " has zero variance; covariance is not positive definite");
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            const double rho = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
            if (std::abs(rho) >= 1.0 - 1e-10) {
                throw EstimationError("residual columns " + std::to_string(j) + " and " +
                                      std::to_string(i) +
                                      " are collinear; covariance is not positive definite");
            }
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    // one round of diagonal loading against floating-point-boundary cases
    const double load = 1e-12 * cov.trace() / static_cast<double>(cov.rows());
    Eigen::MatrixXd loaded = cov;
    loaded.diagonal().array() += load;
    Eigen::LLT<Eigen::MatrixXd> retry(loaded);
    if (retry.info() == Eigen::Success) return retry.matrixL();
    throw EstimationError(
        "residual covariance is not positive definite (diagonal loading of " +
        std::to_string(load) + " did not help; residuals may be rank deficient)");
}

}  // namespace

Eigen::MatrixXd fit_sigma_dense(const Eigen::MatrixXd& R) {
    const auto n = R.rows();
    const auto K = R.cols();
    if (n < K + 1) throw DataError("fit_sigma_dense: need more residual rows than columns");

    const Eigen::RowVectorXd mean = R.colwise().mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(R.transpose(), 1.0);
    cov.triangularView<Eigen::Upper>() = cov.transpose();
    cov -= static_cast<double>(n) * mean.transpose() * mean;
    cov /= static_cast<double>(n - 1);
    return cholesky_of_covariance(cov);
}

VarxModel fit_parameterization(const SampleSeries& series, const VarxSpec& spec, FitInfo* info) {
    spec.validate();
    check_series_for_fit(series, spec);

    const auto N = series.rows();
    const int K = spec.K;
    const int p = spec.p;
    const int cols = spec.regressor_count();
    const auto names = regressor_names(spec);

    // Incremental QR over row blocks: T stays upper triangular for the
    // augmented system [Z | target]; after the sweep, coef solves the same
    // least squares problem as a one-shot QR of the full matrix.
    const Eigen::Index block_rows = std::max<Eigen::Index>(4096, 4 * (cols + 1));
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(cols + 1, cols + 1);
    Eigen::MatrixXd S(block_rows, cols + 1);
    Eigen::Index filled = 0;
    bool first = true;

    auto flush = [&](Eigen::Index used) {
        if (used == 0) return;
        const Eigen::Index top = first ? 0 : T.rows();
        Eigen::MatrixXd stacked(top + used, cols + 1);
        if (!first) stacked.topRows(top) = T;
        stacked.bottomRows(used) = S.topRows(used);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
        T = qr.matrixQR()
                .topRows(std::min<Eigen::Index>(cols + 1, stacked.rows()))
                .triangularView<Eigen::Upper>();
        if (T.rows() < cols + 1) {
            T.conservativeResize(cols + 1, cols + 1);
            T.bottomRows(cols + 1 - qr.matrixQR().rows()).setZero();
        }
        first = false;
    };

    for (Eigen::Index n = p; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            fill_row([&](int c) -> double& { return S(filled, c); }, series, spec, n, k);
            S(filled, cols) = series.B(n, k);
            if (++filled == block_rows) {
                flush(filled);
                filled = 0;
            }
        }
    }
    flush(filled);

    const Eigen::MatrixXd Rtri = T.topLeftCorner(cols, cols);
    check_triangle_rank(Rtri, names);
    const Eigen::VectorXd qty = T.topRightCorner(cols, 1);
    const Eigen::VectorXd coef = Rtri.triangularView<Eigen::Upper>().solve(qty);

    VarxModel model;
    coefficients_to_model(coef, spec, model);
    model.training_hash = series.config_hash;

    // residual pass: per-column moments, plus the K x K second-moment matrix
    // when a dense root is requested
    const Eigen::Index rows = static_cast<Eigen::Index>(N - p);
    Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd col_sq = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd second;
    const bool dense = spec.covariance == CovarianceKind::dense;
    if (dense) second = Eigen::MatrixXd::Zero(K, K);

    Eigen::VectorXd res_row(K);
    for (Eigen::Index n = p; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            double pred = model.a0;
            if (spec.use_exogenous) pred += model.d * series.X(n, k);
            if (spec.use_endogenous) {
                for (int i = 1; i <= p; ++i) {
                    const double c = model.lag_coeffs[static_cast<std::size_t>(i - 1)];
                    if (c != 0.0) pred += c * series.B(n - i, k);
                }
            }
            res_row[k] = series.B(n, k) - pred;
        }
        col_sum += res_row;
        col_sq += res_row.cwiseAbs2();
        if (dense) second.selfadjointView<Eigen::Lower>().rankUpdate(res_row, 1.0);
    }

    if (rows < 2) throw DataError("fit_parameterization: not enough rows for residual moments");
    double sigma_acc = 0.0;
    for (int k = 0; k < K; ++k) {
        const double mean = col_sum[k] / static_cast<double>(rows);
        const double var =
            std::max(0.0, (col_sq[k] - static_cast<double>(rows) * mean * mean) /
                              static_cast<double>(rows - 1));
        sigma_acc += std::sqrt(var);
    }

    if (dense) {
        second.triangularView<Eigen::Upper>() = second.transpose();
        const Eigen::VectorXd mean = col_sum / static_cast<double>(rows);
        Eigen::MatrixXd cov =
            (second - static_cast<double>(rows) * mean * mean.transpose()) /
            static_cast<double>(rows - 1);
        model.chol_lower = cholesky_of_covariance(cov);
        model.sigma = 0.0;
    } else {
        model.sigma = sigma_acc / static_cast<double>(K);
        model.chol_lower.resize(0, 0);
    }

    model.stability = check_stability(model);
    model.validate();

    if (info) {
        info->rows = static_cast<std::int64_t>(rows) * K;
        const double total_mean = col_sum.sum() / static_cast<double>(rows * K);
        const double total_var =
            std::max(0.0, (col_sq.sum() - static_cast<double>(rows * K) * total_mean * total_mean) /
                              static_cast<double>(rows * K - 1));
        info->residual_mean = total_mean;
        info->residual_std = std::sqrt(total_var);
    }
    return model;
}

std::vector<double> pacf(std::span<const double> series, int max_lag) {
    if (max_lag < 1) throw DataError("pacf: max_lag must be >= 1");
    if (static_cast<std::int64_t>(series.size()) <= max_lag + 1) {
        throw DataError("pacf: series too short for max_lag");
    }
    const auto rho = acf(series, max_lag);  // throws on zero variance

    // Durbin-Levinson recursion on the sample autocorrelations.
    std::vector<double> out(static_cast<std::size_t>(max_lag));
    std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::vector<double> prev(static_cast<std::size_t>(max_lag) + 1, 0.0);
    double denom = 1.0;

    phi[1] = rho[1];
    out[0] = rho[1];
    denom = 1.0 - rho[1] * rho[1];
    for (int l = 2; l <= max_lag; ++l) {
        std::copy(phi.begin(), phi.begin() + l, prev.begin());
        double num = rho[static_cast<std::size_t>(l)];
        for (int j = 1; j < l; ++j) {
            num -= prev[static_cast<std::size_t>(j)] * rho[static_cast<std::size_t>(l - j)];
        }
        if (std::abs(denom) < 1e-300) throw NumericError("pacf: recursion denominator vanished");
        const double last = num / denom;
        for (int j = 1; j < l; ++j) {
            phi[static_cast<std::size_t>(j)] =
                prev[static_cast<std::size_t>(j)] - last * prev[static_cast<std::size_t>(l - j)];
        }
        phi[static_cast<std::size_t>(l)] = last;
        out[static_cast<std::size_t>(l - 1)] = last;
        denom *= 1.0 - last * last;
    }
    return out;
}

std::vector<double> pacf(const Eigen::MatrixXd& series, int max_lag) {
    if (series.cols() == 0) throw DataError("pacf: empty matrix");
    std::vector<double> pooled(static_cast<std::size_t>(max_lag), 0.0);
    for (Eigen::Index k = 0; k < series.cols(); ++k) {
        const auto col = pacf(
            std::span<const double>(series.col(k).data(), static_cast<std::size_t>(series.rows())),
            max_lag);
        for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += col[i];
    }
    for (double& v : pooled) v /= static_cast<double>(series.cols());
    return pooled;
}

std::vector<double> pacf_via_normal_equations(std::span<const double> series, int max_lag) {
    if (max_lag < 1) throw DataError("pacf: max_lag must be >= 1");
    const auto rho = acf(series, max_lag);

    std::vector<double> out(static_cast<std::size_t>(max_lag));
    for (int l = 1; l <= max_lag; ++l) {
        Eigen::MatrixXd Rm(l, l);
        Eigen::VectorXd r(l);
        for (int i = 0; i < l; ++i) {
            r[i] = rho[static_cast<std::size_t>(i + 1)];
            for (int j = 0; j < l; ++j) {
                Rm(i, j) = rho[static_cast<std::size_t>(std::abs(i - j))];
            }
        }
        const Eigen::VectorXd phi = Rm.fullPivLu().solve(r);
        out[static_cast<std::size_t>(l - 1)] = phi[l - 1];
    }
    return out;
}

}  // namespace l96
