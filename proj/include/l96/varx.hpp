#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace l96 {

enum class CovarianceKind { diagonal_iso, dense };

std::string to_string(CovarianceKind kind);
CovarianceKind covariance_kind_from_string(const std::string& s);

/// Structural choices of a VARX(p) surrogate: which regressors are active,
/// the lag order, and the noise-root shape. The five named parameterizations
/// (WN, Multi AR(1), WND, VARX(p) diag, VARX(p) dense) are all expressible.
struct VarxSpec {
    int p = 0;                  // lag order (index of the nonzero lag matrix)
    bool use_endogenous = false;  // lagged b regressor active
    bool use_exogenous = false;   // concurrent x regressor active
    CovarianceKind covariance = CovarianceKind::diagonal_iso;
    int K = 0;                  // spatial dimension
    bool all_lags = false;      // fit every lag 1..p instead of lag p only

    static VarxSpec wn(int K);
    static VarxSpec multi_ar1(int K);
    static VarxSpec wnd(int K);
    static VarxSpec varx(int K, int p, CovarianceKind cov);

    /// Regressor count including the intercept column.
    int regressor_count() const;
    void validate() const;
};

/// Companion-matrix eigenvalue moduli, sorted descending.
struct CompanionSpectrum {
    std::vector<double> moduli;
    bool stable = false;

    double max_modulus() const { return moduli.empty() ? 0.0 : moduli.front(); }
};

/// Fitted VARX surrogate. Drift coefficients are scalars (one per regressor,
/// pooled over the homogeneous grid); lag_coeffs holds one scalar per lag
/// 1..p, with a single nonzero entry at lag p for the canonical specs. The
/// noise root is either the scalar sigma (diagonal_iso) or a dense
/// lower-triangular K x K factor; diagonal mode stores no K x K matrix.
struct VarxModel {
    VarxSpec spec;
    double a0 = 0.0;
    std::vector<double> lag_coeffs;  // size spec.p
    double d = 0.0;
    double sigma = 0.0;              // diagonal_iso root
    Eigen::MatrixXd chol_lower;      // dense root; empty in diagonal mode

    std::uint64_t training_hash = 0;
    CompanionSpectrum stability;

    /// Coefficient of the single active lag (0 when p = 0).
    double a_p() const { return lag_coeffs.empty() ? 0.0 : lag_coeffs.back(); }

    void validate() const;
};

/// Ring buffer of the last p parameterization outputs; lag(1) is the most
/// recent, lag(p) the oldest. push() evicts the oldest once full.
class LagBuffer {
public:
    LagBuffer() = default;
    LagBuffer(int p, int K);

    void push(const Eigen::VectorXd& value);
    const Eigen::VectorXd& lag(int i) const;  // i in [1, p]

    int order() const { return p_; }
    bool seeded() const { return p_ == 0 || count_ >= p_; }

private:
    int p_ = 0;
    int K_ = 0;
    int head_ = 0;   // slot that holds lag(1) once seeded
    int count_ = 0;
    std::vector<Eigen::VectorXd> ring_;
};

/// One draw of the surrogate:
///   b = a0*1 + sum_i lag_coeffs[i-1] * lags.lag(i) + d * x_now + noise(xi)
/// with noise sigma*xi (diagonal) or L*xi (dense). xi must be a length-K
/// standard-normal vector supplied by the caller. O(K) per step in diagonal
/// mode (single active lag), O(K^2) in dense mode.
Eigen::VectorXd varx_step(const VarxModel& model, const LagBuffer& lags,
                          const Eigen::VectorXd& x_now, const Eigen::VectorXd& xi);

/// Block companion matrix of size pK x pK for A_i = lag_coeffs[i-1] * I_K:
/// top block row holds A_1..A_p, identity blocks on the subdiagonal.
Eigen::MatrixXd build_companion(const std::vector<double>& lag_coeffs, int K);
Eigen::MatrixXd build_companion(const VarxModel& model);

/// Stationarity check. Exploits the scalar-diagonal structure: with a single
/// nonzero lag coefficient a_p the moduli are all |a_p|^{1/p}; otherwise the
/// p x p scalar companion spectrum is computed and replicated K times. Must
/// agree with companion_spectrum_dense on fixtures. Models without an
/// endogenous part are trivially stable (empty spectrum).
CompanionSpectrum check_stability(const VarxModel& model);

/// Independent route: eigenvalue moduli of the literal pK x pK companion
/// matrix via a general dense eigensolver.
CompanionSpectrum companion_spectrum_dense(const VarxModel& model);

void to_json(nlohmann::json& j, const VarxModel& model);
void from_json(const nlohmann::json& j, VarxModel& model);

}  // namespace l96
