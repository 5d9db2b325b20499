#include "l96/varx.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "l96/errors.hpp"

namespace l96 {

std::string to_string(CovarianceKind kind) {
    return kind == CovarianceKind::diagonal_iso ? "diagonal_iso" : "dense";
}

CovarianceKind covariance_kind_from_string(const std::string& s) {
    if (s == "diagonal_iso" || s == "diag") return CovarianceKind::diagonal_iso;
    if (s == "dense") return CovarianceKind::dense;
    throw ConfigError("unknown covariance kind '" + s + "'");
}

VarxSpec VarxSpec::wn(int K) { return VarxSpec{0, false, false, CovarianceKind::diagonal_iso, K, false}; }
VarxSpec VarxSpec::multi_ar1(int K) { return VarxSpec{1, true, false, CovarianceKind::diagonal_iso, K, false}; }
VarxSpec VarxSpec::wnd(int K) { return VarxSpec{0, false, true, CovarianceKind::diagonal_iso, K, false}; }
VarxSpec VarxSpec::varx(int K, int p, CovarianceKind cov) { return VarxSpec{p, true, true, cov, K, false}; }

int VarxSpec::regressor_count() const {
    int n = 1;  // intercept
    if (use_exogenous) ++n;
    if (use_endogenous) n += all_lags ? p : 1;
    return n;
}

void VarxSpec::validate() const {
    if (K < 1) throw ConfigError("VarxSpec: K must be >= 1");
    if (p < 0) throw ConfigError("VarxSpec: p must be >= 0");
    if (use_endogenous && p < 1) throw ConfigError("VarxSpec: endogenous regressor requires p >= 1");
    if (!use_endogenous && p != 0) throw ConfigError("VarxSpec: p must be 0 without endogenous regressor");
}

void VarxModel::validate() const {
    spec.validate();
    if (static_cast<int>(lag_coeffs.size()) != spec.p) {
        throw ConfigError("VarxModel: lag_coeffs size must equal spec.p");
    }
    for (double c : lag_coeffs) {
        if (!std::isfinite(c)) throw ConfigError("VarxModel: non-finite lag coefficient");
    }
    if (!std::isfinite(a0) || !std::isfinite(d)) throw ConfigError("VarxModel: non-finite coefficient");
    if (spec.covariance == CovarianceKind::diagonal_iso) {
        if (!(sigma >= 0.0)) throw ConfigError("VarxModel: sigma must be >= 0");
        if (chol_lower.size() != 0) throw ConfigError("VarxModel: diagonal mode must not hold a dense root");
    } else {
        if (chol_lower.rows() != spec.K || chol_lower.cols() != spec.K) {
            throw ConfigError("VarxModel: dense root must be K x K");
        }
        for (int r = 0; r < chol_lower.rows(); ++r) {
            if (chol_lower(r, r) < 0.0) throw ConfigError("VarxModel: dense root diagonal must be >= 0");
            for (int c = r + 1; c < chol_lower.cols(); ++c) {
                if (chol_lower(r, c) != 0.0) throw ConfigError("VarxModel: dense root must be lower triangular");
            }
        }
    }
}

LagBuffer::LagBuffer(int p, int K) : p_(p), K_(K) {
    if (p < 0 || K < 1) throw ConfigError("LagBuffer: need p >= 0 and K >= 1");
    ring_.assign(static_cast<std::size_t>(p), Eigen::VectorXd::Zero(K));
}

void LagBuffer::push(const Eigen::VectorXd& value) {
    if (p_ == 0) return;
    if (value.size() != K_) throw DataError("LagBuffer: wrong vector length");
    head_ = (head_ + 1) % p_;
    ring_[static_cast<std::size_t>(head_)] = value;
    if (count_ < p_) ++count_;
}

const Eigen::VectorXd& LagBuffer::lag(int i) const {
    if (i < 1 || i > p_) throw DataError("LagBuffer: lag index out of range");
    if (count_ < p_) throw DataError("LagBuffer: history not seeded");
    return ring_[static_cast<std::size_t>(((head_ - (i - 1)) % p_ + p_) % p_)];
}

Eigen::VectorXd varx_step(const VarxModel& model, const LagBuffer& lags,
                          const Eigen::VectorXd& x_now, const Eigen::VectorXd& xi) {
    const int K = model.spec.K;
    if (x_now.size() != K || xi.size() != K) throw DataError("varx_step: vector length != K");
    if (model.spec.use_endogenous && !lags.seeded()) {
        throw DataError("varx_step: lag history not seeded");
    }

    Eigen::VectorXd b = Eigen::VectorXd::Constant(K, model.a0);
    if (model.spec.use_endogenous) {
        for (int i = 1; i <= model.spec.p; ++i) {
            const double c = model.lag_coeffs[static_cast<std::size_t>(i - 1)];
            if (c != 0.0) b += c * lags.lag(i);
        }
    }
    if (model.spec.use_exogenous) b += model.d * x_now;
    if (model.spec.covariance == CovarianceKind::diagonal_iso) {
        b += model.sigma * xi;
    } else {
        b += model.chol_lower.triangularView<Eigen::Lower>() * xi;
    }
    return b;
}

Eigen::MatrixXd build_companion(const std::vector<double>& lag_coeffs, int K) {
    const int p = static_cast<int>(lag_coeffs.size());
    if (p < 1) throw std::invalid_argument("build_companion: p must be >= 1");
    if (K < 1) throw std::invalid_argument("build_companion: K must be >= 1");
    const Eigen::Index n = static_cast<Eigen::Index>(p) * K;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < p; ++i) {
        C.block(0, static_cast<Eigen::Index>(i) * K, K, K) =
            lag_coeffs[static_cast<std::size_t>(i)] * Eigen::MatrixXd::Identity(K, K);
    }
    for (int i = 1; i < p; ++i) {
        C.block(static_cast<Eigen::Index>(i) * K, static_cast<Eigen::Index>(i - 1) * K, K, K) =
            Eigen::MatrixXd::Identity(K, K);
    }
    return C;
}

Eigen::MatrixXd build_companion(const VarxModel& model) {
    return build_companion(model.lag_coeffs, model.spec.K);
}

namespace {

CompanionSpectrum spectrum_from_moduli(std::vector<double> moduli) {
    std::sort(moduli.begin(), moduli.end(), std::greater<>());
    CompanionSpectrum s;
    s.stable = moduli.empty() || moduli.front() < 1.0;
    s.moduli = std::move(moduli);
    return s;
}

std::vector<double> scalar_companion_moduli(const std::vector<double>& lag_coeffs) {
    const int p = static_cast<int>(lag_coeffs.size());
    Eigen::MatrixXd C = build_companion(lag_coeffs, 1);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(C, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericError("companion eigensolver failed to converge");
    }
    std::vector<double> moduli(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) moduli[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()[i]);
    return moduli;
}

}  // namespace

CompanionSpectrum check_stability(const VarxModel& model) {
    if (!model.spec.use_endogenous || model.spec.p == 0) {
        return spectrum_from_moduli({});
    }
    const int p = model.spec.p;
    const int K = model.spec.K;
    const int nonzero = static_cast<int>(
        std::count_if(model.lag_coeffs.begin(), model.lag_coeffs.end(),
                      [](double c) { return c != 0.0; }));

    std::vector<double> scalar_moduli;
    if (nonzero == 0) {
        scalar_moduli.assign(static_cast<std::size_t>(p), 0.0);
    } else if (nonzero == 1 && model.lag_coeffs.back() != 0.0) {
        // Single active lag p: the roots of lambda^p = a_p all share modulus
        // |a_p|^{1/p}.
        const double r = std::pow(std::abs(model.a_p()), 1.0 / p);
        scalar_moduli.assign(static_cast<std::size_t>(p), r);
    } else {
        scalar_moduli = scalar_companion_moduli(model.lag_coeffs);
    }

    // A_i = a_i * I decouples into K identical scalar systems.
    std::vector<double> moduli;
    moduli.reserve(scalar_moduli.size() * static_cast<std::size_t>(K));
    for (double m : scalar_moduli) {
        for (int k = 0; k < K; ++k) moduli.push_back(m);
    }
    return spectrum_from_moduli(std::move(moduli));
}

CompanionSpectrum companion_spectrum_dense(const VarxModel& model) {
    if (!model.spec.use_endogenous || model.spec.p == 0) {
        return spectrum_from_moduli({});
    }
    Eigen::MatrixXd C = build_companion(model);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(C, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericError("companion eigensolver failed to converge");
    }
    std::vector<double> moduli(static_cast<std::size_t>(C.rows()));
    for (Eigen::Index i = 0; i < C.rows(); ++i) moduli[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()[i]);
    return spectrum_from_moduli(std::move(moduli));
}

void to_json(nlohmann::json& j, const VarxModel& model) {
    j = nlohmann::json{
        {"schema", "l96x-model/1"},
        {"kind", "varx"},
        {"spec",
         {{"p", model.spec.p},
          {"use_endogenous", model.spec.use_endogenous},
          {"use_exogenous", model.spec.use_exogenous},
          {"covariance", to_string(model.spec.covariance)},
          {"K", model.spec.K},
          {"all_lags", model.spec.all_lags}}},
        {"a0", model.a0},
        {"lag_coeffs", model.lag_coeffs},
        {"d", model.d},
        {"training_hash", model.training_hash},
        {"stability",
         {{"stable", model.stability.stable}, {"max_modulus", model.stability.max_modulus()}}},
    };
    if (model.spec.covariance == CovarianceKind::diagonal_iso) {
        j["sigma"] = model.sigma;
    } else {
        std::vector<double> flat(static_cast<std::size_t>(model.spec.K) * model.spec.K);
        for (int r = 0; r < model.spec.K; ++r) {
            for (int c = 0; c < model.spec.K; ++c) {
                flat[static_cast<std::size_t>(r) * model.spec.K + c] = model.chol_lower(r, c);
            }
        }
        j["chol_lower"] = flat;
    }
}

void from_json(const nlohmann::json& j, VarxModel& model) {
    if (j.value("kind", "") != std::string("varx")) {
        throw DataError("model JSON is not a varx model");
    }
    const auto& spec = j.at("spec");
    model.spec.p = spec.at("p").get<int>();
    model.spec.use_endogenous = spec.at("use_endogenous").get<bool>();
    model.spec.use_exogenous = spec.at("use_exogenous").get<bool>();
    model.spec.covariance = covariance_kind_from_string(spec.at("covariance").get<std::string>());
    model.spec.K = spec.at("K").get<int>();
    model.spec.all_lags = spec.value("all_lags", false);
    model.a0 = j.at("a0").get<double>();
    model.lag_coeffs = j.at("lag_coeffs").get<std::vector<double>>();
    model.d = j.at("d").get<double>();
    model.training_hash = j.value("training_hash", std::uint64_t{0});
    if (j.contains("stability")) {
        model.stability.stable = j["stability"].value("stable", false);
        model.stability.moduli = {j["stability"].value("max_modulus", 0.0)};
    }
    if (model.spec.covariance == CovarianceKind::diagonal_iso) {
        model.sigma = j.at("sigma").get<double>();
        model.chol_lower.resize(0, 0);
    } else {
        const auto flat = j.at("chol_lower").get<std::vector<double>>();
        const int K = model.spec.K;
        if (flat.size() != static_cast<std::size_t>(K) * K) {
            throw DataError("chol_lower has wrong length");
        }
        model.chol_lower.resize(K, K);
        for (int r = 0; r < K; ++r) {
            for (int c = 0; c < K; ++c) {
                model.chol_lower(r, c) = flat[static_cast<std::size_t>(r) * K + c];
            }
        }
    }
    model.validate();
}

}  // namespace l96
