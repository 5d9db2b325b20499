#include "l96/narmax.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "l96/errors.hpp"
#include "l96/estimation.hpp"

namespace l96 {

std::string to_string(NarmaxVariant variant) {
    return variant == NarmaxVariant::n1201 ? "1201" : "1110";
}

NarmaxVariant narmax_variant_from_string(const std::string& s) {
    if (s == "1201") return NarmaxVariant::n1201;
    if (s == "1110") return NarmaxVariant::n1110;
    throw ConfigError("unknown NARMAX variant '" + s + "' (expected 1201 or 1110)");
}

void NarmaxModel::validate() const {
    if (!(sigma2 >= 0.0)) throw ConfigError("NarmaxModel: sigma2 must be >= 0");
    const double fields[] = {mu, a1, b11, b21, d1, b12, b13, c11};
    for (double v : fields) {
        if (!std::isfinite(v)) throw ConfigError("NarmaxModel: non-finite coefficient");
    }
    if (variant == NarmaxVariant::n1201) {
        if (b12 != 0.0 || b13 != 0.0 || c11 != 0.0) {
            throw ConfigError("NarmaxModel: 1201 must not carry 1110 fields");
        }
    } else {
        if (b21 != 0.0 || d1 != 0.0) {
            throw ConfigError("NarmaxModel: 1110 must not carry 1201 fields");
        }
    }
}

NarmaxModel narmax_preset(NarmaxVariant variant) {
    NarmaxModel m;
    m.variant = variant;
    if (variant == NarmaxVariant::n1201) {
        m.a1 = 0.9780;
        m.b11 = -0.1276;
        m.b21 = 0.1134;
        m.d1 = 0.9998;
        m.mu = 0.0096;
        m.sigma2 = 0.0028;
    } else {
        m.a1 = 0.9729;
        m.b11 = -0.0669;
        m.b12 = -0.0001;
        m.b13 = 0.0001;
        m.c11 = -0.0028;
        m.mu = 0.0467;
        m.sigma2 = 0.0106;
    }
    return m;
}

double resolved_feature(double x_m1, double x, double x_p1, double x_m2, double F) {
    return x_m1 * (x_p1 - x_m2) - x + F;
}

NarmaxStep narmax_step(const NarmaxModel& model, const NarmaxInputs& in, const ModelConfig& cfg) {
    double phi = model.mu + model.a1 * in.z_prev;
    if (model.variant == NarmaxVariant::n1201) {
        phi += model.b11 * in.x_prev + model.b21 * in.x_prev2 + model.d1 * in.xi_prev;
    } else {
        const double x = in.x_prev;
        phi += model.b11 * x + model.b12 * x * x + model.b13 * x * x * x;
        phi += model.c11 * resolved_feature(in.x_prev_m1, x, in.x_prev_p1, in.x_prev_m2, cfg.F);
    }
    return {phi, in.xi_now};
}

namespace {

/// Regressor columns for both variants (pooled over n >= 2 and all k).
/// xi holds the current innovation estimates for the 1201 MA column.
struct DesignLayout {
    int cols = 0;
    int ma_col = -1;
};

DesignLayout layout_for(NarmaxVariant variant, bool include_ma) {
    if (variant == NarmaxVariant::n1201) {
        return include_ma ? DesignLayout{5, 4} : DesignLayout{4, -1};
    }
    return DesignLayout{6, -1};
}

void fill_design(const SampleSeries& series, const ModelConfig& cfg, NarmaxVariant variant,
                 const DesignLayout& layout, const Eigen::MatrixXd* xi,
                 Eigen::MatrixXd& Z, Eigen::VectorXd& y) {
    const auto N = series.rows();
    const int K = series.cols();
    Eigen::Index r = 0;
    for (Eigen::Index n = 2; n < N; ++n) {
        for (int k = 0; k < K; ++k, ++r) {
            y[r] = series.B(n, k);
            Z(r, 0) = 1.0;
            Z(r, 1) = series.B(n - 1, k);  // z^{n-1} is the observed feedback in training
            const double x1 = series.X(n - 1, k);
            if (variant == NarmaxVariant::n1201) {
                Z(r, 2) = x1;
                Z(r, 3) = series.X(n - 2, k);
                if (layout.ma_col >= 0) Z(r, layout.ma_col) = (*xi)(n - 1, k);
            } else {
                Z(r, 2) = x1;
                Z(r, 3) = x1 * x1;
                Z(r, 4) = x1 * x1 * x1;
                Z(r, 5) = resolved_feature(series.X(n - 1, (k - 1 + K) % K), x1,
                                           series.X(n - 1, (k + 1) % K),
                                           series.X(n - 1, (k - 2 + K) % K), cfg.F);
            }
        }
    }
}

NarmaxModel model_from_coef(NarmaxVariant variant, bool include_ma, const Eigen::VectorXd& c) {
    NarmaxModel m;
    m.variant = variant;
    m.mu = c[0];
    m.a1 = c[1];
    if (variant == NarmaxVariant::n1201) {
        m.b11 = c[2];
        m.b21 = c[3];
        m.d1 = include_ma ? c[4] : 0.0;
    } else {
        m.b11 = c[2];
        m.b12 = c[3];
        m.b13 = c[4];
        m.c11 = c[5];
    }
    return m;
}

}  // namespace

NarmaxModel fit_narmax(const SampleSeries& series, NarmaxVariant variant,
                       const ModelConfig& cfg, const NarmaxFitOptions& options) {
    const auto N = series.rows();
    const int K = series.cols();
    if (N < 20) throw DataError("fit_narmax: series too short");
    if (K != cfg.K) throw DataError("fit_narmax: series K does not match config");

    const double b_mean = series.B.mean();
    const double b_var = (series.B.array() - b_mean).square().sum() /
                         static_cast<double>(series.B.size());
    if (!(b_var > 0.0)) throw EstimationError("fit_narmax: zero-variance feedback series");

    const bool is_1201 = variant == NarmaxVariant::n1201;
    const bool with_ma = is_1201 && options.include_ma;
    const Eigen::Index rows = static_cast<Eigen::Index>(N - 2) * K;
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(N, K);  // innovation estimates

    const auto refresh_innovations = [&](const NarmaxModel& m) {
        for (int k = 0; k < K; ++k) {
            xi(0, k) = 0.0;
            xi(1, k) = 0.0;
            for (Eigen::Index n = 2; n < N; ++n) {
                const double pred = m.mu + m.a1 * series.B(n - 1, k) +
                                    m.b11 * series.X(n - 1, k) + m.b21 * series.X(n - 2, k) +
                                    m.d1 * xi(n - 1, k);
                xi(n, k) = series.B(n, k) - pred;
            }
        }
    };

    // stage one: drift only (the innovation regressor does not exist yet)
    const auto base_layout = layout_for(variant, false);
    Eigen::MatrixXd Z(rows, base_layout.cols);
    Eigen::VectorXd y(rows);
    fill_design(series, cfg, variant, base_layout, &xi, Z, y);
    Eigen::VectorXd coef = ols_fit(Z, y);
    NarmaxModel model = model_from_coef(variant, false, coef);

    // stage two (1201 with the moving-average term): alternate innovation
    // filtering and the augmented regression until the coefficients settle
    bool converged = !with_ma;
    if (with_ma) {
        const auto layout = layout_for(variant, true);
        Eigen::MatrixXd Za(rows, layout.cols);
        Eigen::VectorXd prev = Eigen::VectorXd::Zero(layout.cols);
        prev.head(coef.size()) = coef;
        for (int it = 0; it < options.max_iterations; ++it) {
            refresh_innovations(model);
            fill_design(series, cfg, variant, layout, &xi, Za, y);
            coef = ols_fit(Za, y);
            model = model_from_coef(variant, true, coef);
            const double delta = (coef - prev).cwiseAbs().maxCoeff();
            prev = coef;
            if (delta < options.tol) {
                converged = true;
                break;
            }
        }
    }
    if (!converged) {
        throw EstimationError(
            "fit_narmax: innovation iteration did not converge within " +
            std::to_string(options.max_iterations) + " iterations (last iterate: mu=" +
            std::to_string(model.mu) + ", a1=" + std::to_string(model.a1) +
            ", d1=" + std::to_string(model.d1) + ")");
    }

    // residual variance with the final coefficients
    const auto final_layout = layout_for(variant, with_ma);
    if (with_ma) refresh_innovations(model);
    Eigen::MatrixXd Zf(rows, final_layout.cols);
    fill_design(series, cfg, variant, final_layout, &xi, Zf, y);
    const Eigen::VectorXd res = y - Zf * coef;
    const double mean_res = res.mean();
    model.sigma2 = (res.array() - mean_res).square().sum() / static_cast<double>(res.size() - 1);
    model.validate();
    return model;
}

void to_json(nlohmann::json& j, const NarmaxModel& model) {
    j = nlohmann::json{
        {"schema", "l96x-model/1"},
        {"kind", "narmax"},
        {"variant", to_string(model.variant)},
        {"mu", model.mu},
        {"sigma2", model.sigma2},
        {"a1", model.a1},
        {"b11", model.b11},
    };
    if (model.variant == NarmaxVariant::n1201) {
        j["b21"] = model.b21;
        j["d1"] = model.d1;
    } else {
        j["b12"] = model.b12;
        j["b13"] = model.b13;
        j["c11"] = model.c11;
    }
}

void from_json(const nlohmann::json& j, NarmaxModel& model) {
    if (j.value("kind", "") != std::string("narmax")) {
        throw DataError("model JSON is not a narmax model");
    }
    model = NarmaxModel{};
    model.variant = narmax_variant_from_string(j.at("variant").get<std::string>());
    model.mu = j.at("mu").get<double>();
    model.sigma2 = j.at("sigma2").get<double>();
    model.a1 = j.at("a1").get<double>();
    model.b11 = j.at("b11").get<double>();
    if (model.variant == NarmaxVariant::n1201) {
        model.b21 = j.at("b21").get<double>();
        model.d1 = j.at("d1").get<double>();
    } else {
        model.b12 = j.at("b12").get<double>();
        model.b13 = j.at("b13").get<double>();
        model.c11 = j.at("c11").get<double>();
    }
    model.validate();
}

}  // namespace l96
