#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "l96/config.hpp"
#include "l96/full_model.hpp"

namespace l96 {

/// The two fixed per-gridpoint NARMAX comparison structures. Subscripts name
/// the (p, r, s, q) layout: one z lag each; 1201 adds a second x lag and one
/// moving-average term, 1110 adds x powers up to cubic and one resolved
/// feature.
enum class NarmaxVariant { n1201, n1110 };

std::string to_string(NarmaxVariant variant);
NarmaxVariant narmax_variant_from_string(const std::string& s);

struct NarmaxModel {
    NarmaxVariant variant = NarmaxVariant::n1201;
    double mu = 0.0;
    double sigma2 = 0.0;  // innovation variance
    double a1 = 0.0;      // endogenous (z) coefficient
    double b11 = 0.0;     // x^{n-1}
    double b21 = 0.0;     // x^{n-2}            (1201 only)
    double d1 = 0.0;      // xi^{n-1}           (1201 only)
    double b12 = 0.0;     // (x^{n-1})^2        (1110 only)
    double b13 = 0.0;     // (x^{n-1})^3        (1110 only)
    double c11 = 0.0;     // resolved feature   (1110 only)

    void validate() const;
};

/// Fitted coefficients shipped with the code (sampling interval 0.01,
/// trimodal training data).
NarmaxModel narmax_preset(NarmaxVariant variant);

/// Per-gridpoint inputs at one time level. The x stencil carries the
/// neighbors of x^{n-1} needed by the resolved feature.
struct NarmaxInputs {
    double z_prev = 0.0;    // previous output at this gridpoint
    double x_prev = 0.0;    // x_k^{n-1}
    double x_prev2 = 0.0;   // x_k^{n-2}
    double xi_prev = 0.0;   // innovation at n-1
    double xi_now = 0.0;    // innovation at n (passed through)
    double x_prev_m1 = 0.0; // x_{k-1}^{n-1}
    double x_prev_p1 = 0.0; // x_{k+1}^{n-1}
    double x_prev_m2 = 0.0; // x_{k-2}^{n-1}
};

struct NarmaxStep {
    double phi = 0.0;
    double xi_now = 0.0;
};

/// Resolved single-layer tendency feature R(x)_k = x_{k-1}(x_{k+1} - x_{k-2})
/// - x_k + F evaluated from the stencil.
double resolved_feature(double x_m1, double x, double x_p1, double x_m2, double F);

/// Deterministic drift of the active variant; the caller forms the output
/// z^n = phi + xi_now. Applied independently at each gridpoint.
NarmaxStep narmax_step(const NarmaxModel& model, const NarmaxInputs& in, const ModelConfig& cfg);

struct NarmaxFitOptions {
    int max_iterations = 100;
    double tol = 1e-8;
    bool include_ma = true;  // 1201 only; false pins d1 = 0 (one-shot OLS)
};

/// Pooled conditional-least-squares fit. The 1110 structure is a single OLS;
/// 1201 iterates OLS with innovation back-substitution for the d1 term until
/// the coefficient change drops below tol. sigma2 is the residual variance.
NarmaxModel fit_narmax(const SampleSeries& series, NarmaxVariant variant,
                       const ModelConfig& cfg, const NarmaxFitOptions& options = {});

void to_json(nlohmann::json& j, const NarmaxModel& model);
void from_json(const nlohmann::json& j, NarmaxModel& model);

}  // namespace l96
