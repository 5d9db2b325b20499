#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace l96 {

/// Density-normalized histogram: sum(density * bin width) = 1.
struct Histogram {
    std::vector<double> edges;      // n_bins + 1, ascending
    std::vector<double> densities;  // n_bins

    int bins() const { return static_cast<int>(densities.size()); }
    double width(int i) const { return edges[static_cast<std::size_t>(i) + 1] - edges[static_cast<std::size_t>(i)]; }
};

/// Everything the long-run statistical criteria need from one run.
struct DiagnosticsReport {
    Histogram pdf;
    std::vector<double> acf;        // lags 0..max_lag
    std::vector<double> ccf;        // lags -max_lag..max_lag
    std::vector<double> wave_mean;  // wavenumbers 0..K/2
    std::vector<double> wave_var;
    double mean = 0.0;
    double stddev = 0.0;
    std::optional<std::vector<double>> pacf;  // lags 1..pacf_max_lag

    int max_lag = 0;
    int K = 0;
    std::int64_t n_rows = 0;
};

struct ReportOptions {
    int bins = 100;
    std::optional<std::pair<double, double>> range;  // default: data range + 1% padding
    int max_lag = 1000;
};

/// Distances between two reports built on identical grids.
struct CompareSummary {
    double pdf_l1 = 0.0;       // integral of |p - q|
    double acf_max_dev = 0.0;  // max over lags <= max_lag
    double ccf_max_dev = 0.0;
    std::vector<double> wave_mean_rel_err;
    std::vector<double> wave_var_rel_err;
    double mean_rel_err = 0.0;
    double std_rel_err = 0.0;
    int ref_modes = 0;
    int test_modes = 0;
};

Histogram pdf_histogram(std::span<const double> samples, int n_bins,
                        std::optional<std::pair<double, double>> range = std::nullopt);
Histogram pdf_histogram(const Eigen::MatrixXd& values, int n_bins,
                        std::optional<std::pair<double, double>> range = std::nullopt);

/// Sample autocorrelation at lags 0..max_lag, biased (1/N) covariance
/// normalization; acf[0] == 1 exactly.
std::vector<double> acf(std::span<const double> series, int max_lag);

/// Column-pooled variant: per-column ACF averaged over columns.
std::vector<double> acf(const Eigen::MatrixXd& series, int max_lag);

/// Lag-resolved cross-correlation between cyclically adjacent columns,
/// averaged over all pairs (k, k+1); entry [max_lag + l] holds lag l for
/// l in [-max_lag, max_lag]. Lag 0 is the plain adjacent-column correlation.
std::vector<double> ccf(const Eigen::MatrixXd& X, int max_lag);

/// Per-wavenumber statistics of the spatial DFT u_m = sum_k x_k e^{-2 pi i mk/K}
/// taken at every time step: time-mean of |u_m| and time-mean of
/// |u_m - mean(u_m)|^2 (complex mean subtracted), for m = 0..K/2.
void wave_stats(const Eigen::MatrixXd& X, std::vector<double>& wave_mean,
                std::vector<double>& wave_var);

/// Conditional histograms of b given an x bin, pooled over gridpoints.
/// Bins with no x samples are marked absent rather than zero-density.
struct ConditionalPdf {
    std::vector<double> x_edges;
    std::vector<double> b_edges;
    std::vector<std::vector<double>> densities;  // one per x bin; empty when absent
    std::vector<bool> present;
    std::vector<double> conditional_mean;        // mean of b per occupied x bin
};

ConditionalPdf conditional_pdf(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B,
                               std::span<const double> x_bin_edges, int b_bins);

/// Local maxima of the 5-bin moving-average smoothed density with topographic
/// prominence at least `prominence_fraction` of the peak smoothed density.
int count_modes(const Histogram& h, int smooth_window = 5, double prominence_fraction = 0.05);

DiagnosticsReport build_report(const Eigen::MatrixXd& X, const ReportOptions& options);

CompareSummary compare_reports(const DiagnosticsReport& ref, const DiagnosticsReport& test);

void to_json(nlohmann::json& j, const DiagnosticsReport& report);
void from_json(const nlohmann::json& j, DiagnosticsReport& report);
void to_json(nlohmann::json& j, const CompareSummary& summary);

/// Writes pdf.csv, acf.csv, ccf.csv, waves.csv (and pacf.csv when present)
/// under `directory`.
void write_report_csvs(const DiagnosticsReport& report, const std::string& directory);

}  // namespace l96
