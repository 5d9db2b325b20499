#include "l96/diagnostics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <limits>

#include <nlohmann/json.hpp>

#include "l96/errors.hpp"

namespace l96 {

namespace {

std::pair<double, double> padded_range(std::span<const double> samples) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo <= hi)) throw DataError("histogram: no finite samples");
    if (lo == hi) return {lo - 0.5, hi + 0.5};
    const double pad = 0.01 * (hi - lo);
    return {lo - pad, hi + pad};
}

double column_mean(const Eigen::MatrixXd& m, Eigen::Index k) { return m.col(k).mean(); }

}  // namespace

Histogram pdf_histogram(std::span<const double> samples, int n_bins,
                        std::optional<std::pair<double, double>> range) {
    if (samples.empty()) throw DataError("histogram: empty input");
    if (n_bins < 2) throw DataError("histogram: need at least 2 bins");
    const auto [lo, hi] = range ? *range : padded_range(samples);
    if (!(hi > lo)) throw DataError("histogram: empty range");

    Histogram h;
    h.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i) {
        h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n_bins;
    }
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_bins), 0);
    std::int64_t total = 0;
    const double inv_width = n_bins / (hi - lo);
    for (double v : samples) {
        if (v < lo || v > hi || !std::isfinite(v)) continue;  // out-of-range samples are dropped
        int bin = static_cast<int>((v - lo) * inv_width);
        bin = std::clamp(bin, 0, n_bins - 1);
        ++counts[static_cast<std::size_t>(bin)];
        ++total;
    }
    if (total == 0) throw DataError("histogram: all samples outside the requested range");

    h.densities.resize(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) {
        h.densities[static_cast<std::size_t>(i)] =
            static_cast<double>(counts[static_cast<std::size_t>(i)]) / (total * h.width(i));
    }
    return h;
}

Histogram pdf_histogram(const Eigen::MatrixXd& values, int n_bins,
                        std::optional<std::pair<double, double>> range) {
    return pdf_histogram(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())),
                         n_bins, range);
}

std::vector<double> acf(std::span<const double> series, int max_lag) {
    const auto n = static_cast<std::int64_t>(series.size());
    if (n <= max_lag) throw DataError("acf: series shorter than max_lag");
    if (max_lag < 0) throw DataError("acf: negative max_lag");

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> out(static_cast<std::size_t>(max_lag) + 1);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (!(c0 > 0.0)) throw DataError("acf: zero-variance series");

    out[0] = 1.0;
    for (int lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::int64_t t = 0; t + lag < n; ++t) {
            c += (series[static_cast<std::size_t>(t)] - mean) *
                 (series[static_cast<std::size_t>(t + lag)] - mean);
        }
        out[static_cast<std::size_t>(lag)] = c / (static_cast<double>(n) * c0);
    }
    return out;
}

std::vector<double> acf(const Eigen::MatrixXd& series, int max_lag) {
    if (series.cols() == 0) throw DataError("acf: empty matrix");
    std::vector<double> pooled(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (Eigen::Index k = 0; k < series.cols(); ++k) {
        const auto col = acf(
            std::span<const double>(series.col(k).data(), static_cast<std::size_t>(series.rows())),
            max_lag);
        for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += col[i];
    }
    for (double& v : pooled) v /= static_cast<double>(series.cols());
    return pooled;
}

std::vector<double> ccf(const Eigen::MatrixXd& X, int max_lag) {
    const auto N = X.rows();
    const auto K = X.cols();
    if (K < 2) throw DataError("ccf: need at least 2 columns");
    if (N <= max_lag) throw DataError("ccf: series shorter than max_lag");

    std::vector<double> pooled(2 * static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (Eigen::Index k = 0; k < K; ++k) {
        const Eigen::Index k2 = (k + 1) % K;
        const double mu_a = column_mean(X, k);
        const double mu_b = column_mean(X, k2);
        const double var_a = (X.col(k).array() - mu_a).square().sum() / static_cast<double>(N);
        const double var_b = (X.col(k2).array() - mu_b).square().sum() / static_cast<double>(N);
        if (!(var_a > 0.0) || !(var_b > 0.0)) throw DataError("ccf: zero-variance column");
        const double norm = std::sqrt(var_a * var_b) * static_cast<double>(N);

        const double* a = X.col(k).data();
        const double* b = X.col(k2).data();
        for (int lag = -max_lag; lag <= max_lag; ++lag) {
            double c = 0.0;
            const Eigen::Index t0 = std::max<Eigen::Index>(0, -lag);
            const Eigen::Index t1 = std::min<Eigen::Index>(N, N - lag);
            for (Eigen::Index t = t0; t < t1; ++t) {
                c += (a[t] - mu_a) * (b[t + lag] - mu_b);
            }
            pooled[static_cast<std::size_t>(lag + max_lag)] += c / norm;
        }
    }
    for (double& v : pooled) v /= static_cast<double>(K);
    return pooled;
}

void wave_stats(const Eigen::MatrixXd& X, std::vector<double>& wave_mean,
                std::vector<double>& wave_var) {
    const auto N = X.rows();
    const int K = static_cast<int>(X.cols());
    if (K < 2) throw DataError("wave_stats: need at least 2 columns");
    if (N < 1) throw DataError("wave_stats: empty matrix");
    const int M = K / 2 + 1;

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> row(static_cast<std::size_t>(K));
    std::vector<std::complex<double>> spectrum;

    std::vector<double> sum_abs(static_cast<std::size_t>(M), 0.0);
    std::vector<double> sum_sq(static_cast<std::size_t>(M), 0.0);
    std::vector<std::complex<double>> sum_u(static_cast<std::size_t>(M), {0.0, 0.0});

    for (Eigen::Index t = 0; t < N; ++t) {
        for (int k = 0; k < K; ++k) row[static_cast<std::size_t>(k)] = X(t, k);
        fft.fwd(spectrum, row);
        for (int m = 0; m < M; ++m) {
            const auto u = spectrum[static_cast<std::size_t>(m)];
            sum_abs[static_cast<std::size_t>(m)] += std::abs(u);
            sum_sq[static_cast<std::size_t>(m)] += std::norm(u);
            sum_u[static_cast<std::size_t>(m)] += u;
        }
    }

    wave_mean.assign(static_cast<std::size_t>(M), 0.0);
    wave_var.assign(static_cast<std::size_t>(M), 0.0);
    const double invN = 1.0 / static_cast<double>(N);
    for (int m = 0; m < M; ++m) {
        const auto i = static_cast<std::size_t>(m);
        wave_mean[i] = sum_abs[i] * invN;
        // E|u - Eu|^2 = E|u|^2 - |Eu|^2, clipped against roundoff.
        const double var = sum_sq[i] * invN - std::norm(sum_u[i] * invN);
        wave_var[i] = std::max(0.0, var);
    }
}

ConditionalPdf conditional_pdf(const Eigen::MatrixXd& X, const Eigen::MatrixXd& B,
                               std::span<const double> x_bin_edges, int b_bins) {
    if (X.rows() != B.rows() || X.cols() != B.cols()) {
        throw DataError("conditional_pdf: X and B shapes differ");
    }
    if (x_bin_edges.size() < 2) throw DataError("conditional_pdf: need at least one x bin");
    const int nx = static_cast<int>(x_bin_edges.size()) - 1;

    ConditionalPdf out;
    out.x_edges.assign(x_bin_edges.begin(), x_bin_edges.end());
    const auto b_range = padded_range(
        std::span<const double>(B.data(), static_cast<std::size_t>(B.size())));
    out.b_edges.resize(static_cast<std::size_t>(b_bins) + 1);
    for (int i = 0; i <= b_bins; ++i) {
        out.b_edges[static_cast<std::size_t>(i)] =
            b_range.first + (b_range.second - b_range.first) * i / b_bins;
    }

    std::vector<std::vector<std::int64_t>> counts(
        static_cast<std::size_t>(nx), std::vector<std::int64_t>(static_cast<std::size_t>(b_bins), 0));
    std::vector<std::int64_t> totals(static_cast<std::size_t>(nx), 0);
    std::vector<double> b_sums(static_cast<std::size_t>(nx), 0.0);

    const double x_lo = out.x_edges.front();
    const double x_hi = out.x_edges.back();
    const double b_lo = out.b_edges.front();
    const double b_hi = out.b_edges.back();
    for (Eigen::Index idx = 0; idx < X.size(); ++idx) {
        const double x = X.data()[idx];
        const double b = B.data()[idx];
        if (x < x_lo || x > x_hi) continue;
        // generic edges for x (bins may be non-uniform)
        const auto it = std::upper_bound(out.x_edges.begin(), out.x_edges.end(), x);
        int xb = static_cast<int>(it - out.x_edges.begin()) - 1;
        xb = std::clamp(xb, 0, nx - 1);
        int bb = static_cast<int>((b - b_lo) / (b_hi - b_lo) * b_bins);
        bb = std::clamp(bb, 0, b_bins - 1);
        ++counts[static_cast<std::size_t>(xb)][static_cast<std::size_t>(bb)];
        ++totals[static_cast<std::size_t>(xb)];
        b_sums[static_cast<std::size_t>(xb)] += b;
    }

    out.present.resize(static_cast<std::size_t>(nx));
    out.densities.resize(static_cast<std::size_t>(nx));
    out.conditional_mean.assign(static_cast<std::size_t>(nx), 0.0);
    const double b_width = (b_hi - b_lo) / b_bins;
    for (int i = 0; i < nx; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        out.present[ii] = totals[ii] > 0;
        if (!out.present[ii]) continue;
        out.conditional_mean[ii] = b_sums[ii] / static_cast<double>(totals[ii]);
        out.densities[ii].resize(static_cast<std::size_t>(b_bins));
        for (int jb = 0; jb < b_bins; ++jb) {
            out.densities[ii][static_cast<std::size_t>(jb)] =
                static_cast<double>(counts[ii][static_cast<std::size_t>(jb)]) /
                (static_cast<double>(totals[ii]) * b_width);
        }
    }
    return out;
}

namespace {

std::vector<double> moving_average(const std::vector<double>& v, int window) {
    const int n = static_cast<int>(v.size());
    const int half = window / 2;
    std::vector<double> out(v.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        double s = 0.0;
        for (int j = lo; j <= hi; ++j) s += v[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = s / (hi - lo + 1);
    }
    return out;
}

/// Topographic prominence: peak height minus the higher of the two minima on
/// the walks toward the nearest strictly higher terrain (or the boundary).
double peak_prominence(const std::vector<double>& s, int peak) {
    const int n = static_cast<int>(s.size());
    const double h = s[static_cast<std::size_t>(peak)];
    double left_min = h;
    for (int j = peak - 1; j >= 0; --j) {
        if (s[static_cast<std::size_t>(j)] > h) break;
        left_min = std::min(left_min, s[static_cast<std::size_t>(j)]);
    }
    double right_min = h;
    for (int j = peak + 1; j < n; ++j) {
        if (s[static_cast<std::size_t>(j)] > h) break;
        right_min = std::min(right_min, s[static_cast<std::size_t>(j)]);
    }
    return h - std::max(left_min, right_min);
}

}  // namespace

int count_modes(const Histogram& h, int smooth_window, double prominence_fraction) {
    const auto s = moving_average(h.densities, smooth_window);
    const int n = static_cast<int>(s.size());
    if (n < 3) return n > 0 ? 1 : 0;
    const double peak_density = *std::max_element(s.begin(), s.end());
    if (!(peak_density > 0.0)) return 0;
    const double threshold = prominence_fraction * peak_density;

    int modes = 0;
    int i = 1;
    while (i < n - 1) {
        if (s[static_cast<std::size_t>(i)] <= s[static_cast<std::size_t>(i - 1)]) {
            ++i;
            continue;
        }
        // climb a plateau: [i, j] all equal
        int j = i;
        while (j + 1 < n && s[static_cast<std::size_t>(j + 1)] == s[static_cast<std::size_t>(i)]) ++j;
        if (j + 1 < n && s[static_cast<std::size_t>(j + 1)] < s[static_cast<std::size_t>(i)]) {
            if (peak_prominence(s, i) >= threshold) ++modes;
        }
        i = j + 1;
    }
    return modes;
}

DiagnosticsReport build_report(const Eigen::MatrixXd& X, const ReportOptions& options) {
    DiagnosticsReport report;
    report.K = static_cast<int>(X.cols());
    report.n_rows = X.rows();
    report.max_lag = options.max_lag;

    report.pdf = pdf_histogram(X, options.bins, options.range);
    report.acf = acf(X, options.max_lag);
    report.ccf = ccf(X, options.max_lag);
    wave_stats(X, report.wave_mean, report.wave_var);

    const double mean = X.mean();
    report.mean = mean;
    report.stddev = std::sqrt((X.array() - mean).square().sum() / static_cast<double>(X.size()));
    return report;
}

namespace {

double rel_err(double test, double ref) {
    const double denom = std::max(std::abs(ref), 1e-300);
    return std::abs(test - ref) / denom;
}

void require_same_grid(const DiagnosticsReport& a, const DiagnosticsReport& b) {
    const bool ok = a.pdf.edges.size() == b.pdf.edges.size() &&
                    a.acf.size() == b.acf.size() && a.ccf.size() == b.ccf.size() &&
                    a.wave_mean.size() == b.wave_mean.size();
    if (!ok) throw DataError("compare_reports: reports built on different grids");
    for (std::size_t i = 0; i < a.pdf.edges.size(); ++i) {
        const double scale = std::max({1.0, std::abs(a.pdf.edges[i]), std::abs(b.pdf.edges[i])});
        if (std::abs(a.pdf.edges[i] - b.pdf.edges[i]) > 1e-9 * scale) {
            throw DataError("compare_reports: PDF bin edges differ");
        }
    }
}

}  // namespace

CompareSummary compare_reports(const DiagnosticsReport& ref, const DiagnosticsReport& test) {
    require_same_grid(ref, test);

    CompareSummary s;
    for (std::size_t i = 0; i < ref.pdf.densities.size(); ++i) {
        s.pdf_l1 += std::abs(ref.pdf.densities[i] - test.pdf.densities[i]) *
                    ref.pdf.width(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < ref.acf.size(); ++i) {
        s.acf_max_dev = std::max(s.acf_max_dev, std::abs(ref.acf[i] - test.acf[i]));
    }
    for (std::size_t i = 0; i < ref.ccf.size(); ++i) {
        s.ccf_max_dev = std::max(s.ccf_max_dev, std::abs(ref.ccf[i] - test.ccf[i]));
    }
    s.wave_mean_rel_err.resize(ref.wave_mean.size());
    s.wave_var_rel_err.resize(ref.wave_var.size());
    for (std::size_t i = 0; i < ref.wave_mean.size(); ++i) {
        s.wave_mean_rel_err[i] = rel_err(test.wave_mean[i], ref.wave_mean[i]);
        s.wave_var_rel_err[i] = rel_err(test.wave_var[i], ref.wave_var[i]);
    }
    s.mean_rel_err = rel_err(test.mean, ref.mean);
    s.std_rel_err = rel_err(test.stddev, ref.stddev);
    s.ref_modes = count_modes(ref.pdf);
    s.test_modes = count_modes(test.pdf);
    return s;
}

void to_json(nlohmann::json& j, const DiagnosticsReport& report) {
    j = nlohmann::json{
        {"schema", "l96x-report/1"},
        {"pdf", {{"edges", report.pdf.edges}, {"densities", report.pdf.densities}}},
        {"acf", report.acf},
        {"ccf", report.ccf},
        {"wave_mean", report.wave_mean},
        {"wave_var", report.wave_var},
        {"mean", report.mean},
        {"std", report.stddev},
        {"max_lag", report.max_lag},
        {"K", report.K},
        {"n_rows", report.n_rows},
    };
    if (report.pacf) j["pacf"] = *report.pacf;
}

void from_json(const nlohmann::json& j, DiagnosticsReport& report) {
    report.pdf.edges = j.at("pdf").at("edges").get<std::vector<double>>();
    report.pdf.densities = j.at("pdf").at("densities").get<std::vector<double>>();
    report.acf = j.at("acf").get<std::vector<double>>();
    report.ccf = j.at("ccf").get<std::vector<double>>();
    report.wave_mean = j.at("wave_mean").get<std::vector<double>>();
    report.wave_var = j.at("wave_var").get<std::vector<double>>();
    report.mean = j.at("mean").get<double>();
    report.stddev = j.at("std").get<double>();
    report.max_lag = j.at("max_lag").get<int>();
    report.K = j.at("K").get<int>();
    report.n_rows = j.at("n_rows").get<std::int64_t>();
    if (j.contains("pacf")) report.pacf = j["pacf"].get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const CompareSummary& summary) {
    j = nlohmann::json{
        {"pdf_l1", summary.pdf_l1},
        {"acf_max_dev", summary.acf_max_dev},
        {"ccf_max_dev", summary.ccf_max_dev},
        {"wave_mean_rel_err", summary.wave_mean_rel_err},
        {"wave_var_rel_err", summary.wave_var_rel_err},
        {"mean_rel_err", summary.mean_rel_err},
        {"std_rel_err", summary.std_rel_err},
        {"ref_modes", summary.ref_modes},
        {"test_modes", summary.test_modes},
    };
}

void write_report_csvs(const DiagnosticsReport& report, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    auto open = [&](const char* name) {
        const auto path = (fs::path(directory) / name).string();
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw DataError("cannot open for writing: " + path);
        return f;
    };

    std::FILE* f = open("pdf.csv");
    std::fprintf(f, "bin_left,bin_right,density\n");
    for (int i = 0; i < report.pdf.bins(); ++i) {
        std::fprintf(f, "%.17g,%.17g,%.17g\n", report.pdf.edges[static_cast<std::size_t>(i)],
                     report.pdf.edges[static_cast<std::size_t>(i) + 1],
                     report.pdf.densities[static_cast<std::size_t>(i)]);
    }
    std::fclose(f);

    f = open("acf.csv");
    std::fprintf(f, "lag,acf\n");
    for (std::size_t i = 0; i < report.acf.size(); ++i) {
        std::fprintf(f, "%zu,%.17g\n", i, report.acf[i]);
    }
    std::fclose(f);

    f = open("ccf.csv");
    std::fprintf(f, "lag,ccf\n");
    for (std::size_t i = 0; i < report.ccf.size(); ++i) {
        std::fprintf(f, "%ld,%.17g\n", static_cast<long>(i) - report.max_lag, report.ccf[i]);
    }
    std::fclose(f);

    f = open("waves.csv");
    std::fprintf(f, "wavenumber,mean_amplitude,variance\n");
    for (std::size_t m = 0; m < report.wave_mean.size(); ++m) {
        std::fprintf(f, "%zu,%.17g,%.17g\n", m, report.wave_mean[m], report.wave_var[m]);
    }
    std::fclose(f);

    if (report.pacf) {
        f = open("pacf.csv");
        std::fprintf(f, "lag,pacf\n");
        for (std::size_t i = 0; i < report.pacf->size(); ++i) {
            std::fprintf(f, "%zu,%.17g\n", i + 1, (*report.pacf)[i]);
        }
        std::fclose(f);
    }
}

}  // namespace l96
