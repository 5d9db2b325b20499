#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace l96 {

/// Physical and numerical parameters of one two-layer L96 configuration.
///
/// dt_full is the integration step of the full (two-layer) model, dt_reduced
/// the step of the reduced stochastic model, sample_interval the spacing of
/// training samples. The presets keep sample_interval = 10 * dt_full and
/// dt_reduced = sample_interval.
struct ModelConfig {
    double epsilon = 0.5;        // time-scale gap
    int K = 18;                  // large-scale grid points
    int J = 20;                  // small-scale points per large-scale point
    double F = 10.0;             // constant forcing
    double h_x = -1.0;           // fast-to-slow coupling
    double h_y = 1.0;            // slow-to-fast coupling
    double dt_full = 1e-3;
    double dt_reduced = 1e-2;
    double sample_interval = 1e-2;
    std::int64_t n_samples = 1'000'000 + 14;
    double burn_in = 100.0;      // discarded initial time span

    /// Full-model steps between consecutive samples (validated integer ratio).
    int steps_per_sample() const;

    /// Throws ConfigError if any invariant fails.
    void validate() const;

    /// FNV-1a over the canonical little-endian field encoding; identifies the
    /// generating configuration in file headers and fit provenance.
    std::uint64_t hash() const;
};

/// A named Table-style preset plus the autoregression order its sample count
/// was sized for (n_samples = 1e6 + recommended_order).
struct Preset {
    ModelConfig config;
    int recommended_order;
};

/// "unimodal" (K=18, F=10, h_x=-1, p=14) or "trimodal" (K=32, F=18,
/// h_x=-3.2, p=30). Returns nullopt for unknown names.
std::optional<Preset> find_preset(const std::string& name);

/// Parses a flat key=value config file ('#' comments, blank lines ok).
/// A "preset" key seeds the fields; any other key overrides one field.
/// Throws ConfigError on unknown keys or unparsable values.
ModelConfig parse_config_file(const std::string& path);

/// Applies the same key=value override syntax to an existing config.
void apply_override(ModelConfig& cfg, const std::string& key, const std::string& value);

/// Divides the simulated sample count by `scale`, keeping the preset's extra
/// lag rows intact: n -> (n - order)/scale + order.
std::int64_t scaled_samples(std::int64_t n_samples, int recommended_order, int scale);

}  // namespace l96
