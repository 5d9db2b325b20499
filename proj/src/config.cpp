#include "l96/config.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "l96/errors.hpp"

namespace l96 {

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
}

void hash_f64(std::uint64_t& h, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    std::array<unsigned char, 8> le;
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
    hash_bytes(h, le.data(), le.size());
}

void hash_i64(std::uint64_t& h, std::int64_t v) {
    hash_f64(h, static_cast<double>(v));
}

}  // namespace

int ModelConfig::steps_per_sample() const {
    const double ratio = sample_interval / dt_full;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("sample_interval must be an integer multiple of dt_full (ratio " +
                          std::to_string(ratio) + ")");
    }
    return static_cast<int>(rounded);
}

void ModelConfig::validate() const {
    if (K < 4) throw ConfigError("K must be >= 4 (advection stencil spans 4 points)");
    if (J < 4) throw ConfigError("J must be >= 4 (advection stencil spans 4 points)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(dt_full > 0.0)) throw ConfigError("dt_full must be > 0");
    if (!(sample_interval > 0.0)) throw ConfigError("sample_interval must be > 0");
    if (std::abs(dt_reduced - sample_interval) > 1e-12 * std::max(1.0, sample_interval)) {
        throw ConfigError("dt_reduced must equal sample_interval");
    }
    if (n_samples < 0) throw ConfigError("n_samples must be >= 0");
    if (burn_in < 0.0) throw ConfigError("burn_in must be >= 0");
    steps_per_sample();  // validates the ratio
}

std::uint64_t ModelConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    hash_f64(h, epsilon);
    hash_i64(h, K);
    hash_i64(h, J);
    hash_f64(h, F);
    hash_f64(h, h_x);
    hash_f64(h, h_y);
    hash_f64(h, dt_full);
    hash_f64(h, dt_reduced);
    hash_f64(h, sample_interval);
    hash_i64(h, n_samples);
    hash_f64(h, burn_in);
    return h;
}

std::optional<Preset> find_preset(const std::string& name) {
    if (name == "unimodal") {
        ModelConfig c;
        c.epsilon = 0.5;
        c.K = 18;
        c.J = 20;
        c.F = 10.0;
        c.h_x = -1.0;
        c.h_y = 1.0;
        c.n_samples = 1'000'000 + 14;
        return Preset{c, 14};
    }
    if (name == "trimodal") {
        ModelConfig c;
        c.epsilon = 0.5;
        c.K = 32;
        c.J = 16;
        c.F = 18.0;
        c.h_x = -3.2;
        c.h_y = 1.0;
        c.n_samples = 1'000'000 + 30;
        return Preset{c, 30};
    }
    return std::nullopt;
}

void apply_override(ModelConfig& cfg, const std::string& key, const std::string& value) {
    auto as_f64 = [&](double& slot) {
        std::size_t used = 0;
        slot = std::stod(value, &used);
        if (used != value.size()) throw ConfigError("bad numeric value for '" + key + "': " + value);
    };
    auto as_int = [&](auto& slot) {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) throw ConfigError("bad integer value for '" + key + "': " + value);
        slot = static_cast<std::remove_reference_t<decltype(slot)>>(v);
    };
    try {
        if (key == "epsilon") as_f64(cfg.epsilon);
        else if (key == "K") as_int(cfg.K);
        else if (key == "J") as_int(cfg.J);
        else if (key == "F") as_f64(cfg.F);
        else if (key == "h_x") as_f64(cfg.h_x);
        else if (key == "h_y") as_f64(cfg.h_y);
        else if (key == "dt_full") as_f64(cfg.dt_full);
        else if (key == "dt_reduced") as_f64(cfg.dt_reduced);
        else if (key == "sample_interval") as_f64(cfg.sample_interval);
        else if (key == "n_samples") as_int(cfg.n_samples);
        else if (key == "burn_in") as_f64(cfg.burn_in);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad value for '" + key + "': " + value);
    } catch (const std::out_of_range&) {
        throw ConfigError("value out of range for '" + key + "': " + value);
    }
}

ModelConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    ModelConfig cfg;
    bool have_preset = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            s = (a == std::string::npos) ? std::string{} : s.substr(a, b - a + 1);
        };
        strip(key);
        strip(value);

        if (key == "preset") {
            const auto preset = find_preset(value);
            if (!preset) throw ConfigError("unknown preset '" + value + "'");
            cfg = preset->config;
            have_preset = true;
        } else {
            apply_override(cfg, key, value);
        }
    }
    (void)have_preset;
    cfg.validate();
    return cfg;
}

std::int64_t scaled_samples(std::int64_t n_samples, int recommended_order, int scale) {
    if (scale <= 0) throw ConfigError("scale must be >= 1");
    if (scale == 1) return n_samples;
    const std::int64_t body = n_samples - recommended_order;
    if (body <= 0) return n_samples;
    return body / scale + recommended_order;
}

}  // namespace l96
