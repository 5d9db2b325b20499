#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

#include "l96/full_model.hpp"

namespace l96 {

/// Columnar binary container shared by training series ("L96S") and reduced
/// trajectories ("L96R"):
///
///   magic[4] | u32 version | u32 K | u64 N | f64 sample_interval |
///   u64 config_hash | X block (N*K f64, row-major) | B block (N*K f64)
///
/// All integers and floats are little-endian. Identical inputs produce
/// byte-identical files.
struct BlockFile {
    std::array<char, 4> magic{};
    std::uint32_t version = 1;
    Eigen::MatrixXd X;
    Eigen::MatrixXd B;
    double sample_interval = 0.0;
    std::uint64_t config_hash = 0;
};

inline constexpr std::array<char, 4> kSeriesMagic{'L', '9', '6', 'S'};
inline constexpr std::array<char, 4> kTrajectoryMagic{'L', '9', '6', 'R'};

void write_blocks(const std::string& path, const BlockFile& file);
BlockFile read_blocks(const std::string& path);

void write_series(const std::string& path, const SampleSeries& series);
SampleSeries read_series(const std::string& path);

/// Lossless CSV (17 significant digits): header x_1..x_K,b_1..b_K, one row
/// per sample.
void export_csv(const std::string& path, const Eigen::MatrixXd& X, const Eigen::MatrixXd& B);

}  // namespace l96
