#include "l96/series_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "l96/errors.hpp"

namespace l96 {

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return v;
    }
}

template <typename T>
void put(std::ostream& out, T v) {
    const T le = to_le(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof(le));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return to_le(v);
}

void write_matrix_rows(std::ostream& out, const Eigen::MatrixXd& m) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = to_le(m(r, c));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
}

void read_matrix_rows(std::istream& in, Eigen::MatrixXd& m) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = to_le(row[static_cast<std::size_t>(c)]);
    }
}

}  // namespace

void write_blocks(const std::string& path, const BlockFile& file) {
    if (file.X.rows() != file.B.rows() || file.X.cols() != file.B.cols()) {
        throw DataError("write_blocks: X and B shapes differ");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);

    out.write(file.magic.data(), 4);
    put<std::uint32_t>(out, file.version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(file.X.cols()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(file.X.rows()));
    put<double>(out, file.sample_interval);
    put<std::uint64_t>(out, file.config_hash);
    write_matrix_rows(out, file.X);
    write_matrix_rows(out, file.B);
    if (!out) throw DataError("write failed: " + path);
}

BlockFile read_blocks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);

    BlockFile file;
    in.read(file.magic.data(), 4);
    if (!in || (file.magic != kSeriesMagic && file.magic != kTrajectoryMagic)) {
        throw DataError("not an L96 block file: " + path);
    }
    file.version = get<std::uint32_t>(in);
    if (file.version != 1) {
        throw DataError("unsupported block file version " + std::to_string(file.version));
    }
    const auto K = get<std::uint32_t>(in);
    const auto N = get<std::uint64_t>(in);
    file.sample_interval = get<double>(in);
    file.config_hash = get<std::uint64_t>(in);
    if (K == 0) throw DataError("block file has zero columns: " + path);

    file.X.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    file.B.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
    read_matrix_rows(in, file.X);
    read_matrix_rows(in, file.B);
    if (!in) throw DataError("truncated block file: " + path);
    return file;
}

void write_series(const std::string& path, const SampleSeries& series) {
    BlockFile file;
    file.magic = kSeriesMagic;
    file.X = series.X;
    file.B = series.B;
    file.sample_interval = series.sample_interval;
    file.config_hash = series.config_hash;
    write_blocks(path, file);
}

SampleSeries read_series(const std::string& path) {
    BlockFile file = read_blocks(path);
    if (file.magic != kSeriesMagic) {
        throw DataError("expected a sample series (L96S), got trajectory file: " + path);
    }
    SampleSeries s;
    s.X = std::move(file.X);
    s.B = std::move(file.B);
    s.sample_interval = file.sample_interval;
    s.config_hash = file.config_hash;
    return s;
}

void export_csv(const std::string& path, const Eigen::MatrixXd& X, const Eigen::MatrixXd& B) {
    if (X.rows() != B.rows() || X.cols() != B.cols()) {
        throw DataError("export_csv: X and B shapes differ");
    }
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot open for writing: " + path);

    const auto K = X.cols();
    for (Eigen::Index k = 0; k < K; ++k) std::fprintf(f, "x_%ld%s", static_cast<long>(k + 1), ",");
    for (Eigen::Index k = 0; k < K; ++k)
        std::fprintf(f, "b_%ld%s", static_cast<long>(k + 1), k + 1 < K ? "," : "\n");
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index k = 0; k < K; ++k) std::fprintf(f, "%.17g,", X(r, k));
        for (Eigen::Index k = 0; k < K; ++k)
            std::fprintf(f, "%.17g%s", B(r, k), k + 1 < K ? "," : "\n");
    }
    std::fclose(f);
}

}  // namespace l96
