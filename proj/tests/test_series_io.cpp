#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "l96/errors.hpp"
#include "l96/noise.hpp"
#include "l96/series_io.hpp"

using namespace l96;

namespace {

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SampleSeries random_series(int n, int k, std::uint64_t seed) {
    SampleSeries s;
    s.X.resize(n, k);
    s.B.resize(n, k);
    RandomSource rng(seed);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < k; ++c) {
            s.X(r, c) = rng.normal();
            s.B(r, c) = rng.normal();
        }
    }
    s.sample_interval = 0.01;
    s.config_hash = 0xdeadbeefcafef00dull;
    return s;
}

}  // namespace

TEST_CASE("binary series round trip is exact and byte-stable") {
    const auto dir = std::filesystem::temp_directory_path() / "l96_series_io_test";
    std::filesystem::create_directories(dir);
    const std::string p1 = (dir / "a.l96s").string();
    const std::string p2 = (dir / "b.l96s").string();

    const SampleSeries original = random_series(37, 5, 99);
    write_series(p1, original);
    const SampleSeries loaded = read_series(p1);

    CHECK(loaded.rows() == 37);
    CHECK(loaded.cols() == 5);
    CHECK(loaded.sample_interval == original.sample_interval);
    CHECK(loaded.config_hash == original.config_hash);
    CHECK((loaded.X - original.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.B - original.B).cwiseAbs().maxCoeff() == 0.0);

    write_series(p2, loaded);
    CHECK(slurp(p1) == slurp(p2));
    std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory magic is distinct from series magic") {
    const auto dir = std::filesystem::temp_directory_path() / "l96_series_io_test2";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "t.l96r").string();

    BlockFile file;
    file.magic = kTrajectoryMagic;
    const SampleSeries src = random_series(4, 3, 7);
    file.X = src.X;
    file.B = src.B;
    file.sample_interval = 0.01;
    write_blocks(path, file);

    const BlockFile back = read_blocks(path);
    CHECK(back.magic == kTrajectoryMagic);
    CHECK_THROWS_AS(read_series(path), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt and missing files are data errors") {
    CHECK_THROWS_AS(read_blocks("/nonexistent/nowhere.l96s"), DataError);

    const auto dir = std::filesystem::temp_directory_path() / "l96_series_io_test3";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "bad.l96s").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS_AS(read_blocks(path), DataError);

    // truncated payload
    const std::string trunc = (dir / "trunc.l96s").string();
    write_series(trunc, random_series(10, 4, 1));
    const auto bytes = slurp(trunc);
    {
        std::ofstream out(trunc, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(read_blocks(trunc), DataError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv export is lossless") {
    const auto dir = std::filesystem::temp_directory_path() / "l96_series_io_test4";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "s.csv").string();

    const SampleSeries s = random_series(8, 3, 42);
    export_csv(path, s.X, s.B);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x_1,x_2,x_3,b_1,b_2,b_3");

    std::string line;
    int rows = 0;
    double first_value = 0.0;
    while (std::getline(in, line)) {
        if (rows == 0) first_value = std::stod(line.substr(0, line.find(',')));
        ++rows;
    }
    CHECK(rows == 8);
    CHECK(first_value == s.X(0, 0));  // 17 significant digits round-trip exactly
    std::filesystem::remove_all(dir);
}
