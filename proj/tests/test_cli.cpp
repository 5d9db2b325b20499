#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l96/series_io.hpp"

// Drives the installed binary through every subcommand and checks the exit
// code contract (0 ok, 1 assertion fail, 2 usage, 3 divergence, 4 data).

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string binary() {
    const char* bin = std::getenv("L96X_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "run via ctest (L96X_BIN unset)");
    return bin;
}

struct Workdir {
    fs::path path;
    Workdir() {
        path = fs::temp_directory_path() / "l96x_cli_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
};

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json load_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

const Workdir& work() {
    static Workdir w;
    return w;
}

std::string tiny_series(const std::string& preset, const std::string& name) {
    const auto out = work().path / name;
    if (!fs::exists(out)) {
        REQUIRE(run("generate --preset " + preset +
                    " --set n_samples=1500 --set burn_in=3 --seed 5 -o " + out.string()) == 0);
    }
    return out.string();
}

}  // namespace

TEST_CASE("generate writes the preset dimensions and a sidecar") {
    const auto uni = work().path / "uni.l96s";
    REQUIRE(run("generate --preset unimodal --set n_samples=300 --set burn_in=2 --seed 1 -o " +
                uni.string() + " --csv " + (work().path / "uni.csv").string()) == 0);
    const l96::SampleSeries s = l96::read_series(uni.string());
    CHECK(s.cols() == 18);
    CHECK(s.rows() == 300);
    CHECK(fs::exists(work().path / "uni.l96s.json"));
    CHECK(fs::exists(work().path / "uni.csv"));
    const json sidecar = load_json(work().path / "uni.l96s.json");
    CHECK(sidecar.at("config").at("K") == 18);
    CHECK(sidecar.at("seed") == 1);

    const auto tri = work().path / "tri_dims.l96s";
    REQUIRE(run("generate --preset trimodal --set n_samples=50 --set burn_in=1 -o " +
                tri.string()) == 0);
    CHECK(l96::read_series(tri.string()).cols() == 32);
}

TEST_CASE("generate without a configuration is a usage error") {
    CHECK(run("generate -o nowhere.l96s") == 2);
    CHECK(run("generate --preset nonsense -o nowhere.l96s") == 2);
    CHECK(run("generate --preset unimodal --set K=3 -o nowhere.l96s") == 2);
}

TEST_CASE("fit produces model JSON with a stability verdict") {
    const std::string series = tiny_series("unimodal", "fit_base.l96s");
    const auto model = work().path / "m_varx.json";
    REQUIRE(run("fit " + series + " varx --p 4 --cov diag -o " + model.string()) == 0);
    const json j = load_json(model);
    CHECK(j.at("kind") == "varx");
    CHECK(j.at("spec").at("p") == 4);
    CHECK(j.at("stability").contains("stable"));
    CHECK(j.at("fit").contains("order_selection"));

    SUBCASE("misuse of flags is a usage error") {
        CHECK(run("fit " + series + " wn --p 3 -o bad.json") == 2);
        CHECK(run("fit " + series + " varx -o bad.json") == 2);
        CHECK(run("fit " + series + " unknown -o bad.json") == 2);
        CHECK(run("fit " + series + " wnd --preset-params -o bad.json") == 2);
    }
    SUBCASE("narmax preset parameters load verbatim") {
        const auto nm = work().path / "m_narmax.json";
        REQUIRE(run("fit " + series + " narmax --variant 1201 --preset-params -o " +
                    nm.string()) == 0);
        const json n = load_json(nm);
        CHECK(n.at("a1") == 0.978);
        CHECK(n.at("params_source") == "preset");
    }
    SUBCASE("missing input file is a data error") {
        CHECK(run("fit /nonexistent.l96s wn -o bad.json") == 4);
    }
}

TEST_CASE("simulate is deterministic per seed") {
    const std::string series = tiny_series("unimodal", "sim_base.l96s");
    const auto model = work().path / "sim_model.json";
    REQUIRE(run("fit " + series + " varx --p 2 --cov diag -o " + model.string()) == 0);

    const auto r1 = work().path / "r1.l96r";
    const auto r2 = work().path / "r2.l96r";
    const auto r3 = work().path / "r3.l96r";
    REQUIRE(run("simulate " + model.string() + " --ref " + series + " --seed 9 --steps 400 -o " +
                r1.string()) == 0);
    REQUIRE(run("simulate " + model.string() + " --ref " + series + " --seed 9 --steps 400 -o " +
                r2.string()) == 0);
    REQUIRE(run("simulate " + model.string() + " --ref " + series + " --seed 10 --steps 400 -o " +
                r3.string()) == 0);
    CHECK(slurp(r1) == slurp(r2));      // byte-identical payloads
    CHECK(slurp(r1) != slurp(r3));

    SUBCASE("zero steps is a valid empty request") {
        const auto r0 = work().path / "r0.l96r";
        REQUIRE(run("simulate " + model.string() + " --ref " + series + " --steps 0 -o " +
                    r0.string()) == 0);
        CHECK(l96::read_blocks(r0.string()).X.rows() == 0);
    }
    SUBCASE("the zero model needs no fit") {
        const auto rz = work().path / "rz.l96r";
        REQUIRE(run("simulate zero --ref " + series + " --steps 50 -o " + rz.string()) == 0);
        const auto file = l96::read_blocks(rz.string());
        CHECK(file.B.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("ensemble writes one file per seed") {
        const auto re = work().path / "ens.l96r";
        REQUIRE(run("simulate " + model.string() + " --ref " + series +
                    " --seed 20 --steps 50 --ensemble 3 -o " + re.string()) == 0);
        CHECK(fs::exists(work().path / "ens_seed20.l96r"));
        CHECK(fs::exists(work().path / "ens_seed21.l96r"));
        CHECK(fs::exists(work().path / "ens_seed22.l96r"));
    }
    SUBCASE("warm start requires a reference unless disclaimed") {
        CHECK(run("simulate " + model.string() + " --steps 10 -o nowhere.l96r") == 2);
        const auto rz = work().path / "rzh.l96r";
        REQUIRE(run("simulate " + model.string() + " --preset unimodal --zero-history --seed 4 "
                    "--steps 50 -o " + rz.string()) == 0);
        CHECK(l96::read_blocks(rz.string()).X.rows() == 50);
    }
}

TEST_CASE("diagnose emits the per-criterion files") {
    const std::string series = tiny_series("trimodal", "diag_base.l96s");
    const auto outdir = work().path / "rep_tri";
    REQUIRE(run("diagnose " + series + " -o " + outdir.string() +
                " --max-lag 50 --pacf 10 --cpdf 8") == 0);
    for (const char* name : {"report.json", "pdf.csv", "acf.csv", "ccf.csv", "waves.csv",
                             "pacf.csv", "cpdf.csv", "cpdf_mean.csv"}) {
        CHECK_MESSAGE(fs::exists(outdir / name), name);
    }

    // waves.csv covers wavenumbers 0..K/2 = 0..16
    std::ifstream waves(outdir / "waves.csv");
    std::string line;
    int rows = -1;  // header
    while (std::getline(waves, line)) ++rows;
    CHECK(rows == 17);

    // pdf.csv integrates to one
    std::ifstream pdf(outdir / "pdf.csv");
    std::getline(pdf, line);
    double integral = 0.0;
    while (std::getline(pdf, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double left = std::stod(line.substr(0, c1));
        const double right = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        const double density = std::stod(line.substr(c2 + 1));
        integral += (right - left) * density;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-8));

    SUBCASE("pacf column length follows the request") {
        std::ifstream pacf(outdir / "pacf.csv");
        int n = -1;
        while (std::getline(pacf, line)) ++n;
        CHECK(n == 10);
    }
}

TEST_CASE("compare distances and assertion gate") {
    const std::string series = tiny_series("unimodal", "cmp_base.l96s");
    const auto rep_a = work().path / "cmp_a";
    const auto rep_b = work().path / "cmp_b";
    REQUIRE(run("diagnose " + series + " -o " + rep_a.string() + " --max-lag 30") == 0);
    REQUIRE(run("diagnose " + series + " -o " + rep_b.string() + " --match " +
                (rep_a / "report.json").string()) == 0);

    SUBCASE("identical reports are at distance zero") {
        const auto out = work().path / "cmp_self.json";
        REQUIRE(run("compare " + (rep_a / "report.json").string() + " " +
                    (rep_a / "report.json").string() + " -o " + out.string()) == 0);
        const json j = load_json(out);
        CHECK(j.at("pdf_l1") == 0.0);
        CHECK(j.at("acf_max_dev") == 0.0);
    }
    SUBCASE("assert gate passes and fails by thresholds") {
        const auto ok_thresholds = work().path / "thr_ok.json";
        const auto bad_thresholds = work().path / "thr_bad.json";
        {
            std::ofstream ok(ok_thresholds);
            ok << R"({"pdf_l1_max": 10.0, "acf_max_dev_max": 10.0})";
            std::ofstream bad(bad_thresholds);
            bad << R"({"pdf_l1_max": -1.0})";
        }
        CHECK(run("compare " + (rep_a / "report.json").string() + " " +
                  (rep_b / "report.json").string() + " --assert " + ok_thresholds.string()) == 0);
        CHECK(run("compare " + (rep_a / "report.json").string() + " " +
                  (rep_b / "report.json").string() + " --assert " + bad_thresholds.string()) == 1);

        const auto unknown = work().path / "thr_unknown.json";
        {
            std::ofstream u(unknown);
            u << R"({"no_such_threshold": 1.0})";
        }
        CHECK(run("compare " + (rep_a / "report.json").string() + " " +
                  (rep_b / "report.json").string() + " --assert " + unknown.string()) == 2);
    }
    SUBCASE("mismatched grids are a usage error") {
        const auto rep_c = work().path / "cmp_c";
        REQUIRE(run("diagnose " + series + " -o " + rep_c.string() + " --bins 33 --max-lag 30") ==
                0);
        CHECK(run("compare " + (rep_a / "report.json").string() + " " +
                  (rep_c / "report.json").string()) == 2);
    }
}

TEST_CASE("divergence surfaces as exit code 3") {
    // an unstable surrogate with a huge offset blows up immediately
    const std::string series = tiny_series("unimodal", "div_base.l96s");
    const auto model = work().path / "explosive.json";
    {
        std::ofstream out(model);
        out << R"({"kind":"varx","schema":"l96x-model/1",
                   "spec":{"p":0,"use_endogenous":false,"use_exogenous":false,
                           "covariance":"diagonal_iso","K":18,"all_lags":false},
                   "a0":5e6,"lag_coeffs":[],"d":0.0,"sigma":0.0})";
    }
    CHECK(run("simulate " + model.string() + " --ref " + series + " --steps 100 -o " +
              (work().path / "boom.l96r").string()) == 3);
}
