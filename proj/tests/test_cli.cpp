// Shell-level checks of the command line tool: exit-code contract,
// output files, config layering, reproducibility. The binary path comes
// from the FRAMEFLOW_BIN environment variable set by CMake.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

std::string binary() {
    const char* env = std::getenv("FRAMEFLOW_BIN");
    REQUIRE(env != nullptr);
    return env;
}

int run(const std::string& args) {
    std::string cmd = binary() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("configuration errors exit with code 2") {
    CHECK(run("spectrum --system definitely-not-a-system") == 2);
    CHECK(run("periodic --system cat --max-period 0 --exact") == 2);
    CHECK(run("spectrum --system cat --format bogus") == 2);
    CHECK(run("not-a-subcommand") == 2);
    CHECK(run("") == 2);
    CHECK(run("periodic --system cat-perturbed --exact --max-period 2") == 2);
    CHECK(run("certify --system rotation-flow") == 2);
}

TEST_CASE("numerical failures exit with code 3") {
    // no recurrence can close at an absurdly small gap in a short run
    CHECK(run("measures --system cat --steps 200 --alphas 1e-12 --max-span 50") == 3);
}

TEST_CASE("spectrum writes CSV and JSON with the config echoed") {
    fs::remove_all("cli_spec_out");
    CHECK(run("spectrum --system cat --steps 4000 --seed 7 --out cli_spec_out") == 0);
    CHECK(fs::exists("cli_spec_out/spectrum.csv"));
    auto doc = read_json("cli_spec_out/spectrum.json");
    CHECK(doc.contains("meta"));
    auto payload = doc.at("payload");
    CHECK(payload.at("config").at("seed").get<int>() == 7);
    CHECK(payload.at("config").at("system").get<std::string>() == "cat");
    auto exps = payload.at("result").at("exponents");
    REQUIRE(exps.size() == 2);
    CHECK(std::fabs(exps[0].get<double>() + 0.96242365) < 5e-3);
    CHECK(std::fabs(exps[1].get<double>() - 0.96242365) < 5e-3);

    std::ifstream csv("cli_spec_out/spectrum.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "index,exponent,tail_drift");
    fs::remove_all("cli_spec_out");
}

TEST_CASE("identical seeds give byte-identical payloads") {
    fs::remove_all("cli_det_a");
    fs::remove_all("cli_det_b");
    CHECK(run("spectrum --system cat --steps 3000 --seed 11 --out cli_det_a") == 0);
    CHECK(run("spectrum --system cat --steps 3000 --seed 11 --out cli_det_b") == 0);
    auto a = read_json("cli_det_a/spectrum.json");
    auto b = read_json("cli_det_b/spectrum.json");
    CHECK(a.at("payload").dump() == b.at("payload").dump());
    fs::remove_all("cli_det_a");
    fs::remove_all("cli_det_b");
}

TEST_CASE("exact periodic enumeration through the CLI") {
    fs::remove_all("cli_per_out");
    CHECK(run("periodic --system cat --max-period 3 --exact --out cli_per_out") == 0);
    auto doc = read_json("cli_per_out/periodic.json");
    auto result = doc.at("payload").at("result");
    auto counts = result.at("points_per_period");
    CHECK(counts[0].at("points_dividing").get<long long>() == 1);
    CHECK(counts[1].at("points_dividing").get<long long>() == 5);
    CHECK(counts[2].at("points_dividing").get<long long>() == 16);
    CHECK(result.at("index_constancy").at("index").get<int>() == 1);
    CHECK(std::fabs(result.at("extremal_bounds").at("sigma").get<double>() + 0.96242365) < 1e-6);
    fs::remove_all("cli_per_out");
}

TEST_CASE("certify verdict drives the exit code") {
    fs::remove_all("cli_cert_out");
    CHECK(run("certify --system cat --sigma 0.96 --varsigma 0.96 --t0 10 --tmax 300 "
              "--stride 10 --samples 2 --out cli_cert_out") == 0);
    auto doc = read_json("cli_cert_out/certify.json");
    CHECK(doc.at("payload").at("result").at("verdict").get<std::string>() == "certified");
    fs::remove_all("cli_cert_out");

    fs::remove_all("cli_cert_neutral");
    CHECK(run("certify --system diag:1,2 --sigma 0.5 --t0 5 --tmax 100 --stride 5 "
              "--samples 2 --out cli_cert_neutral") == 4);
    auto ndoc = read_json("cli_cert_neutral/certify.json");
    CHECK(ndoc.at("payload").at("result").at("verdict").get<std::string>() == "refuted");
    // a concrete witness window is stored with the refutation
    bool has_witness = ndoc.at("payload").at("result").at("stable").contains("witness") ||
                       ndoc.at("payload").at("result").at("unstable").contains("witness");
    CHECK(has_witness);
    fs::remove_all("cli_cert_neutral");
}

TEST_CASE("config file seeds defaults and flags override") {
    {
        std::ofstream cfg("cli_cfg.json");
        cfg << R"({"system":"cat","steps":500,"seed":21})";
    }
    fs::remove_all("cli_cfg_out");
    CHECK(run("spectrum --config cli_cfg.json --out cli_cfg_out") == 0);
    auto doc = read_json("cli_cfg_out/spectrum.json");
    CHECK(doc.at("payload").at("config").at("steps").get<int>() == 500);
    CHECK(doc.at("payload").at("config").at("seed").get<int>() == 21);

    fs::remove_all("cli_cfg_out");
    CHECK(run("spectrum --config cli_cfg.json --steps 800 --out cli_cfg_out") == 0);
    doc = read_json("cli_cfg_out/spectrum.json");
    CHECK(doc.at("payload").at("config").at("steps").get<int>() == 800);
    fs::remove_all("cli_cfg_out");
    fs::remove("cli_cfg.json");
}

TEST_CASE("diagonal spectrum rows through the CLI") {
    fs::remove_all("cli_diag_out");
    CHECK(run("spectrum --system diag:3,0.3333333333333333 --steps 4000 --seed-state 0,0 "
              "--out cli_diag_out") == 0);
    auto doc = read_json("cli_diag_out/spectrum.json");
    auto exps = doc.at("payload").at("result").at("exponents");
    CHECK(std::fabs(exps[0].get<double>() + std::log(3.0)) < 1e-3);
    CHECK(std::fabs(exps[1].get<double>() - std::log(3.0)) < 1e-3);
    fs::remove_all("cli_diag_out");
}

TEST_CASE("cat-perturbed certificate margins are locked") {
    // golden values from the first run of this configuration
    fs::remove_all("cli_cp_out");
    CHECK(run("certify --system cat-perturbed --eps 0.01 --sigma 0.9 --varsigma 0.9 "
              "--t0 10 --tmax 400 --stride 10 --samples 3 --out cli_cp_out") == 0);
    auto result = read_json("cli_cp_out/certify.json").at("payload").at("result");
    CHECK(result.at("verdict").get<std::string>() == "certified");
    CHECK(result.at("stable").at("worst_window_average").get<double>() ==
          doctest::Approx(-0.934079750211913).epsilon(1e-6));
    CHECK(result.at("unstable").at("worst_window_average").get<double>() ==
          doctest::Approx(-0.9542670597722633).epsilon(1e-6));
    fs::remove_all("cli_cp_out");
}

TEST_CASE("measures on a fixed-point system reports a single zero row") {
    fs::remove_all("cli_fp_out");
    CHECK(run("measures --system diag:0.5,0.5 --steps 100 --alphas 0.1 --seed-state 0,0 "
              "--out cli_fp_out") == 0);
    auto rows = read_json("cli_fp_out/measures.json").at("payload").at("result").at("rows");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("bl_distance").get<double>() < 1e-6);
    CHECK(rows[0].at("period").get<double>() == 1.0);
    fs::remove_all("cli_fp_out");
}

TEST_CASE("suspend-spectrum reports the base exponents") {
    fs::remove_all("cli_susp_out");
    CHECK(run("suspend-spectrum --system cat --roof 1 --time 200 --out cli_susp_out") == 0);
    auto doc = read_json("cli_susp_out/suspend-spectrum.json");
    auto exps = doc.at("payload").at("result").at("exponents");
    CHECK(std::fabs(exps[0].get<double>() + 0.96242365) < 2e-2);
    CHECK(std::fabs(exps[1].get<double>() - 0.96242365) < 2e-2);
    fs::remove_all("cli_susp_out");
}
