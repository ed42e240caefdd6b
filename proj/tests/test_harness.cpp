#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "abc/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int lab(std::vector<std::string> args) {
    args.insert(args.begin(), "abc_lab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return abc::harness::run(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("abc_lab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

json manifest(const fs::path& dir, const std::string& cmd) {
    return json::parse(slurp(dir / (cmd + ".manifest.json")));
}

}  // namespace

TEST_SUITE("cli-harness") {

TEST_CASE("gap command") {
    const auto dir = scratch("gap");
    CHECK(lab({"--out", dir.string(), "gap", "--N", "3", "--beta", "0", "--graph", "ring,complete",
               "--export-matrix"}) == 0);
    const std::string csv = slurp(dir / "gap.csv");
    CHECK(csv.rfind("# schema=1\n", 0) == 0);
    const auto m = manifest(dir, "gap");
    CHECK(m["record"]["rows"][0]["gap"].get<double>() == doctest::Approx(3.0));
    CHECK(m["record"]["rows"][1]["gap"].get<double>() == doctest::Approx(1.0));
    CHECK(m["seed"].get<std::uint64_t>() == 1);
    CHECK(fs::exists(dir / "plot_gap.py"));
    CHECK(fs::exists(dir / "generator_ring_N3_beta0.txt"));

    // Existing outputs are protected.
    CHECK(lab({"--out", dir.string(), "gap", "--N", "3"}) == abc::harness::kUsage);
    CHECK(lab({"--out", dir.string(), "--force", "gap", "--N", "3"}) == 0);
}

TEST_CASE("usage errors") {
    const auto dir = scratch("usage");
    CHECK(lab({"--out", dir.string(), "gap", "--N", "4"}) == abc::harness::kUsage);
    CHECK(lab({"--out", dir.string(), "scaling", "--N", "6"}) == abc::harness::kUsage);
    CHECK(lab({"--out", dir.string(), "frobnicate"}) == abc::harness::kUsage);
    CHECK(lab({"--out", dir.string(), "gap", "--graph", "torus"}) == abc::harness::kUsage);
}

TEST_CASE("budget failure keeps going and reports") {
    const auto dir = scratch("budget");
    CHECK(lab({"--out", dir.string(), "--budget-gib", "0.0001", "gap", "--N", "3,18"}) == abc::harness::kNumerical);
    const auto m = manifest(dir, "gap");
    CHECK(m["record"]["rows"].size() == 1);
    CHECK(m["record"]["failures"][0]["N"].get<int>() == 18);
}

TEST_CASE("config file with flag override") {
    const auto dir = scratch("config");
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "lab.ini");
        cfg << "seed = 9\n[gap]\nN = 3\nbeta = 2\ngraph = complete\n";
    }
    CHECK(lab({"--config", (dir / "lab.ini").string(), "--out", (dir / "out").string(), "gap", "--beta", "0"}) == 0);
    const auto m = manifest(dir / "out", "gap");
    CHECK(m["seed"].get<std::uint64_t>() == 9);
    CHECK(m["parameters"]["graph"][0] == "complete");
    CHECK(m["parameters"]["beta"][0].get<double>() == 0.0);
}

TEST_CASE("minimizer and interchange records") {
    const auto dir = scratch("records");
    CHECK(lab({"--out", dir.string(), "minimizer", "--beta", "5,15", "--grid", "256"}) == 0);
    const auto m = manifest(dir, "minimizer");
    CHECK(m["record"]["records"][0]["solution"] == "none");
    CHECK(m["record"]["records"][1]["period_residual"].get<double>() < 1e-8);
    CHECK(fs::exists(dir / "minimizer_beta15.csv"));

    CHECK(lab({"--out", dir.string(), "interchange", "--N", "3", "--beta", "0"}) == 0);
    const auto ev = manifest(dir, "interchange")["record"]["records"][0]["spectrum"].get<std::vector<double>>();
    const std::vector<double> expected{-2, -1, -1, -1, -1, 0};
    REQUIRE(ev.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(ev[i] == doctest::Approx(expected[i]).epsilon(1e-10));
}

TEST_CASE("sample determinism") {
    const auto a = scratch("sample_a"), b = scratch("sample_b");
    const std::vector<std::string> spec{"sample", "--N", "6", "--beta", "3", "--horizon", "500", "--burn-in", "10",
                                        "--replicas", "2"};
    auto run_in = [&](const fs::path& d) {
        std::vector<std::string> args{"--seed", "77", "--out", d.string()};
        args.insert(args.end(), spec.begin(), spec.end());
        return lab(args);
    };
    CHECK(run_in(a) == 0);
    CHECK(run_in(b) == 0);
    CHECK(slurp(a / "sample.csv") == slurp(b / "sample.csv"));
    CHECK(slurp(a / "sample.json") == slurp(b / "sample.json"));
}

TEST_CASE("hydro and selftest") {
    const auto dir = scratch("hydro");
    CHECK(lab({"--out", dir.string(), "hydro", "--grid", "64", "--horizon", "1"}) == 0);
    CHECK(slurp(dir / "hydro.csv").rfind("# schema=1\n", 0) == 0);
    CHECK(lab({"--out", dir.string(), "hydro", "--init", "bogus", "--force"}) == abc::harness::kUsage);
    CHECK(lab({"--out", dir.string(), "selftest"}) == 0);
}

TEST_CASE("line fit") {
    const auto f = abc::harness::fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.residual == doctest::Approx(0.0));
}

}
