// Exercises the installed CLI binary end to end: subcommand wiring and the
// documented exit codes. The binary path arrives via MATIC_BIN.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* p = std::getenv("MATIC_BIN");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    std::string cmd = binary() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("energy subcommand succeeds and writes its CSV") {
    auto dir = fresh_dir("matic_cli_energy");
    CHECK(run("energy --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "energy_scenarios.csv"));
    fs::remove_all(dir);
}

TEST_CASE("profile subcommand writes fault maps for the grid") {
    auto dir = fresh_dir("matic_cli_profile");
    CHECK(run("profile --voltage-grid 0.9 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "faultmap_V0.900_T25.0.txt"));
    fs::remove_all(dir);
}

TEST_CASE("config errors exit with code 2") {
    CHECK(run("profile --benchmark not_a_benchmark") == 2);
    CHECK(run("train --config /nonexistent/config.cfg") == 2);
    CHECK(run("sweep --voltage-grid 0.1") == 2); // outside the energy table span
}

TEST_CASE("missing data corpus exits with code 3") {
    auto dir = fresh_dir("matic_cli_missing");
    std::ofstream cfg(dir / "cfg.txt");
    cfg << "bench.name = mnist\nbench.mnist_dir = /nonexistent/mnist\n";
    cfg << "out = " << (dir / "out").string() << "\n";
    cfg.close();
    CHECK(run("train --config " + (dir / "cfg.txt").string()) == 3);
    fs::remove_all(dir);
}

TEST_CASE("sweep over all benchmarks is byte-identical across thread counts") {
    auto dir = fresh_dir("matic_cli_jobs");
    std::ofstream cfg(dir / "cfg.txt");
    cfg << "bench.name = all\ntrain.epochs = 2\ntrain.pretrain_epochs = 2\n";
    cfg << "sweep.voltages = 0.50\nseed = 5\n";
    cfg.close();
    std::string base = "sweep --config " + (dir / "cfg.txt").string() + " --out ";
    CHECK(run(base + (dir / "o1").string() + " --jobs 1") == 0);
    CHECK(run(base + (dir / "o2").string() + " --jobs 2") == 0);
    std::ifstream a(dir / "o1" / "sweep.csv"), b(dir / "o2" / "sweep.csv");
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(!sa.empty());
    CHECK(sa == sb);
    // one row per (benchmark, voltage)
    CHECK(sa.find("bscholes,") != std::string::npos);
    CHECK(sa.find("facedet,") != std::string::npos);
    CHECK(sa.find("inversek2j,") != std::string::npos);
    CHECK(sa.find("mnist,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("training divergence exits with code 4") {
    auto dir = fresh_dir("matic_cli_diverge");
    std::ofstream cfg(dir / "cfg.txt");
    cfg << "bench.name = inversek2j\ntrain.alpha = 1e12\n";
    cfg << "train.epochs = 2\ntrain.pretrain_epochs = 1\n";
    cfg << "out = " << (dir / "out").string() << "\n";
    cfg.close();
    CHECK(run("train --config " + (dir / "cfg.txt").string() + " --mode naive") == 4);
    fs::remove_all(dir);
}
