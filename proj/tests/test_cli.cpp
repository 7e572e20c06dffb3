#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

#include "fracwalk/analysis.hpp"
#include "fracwalk/generators.hpp"

namespace fs = std::filesystem;
using namespace fracwalk;

namespace {

const fs::path kScratch = fs::path(FRACWALK_TEST_TMP);

int run(const std::string& args)
{
    const std::string cmd = std::string(FRACWALK_CLI) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path fresh(const std::string& name)
{
    const auto p = kScratch / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p)
{
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("generate is deterministic and well formed")
    {
        const auto a = fresh("gen_a"), b = fresh("gen_b");
        CHECK(run("--output_dir " + a.string() + " generate --family uniform --T 1024 --seed 7") == 0);
        CHECK(run("--output_dir " + b.string() + " generate --family uniform --T 1024 --seed 7") == 0);
        CHECK(slurp(a / "sequence.csv") == slurp(b / "sequence.csv"));

        const auto c = fresh("gen_c");
        CHECK(run("--output_dir " + c.string() + " generate --family frw --delta 0.1 --T 4096") == 0);
        const auto rows = lines(c / "sequence.csv");
        CHECK(rows.size() == 4096);
        for (const auto& r : rows) {
            CHECK((r == "1" || r == "-1"));
        }
        CHECK(fs::exists(c / "generate.manifest.json"));
    }

    TEST_CASE("exit codes")
    {
        const auto d = fresh("codes");
        CHECK(run("--output_dir " + d.string() + " generate --family afrw --delta 2") == 2);
        CHECK(run("--output_dir " + d.string() + " generate --family frw --T 1000") == 2);
        CHECK(run("--output_dir " + d.string() + " generate --no_such_flag 1") == 2);
        CHECK(run("--output_dir " + d.string() + " predict --T 64 --I 10 20 --predictor oracle") == 2);
        CHECK(run("--output_dir " + d.string() + " inversion --input " + (d / "missing.csv").string()) == 2);
        CHECK(run("--output_dir " + d.string() + " theta --alpha 0.25") == 0);
    }

    TEST_CASE("replay reproduces outputs byte for byte")
    {
        const auto a = fresh("replay_a"), b = fresh("replay_b");
        CHECK(run("--output_dir " + a.string() +
                  " sweep --families uniform opt_frw --deltas 0.1 --T_list 1024 --metrics deviation delta_hat"
                  " --trials 1000 --master_seed 3") == 0);
        CHECK(run("--output_dir " + b.string() + " --replay " + (a / "sweep.manifest.json").string()) == 0);
        CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));

        const auto c = fresh("replay_c"), e = fresh("replay_e");
        CHECK(run("--output_dir " + c.string() + " generate --family aofrw --delta 0.2 --T 2048 --seed 5"
                  " --format binary") == 0);
        CHECK(run("--output_dir " + e.string() + " --replay " + (c / "generate.manifest.json").string()) == 0);
        CHECK(slurp(c / "sequence.bin") == slurp(e / "sequence.bin"));
    }

    TEST_CASE("sweep shape and per-cell seeds")
    {
        const auto d = fresh("sweep_grid");
        CHECK(run("--output_dir " + d.string() +
                  " sweep --families frw --deltas 0 0.05 0.1 --T_list 256 512 1024 --metrics deviation"
                  " --trials 200 --master_seed 11") == 0);
        const auto rows = lines(d / "sweep.csv");
        REQUIRE(!rows.empty());
        CHECK(rows[0] == "family,delta,T,metric,value,stderr,trials,seed");
        int median_rows = 0;
        for (const auto& r : rows) {
            median_rows += r.find(",median_dev,") != std::string::npos;
        }
        CHECK(median_rows == 9);
    }

    TEST_CASE("single-cell sweep equals the direct analysis call")
    {
        const auto d = fresh("sweep_one");
        CHECK(run("--output_dir " + d.string() +
                  " sweep --families opt_frw --deltas 0.1 --T_list 2048 --metrics deviation --trials 300"
                  " --master_seed 42") == 0);
        GeneratorSpec s;
        s.family = Family::OptFRW;
        s.delta = 0.1;
        s.total_len = 2048;
        s.seed = derive_seed(42, {static_cast<std::uint64_t>(Family::OptFRW), std::bit_cast<std::uint64_t>(0.1),
                                  std::uint64_t{2048}});
        const std::uint64_t Ts[] = {2048};
        const auto row = deviation_stats(s, Ts, 300).rows.front();
        bool found = false;
        for (const auto& r : lines(d / "sweep.csv")) {
            if (r.find(",median_dev,") == std::string::npos) {
                continue;
            }
            std::stringstream ss(r);
            std::vector<std::string> f;
            for (std::string x; std::getline(ss, x, ',');) {
                f.push_back(x);
            }
            REQUIRE(f.size() == 8);
            CHECK(std::stod(f[4]) == row.median_dev);
            CHECK(std::stoull(f[7]) == s.seed);
            found = true;
        }
        CHECK(found);
    }

    TEST_CASE("output directory from the environment")
    {
        const auto d = fresh("env_dir");
        const std::string cmd = "FRACWALK_OUTPUT_DIR=" + d.string() + " " + FRACWALK_CLI +
                                " theta --alpha 0.2 > /dev/null 2>&1";
        CHECK(std::system(cmd.c_str()) == 0);
        CHECK(fs::exists(d / "theta.json"));
        CHECK(fs::exists(d / "theta.manifest.json"));
    }

    TEST_CASE("verify detects an FRW merge that ignores delta")
    {
        const auto ok = fresh("verify_ok"), bad = fresh("verify_bad");
        CHECK(run("--output_dir " + ok.string() + " verify --quick --only 4") == 0);
        CHECK(run("--output_dir " + bad.string() + " verify --quick --only 4 --inject_fault ignore_delta") == 1);
        const auto report = nlohmann::json::parse(slurp(bad / "verify.json"));
        CHECK(report.at("passed") == false);
        CHECK(report.at("criteria").at(0).at("id") == 4);
        CHECK(report.at("criteria").at(0).at("passed") == false);
    }
}
