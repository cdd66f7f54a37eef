#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "mixdyn/cli.hpp"
#include "mixdyn/config.hpp"

namespace fs = std::filesystem;
using namespace mixdyn;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "mixdyn");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "mixdyn-cli-test";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST_CASE("price prints a provenance header and one row per strike") {
    const auto r = run({"price", "--config", fixtures::data("eurusd_2003.json"), "--strikes", "1.0,1.07,1.2"});
    REQUIRE(r.code == cli::kExitPass);
    CHECK(r.out.rfind("# mixdyn " + cli::version() + " command=price config_hash=", 0) == 0);
    std::istringstream in(r.out);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++rows;
    CHECK(rows == 4);
}

TEST_CASE("input problems exit with status 2") {
    CHECK(run({"price", "--config", "/nonexistent.json", "--strikes", "1"}).code == cli::kExitInput);
    CHECK(run({"price", "--config", fixtures::data("eurusd_2003.json"), "--strikes", "1,x"}).code == cli::kExitInput);
    CHECK(run({"no-such-command"}).code == cli::kExitInput);
    CHECK(run({"simulate", "--config", fixtures::data("two_component.json"), "--dt", "0.3"}).code == cli::kExitInput);
    const auto bad = scratch("bad_table.csv");
    write(bad, "t,S_bar,0.80\n0,1.07,sixteen\n");
    const auto r = run({"reproduce-table2", "--table", bad.string(), "--paths", "100"});
    CHECK(r.code == cli::kExitInput);
    CHECK(r.err.find("mixdyn:") != std::string::npos);
}

TEST_CASE("help exits cleanly") { CHECK(run({"--help"}).code == cli::kExitPass); }

TEST_CASE("simulate output is byte-identical across runs and thread counts") {
    const auto cfg = fixtures::data("two_component.json");
    const auto a = run({"simulate", "--config", cfg, "--paths", "500", "--dt", "0.01", "--threads", "1"});
    const auto b = run({"simulate", "--config", cfg, "--paths", "500", "--dt", "0.01", "--threads", "3"});
    REQUIRE(a.code == cli::kExitPass);
    CHECK(a.out == b.out);
    const auto c = run({"simulate", "--config", cfg, "--paths", "500", "--dt", "0.01", "--seed", "5"});
    CHECK(c.out != a.out);
}

TEST_CASE("binary path dump") {
    const auto p = scratch("paths.bin");
    const auto r = run({"simulate", "--config", fixtures::data("two_component.json"), "--paths", "64", "--dt", "0.1",
                        "--thin", "1", "--engine", "uncertain-vol", "--format", "binary", "--out", p.string()});
    REQUIRE(r.code == cli::kExitPass);
    const auto bytes = read_text_file(p);
    REQUIRE(bytes.size() > 8);
    CHECK(bytes.substr(0, 8) == "MIXDYNP1");
    std::uint32_t header = 0;
    std::memcpy(&header, bytes.data() + 8, 4);
    const std::size_t body = 12 + header;
    std::uint64_t n_times = 0, n_paths = 0;
    std::uint32_t flags = 0;
    std::memcpy(&n_times, bytes.data() + body, 8);
    std::memcpy(&n_paths, bytes.data() + body + 8, 8);
    std::memcpy(&flags, bytes.data() + body + 16, 4);
    CHECK(n_times == 11);
    CHECK(n_paths == 64);
    CHECK(flags == 1);
    CHECK(bytes.size() == body + 20 + 8 * (n_times + 2 * n_times * n_paths) + 4 * n_paths);
}

TEST_CASE("calibrate writes a loadable model") {
    const auto q = scratch("quotes.csv");
    write(q, "T,K,implied_vol\n1,0.9,0.125\n1,0.95,0.112\n1,1.0,0.105\n1,1.05,0.108\n1,1.1,0.118\n");
    const auto out = scratch("fit.json");
    const auto r = run({"calibrate", "--quotes", q.string(), "--s0", "1", "--starts", "2", "--out", out.string()});
    REQUIRE(r.code == cli::kExitPass);
    const auto cfg = load_model_config(out);
    CHECK(cfg.spec.size() == 2);
}

TEST_CASE("verify reports single-component models as degenerate") {
    const auto p = scratch("gbm.json");
    write(p, R"({"s0": 1, "weights": [1], "vols": [0.2], "curve": {"flat": {"domestic": 0.01, "foreign": 0}}})");
    const auto r = run({"verify", "--config", p.string(), "--check", "terminal-corr", "--paths", "100"});
    CHECK(r.code == cli::kExitPass);
    CHECK(r.out.find("degenerate") != std::string::npos);
}
