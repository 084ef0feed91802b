#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cpx/cli.hpp"
#include "cpx/errors.hpp"
#include "cpx/runtime.hpp"

using namespace cpx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cpx");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "cpx_test_cli" / name;
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("run writes a 500-row trace and records the default rho") {
    const fs::path out = scratch("run");
    const Outcome o = cli({"run", "--method", "gpdmm", "--problem", "synth-ls", "--clients", "25", "--K", "5", "--eta",
                           "1e-4", "--rounds", "500", "--seed", "7", "--out", out.string()});
    REQUIRE(o.code == 0);
    CHECK(lines(slurp(out / "trace.csv")) == 501);
    const auto j = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(j["config"]["algo"]["rho"].get<double>() == doctest::Approx(2000.0));
    CHECK(j["config"]["seed"].get<int>() == 7);
    // The echoed config reparses to the same RunConfig.
    const RunConfig c = config_from_summary(slurp(out / "summary.json"));
    CHECK(nlohmann::json::parse(config_to_json(c)) == j["config"]);
    CHECK(c.algo.K == 5);
}

TEST_CASE("usage errors exit 2 with a reason") {
    Outcome o = cli({"run", "--method", "nadam"});
    CHECK(o.code == 2);
    CHECK(o.err.find("unknown method") != std::string::npos);
    CHECK(lines(o.err) == 1);
    o = cli({"run", "--bogus-flag", "1"});
    CHECK(o.code == 2);
    o = cli({"run", "--problem", "cifar"});
    CHECK(o.code == 2);
    o = cli({"run", "--K", "0"});
    CHECK(o.code == 2);
    o = cli({"run", "--init", "maybe"});
    CHECK(o.code == 2);
    o = cli({});
    CHECK(o.code == 2);
    o = cli({"sweep", "--method", "gpdmm,nadam", "--out", scratch("never").string()});
    CHECK(o.code == 2);
    CHECK_FALSE(fs::exists(scratch("never")));
}

TEST_CASE("missing dataset is a runtime failure") {
    const Outcome o = cli({"run", "--problem", "mnist", "--data-dir", "/nonexistent/cpx", "--rounds", "1", "--out",
                           scratch("nodata").string()});
    CHECK(o.code == 1);
}

TEST_CASE("config file with flag override") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "run.cfg");
        f << "# experiment\nmethod = agpdmm\nK = 3\neta = 2e-4\nrounds = 12\nlambda_update = recent\ntheory-checks = true\n";
    }
    const Outcome o = cli({"run", "--config", (dir / "run.cfg").string(), "--rounds", "9", "--out", (dir / "o").string()});
    REQUIRE(o.code == 0);
    const RunConfig c = config_from_summary(slurp(dir / "o" / "summary.json"));
    CHECK(c.algo.method == Method::agpdmm);
    CHECK(c.algo.K == 3);
    CHECK(c.algo.eta == doctest::Approx(2e-4));
    CHECK(c.algo.lambda_update == LambdaUpdate::recent);
    CHECK(c.rounds == 9);
    CHECK(c.theory_checks);
    CHECK(lines(slurp(dir / "o" / "trace.csv")) == 10);

    const auto pairs = parse_config_file("a_b = \"x, y\"  # c\n\n  k=v\n");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].first == "a-b");
    CHECK(pairs[0].second == "x,y");
    CHECK_THROWS_AS(parse_config_file("novalue\n"), ConfigError);
    CHECK(cli({"run", "--config", (dir / "absent.cfg").string()}).code == 2);
}

TEST_CASE("sweep produces every cell") {
    const fs::path out = scratch("sweep");
    const Outcome o = cli({"sweep", "--method", "gpdmm,agpdmm,scaffold", "--K", "1,2", "--rounds", "5", "--clients", "4",
                           "--rows", "20", "--dim", "3", "--out", out.string()});
    REQUIRE(o.code == 0);
    for (const char* cell : {"gpdmm_K1", "gpdmm_K2", "agpdmm_K1", "agpdmm_K2", "scaffold_K1", "scaffold_K2"})
        CHECK(fs::exists(out / cell / "trace.csv"));
    const std::string cmp = slurp(out / "comparison.csv");
    CHECK(cmp.rfind("round,gpdmm_K1,gpdmm_K2,agpdmm_K1", 0) == 0);
    CHECK(lines(cmp) == 6);
    const RunConfig k2 = config_from_summary(slurp(out / "gpdmm_K2" / "summary.json"));
    CHECK(*k2.algo.rho == doctest::Approx(1.0 / (2 * k2.algo.eta)));
}

TEST_CASE("verify passes and lists each check") {
    const Outcome o = cli({"verify"});
    CHECK(o.code == 0);
    CHECK(o.out.find("PASS theorem1_contraction") != std::string::npos);
    CHECK(o.out.find("FAIL") == std::string::npos);
}

TEST_CASE("help exits 0") { CHECK(cli({"--help"}).code == 0); }
