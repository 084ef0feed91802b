#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpx/errors.hpp"
#include "cpx/runtime.hpp"

using namespace cpx;
namespace fs = std::filesystem;

namespace {

RunConfig small_cfg(Method m, std::size_t rounds) {
    RunConfig c;
    c.algo.method = m;
    c.algo.eta = 1e-3;
    c.algo.K = 2;
    c.problem.clients = 5;
    c.problem.rows = 30;
    c.problem.dim = 4;
    c.rounds = rounds;
    c.seed = 3;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("traffic closed forms") {
    CHECK(account_traffic(Method::gpdmm, 25, 20, 5) == Traffic{25, 25});
    CHECK(account_traffic(Method::agpdmm, 25, 20, 5) == Traffic{50, 25});
    CHECK(account_traffic(Method::agpdmm_variant, 25, 20, 5) == Traffic{50, 25});
    CHECK(account_traffic(Method::scaffold, 25, 20, 5) == Traffic{50, 50});
    for (Method m : {Method::fedave, Method::pdmm_exact, Method::fedsplit, Method::fedsplit_inexact})
        CHECK(account_traffic(m, 7, 3, 1) == Traffic{7, 7});
}

TEST_CASE("run produces one row per round and a consistent ledger") {
    for (Method m : all_methods()) {
        CAPTURE(method_name(m));
        const RunResult r = run_experiment(small_cfg(m, 100));
        CHECK(r.trace.size() == 100);
        CHECK(r.optimum_certified);
        const Traffic t = account_traffic(m, 5, 4, 2);
        CHECK(r.traffic.down_vectors == 100 * t.down);
        CHECK(r.traffic.up_vectors == 100 * t.up);
        CHECK(r.traffic.down_bytes == 100 * t.down * 4 * 8);
        CHECK(r.traffic.up_bytes == 100 * t.up * 4 * 8);
        for (const auto& row : r.trace) {
            CHECK(row.gap >= -1e-9);
            CHECK(row.down_vecs == t.down);
        }
        if (is_pdmm_family(m)) CHECK(r.max_dual_sum_ratio <= 1e-9);
    }
}

TEST_CASE("metrics stride and determinism") {
    RunConfig c = small_cfg(Method::gpdmm, 100);
    c.metrics_every = 7;
    const RunResult a = run_experiment(c);
    CHECK(a.trace.size() == 15);  // 7, 14, ..., 98, plus the last round
    CHECK(a.trace.back().round == 100);
    const RunResult b = run_experiment(c);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].gap == b.trace[i].gap);
        CHECK(a.trace[i].kkt.grad == b.trace[i].kkt.grad);
    }
    CHECK(server_iterate(a.final_state) == server_iterate(b.final_state));
}

TEST_CASE("GPDMM on the desk problem drops the gap by three orders") {
    RunConfig c;
    c.algo.method = Method::gpdmm;
    c.algo.K = 5;
    c.rounds = 500;
    c.seed = 1;
    const FederatedProblem p = build_problem(c);
    c.algo.eta = 1e-2 / p.lipschitz;
    const RunResult r = run_experiment(c, p);
    CHECK(r.trace[499].gap * 1e3 <= r.trace[49].gap);
}

TEST_CASE("theory checks track Q within the contraction factor") {
    RunConfig c;
    c.algo.method = Method::gpdmm;
    c.algo.K = 3;
    c.rounds = 150;
    c.seed = 2;
    c.theory_checks = true;
    const FederatedProblem p = build_problem(c);
    c.algo.eta = 0.5 / p.lipschitz;
    const RunResult r = run_experiment(c, p);
    REQUIRE(r.rate);
    REQUIRE(r.trace.front().Q);
    CHECK(r.rate->beta < 1.0);
    CHECK(*r.max_ratio <= r.rate->beta + 1e-12);
}

TEST_CASE("kernel errors carry the round index") {
    RunConfig c = small_cfg(Method::pdmm_exact, 3);
    c.problem.kind = ProblemKind::synth_softmax;
    c.problem.clients = 4;
    c.problem.rows = 20;
    c.problem.batch = 10;
    CHECK_THROWS_WITH(run_experiment(c), doctest::Contains("round 1"));
}

TEST_CASE("dataset problem without files fails cleanly") {
    RunConfig c = small_cfg(Method::gpdmm, 1);
    c.problem.kind = ProblemKind::mnist;
    c.problem.data_dir = "/nonexistent/cpx";
    c.problem.clients = 10;
    CHECK_THROWS_AS(run_experiment(c), InputError);
}

TEST_CASE("CSV and JSON round trips") {
    RunConfig c = small_cfg(Method::gpdmm, 20);
    c.theory_checks = true;
    c.algo.eta = 0.05;
    const RunResult r = run_experiment(c);
    const fs::path dir = fs::temp_directory_path() / "cpx_test_runtime";
    write_run(dir, r);
    const auto back = read_trace_csv(dir / "trace.csv");
    REQUIRE(back.size() == r.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].round == r.trace[i].round);
        CHECK(back[i].gap == r.trace[i].gap);
        CHECK(back[i].kkt.dual_sum == r.trace[i].kkt.dual_sum);
        CHECK(back[i].Q == r.trace[i].Q);
        CHECK(back[i].wall_ns == r.trace[i].wall_ns);
    }
    const std::string header = slurp(dir / "trace.csv");
    CHECK(header.rfind("round,gap,kkt_grad,kkt_cons,kkt_dual,Q,down_vecs,up_vecs,wall_ns", 0) == 0);

    CHECK(config_from_json(config_to_json(r.config)) == r.config);
    CHECK(config_from_summary(slurp(dir / "summary.json")) == r.config);
    CHECK(config_from_summary(summary_json(r)) == c.resolved());
}

TEST_CASE("default rho is recorded") {
    RunConfig c = small_cfg(Method::gpdmm, 2);
    c.algo.K = 5;
    c.algo.eta = 1e-4;
    const RunResult r = run_experiment(c);
    REQUIRE(r.config.algo.rho);
    CHECK(*r.config.algo.rho == doctest::Approx(2000.0));
}

TEST_CASE("sweep writes one directory per cell and a comparison table") {
    RunConfig base = small_cfg(Method::gpdmm, 10);
    const fs::path dir = fs::temp_directory_path() / "cpx_test_sweep";
    fs::remove_all(dir);
    const auto cells = run_sweep(base, {Method::gpdmm, Method::scaffold}, {1, 3}, dir);
    CHECK(cells.size() == 4);
    CHECK(fs::exists(dir / "gpdmm_K1" / "trace.csv"));
    CHECK(fs::exists(dir / "scaffold_K3" / "summary.json"));
    const std::string cmp = slurp(dir / "comparison.csv");
    CHECK(std::count(cmp.begin(), cmp.end(), '\n') == 11);  // header + 10 rounds
    // rho follows each cell's K
    CHECK(*cells[1].result.config.algo.rho == doctest::Approx(1.0 / (3 * 1e-3)));
}
