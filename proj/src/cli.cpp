#include "cpx/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cpx/checks.hpp"
#include "cpx/errors.hpp"

namespace cpx {
namespace {

struct RawFlags {
    std::vector<std::string> methods{"gpdmm"};
    std::string problem = "synth-ls";
    std::optional<std::size_t> clients;
    std::size_t rows = 200;
    std::size_t dim = 20;
    std::vector<std::size_t> Ks{1};
    std::optional<double> eta;
    double eta_g = 1.0;
    std::optional<double> rho;
    std::optional<double> gamma;
    std::size_t rounds = 100;
    std::uint64_t seed = 0;
    std::string init = "z";
    std::string lambda_update = "average";
    std::optional<std::size_t> batch;
    std::string data_dir;
    std::string out = "out";
    std::size_t metrics_every = 1;
    bool theory_checks = false;
    double noise_std = 0.5;
    double regularizer = 0.0;
    double theta = 0.5;
    double phi = 0.5;
};

void add_run_flags(CLI::App* app, RawFlags& f) {
    app->add_option("--method", f.methods, "Method name(s), comma separated for sweeps")->delimiter(',');
    app->add_option("--problem", f.problem, "synth-ls | synth-softmax | mnist | fashion-mnist");
    app->add_option("--clients", f.clients, "Number of clients m");
    app->add_option("--rows", f.rows, "Samples per client (synthetic)");
    app->add_option("--dim", f.dim, "Parameter or feature dimension (synthetic)");
    app->add_option("--K", f.Ks, "Inner steps per round, comma separated for sweeps")->delimiter(',');
    app->add_option("--eta", f.eta, "Client step size");
    app->add_option("--eta-g", f.eta_g, "SCAFFOLD server step size");
    app->add_option("--rho", f.rho, "PDMM penalty (default 1/(K eta))");
    app->add_option("--gamma", f.gamma, "FedSplit penalty (default 1/rho)");
    app->add_option("--rounds", f.rounds, "Rounds R");
    app->add_option("--seed", f.seed, "Generator seed");
    app->add_option("--init", f.init, "Inexact FedSplit start: z | xs");
    app->add_option("--lambda-update", f.lambda_update, "GPDMM dual update: average | recent");
    app->add_option("--batch", f.batch, "Mini-batch size (softmax)");
    app->add_option("--data-dir", f.data_dir, "Directory with IDX files (fallback: CPX_DATA_DIR)");
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--metrics-every", f.metrics_every, "Metric stride in rounds");
    app->add_flag("--theory-checks", f.theory_checks, "Assert contraction and dual-sum invariants online");
    app->add_option("--noise-std", f.noise_std, "Synthetic LS noise standard deviation");
    app->add_option("--regularizer", f.regularizer, "Softmax L2 weight");
    app->add_option("--theta", f.theta, "Analysis parameter theta");
    app->add_option("--phi", f.phi, "Analysis parameter phi");
}

RunConfig to_config(const RawFlags& f) {
    RunConfig c;
    c.problem.kind = parse_problem(f.problem);
    const bool dataset = c.problem.kind == ProblemKind::mnist || c.problem.kind == ProblemKind::fashion_mnist;
    c.algo.method = parse_method(f.methods.front());
    c.algo.K = f.Ks.front();
    c.algo.eta = f.eta.value_or(dataset || c.problem.kind == ProblemKind::synth_softmax ? 0.05 : 1e-4);
    c.algo.eta_g = f.eta_g;
    c.algo.rho = f.rho;
    c.algo.gamma = f.gamma;
    c.algo.inexact_init = f.init == "z"    ? InexactInit::z_init
                          : f.init == "xs" ? InexactInit::xs_init
                                           : throw ConfigError("unknown init '" + f.init + "'");
    c.algo.lambda_update = f.lambda_update == "average"  ? LambdaUpdate::average
                           : f.lambda_update == "recent" ? LambdaUpdate::recent
                                                         : throw ConfigError("unknown lambda update '" + f.lambda_update + "'");
    c.problem.clients = f.clients.value_or(dataset ? 10 : (c.problem.kind == ProblemKind::synth_softmax ? 4 : 25));
    c.problem.rows = f.rows;
    c.problem.dim = f.dim;
    c.problem.noise_std = f.noise_std;
    c.problem.regularizer = f.regularizer;
    c.problem.batch = f.batch.value_or(dataset ? 300 : f.rows);
    c.problem.data_dir = f.data_dir;
    if (c.problem.data_dir.empty() && dataset) {
        if (const char* env = std::getenv("CPX_DATA_DIR")) c.problem.data_dir = env;
    }
    c.rounds = f.rounds;
    c.seed = f.seed;
    c.metrics_every = f.metrics_every;
    c.theory_checks = f.theory_checks;
    c.theta = f.theta;
    c.phi = f.phi;
    // Left unresolved so that sweeps derive rho from each cell's K.
    c.validate();
    return c;
}

// Splices `--key value` pairs from the config file in front of the command line for keys the
// command line does not set.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
            continue;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            continue;
        }
        out.push_back(args[i]);
    }
    if (path.empty()) return out;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto pairs = parse_config_file(ss.str());
    if (out.size() < 2) throw ConfigError("config file given without a subcommand");
    std::vector<std::string> extra;
    for (const auto& [k, v] : pairs) {
        const std::string flag = "--" + k;
        const bool on_cli = std::any_of(out.begin(), out.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (on_cli) continue;
        if (k == "theory-checks") {
            if (v == "true" || v == "1" || v == "on") extra.push_back(flag);
            continue;
        }
        extra.push_back(flag);
        extra.push_back(v);
    }
    out.insert(out.begin() + 2, extra.begin(), extra.end());
    return out;
}

int cmd_run(const RawFlags& f, std::ostream& out) {
    if (f.methods.size() != 1 || f.Ks.size() != 1) throw ConfigError("run takes exactly one --method and one --K");
    const RunConfig cfg = to_config(f);
    const RunResult r = run_experiment(cfg);
    write_run(f.out, r);
    out << method_name(cfg.algo.method) << " K=" << cfg.algo.K << " rounds=" << cfg.rounds << " final_gap=" << r.final_gap;
    if (r.final_accuracy) out << " accuracy=" << *r.final_accuracy;
    out << " -> " << f.out << "\n";
    return 0;
}

int cmd_sweep(const RawFlags& f, std::ostream& out) {
    std::vector<Method> methods;
    for (const auto& m : f.methods) methods.push_back(parse_method(m));
    const RunConfig base = to_config(f);
    const auto cells = run_sweep(base, methods, f.Ks, f.out);
    for (const auto& c : cells) {
        out << method_name(c.method) << " K=" << c.K << " final_gap=" << c.result.final_gap;
        if (c.result.final_accuracy) out << " accuracy=" << *c.result.final_accuracy;
        out << "\n";
    }
    out << "comparison -> " << (std::filesystem::path(f.out) / "comparison.csv").string() << "\n";
    return 0;
}

int cmd_verify(std::ostream& out) {
    std::vector<checks::CheckResult> results;
    const auto tl = checks::theorem1_and_lemma1({1, 2}, {0.5, 0.9}, {1, 3}, 200, 2);
    results.push_back(tl.lemma1);
    results.push_back(tl.theorem1);
    results.push_back({"dual_sum_invariant", tl.max_dual_sum_ratio <= 1e-9,
                       "max ratio " + std::to_string(tl.max_dual_sum_ratio)});
    results.push_back(checks::lemma3_fuzz(2, 1000));
    results.push_back(checks::theorem2(3, 0.5, 1, 2000).result);
    {
        const FederatedProblem q = checks::desk_ls(7);
        results.push_back(checks::k1_collapse(q, 0.5 / q.lipschitz, 200, 1e-12, "quadratic"));
        const FederatedProblem s = checks::desk_softmax(7);
        results.push_back(checks::k1_collapse(s, 0.5 / s.lipschitz, 200, 1e-12, "softmax"));
    }
    results.push_back(checks::pdmm_fedsplit_equivalence(10, 100, 1e-10));
    const auto pz = checks::polarization(1000);
    results.push_back(pz.standard);
    int failed = 0;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        if (!r.passed) ++failed;
    }
    out << "printed polarization reading " << (pz.max_err_printed <= 1e-13 ? "holds" : "does not hold")
        << " (max rel err " << pz.max_err_printed << ")\n";
    if (failed > 0) {
        out << failed << " check(s) failed\n";
        return 1;
    }
    return 0;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        std::replace(key.begin(), key.end(), '_', '-');
        if (val.size() >= 2 && (val.front() == '"' || val.front() == '\'') && val.back() == val.front()) {
            val = val.substr(1, val.size() - 2);
        }
        val.erase(std::remove(val.begin(), val.end(), ' '), val.end());
        out.emplace_back(key, val);
    }
    return out;
}

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Federated primal-dual optimization simulator"};
    app.require_subcommand(1);
    RawFlags run_flags;
    RawFlags sweep_flags;
    sweep_flags.out = "sweep";
    auto* run = app.add_subcommand("run", "Run one configuration and write trace.csv + summary.json");
    auto* sweep = app.add_subcommand("sweep", "Run every (method, K) pair");
    auto* verify = app.add_subcommand("verify", "Run the numeric theory checks on synthetic problems");
    add_run_flags(run, run_flags);
    add_run_flags(sweep, sweep_flags);
    (void)verify;

    try {
        std::vector<std::string> args = merge_config(args_in);
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        app.parse(static_cast<int>(argv.size()), argv.data());
        // Reject unknown names before any computation.
        for (const auto* f : {&run_flags, &sweep_flags}) {
            for (const auto& m : f->methods) parse_method(m);
            parse_problem(f->problem);
        }
        if (run->parsed()) return cmd_run(run_flags, out);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, out);
        return cmd_verify(out);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cpx
