#include "cpx/runtime.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "cpx/dataio.hpp"
#include "cpx/errors.hpp"
#include "cpx/kernels.hpp"

namespace cpx {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<ProblemKind, std::string_view>, 4> kProblems{{
    {ProblemKind::synth_ls, "synth-ls"},
    {ProblemKind::synth_softmax, "synth-softmax"},
    {ProblemKind::mnist, "mnist"},
    {ProblemKind::fashion_mnist, "fashion-mnist"},
}};

std::string_view init_name(InexactInit i) { return i == InexactInit::z_init ? "z" : "xs"; }
InexactInit parse_init(std::string_view s) {
    if (s == "z") return InexactInit::z_init;
    if (s == "xs") return InexactInit::xs_init;
    throw ConfigError("unknown init '" + std::string(s) + "' (expected z or xs)");
}
std::string_view update_name(LambdaUpdate u) { return u == LambdaUpdate::average ? "average" : "recent"; }
LambdaUpdate parse_update(std::string_view s) {
    if (s == "average") return LambdaUpdate::average;
    if (s == "recent") return LambdaUpdate::recent;
    throw ConfigError("unknown lambda update '" + std::string(s) + "' (expected average or recent)");
}

json to_json_value(const RunConfig& c) {
    json algo{{"method", method_name(c.algo.method)},
              {"eta", c.algo.eta},
              {"K", c.algo.K},
              {"rho", c.algo.rho ? json(*c.algo.rho) : json(nullptr)},
              {"gamma", c.algo.gamma ? json(*c.algo.gamma) : json(nullptr)},
              {"eta_g", c.algo.eta_g},
              {"inexact_init", init_name(c.algo.inexact_init)},
              {"lambda_update", update_name(c.algo.lambda_update)}};
    json prob{{"kind", problem_name(c.problem.kind)},
              {"clients", c.problem.clients},
              {"rows", c.problem.rows},
              {"dim", c.problem.dim},
              {"noise_std", c.problem.noise_std},
              {"batch", c.problem.batch},
              {"regularizer", c.problem.regularizer},
              {"data_dir", c.problem.data_dir}};
    return json{{"algo", algo},         {"problem", prob},           {"rounds", c.rounds},
                {"seed", c.seed},       {"metrics_every", c.metrics_every}, {"theory_checks", c.theory_checks},
                {"theta", c.theta},     {"phi", c.phi}};
}

RunConfig from_json_value(const json& j) {
    try {
        RunConfig c;
        const json& a = j.at("algo");
        c.algo.method = parse_method(a.at("method").get<std::string>());
        c.algo.eta = a.at("eta").get<double>();
        c.algo.K = a.at("K").get<std::size_t>();
        if (!a.at("rho").is_null()) c.algo.rho = a.at("rho").get<double>();
        if (!a.at("gamma").is_null()) c.algo.gamma = a.at("gamma").get<double>();
        c.algo.eta_g = a.at("eta_g").get<double>();
        c.algo.inexact_init = parse_init(a.at("inexact_init").get<std::string>());
        c.algo.lambda_update = parse_update(a.at("lambda_update").get<std::string>());
        const json& p = j.at("problem");
        c.problem.kind = parse_problem(p.at("kind").get<std::string>());
        c.problem.clients = p.at("clients").get<std::size_t>();
        c.problem.rows = p.at("rows").get<std::size_t>();
        c.problem.dim = p.at("dim").get<std::size_t>();
        c.problem.noise_std = p.at("noise_std").get<double>();
        c.problem.batch = p.at("batch").get<std::size_t>();
        c.problem.regularizer = p.at("regularizer").get<double>();
        c.problem.data_dir = p.at("data_dir").get<std::string>();
        c.rounds = j.at("rounds").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.metrics_every = j.at("metrics_every").get<std::size_t>();
        c.theory_checks = j.at("theory_checks").get<bool>();
        c.theta = j.at("theta").get<double>();
        c.phi = j.at("phi").get<double>();
        return c;
    } catch (const json::exception& e) {
        throw FormatError(std::string("run config JSON: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class E>
[[noreturn]] void rethrow_at(std::size_t round, const E& e) {
    throw E("round " + std::to_string(round) + ": " + e.what());
}

AlgoState step_with_round(const AlgoState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex,
                          std::size_t round) {
    try {
        return run_round(s, p, cfg, ex);
    } catch (const UnsupportedMethodError& e) {
        rethrow_at(round, e);
    } catch (const ConfigError& e) {
        rethrow_at(round, e);
    } catch (const InputError& e) {
        rethrow_at(round, e);
    } catch (const InternalError& e) {
        rethrow_at(round, e);
    } catch (const MisuseError& e) {
        rethrow_at(round, e);
    }
}

std::filesystem::path data_file(const std::string& dir, const char* name) {
    return std::filesystem::path(dir) / name;
}

}  // namespace

std::string_view problem_name(ProblemKind k) {
    for (const auto& [kk, v] : kProblems) {
        if (kk == k) return v;
    }
    throw InternalError("problem kind without a name");
}

ProblemKind parse_problem(std::string_view name) {
    for (const auto& [k, v] : kProblems) {
        if (v == name) return k;
    }
    throw ConfigError("unknown problem '" + std::string(name) + "'");
}

RunConfig RunConfig::resolved() const {
    RunConfig c = *this;
    c.algo = algo.resolved();
    return c;
}

void RunConfig::validate() const {
    algo.validate();
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (metrics_every < 1) throw ConfigError("metrics_every must be at least 1");
    if (problem.clients < 1) throw ConfigError("clients must be at least 1");
    if (problem.kind == ProblemKind::synth_ls || problem.kind == ProblemKind::synth_softmax) {
        if (problem.rows < 1 || problem.dim < 1) throw ConfigError("rows and dim must be positive");
    }
    if (problem.noise_std < 0.0) throw ConfigError("noise_std must be nonnegative");
    if (problem.regularizer < 0.0) throw ConfigError("regularizer must be nonnegative");
    if (!(theta > 0.0 && theta < 1.0) || !(phi > 0.0 && phi < 1.0)) throw ConfigError("theta and phi must lie in (0,1)");
}

Traffic account_traffic(Method method, std::size_t m, std::size_t /*d*/, std::size_t /*K*/) {
    switch (method) {
        case Method::agpdmm:
        case Method::agpdmm_variant: return {2 * m, m};
        case Method::scaffold: return {2 * m, 2 * m};
        default: return {m, m};
    }
}

void TrafficLedger::add(const Traffic& t, std::size_t d) {
    down_vectors += t.down;
    up_vectors += t.up;
    down_bytes += t.down * d * sizeof(double);
    up_bytes += t.up * d * sizeof(double);
}

FederatedProblem build_problem(const RunConfig& cfg) {
    const ProblemSpec& ps = cfg.problem;
    switch (ps.kind) {
        case ProblemKind::synth_ls:
            return gen_synthetic_ls({ps.clients, ps.rows, ps.dim, ps.noise_std, cfg.seed}).problem;
        case ProblemKind::synth_softmax: {
            SyntheticSoftmaxSpec s;
            s.m = ps.clients;
            s.samples = ps.rows;
            s.features = ps.dim;
            s.batch = ps.batch;
            s.regularizer = ps.regularizer;
            s.seed = cfg.seed;
            return gen_synthetic_softmax(s);
        }
        case ProblemKind::mnist:
        case ProblemKind::fashion_mnist: {
            if (ps.data_dir.empty()) throw ConfigError("dataset problems need --data-dir or CPX_DATA_DIR");
            const IdxImageSet train = load_idx(data_file(ps.data_dir, "train-images-idx3-ubyte"),
                                               data_file(ps.data_dir, "train-labels-idx1-ubyte"));
            std::vector<ClientObjective> clients;
            for (auto& obj : partition_by_class(train, ps.clients, ps.batch, ps.regularizer)) clients.emplace_back(std::move(obj));
            FederatedProblem p = make_problem(std::move(clients));
            const auto ti = data_file(ps.data_dir, "t10k-images-idx3-ubyte");
            const auto tl = data_file(ps.data_dir, "t10k-labels-idx1-ubyte");
            if (std::filesystem::exists(ti) && std::filesystem::exists(tl)) {
                const IdxImageSet test = load_idx(ti, tl);
                p.validation = ValidationSet{test.all_features(), test.labels, static_cast<int>(ps.clients)};
            }
            return p;
        }
    }
    throw InternalError("unhandled problem kind");
}

RunResult run_experiment(const RunConfig& cfg) {
    const RunConfig rc = cfg.resolved();
    rc.validate();
    const FederatedProblem p = build_problem(rc);
    return run_experiment(rc, p);
}

RunResult run_experiment(const RunConfig& cfg, const FederatedProblem& p, const RunOptions& opts) {
    RunResult res;
    res.config = cfg.resolved();
    const RunConfig& rc = res.config;
    rc.validate();
    const AlgoConfig& algo = rc.algo;
    const std::size_t m = p.size();
    const std::size_t d = p.dim();

    if (algo.method != Method::pdmm_exact && algo.method != Method::fedsplit && 1.0 / algo.eta < p.lipschitz) {
        std::cerr << "warning: 1/eta = " << 1.0 / algo.eta << " is below L = " << p.lipschitz << "\n";
    }

    res.optimum_certified = p.optimum.has_value();
    bool track_q = rc.theory_checks && p.optimum && p.all_quadratic() && p.modulus > 0.0 &&
                   algo.method == Method::gpdmm && algo.lambda_update == LambdaUpdate::average;
    if (track_q) {
        try {
            res.rate = rate_params(algo.eta, algo.rho_value(), p.lipschitz, p.modulus, rc.theta, rc.phi);
        } catch (const ConstraintError& e) {
            std::cerr << "warning: contraction check skipped: " << e.what() << "\n";
            track_q = false;
        }
    }

    const Traffic per_round = account_traffic(algo.method, m, d, algo.K);
    AlgoState state = init_state(algo.method, p);
    std::optional<double> prev_q;
    RoundInfo info;

    for (std::size_t r = 1; r <= rc.rounds; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const bool want_info = track_q || static_cast<bool>(opts.on_round);
        AlgoState next = step_with_round(state, p, algo, {want_info ? &info : nullptr, opts.observer}, r);
        const auto t1 = std::chrono::steady_clock::now();
        res.traffic.add(per_round, d);

        std::optional<double> q;
        if (track_q) {
            const auto& st = std::get<PdmmState>(next);
            q = lyapunov_Q(info.start, info.xbar, st.lambda_c, *p.optimum, algo.eta, algo.rho_value(), algo.K, rc.theta,
                           p.modulus, res.rate->gamma2)
                    .Q;
            if (prev_q) {
                // Ratios of roundoff-level values carry no information.
                if (*prev_q > 1e-20) res.max_ratio = std::max(res.max_ratio.value_or(0.0), *q / *prev_q);
                if (*q > res.rate->beta * *prev_q + 1e-12) {
                    throw TheoryCheckError("round " + std::to_string(r) + ": Q = " + fmt(*q) + " exceeds beta * Q_prev = " +
                                           fmt(res.rate->beta * *prev_q));
                }
            }
            prev_q = q;
        }
        if (const auto dsr = server_dual_sum_ratio(next, algo)) {
            const double ratio = *dsr;
            res.max_dual_sum_ratio = std::max(res.max_dual_sum_ratio, ratio);
            if (rc.theory_checks && ratio > 1e-9) {
                throw TheoryCheckError("round " + std::to_string(r) + ": server dual sum ratio " + fmt(ratio));
            }
        }
        state = std::move(next);
        if (opts.keep_xs_history) res.xs_history.push_back(server_iterate(state));
        if (opts.on_round) opts.on_round(r, state, info);

        if (r % rc.metrics_every == 0 || r == rc.rounds) {
            RoundTrace t;
            t.round = r;
            const Vector& xs = server_iterate(state);
            const double f = global_value(p, xs);
            t.gap = p.optimum ? f - p.optimum->f_star : f;
            const KktView view = kkt_view(state, p, algo);
            t.kkt = kkt_residual(xs, view.x, view.lambda, p);
            t.Q = q;
            t.down_vecs = per_round.down;
            t.up_vecs = per_round.up;
            t.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            res.trace.push_back(t);
        }
    }
    res.final_gap = res.trace.empty() ? 0.0 : res.trace.back().gap;
    if (p.validation) res.final_accuracy = accuracy(*p.validation, server_iterate(state));
    res.final_state = std::move(state);
    return res;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<RoundTrace>& trace) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << "round,gap,kkt_grad,kkt_cons,kkt_dual,Q,down_vecs,up_vecs,wall_ns\n";
    for (const auto& t : trace) {
        out << t.round << ',' << fmt(t.gap) << ',' << fmt(t.kkt.grad) << ',' << fmt(t.kkt.consensus) << ','
            << fmt(t.kkt.dual_sum) << ',' << (t.Q ? fmt(*t.Q) : std::string()) << ',' << t.down_vecs << ','
            << t.up_vecs << ',' << t.wall_ns << '\n';
    }
}

std::vector<RoundTrace> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "round,gap,kkt_grad,kkt_cons,kkt_dual,Q,down_vecs,up_vecs,wall_ns") {
        throw FormatError(path.string() + ": unexpected header");
    }
    std::vector<RoundTrace> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 9) throw FormatError(path.string() + ": row with " + std::to_string(f.size()) + " fields");
        RoundTrace t;
        t.round = std::stoull(f[0]);
        t.gap = std::stod(f[1]);
        t.kkt = {std::stod(f[2]), std::stod(f[3]), std::stod(f[4])};
        if (!f[5].empty()) t.Q = std::stod(f[5]);
        t.down_vecs = std::stoull(f[6]);
        t.up_vecs = std::stoull(f[7]);
        t.wall_ns = std::stoll(f[8]);
        out.push_back(t);
    }
    return out;
}

std::string config_to_json(const RunConfig& cfg) { return to_json_value(cfg).dump(2); }

RunConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("run config JSON: ") + e.what());
    }
    return from_json_value(j);
}

std::string summary_json(const RunResult& r) {
    json j;
    j["config"] = to_json_value(r.config);
    j["rounds_run"] = r.trace.empty() ? 0 : r.trace.back().round;
    j["final_gap"] = r.final_gap;
    j["optimum_certified"] = r.optimum_certified;
    j["final_accuracy"] = r.final_accuracy ? json(*r.final_accuracy) : json(nullptr);
    j["traffic"] = {{"down_vectors", r.traffic.down_vectors},
                    {"up_vectors", r.traffic.up_vectors},
                    {"down_bytes", r.traffic.down_bytes},
                    {"up_bytes", r.traffic.up_bytes}};
    if (r.rate) {
        j["rate"] = {{"theta", r.rate->theta}, {"phi", r.rate->phi},     {"gamma1", r.rate->gamma1},
                     {"gamma2", r.rate->gamma2}, {"beta", r.rate->beta},
                     {"max_observed_ratio", r.max_ratio ? json(*r.max_ratio) : json(nullptr)}};
    }
    j["max_dual_sum_ratio"] = r.max_dual_sum_ratio;
    j["kernels"] = kernels::isa_name(kernels::active().isa);
    return j.dump(2);
}

RunConfig config_from_summary(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("summary JSON: ") + e.what());
    }
    if (!j.contains("config")) throw FormatError("summary JSON has no config");
    return from_json_value(j["config"]);
}

void write_run(const std::filesystem::path& dir, const RunResult& r) {
    std::filesystem::create_directories(dir);
    write_trace_csv(dir / "trace.csv", r.trace);
    std::ofstream out(dir / "summary.json");
    if (!out) throw InputError("cannot write " + (dir / "summary.json").string());
    out << summary_json(r) << '\n';
}

std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<Method>& methods,
                                 const std::vector<std::size_t>& Ks, const std::filesystem::path& dir) {
    if (methods.empty() || Ks.empty()) throw ConfigError("sweep needs at least one method and one K");
    base.validate();
    const FederatedProblem p = build_problem(base);
    std::vector<SweepCell> cells;
    for (Method m : methods) {
        for (std::size_t K : Ks) {
            RunConfig c = base;
            c.algo.method = m;
            c.algo.K = K;
            RunResult r = run_experiment(c, p);
            const std::string name = std::string(method_name(m)) + "_K" + std::to_string(K);
            write_run(dir / name, r);
            cells.push_back({m, K, std::move(r)});
        }
    }
    std::ofstream out(dir / "comparison.csv");
    if (!out) throw InputError("cannot write comparison.csv");
    out << "round";
    for (const auto& c : cells) out << ',' << method_name(c.method) << "_K" << c.K;
    out << '\n';
    const std::size_t rows = cells.front().result.trace.size();
    for (std::size_t i = 0; i < rows; ++i) {
        out << cells.front().result.trace[i].round;
        for (const auto& c : cells) out << ',' << fmt(c.result.trace[i].gap);
        out << '\n';
    }
    return cells;
}

}  // namespace cpx
