#pragma once
// Experiment driver: builds problems, runs rounds, records metrics and traffic, persists traces.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpx/algorithms.hpp"
#include "cpx/theory.hpp"

namespace cpx {

enum class ProblemKind { synth_ls, synth_softmax, mnist, fashion_mnist };

std::string_view problem_name(ProblemKind k);
ProblemKind parse_problem(std::string_view name);

struct ProblemSpec {
    ProblemKind kind = ProblemKind::synth_ls;
    std::size_t clients = 25;
    std::size_t rows = 200;  // samples per client for synthetic problems
    std::size_t dim = 20;    // parameter (LS) or feature (softmax) dimension
    double noise_std = 0.5;
    std::size_t batch = 300;
    double regularizer = 0.0;
    std::string data_dir;

    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

struct RunConfig {
    AlgoConfig algo;
    ProblemSpec problem;
    std::size_t rounds = 100;
    std::uint64_t seed = 0;
    std::size_t metrics_every = 1;
    bool theory_checks = false;
    double theta = 0.5;
    double phi = 0.5;

    /// Algorithm defaults filled in.
    [[nodiscard]] RunConfig resolved() const;
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct RoundTrace {
    std::size_t round = 0;
    double gap = 0.0;
    KktResidual kkt;
    std::optional<double> Q;
    std::size_t down_vecs = 0;
    std::size_t up_vecs = 0;
    std::int64_t wall_ns = 0;
};

/// (down, up) counts of d-dimensional payloads exchanged in one round.
struct Traffic {
    std::size_t down = 0;
    std::size_t up = 0;
    friend bool operator==(const Traffic&, const Traffic&) = default;
};
Traffic account_traffic(Method method, std::size_t m, std::size_t d, std::size_t K);

struct TrafficLedger {
    std::size_t down_vectors = 0;
    std::size_t up_vectors = 0;
    std::size_t down_bytes = 0;
    std::size_t up_bytes = 0;
    void add(const Traffic& t, std::size_t d);
};

struct RunResult {
    RunConfig config;  // resolved
    AlgoState final_state;
    std::vector<RoundTrace> trace;
    TrafficLedger traffic;
    double final_gap = 0.0;
    bool optimum_certified = false;
    std::optional<double> final_accuracy;
    std::optional<RateParams> rate;
    std::optional<double> max_ratio;     // largest observed Q^{r+1}/Q^r
    double max_dual_sum_ratio = 0.0;     // ||sum lambda_s|| / (1 + max ||lambda_s||), PDMM family
    std::vector<Vector> xs_history;      // x_s after every round when requested
};

struct RunOptions {
    bool keep_xs_history = false;
    /// Called after every round with the round index, the state, and that round's by-products.
    std::function<void(std::size_t, const AlgoState&, const RoundInfo&)> on_round;
    const InnerObserver* observer = nullptr;
};

/// Builds the problem a config describes. Synthetic problems carry a certified optimum.
FederatedProblem build_problem(const RunConfig& cfg);

RunResult run_experiment(const RunConfig& cfg);
RunResult run_experiment(const RunConfig& cfg, const FederatedProblem& problem, const RunOptions& opts = {});

void write_trace_csv(const std::filesystem::path& path, const std::vector<RoundTrace>& trace);
std::vector<RoundTrace> read_trace_csv(const std::filesystem::path& path);

std::string config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const std::string& text);
std::string summary_json(const RunResult& r);
/// Parses the embedded config back out of a summary document.
RunConfig config_from_summary(const std::string& text);

/// Writes trace.csv and summary.json into `dir`.
void write_run(const std::filesystem::path& dir, const RunResult& r);

struct SweepCell {
    Method method;
    std::size_t K;
    RunResult result;
};

/// One run per (method, K); each in dir/<method>_K<k>/, plus dir/comparison.csv.
std::vector<SweepCell> run_sweep(const RunConfig& base, const std::vector<Method>& methods,
                                 const std::vector<std::size_t>& Ks, const std::filesystem::path& dir);

}  // namespace cpx
