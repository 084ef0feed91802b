#pragma once
// Reusable numeric experiments shared by `cpx verify` and the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include "cpx/algorithms.hpp"
#include "cpx/dataio.hpp"

namespace cpx::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// m=25, n=200, d=20 least squares.
FederatedProblem desk_ls(std::uint64_t seed);
/// m=25, n=10, d=20: every client is rank deficient, so mu = 0.
FederatedProblem flat_ls(std::uint64_t seed);
/// Small regularized softmax problem with mini-batches.
FederatedProblem desk_softmax(std::uint64_t seed);

/// x_s history of `rounds` rounds.
std::vector<Vector> xs_trace(const FederatedProblem& p, const AlgoConfig& cfg, std::size_t rounds);

/// FedAve, AGPDMM (rho = 1/eta) and SCAFFOLD (eta_g = 1) with K = 1 agree to `tol` every round.
CheckResult k1_collapse(const FederatedProblem& p, double eta, std::size_t rounds, double tol, const std::string& label);

/// Exact PDMM and FedSplit (rho = 1/gamma) x_s traces agree to `tol` on `problems` random quadratics.
CheckResult pdmm_fedsplit_equivalence(std::size_t problems, std::size_t rounds, double tol);

struct ContractionReport {
    CheckResult theorem1;
    CheckResult lemma1;
    double worst_ratio_over_beta = 0.0;
    double min_slack = 0.0;
    double max_dual_sum_ratio = 0.0;
};

/// GPDMM (average update) on desk LS for each seed, eta factor (times 1/L) and K; checks
/// Q^{r+1} <= beta Q^r + 1e-12 and the per-step inequality at `probes` random points per inner step.
ContractionReport theorem1_and_lemma1(const std::vector<std::uint64_t>& seeds, const std::vector<double>& eta_factors,
                                      const std::vector<std::size_t>& Ks, std::size_t rounds, std::size_t probes);

/// lemma3_gap >= -1e-9 over `draws` random client configurations on each of `problems` problems.
CheckResult lemma3_fuzz(std::size_t problems, std::size_t draws);

struct SublinearReport {
    CheckResult result;
    double relative_slope = 0.0;
    double bound = 0.0;
    double tail_max = 0.0;
    double first = 0.0;
    double last = 0.0;
    double max_jensen_increase = 0.0;
    double max_jensen_violation = 0.0;  // gap(average) - mean of per-round gaps, <= 0 by convexity
};
/// GPDMM on flat LS for R rounds; R-scaled combined gap series.
SublinearReport theorem2(std::uint64_t seed, double eta_factor, std::size_t K, std::size_t R);

struct PolarizationReport {
    CheckResult standard;
    double max_err_standard = 0.0;
    double max_err_printed = 0.0;
};
PolarizationReport polarization(std::size_t draws);

}  // namespace cpx::checks
