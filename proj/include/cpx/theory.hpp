#pragma once
// Numeric checkers for optimality conditions and the GPDMM convergence certificates.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "cpx/algorithms.hpp"
#include "cpx/objectives.hpp"

namespace cpx {

struct KktResidual {
    double grad = 0.0;       // max_i ||grad f_i(x_i) - lambda_i||
    double consensus = 0.0;  // max_i ||x_i - x_s||
    double dual_sum = 0.0;   // ||sum_i lambda_i||
};

KktResidual kkt_residual(ConstSpan x_s, const std::vector<Vector>& clients_x, const std::vector<Vector>& lambdas,
                         const FederatedProblem& p);

/// Client iterates and the multiplier estimate each method implies for its clients.
struct KktView {
    std::vector<Vector> x;
    std::vector<Vector> lambda;
};
KktView kkt_view(const AlgoState& s, const FederatedProblem& p, const AlgoConfig& cfg);

/// ||sum_i lambda_{s|i}|| / (1 + max_i ||lambda_{s|i}||) for states that carry server duals.
/// FedSplit states are read through lambda = (x_s - z_{s|i}) / gamma. Empty for other methods.
std::optional<double> server_dual_sum_ratio(const AlgoState& s, const AlgoConfig& cfg);

struct RateParams {
    double theta = 0.5;
    double phi = 0.5;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double beta = 0.0;
};

/// min((1-theta)/(2 L eta^2), (1/eta - L)/2)
double gamma1_value(double eta, double L, double theta);

/// Throws ConstraintError naming the violated inequality.
RateParams rate_params(double eta, double rho, double L, double mu, double theta = 0.5, double phi = 0.5);

struct LyapunovSample {
    std::size_t round = 0;
    double Q = 0.0;
    std::vector<double> primal;  // per client
    std::vector<double> mixed;   // per client
};

LyapunovSample lyapunov_Q(const std::vector<Vector>& prev_clients_xK, const std::vector<Vector>& xbar,
                          const std::vector<Vector>& lambda_next, const Optimum& opt, double eta, double rho,
                          std::size_t K, double theta, double mu, double gamma2);

/// LHS - RHS of the per-step primal inequality at `x_probe`. Throws MisuseError when x_rk1 is not
/// the exact inner step from x_rk and ConstraintError when 1/eta < L.
double check_lemma1(const ClientObjective& f, ConstSpan x_probe, ConstSpan x_rk, ConstSpan x_rk1, ConstSpan x_s,
                    ConstSpan lambda_si, double eta, double rho, double theta, double mu, double L);

/// sum_i [f_i(x_i) - f_i(x*) - x_i^T lambda*_i]
double lemma3_gap(const std::vector<Vector>& clients_x, const Optimum& opt, const FederatedProblem& p);

/// Running averages of x-bar and lambda_{i|s} for the R-scaled combined gap.
class SublinearAccumulator {
public:
    SublinearAccumulator(const FederatedProblem& p, const Optimum& opt, double gamma1, double eta);
    /// Adds round R's x-bar_i and lambda_{i|s}^{R+1}; returns R times the combined gap.
    double add(const std::vector<Vector>& xbar, const std::vector<Vector>& lambda_next);
    [[nodiscard]] std::size_t rounds() const { return rounds_; }
    /// Combined gap of the current averages (not scaled by R).
    [[nodiscard]] double combined_gap() const;

private:
    const FederatedProblem& p_;
    const Optimum& opt_;
    double weight_;
    std::size_t rounds_ = 0;
    std::vector<Vector> sum_x_;
    std::vector<Vector> sum_l_;
};

struct SublinearPoint {
    std::size_t R;
    double scaled_gap;
};

std::vector<SublinearPoint> sublinear_certificate(const std::vector<std::vector<Vector>>& xbar_trace,
                                                  const std::vector<std::vector<Vector>>& lambda_trace,
                                                  const FederatedProblem& p, const Optimum& opt, double gamma1,
                                                  double eta);

struct SublinearVerdict {
    double relative_slope = 0.0;  // LS slope over the second half, times its length, over its mean
    double bound = 0.0;           // max over the first quarter
    double tail_max = 0.0;        // max over the second half
    bool bounded = false;
};
SublinearVerdict assess_sublinear(const std::vector<SublinearPoint>& series, double slope_tol = 1e-3);

struct Polarization {
    double lhs = 0.0;           // (y1 - y2)^T (y3 - y4)
    double rhs_printed = 0.0;   // 1/2(|y1+y3|^2 - |y2+y4|^2 - |y2+y3|^2 + |y2+y4|^2)
    double rhs_standard = 0.0;  // 1/2(|y1+y3|^2 - |y1+y4|^2 - |y2+y3|^2 + |y2+y4|^2)
};
Polarization polarization_identity(ConstSpan y1, ConstSpan y2, ConstSpan y3, ConstSpan y4);

}  // namespace cpx
