#pragma once
// Round kernels for the federated methods and the PDMM <-> FedSplit change of variables.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cpx/objectives.hpp"

namespace cpx {

enum class Method { fedave, pdmm_exact, fedsplit, fedsplit_inexact, gpdmm, agpdmm, agpdmm_variant, scaffold };
enum class InexactInit { z_init, xs_init };
enum class LambdaUpdate { average, recent };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);  // throws ConfigError("unknown method ...")
const std::vector<Method>& all_methods();
bool is_pdmm_family(Method m);  // methods that keep server duals lambda_{s|i}

struct AlgoConfig {
    Method method = Method::gpdmm;
    double eta = 1e-3;
    std::size_t K = 1;
    std::optional<double> rho;    // default 1/(K eta)
    std::optional<double> gamma;  // default 1/rho
    double eta_g = 1.0;
    InexactInit inexact_init = InexactInit::z_init;
    LambdaUpdate lambda_update = LambdaUpdate::average;

    [[nodiscard]] double rho_value() const { return rho ? *rho : 1.0 / (static_cast<double>(K) * eta); }
    [[nodiscard]] double gamma_value() const { return gamma ? *gamma : 1.0 / rho_value(); }
    /// Copy with rho and gamma filled in. Idempotent.
    [[nodiscard]] AlgoConfig resolved() const;
    /// Throws ConfigError for K < 1 or non-positive step sizes.
    void validate() const;

    friend bool operator==(const AlgoConfig&, const AlgoConfig&) = default;
};

struct FedAveState {
    Vector x_s;
    std::vector<Vector> x;  // last client endpoints
    std::vector<std::size_t> cursor;
};

struct PdmmState {
    Vector x_s;
    std::vector<Vector> lambda_s;  // lambda_{s|i}
    std::vector<Vector> x;         // carried x_i^{r-1,K}
    std::vector<Vector> lambda_c;  // lambda_{i|s}
    std::vector<std::size_t> cursor;
};

struct FedSplitState {
    Vector x_s;
    std::vector<Vector> z_s;  // z_{s|i}
    std::vector<Vector> x;
    std::vector<Vector> z_c;  // z_{i|s}
    std::vector<std::size_t> cursor;
};

struct ScaffoldState {
    Vector x_s;
    Vector c;
    std::vector<Vector> x;
    std::vector<Vector> c_i;
    std::vector<std::size_t> cursor;
};

using AlgoState = std::variant<FedAveState, PdmmState, FedSplitState, ScaffoldState>;

/// One inner gradient step on client `client`; pointers are valid only during the callback.
struct InnerStep {
    std::size_t client;
    std::size_t k;
    ConstSpan x_k;
    ConstSpan x_k1;
    ConstSpan x_s;
    ConstSpan lambda_s;  // empty for non-PDMM methods
};
using InnerObserver = std::function<void(const InnerStep&)>;

/// Per-round by-products that are not part of the successor state.
struct RoundInfo {
    std::vector<Vector> start;  // x_i^{r,0}
    std::vector<Vector> xbar;   // vector each client used for its dual update (or its endpoint)
};

struct RoundExtras {
    RoundInfo* info = nullptr;
    const InnerObserver* observer = nullptr;
};

FedAveState init_fedave(const FederatedProblem& p);
PdmmState init_pdmm(const FederatedProblem& p);
FedSplitState init_fedsplit(const FederatedProblem& p);
ScaffoldState init_scaffold(const FederatedProblem& p);
AlgoState init_state(Method m, const FederatedProblem& p);

FedAveState fedave_round(const FedAveState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex = {});
PdmmState pdmm_exact_round(const PdmmState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex = {});
FedSplitState fedsplit_round(const FedSplitState& s, const FederatedProblem& p, const AlgoConfig& cfg,
                             RoundExtras ex = {});
FedSplitState fedsplit_inexact_round(const FedSplitState& s, const FederatedProblem& p, const AlgoConfig& cfg,
                                     RoundExtras ex = {});
PdmmState gpdmm_round(const PdmmState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex = {});
PdmmState agpdmm_round(const PdmmState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex = {});
ScaffoldState scaffold_round(const ScaffoldState& s, const FederatedProblem& p, const AlgoConfig& cfg,
                             RoundExtras ex = {});

/// Dispatches on cfg.method; the state alternative must match.
AlgoState run_round(const AlgoState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex = {});

const Vector& server_iterate(const AlgoState& s);

/// z = x - gamma * lambda
Vector pdmm_fedsplit_transform(ConstSpan x, ConstSpan lambda, double gamma);
/// lambda = (x - z) / gamma
Vector fedsplit_pdmm_inverse(ConstSpan x, ConstSpan z, double gamma);

/// FedSplit state equivalent to a PDMM state under rho = 1/gamma.
FedSplitState to_fedsplit(const PdmmState& s, double gamma);

/// Client stochastic gradient: exact for quadratics, cursor-driven mini-batch for softmax.
void client_gradient(const FederatedProblem& p, std::size_t i, ConstSpan x, std::size_t& cursor, MutSpan out);

}  // namespace cpx
