#include "cpx/algorithms.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "cpx/errors.hpp"

namespace cpx {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kNames{{
    {Method::fedave, "fedave"},
    {Method::pdmm_exact, "pdmm_exact"},
    {Method::fedsplit, "fedsplit"},
    {Method::fedsplit_inexact, "fedsplit_inexact"},
    {Method::gpdmm, "gpdmm"},
    {Method::agpdmm, "agpdmm"},
    {Method::agpdmm_variant, "agpdmm_variant"},
    {Method::scaffold, "scaffold"},
}};

std::vector<Vector> zeros(std::size_t m, std::size_t d) { return std::vector<Vector>(m, Vector(d, 0.0)); }

void require_quadratic(const FederatedProblem& p, Method m) {
    if (!p.all_quadratic()) {
        throw UnsupportedMethodError(std::string(method_name(m)) + " needs an exact prox; only quadratic clients have one");
    }
}

void require_clients(const FederatedProblem& p, std::size_t states) {
    if (p.size() != states) {
        throw InputError("state holds " + std::to_string(states) + " clients, problem has " + std::to_string(p.size()));
    }
}

void notify(const RoundExtras& ex, std::size_t client, std::size_t k, ConstSpan before, ConstSpan after, ConstSpan xs,
            ConstSpan lambda) {
    if (ex.observer != nullptr && *ex.observer) (*ex.observer)(InnerStep{client, k, before, after, xs, lambda});
}

void record(const RoundExtras& ex, std::size_t m, std::size_t i, const Vector& start, const Vector& xbar) {
    if (ex.info == nullptr) return;
    if (ex.info->start.size() != m) {
        ex.info->start.assign(m, {});
        ex.info->xbar.assign(m, {});
    }
    ex.info->start[i] = start;
    ex.info->xbar[i] = xbar;
}

void begin_round(const RoundExtras& ex) {
    if (ex.info != nullptr) {
        ex.info->start.clear();
        ex.info->xbar.clear();
    }
}

// x_s' = mean(xbar_i - lambda_c_i / rho); lambda_s_i' = rho (xbar_i - x_s') - lambda_c_i.
void pdmm_server(PdmmState& s, const std::vector<Vector>& xbar, double rho) {
    const std::size_t m = xbar.size();
    Vector sum(s.x_s.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        axpy(1.0, xbar[i], sum);
        axpy(-1.0 / rho, s.lambda_c[i], sum);
    }
    scale(1.0 / static_cast<double>(m), sum);
    s.x_s = std::move(sum);
    for (std::size_t i = 0; i < m; ++i) {
        Vector diff = sub(xbar[i], s.x_s);
        s.lambda_s[i] = lincomb(rho, diff, -1.0, s.lambda_c[i]);
    }
}

// x_s' = mean z_{i|s}; z_{s|i}' = 2 x_s' - z_{i|s}.
void fedsplit_server(FedSplitState& s) {
    const std::size_t m = s.z_c.size();
    Vector sum(s.x_s.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i) axpy(1.0, s.z_c[i], sum);
    scale(1.0 / static_cast<double>(m), sum);
    s.x_s = std::move(sum);
    for (std::size_t i = 0; i < m; ++i) s.z_s[i] = lincomb(2.0, s.x_s, -1.0, s.z_c[i]);
}

// K steps of x+ = x - [g + rho (x - x_s) + lambda_s] / (1/eta + rho); returns the average iterate when requested.
Vector pdmm_inner(const FederatedProblem& p, std::size_t i, Vector& x, ConstSpan xs, ConstSpan lambda_s,
                  const AlgoConfig& cfg, double rho, std::size_t& cursor, bool want_average, const RoundExtras& ex) {
    const std::size_t d = x.size();
    const double step = 1.0 / (1.0 / cfg.eta + rho);
    Vector dir(d);
    Vector avg(want_average ? d : 0, 0.0);
    Vector before;
    for (std::size_t k = 0; k < cfg.K; ++k) {
        if (ex.observer != nullptr) before = x;
        client_gradient(p, i, x, cursor, dir);
        axpy(rho, x, dir);
        axpy(-rho, xs, dir);
        axpy(1.0, lambda_s, dir);
        axpy(-step, dir, x);
        if (want_average) axpy(1.0, x, avg);
        if (ex.observer != nullptr) notify(ex, i, k, before, x, xs, lambda_s);
    }
    if (!want_average) return x;
    scale(1.0 / static_cast<double>(cfg.K), avg);
    return avg;
}

// K steps of x+ = x - eta (g + (x - z) / gamma).
void fedsplit_inner(const FederatedProblem& p, std::size_t i, Vector& x, ConstSpan z, const AlgoConfig& cfg,
                    double gamma, std::size_t& cursor, ConstSpan xs, ConstSpan lambda_s, const RoundExtras& ex) {
    Vector dir(x.size());
    Vector before;
    for (std::size_t k = 0; k < cfg.K; ++k) {
        if (ex.observer != nullptr) before = x;
        client_gradient(p, i, x, cursor, dir);
        axpy(1.0 / gamma, x, dir);
        axpy(-1.0 / gamma, z, dir);
        axpy(-cfg.eta, dir, x);
        if (ex.observer != nullptr) notify(ex, i, k, before, x, xs, lambda_s);
    }
}

}  // namespace

std::string_view method_name(Method m) {
    for (const auto& [k, v] : kNames) {
        if (k == m) return v;
    }
    throw InternalError("method without a name");
}

Method parse_method(std::string_view name) {
    for (const auto& [k, v] : kNames) {
        if (v == name) return k;
    }
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> all = [] {
        std::vector<Method> v;
        for (const auto& kv : kNames) v.push_back(kv.first);
        return v;
    }();
    return all;
}

bool is_pdmm_family(Method m) {
    return m == Method::pdmm_exact || m == Method::gpdmm || m == Method::agpdmm || m == Method::agpdmm_variant;
}

AlgoConfig AlgoConfig::resolved() const {
    AlgoConfig c = *this;
    c.rho = rho_value();
    c.gamma = gamma_value();
    return c;
}

void AlgoConfig::validate() const {
    if (K < 1) throw ConfigError("K must be at least 1");
    if (!(eta > 0.0)) throw ConfigError("eta must be positive");
    if (rho && !(*rho > 0.0)) throw ConfigError("rho must be positive");
    if (gamma && !(*gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(eta_g > 0.0)) throw ConfigError("eta_g must be positive");
}

void client_gradient(const FederatedProblem& p, std::size_t i, ConstSpan x, std::size_t& cursor, MutSpan out) {
    const auto& obj = p.clients[i];
    if (const auto* s = std::get_if<SoftmaxObjective>(&obj)) {
        BatchGrad g = minibatch_grad(*s, x, cursor);
        std::copy(g.grad.begin(), g.grad.end(), out.begin());
        cursor = g.next_cursor;
        return;
    }
    grad_into(obj, x, out);
}

FedAveState init_fedave(const FederatedProblem& p) {
    return {Vector(p.dim(), 0.0), zeros(p.size(), p.dim()), std::vector<std::size_t>(p.size(), 0)};
}

PdmmState init_pdmm(const FederatedProblem& p) {
    const std::size_t m = p.size();
    const std::size_t d = p.dim();
    return {Vector(d, 0.0), zeros(m, d), zeros(m, d), zeros(m, d), std::vector<std::size_t>(m, 0)};
}

FedSplitState init_fedsplit(const FederatedProblem& p) {
    const std::size_t m = p.size();
    const std::size_t d = p.dim();
    return {Vector(d, 0.0), zeros(m, d), zeros(m, d), zeros(m, d), std::vector<std::size_t>(m, 0)};
}

ScaffoldState init_scaffold(const FederatedProblem& p) {
    const std::size_t m = p.size();
    const std::size_t d = p.dim();
    return {Vector(d, 0.0), Vector(d, 0.0), zeros(m, d), zeros(m, d), std::vector<std::size_t>(m, 0)};
}

AlgoState init_state(Method m, const FederatedProblem& p) {
    switch (m) {
        case Method::fedave: return init_fedave(p);
        case Method::fedsplit:
        case Method::fedsplit_inexact: return init_fedsplit(p);
        case Method::scaffold: return init_scaffold(p);
        default: return init_pdmm(p);
    }
}

FedAveState fedave_round(const FedAveState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex) {
    cfg.validate();
    require_clients(p, s.x.size());
    begin_round(ex);
    FedAveState out = s;
    const std::size_t m = p.size();
    Vector g(p.dim());
    Vector sum(p.dim(), 0.0);
    Vector before;
    for (std::size_t i = 0; i < m; ++i) {
        Vector x = s.x_s;
        for (std::size_t k = 0; k < cfg.K; ++k) {
            if (ex.observer != nullptr) before = x;
            client_gradient(p, i, x, out.cursor[i], g);
            axpy(-cfg.eta, g, x);
            if (ex.observer != nullptr) notify(ex, i, k, before, x, s.x_s, {});
        }
        record(ex, m, i, s.x_s, x);
        axpy(1.0, x, sum);
        out.x[i] = std::move(x);
    }
    scale(1.0 / static_cast<double>(m), sum);
    out.x_s = std::move(sum);
    return out;
}

PdmmState pdmm_exact_round(const PdmmState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex) {
    cfg.validate();
    require_quadratic(p, Method::pdmm_exact);
    require_clients(p, s.x.size());
    begin_round(ex);
    const double rho = cfg.rho_value();
    const std::size_t m = p.size();
    PdmmState out = s;
    for (std::size_t i = 0; i < m; ++i) {
        // v = x_s - lambda_{s|i} / rho
        Vector v = lincomb(1.0, s.x_s, -1.0 / rho, s.lambda_s[i]);
        Vector xi = prox_quadratic(std::get<QuadraticObjective>(p.clients[i]), rho, v);
        Vector diff = sub(s.x_s, xi);
        out.lambda_c[i] = lincomb(rho, diff, -1.0, s.lambda_s[i]);
        record(ex, m, i, s.x[i], xi);
        out.x[i] = std::move(xi);
    }
    pdmm_server(out, out.x, rho);
    return out;
}

FedSplitState fedsplit_round(const FedSplitState& s, const FederatedProblem& p, const AlgoConfig& cfg,
                             RoundExtras ex) {
    cfg.validate();
    require_quadratic(p, Method::fedsplit);
    require_clients(p, s.x.size());
    begin_round(ex);
    const double gamma = cfg.gamma_value();
    const std::size_t m = p.size();
    FedSplitState out = s;
    for (std::size_t i = 0; i < m; ++i) {
        Vector xi = prox_quadratic(std::get<QuadraticObjective>(p.clients[i]), 1.0 / gamma, s.z_s[i]);
        out.z_c[i] = lincomb(2.0, xi, -1.0, s.z_s[i]);
        record(ex, m, i, s.x[i], xi);
        out.x[i] = std::move(xi);
    }
    fedsplit_server(out);
    return out;
}

FedSplitState fedsplit_inexact_round(const FedSplitState& s, const FederatedProblem& p, const AlgoConfig& cfg,
                                     RoundExtras ex) {
    cfg.validate();
    require_clients(p, s.x.size());
    begin_round(ex);
    const double gamma = cfg.gamma_value();
    const std::size_t m = p.size();
    FedSplitState out = s;
    for (std::size_t i = 0; i < m; ++i) {
        Vector x = cfg.inexact_init == InexactInit::z_init ? s.z_s[i] : s.x_s;
        const Vector start = x;
        fedsplit_inner(p, i, x, s.z_s[i], cfg, gamma, out.cursor[i], s.x_s, {}, ex);
        out.z_c[i] = lincomb(2.0, x, -1.0, s.z_s[i]);
        record(ex, m, i, start, x);
        out.x[i] = std::move(x);
    }
    fedsplit_server(out);
    return out;
}

PdmmState gpdmm_round(const PdmmState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex) {
    cfg.validate();
    require_clients(p, s.x.size());
    begin_round(ex);
    const double rho = cfg.rho_value();
    const std::size_t m = p.size();
    const bool average = cfg.lambda_update == LambdaUpdate::average;
    PdmmState out = s;
    std::vector<Vector> xbar(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vector x = s.x[i];
        const Vector start = x;
        xbar[i] = pdmm_inner(p, i, x, s.x_s, s.lambda_s[i], cfg, rho, out.cursor[i], average, ex);
        Vector diff = sub(s.x_s, xbar[i]);
        out.lambda_c[i] = lincomb(rho, diff, -1.0, s.lambda_s[i]);
        record(ex, m, i, start, xbar[i]);
        out.x[i] = std::move(x);
    }
    pdmm_server(out, xbar, rho);
    return out;
}

PdmmState agpdmm_round(const PdmmState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex) {
    cfg.validate();
    if (cfg.method != Method::agpdmm && cfg.method != Method::agpdmm_variant) {
        throw ConfigError("agpdmm_round called with method " + std::string(method_name(cfg.method)));
    }
    require_clients(p, s.x.size());
    begin_round(ex);
    const double rho = cfg.rho_value();
    const std::size_t m = p.size();
    PdmmState out = s;
    std::vector<Vector> xbar(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vector x = s.x_s;
        if (cfg.method == Method::agpdmm) {
            pdmm_inner(p, i, x, s.x_s, s.lambda_s[i], cfg, rho, out.cursor[i], false, ex);
            Vector diff = sub(s.x_s, x);
            out.lambda_c[i] = lincomb(rho, diff, -1.0, s.lambda_s[i]);
        } else {
            // Inexact FedSplit step from x_s, expressed in PDMM variables with gamma = 1/rho.
            const double gamma = 1.0 / rho;
            const Vector z_s = pdmm_fedsplit_transform(s.x_s, s.lambda_s[i], gamma);
            fedsplit_inner(p, i, x, z_s, cfg, gamma, out.cursor[i], s.x_s, s.lambda_s[i], ex);
            const Vector z_c = lincomb(2.0, x, -1.0, z_s);
            out.lambda_c[i] = fedsplit_pdmm_inverse(x, z_c, gamma);
        }
        record(ex, m, i, s.x_s, x);
        xbar[i] = x;
        out.x[i] = std::move(x);
    }
    pdmm_server(out, xbar, rho);
    return out;
}

ScaffoldState scaffold_round(const ScaffoldState& s, const FederatedProblem& p, const AlgoConfig& cfg,
                             RoundExtras ex) {
    cfg.validate();
    require_clients(p, s.x.size());
    begin_round(ex);
    const std::size_t m = p.size();
    const std::size_t d = p.dim();
    const double kEta = static_cast<double>(cfg.K) * cfg.eta;
    ScaffoldState out = s;
    Vector drift(d, 0.0);
    Vector dc(d, 0.0);
    Vector g(d);
    Vector before;
    Vector correction;
    for (std::size_t i = 0; i < m; ++i) {
        correction = sub(s.c, s.c_i[i]);  // c - c_i
        Vector x = s.x_s;
        for (std::size_t k = 0; k < cfg.K; ++k) {
            if (ex.observer != nullptr) before = x;
            client_gradient(p, i, x, out.cursor[i], g);
            axpy(1.0, correction, g);
            axpy(-cfg.eta, g, x);
            if (ex.observer != nullptr) notify(ex, i, k, before, x, s.x_s, {});
        }
        // c_i' = c_i - c + (x_s - x_K) / (K eta)
        Vector back = sub(s.x_s, x);
        Vector ci = lincomb(-1.0, correction, 1.0 / kEta, back);
        axpy(1.0, sub(ci, s.c_i[i]), dc);
        axpy(-1.0, back, drift);
        record(ex, m, i, s.x_s, x);
        out.c_i[i] = std::move(ci);
        out.x[i] = std::move(x);
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    out.x_s = lincomb(1.0, s.x_s, cfg.eta_g * inv_m, drift);
    out.c = lincomb(1.0, s.c, inv_m, dc);
    return out;
}

AlgoState run_round(const AlgoState& s, const FederatedProblem& p, const AlgoConfig& cfg, RoundExtras ex) {
    auto expect = [&](auto* ptr) {
        if (ptr == nullptr) {
            throw MisuseError("state type does not match method " + std::string(method_name(cfg.method)));
        }
        return ptr;
    };
    switch (cfg.method) {
        case Method::fedave: return fedave_round(*expect(std::get_if<FedAveState>(&s)), p, cfg, ex);
        case Method::pdmm_exact: return pdmm_exact_round(*expect(std::get_if<PdmmState>(&s)), p, cfg, ex);
        case Method::fedsplit: return fedsplit_round(*expect(std::get_if<FedSplitState>(&s)), p, cfg, ex);
        case Method::fedsplit_inexact:
            return fedsplit_inexact_round(*expect(std::get_if<FedSplitState>(&s)), p, cfg, ex);
        case Method::gpdmm: return gpdmm_round(*expect(std::get_if<PdmmState>(&s)), p, cfg, ex);
        case Method::agpdmm:
        case Method::agpdmm_variant: return agpdmm_round(*expect(std::get_if<PdmmState>(&s)), p, cfg, ex);
        case Method::scaffold: return scaffold_round(*expect(std::get_if<ScaffoldState>(&s)), p, cfg, ex);
    }
    throw InternalError("unhandled method");
}

const Vector& server_iterate(const AlgoState& s) {
    return std::visit([](const auto& st) -> const Vector& { return st.x_s; }, s);
}

Vector pdmm_fedsplit_transform(ConstSpan x, ConstSpan lambda, double gamma) {
    if (!(gamma > 0.0)) throw InputError("transform: gamma must be positive");
    return lincomb(1.0, x, -gamma, lambda);
}

Vector fedsplit_pdmm_inverse(ConstSpan x, ConstSpan z, double gamma) {
    if (!(gamma > 0.0)) throw InputError("transform: gamma must be positive");
    return lincomb(1.0 / gamma, x, -1.0 / gamma, z);
}

FedSplitState to_fedsplit(const PdmmState& s, double gamma) {
    FedSplitState out;
    out.x_s = s.x_s;
    out.x = s.x;
    out.cursor = s.cursor;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        out.z_s.push_back(pdmm_fedsplit_transform(s.x_s, s.lambda_s[i], gamma));
        out.z_c.push_back(pdmm_fedsplit_transform(s.x[i], s.lambda_c[i], gamma));
    }
    return out;
}

}  // namespace cpx
