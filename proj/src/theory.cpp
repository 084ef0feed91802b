#include "cpx/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpx/errors.hpp"

namespace cpx {
namespace {

// f(x) - f(y), expanded algebraically for quadratics to avoid cancellation.
double value_diff(const ClientObjective& f, ConstSpan x, ConstSpan y) {
    if (const auto* q = std::get_if<QuadraticObjective>(&f)) {
        const Vector dx = sub(x, y);
        const Vector sx = add(x, y);
        return 0.5 * dot(dx, matvec(q->gram(), sx)) - dot(dx, q->atb());
    }
    return value(f, x) - value(f, y);
}

void check_sizes(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw InputError(std::string(what) + ": " + std::to_string(got) + " entries, expected " + std::to_string(want));
    }
}

}  // namespace

KktResidual kkt_residual(ConstSpan x_s, const std::vector<Vector>& clients_x, const std::vector<Vector>& lambdas,
                         const FederatedProblem& p) {
    check_sizes(clients_x.size(), p.size(), "kkt_residual clients");
    check_sizes(lambdas.size(), p.size(), "kkt_residual multipliers");
    KktResidual r;
    Vector sum(p.dim(), 0.0);
    Vector g(p.dim());
    for (std::size_t i = 0; i < p.size(); ++i) {
        grad_into(p.clients[i], clients_x[i], g);
        r.grad = std::max(r.grad, norm(sub(g, lambdas[i])));
        r.consensus = std::max(r.consensus, norm(sub(clients_x[i], x_s)));
        axpy(1.0, lambdas[i], sum);
    }
    r.dual_sum = norm(sum);
    return r;
}

KktView kkt_view(const AlgoState& s, const FederatedProblem& p, const AlgoConfig& cfg) {
    KktView v;
    if (const auto* st = std::get_if<PdmmState>(&s)) {
        v.x = st->x;
        v.lambda = st->lambda_c;
    } else if (const auto* st = std::get_if<FedSplitState>(&s)) {
        v.x = st->x;
        const double gamma = cfg.gamma_value();
        for (std::size_t i = 0; i < st->x.size(); ++i) v.lambda.push_back(fedsplit_pdmm_inverse(st->x[i], st->z_c[i], gamma));
    } else if (const auto* st = std::get_if<ScaffoldState>(&s)) {
        v.x = st->x;
        for (const auto& ci : st->c_i) v.lambda.push_back(sub(ci, st->c));
    } else {
        const auto& st2 = std::get<FedAveState>(s);
        v.x = st2.x;
        v.lambda.assign(st2.x.size(), Vector(p.dim(), 0.0));
    }
    return v;
}

std::optional<double> server_dual_sum_ratio(const AlgoState& s, const AlgoConfig& cfg) {
    std::vector<Vector> lambdas;
    Vector x_s;
    if (const auto* ps = std::get_if<PdmmState>(&s)) {
        lambdas = ps->lambda_s;
        x_s = ps->x_s;
    } else if (const auto* fs = std::get_if<FedSplitState>(&s)) {
        for (const auto& z : fs->z_s) lambdas.push_back(fedsplit_pdmm_inverse(fs->x_s, z, cfg.gamma_value()));
        x_s = fs->x_s;
    } else {
        return std::nullopt;
    }
    Vector sum(x_s.size(), 0.0);
    double mx = 0.0;
    for (const auto& l : lambdas) {
        axpy(1.0, l, sum);
        mx = std::max(mx, norm(l));
    }
    return norm(sum) / (1.0 + mx);
}

double gamma1_value(double eta, double L, double theta) {
    return std::min((1.0 - theta) / (2.0 * L * eta * eta), (1.0 / eta - L) / 2.0);
}

RateParams rate_params(double eta, double rho, double L, double mu, double theta, double phi) {
    if (!(eta > 0.0) || !(rho > 0.0)) throw ConstraintError("eta > 0 and rho > 0 required");
    if (!(1.0 / eta > L)) throw ConstraintError("1/eta > L violated");
    if (!(L >= mu)) throw ConstraintError("L >= mu violated");
    if (!(mu > 0.0)) throw ConstraintError("mu > 0 violated");
    if (!(theta > 0.0 && theta < 1.0)) throw ConstraintError("0 < theta < 1 violated");
    if (!(phi > 0.0 && phi < 1.0)) throw ConstraintError("0 < phi < 1 violated");
    if (!(theta * mu * phi / (4.0 * rho * rho) < 1.0 / (4.0 * rho))) {
        throw ConstraintError("theta*mu*phi/(4 rho^2) < 1/(4 rho) violated");
    }
    RateParams r;
    r.theta = theta;
    r.phi = phi;
    r.gamma1 = gamma1_value(eta, L, theta);
    r.gamma2 = std::min(theta * mu * phi / (2.0 * rho * rho), r.gamma1 * eta * eta / 2.0);
    const double quarter = 1.0 / (4.0 * rho);
    r.beta = std::max((quarter - r.gamma2 / 2.0) / quarter, (1.0 / eta - theta * mu) / (1.0 / eta - theta * mu * phi));
    if (!(r.beta > 0.0 && r.beta < 1.0)) throw ConstraintError("0 < beta < 1 violated");
    return r;
}

LyapunovSample lyapunov_Q(const std::vector<Vector>& prev_clients_xK, const std::vector<Vector>& xbar,
                          const std::vector<Vector>& lambda_next, const Optimum& opt, double eta, double rho,
                          std::size_t K, double theta, double mu, double gamma2) {
    const std::size_t m = prev_clients_xK.size();
    check_sizes(xbar.size(), m, "lyapunov_Q xbar");
    check_sizes(lambda_next.size(), m, "lyapunov_Q lambda");
    check_sizes(opt.lambda_star.size(), m, "lyapunov_Q optimum");
    const double w1 = (1.0 / eta - theta * mu) / (2.0 * static_cast<double>(K));
    const double w2 = 1.0 / (4.0 * rho) - gamma2 / 2.0;
    LyapunovSample s;
    for (std::size_t i = 0; i < m; ++i) {
        const double a = w1 * norm_sq(sub(prev_clients_xK[i], opt.x_star));
        // rho (xbar - x*) + (lambda - lambda*)
        Vector v = lincomb(rho, sub(xbar[i], opt.x_star), 1.0, sub(lambda_next[i], opt.lambda_star[i]));
        const double b = w2 * norm_sq(v);
        s.primal.push_back(a);
        s.mixed.push_back(b);
        s.Q += a + b;
    }
    return s;
}

double check_lemma1(const ClientObjective& f, ConstSpan x_probe, ConstSpan x_rk, ConstSpan x_rk1, ConstSpan x_s,
                    ConstSpan lambda_si, double eta, double rho, double theta, double mu, double L) {
    if (1.0 / eta < L * (1.0 - 1e-12)) throw ConstraintError("1/eta >= L violated");
    // The inner step must be the exact gradient step; mini-batch gradients do not qualify.
    Vector g = grad(f, x_rk);
    Vector dir = g;
    axpy(rho, x_rk, dir);
    axpy(-rho, x_s, dir);
    axpy(1.0, lambda_si, dir);
    Vector expect(x_rk.begin(), x_rk.end());
    const double step = 1.0 / (1.0 / eta + rho);
    axpy(-step, dir, expect);
    const double mismatch = norm(sub(expect, x_rk1));
    if (mismatch > 1e-9 * (1.0 + norm(expect) + step * norm(dir))) {
        throw MisuseError("check_lemma1: x_rk1 is not the inner step from x_rk (mismatch " + std::to_string(mismatch) + ")");
    }
    const double lhs = value_diff(f, x_probe, x_rk1);
    const Vector d_probe = sub(x_probe, x_rk1);
    // rho (x_s - x_rk1) - lambda_si
    Vector pull = lincomb(rho, sub(x_s, x_rk1), -1.0, lambda_si);
    const Vector gp = grad(f, x_probe);
    double rhs = dot(d_probe, pull);
    rhs += norm_sq(d_probe) / (2.0 * eta);
    rhs -= (1.0 / eta - theta * mu) / 2.0 * norm_sq(sub(x_rk, x_probe));
    rhs += (1.0 / eta - L) / 2.0 * norm_sq(sub(x_rk1, x_rk));
    rhs += (1.0 - theta) / (2.0 * L) * norm_sq(sub(g, gp));
    return lhs - rhs;
}

double lemma3_gap(const std::vector<Vector>& clients_x, const Optimum& opt, const FederatedProblem& p) {
    check_sizes(clients_x.size(), p.size(), "lemma3_gap clients");
    check_sizes(opt.lambda_star.size(), p.size(), "lemma3_gap optimum");
    double gap = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        gap += value_diff(p.clients[i], clients_x[i], opt.x_star) - dot(clients_x[i], opt.lambda_star[i]);
    }
    return gap;
}

SublinearAccumulator::SublinearAccumulator(const FederatedProblem& p, const Optimum& opt, double gamma1, double eta)
    : p_(p),
      opt_(opt),
      weight_(gamma1 * eta * eta / 2.0),
      sum_x_(p.size(), Vector(p.dim(), 0.0)),
      sum_l_(p.size(), Vector(p.dim(), 0.0)) {}

double SublinearAccumulator::add(const std::vector<Vector>& xbar, const std::vector<Vector>& lambda_next) {
    check_sizes(xbar.size(), p_.size(), "sublinear xbar");
    check_sizes(lambda_next.size(), p_.size(), "sublinear lambda");
    for (std::size_t i = 0; i < p_.size(); ++i) {
        axpy(1.0, xbar[i], sum_x_[i]);
        axpy(1.0, lambda_next[i], sum_l_[i]);
    }
    ++rounds_;
    return static_cast<double>(rounds_) * combined_gap();
}

double SublinearAccumulator::combined_gap() const {
    if (rounds_ == 0) return 0.0;
    const double inv = 1.0 / static_cast<double>(rounds_);
    double total = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
        const Vector xa = scaled(inv, sum_x_[i]);
        const Vector la = scaled(inv, sum_l_[i]);
        total += value_diff(p_.clients[i], xa, opt_.x_star) - dot(opt_.lambda_star[i], xa);
        total += weight_ * norm_sq(sub(la, opt_.lambda_star[i]));
    }
    return total;
}

std::vector<SublinearPoint> sublinear_certificate(const std::vector<std::vector<Vector>>& xbar_trace,
                                                  const std::vector<std::vector<Vector>>& lambda_trace,
                                                  const FederatedProblem& p, const Optimum& opt, double gamma1,
                                                  double eta) {
    check_sizes(lambda_trace.size(), xbar_trace.size(), "sublinear trace");
    SublinearAccumulator acc(p, opt, gamma1, eta);
    std::vector<SublinearPoint> out;
    out.reserve(xbar_trace.size());
    for (std::size_t r = 0; r < xbar_trace.size(); ++r) {
        const double v = acc.add(xbar_trace[r], lambda_trace[r]);
        out.push_back({r + 1, v});
    }
    return out;
}

SublinearVerdict assess_sublinear(const std::vector<SublinearPoint>& series, double slope_tol) {
    SublinearVerdict v;
    const std::size_t n = series.size();
    if (n < 4) throw InputError("assess_sublinear: need at least 4 points");
    const std::size_t quarter = std::max<std::size_t>(1, n / 4);
    for (std::size_t i = 0; i < quarter; ++i) v.bound = std::max(v.bound, series[i].scaled_gap);
    const std::size_t half = n / 2;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = half; i < n; ++i) {
        mx += static_cast<double>(series[i].R);
        my += series[i].scaled_gap;
        v.tail_max = std::max(v.tail_max, series[i].scaled_gap);
    }
    const double cnt = static_cast<double>(n - half);
    mx /= cnt;
    my /= cnt;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = half; i < n; ++i) {
        const double dx = static_cast<double>(series[i].R) - mx;
        sxy += dx * (series[i].scaled_gap - my);
        sxx += dx * dx;
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    const double span = static_cast<double>(series[n - 1].R - series[half].R);
    if (my > 0.0) {
        v.relative_slope = slope * span / my;
    } else {
        v.relative_slope = slope > 0.0 ? slope : 0.0;
    }
    v.bounded = v.relative_slope <= slope_tol && v.tail_max <= v.bound;
    return v;
}

Polarization polarization_identity(ConstSpan y1, ConstSpan y2, ConstSpan y3, ConstSpan y4) {
    check_dim(y2, y1.size(), "polarization y2");
    check_dim(y3, y1.size(), "polarization y3");
    check_dim(y4, y1.size(), "polarization y4");
    Polarization out;
    out.lhs = dot(sub(y1, y2), sub(y3, y4));
    const double s13 = norm_sq(add(y1, y3));
    const double s14 = norm_sq(add(y1, y4));
    const double s23 = norm_sq(add(y2, y3));
    const double s24 = norm_sq(add(y2, y4));
    out.rhs_printed = 0.5 * (s13 - s24 - s23 + s24);
    out.rhs_standard = 0.5 * (s13 - s14 - s23 + s24);
    return out;
}

}  // namespace cpx
