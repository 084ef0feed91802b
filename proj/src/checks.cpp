#include "cpx/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cpx/errors.hpp"
#include "cpx/rng.hpp"
#include "cpx/theory.hpp"

namespace cpx::checks {
namespace {

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

double max_abs_diff(ConstSpan a, ConstSpan b) { return max_abs(sub(a, b)); }

Vector gaussian(std::uint64_t seed, std::uint32_t stream, std::uint64_t first, std::size_t d) {
    Vector v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = rng::normal(seed, stream, rng::Role::misc, first + j);
    return v;
}

}  // namespace

FederatedProblem desk_ls(std::uint64_t seed) { return gen_synthetic_ls({25, 200, 20, 0.5, seed}).problem; }

FederatedProblem flat_ls(std::uint64_t seed) { return gen_synthetic_ls({25, 10, 20, 0.5, seed}).problem; }

FederatedProblem desk_softmax(std::uint64_t seed) {
    SyntheticSoftmaxSpec s;
    s.m = 4;
    s.samples = 40;
    s.features = 6;
    s.classes = 3;
    s.batch = 10;
    s.regularizer = 0.1;
    s.seed = seed;
    return gen_synthetic_softmax(s);
}

std::vector<Vector> xs_trace(const FederatedProblem& p, const AlgoConfig& cfg, std::size_t rounds) {
    AlgoState s = init_state(cfg.method, p);
    std::vector<Vector> out;
    out.reserve(rounds);
    for (std::size_t r = 0; r < rounds; ++r) {
        s = run_round(s, p, cfg);
        out.push_back(server_iterate(s));
    }
    return out;
}

CheckResult k1_collapse(const FederatedProblem& p, double eta, std::size_t rounds, double tol, const std::string& label) {
    AlgoConfig fa{.method = Method::fedave, .eta = eta, .K = 1};
    AlgoConfig ag{.method = Method::agpdmm, .eta = eta, .K = 1, .rho = 1.0 / eta};
    AlgoConfig sc{.method = Method::scaffold, .eta = eta, .K = 1, .eta_g = 1.0};
    const auto a = xs_trace(p, fa, rounds);
    const auto b = xs_trace(p, ag, rounds);
    const auto c = xs_trace(p, sc, rounds);
    double worst = 0.0;
    double movement = 0.0;
    for (std::size_t r = 0; r < rounds; ++r) {
        worst = std::max({worst, max_abs_diff(a[r], b[r]), max_abs_diff(a[r], c[r])});
        movement = std::max(movement, max_abs(a[r]));
    }
    CheckResult res{"k1_collapse_" + label, worst <= tol && movement > 0.0, ""};
    res.detail = "max |dx_s| = " + sci(worst) + " over " + std::to_string(rounds) + " rounds (tol " + sci(tol) + ")";
    return res;
}

CheckResult pdmm_fedsplit_equivalence(std::size_t problems, std::size_t rounds, double tol) {
    double worst = 0.0;
    for (std::size_t k = 0; k < problems; ++k) {
        const FederatedProblem p = gen_synthetic_ls({10, 40, 10, 0.5, 1000 + k}).problem;
        const double gamma = (1.0 + static_cast<double>(k % 3)) / p.lipschitz;
        AlgoConfig pd{.method = Method::pdmm_exact, .eta = 1.0, .K = 1, .rho = 1.0 / gamma};
        AlgoConfig fs{.method = Method::fedsplit, .eta = 1.0, .K = 1, .gamma = gamma};
        const auto a = xs_trace(p, pd, rounds);
        const auto b = xs_trace(p, fs, rounds);
        for (std::size_t r = 0; r < rounds; ++r) worst = std::max(worst, max_abs_diff(a[r], b[r]));
    }
    return {"pdmm_fedsplit_equivalence", worst <= tol,
            "max |dx_s| = " + sci(worst) + " over " + std::to_string(problems) + " problems x " +
                std::to_string(rounds) + " rounds (tol " + sci(tol) + ")"};
}

ContractionReport theorem1_and_lemma1(const std::vector<std::uint64_t>& seeds, const std::vector<double>& eta_factors,
                                      const std::vector<std::size_t>& Ks, std::size_t rounds, std::size_t probes) {
    ContractionReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    bool contraction_ok = true;
    std::size_t steps_checked = 0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    double best_beta = 1.0;
    double worst_beta = 0.0;
    for (std::uint64_t seed : seeds) {
        const FederatedProblem p = desk_ls(seed);
        const Optimum& opt = *p.optimum;
        const std::size_t d = p.dim();
        for (double f : eta_factors) {
            for (std::size_t K : Ks) {
                AlgoConfig cfg{.method = Method::gpdmm, .eta = f / p.lipschitz, .K = K};
                cfg.lambda_update = LambdaUpdate::average;
                const double rho = cfg.rho_value();
                const RateParams rp = rate_params(cfg.eta, rho, p.lipschitz, p.modulus, 0.5, 0.5);
                best_beta = std::min(best_beta, rp.beta);
                worst_beta = std::max(worst_beta, rp.beta);
                std::uint64_t probe_counter = 0;
                InnerObserver obs = [&](const InnerStep& st) {
                    const auto& fi = p.clients[st.client];
                    std::vector<Vector> pts{Vector(st.x_k1.begin(), st.x_k1.end()), opt.x_star};
                    const double spread = 1.0 + norm(sub(st.x_k, opt.x_star));
                    for (std::size_t q = 0; q < probes; ++q) {
                        Vector z = gaussian(seed, static_cast<std::uint32_t>(st.client), probe_counter, d);
                        probe_counter += d;
                        const double s = spread * std::pow(10.0, -static_cast<double>(q % 4)) / std::sqrt(double(d));
                        pts.push_back(lincomb(1.0, st.x_k, s, z));
                    }
                    for (const auto& x : pts) {
                        const double a = check_lemma1(fi, x, st.x_k, st.x_k1, st.x_s, st.lambda_s, cfg.eta, rho, 0.5,
                                                      p.modulus, p.lipschitz);
                        const double b = check_lemma1(fi, x, st.x_k, st.x_k1, st.x_s, st.lambda_s, cfg.eta, rho, 0.0,
                                                      0.0, p.lipschitz);
                        rep.min_slack = std::min({rep.min_slack, a, b});
                    }
                    ++steps_checked;
                };
                PdmmState s = init_pdmm(p);
                RoundInfo info;
                std::optional<double> prev;
                for (std::size_t r = 1; r <= rounds; ++r) {
                    PdmmState next = gpdmm_round(s, p, cfg, {&info, &obs});
                    const double q = lyapunov_Q(info.start, info.xbar, next.lambda_c, opt, cfg.eta, rho, K, 0.5,
                                                p.modulus, rp.gamma2)
                                         .Q;
                    if (prev) {
                        const double excess = q - rp.beta * *prev;
                        worst_excess = std::max(worst_excess, excess);
                        if (excess > 1e-12) contraction_ok = false;
                        if (*prev > 1e-20) rep.worst_ratio_over_beta = std::max(rep.worst_ratio_over_beta, q / *prev / rp.beta);
                    }
                    prev = q;
                    Vector sum(d, 0.0);
                    double mx = 0.0;
                    for (const auto& l : next.lambda_s) {
                        axpy(1.0, l, sum);
                        mx = std::max(mx, norm(l));
                    }
                    rep.max_dual_sum_ratio = std::max(rep.max_dual_sum_ratio, norm(sum) / (1.0 + mx));
                    s = std::move(next);
                }
            }
        }
    }
    rep.theorem1 = {"theorem1_contraction", contraction_ok,
                    "max (Q_next/Q)/beta while Q > 1e-20 = " + sci(rep.worst_ratio_over_beta) + ", max Q_next - beta Q = " +
                        sci(worst_excess) + ", beta in [" + sci(best_beta) + ", " + sci(worst_beta) + "]"};
    rep.lemma1 = {"lemma1_slack", rep.min_slack >= -1e-9,
                  "min slack = " + sci(rep.min_slack) + " over " + std::to_string(steps_checked) + " inner steps"};
    return rep;
}

CheckResult lemma3_fuzz(std::size_t problems, std::size_t draws) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < problems; ++k) {
        const std::uint64_t seed = 500 + k;
        const FederatedProblem p = desk_ls(seed);
        const Optimum& opt = *p.optimum;
        const std::size_t m = p.size();
        const std::size_t d = p.dim();
        std::uint64_t counter = 0;
        for (std::size_t t = 0; t < draws; ++t) {
            const double u = rng::uniform(seed, 0, rng::Role::misc, 1ull << 40 | t);
            const double s = std::pow(10.0, -8.0 + 9.0 * u);  // 1e-8 .. 10
            std::vector<Vector> xs;
            for (std::size_t i = 0; i < m; ++i) {
                Vector z = gaussian(seed, static_cast<std::uint32_t>(i + 1), counter, d);
                counter += d;
                xs.push_back(lincomb(1.0, opt.x_star, s, z));
            }
            worst = std::min(worst, lemma3_gap(xs, opt, p));
        }
    }
    return {"lemma3_nonnegative", worst >= -1e-9,
            "min gap = " + sci(worst) + " over " + std::to_string(problems * draws) + " draws"};
}

SublinearReport theorem2(std::uint64_t seed, double eta_factor, std::size_t K, std::size_t R) {
    const FederatedProblem p = flat_ls(seed);
    const Optimum& opt = *p.optimum;
    AlgoConfig cfg{.method = Method::gpdmm, .eta = eta_factor / p.lipschitz, .K = K};
    const double g1 = gamma1_value(cfg.eta, p.lipschitz, 0.0);
    SublinearAccumulator acc(p, opt, g1, cfg.eta);
    PdmmState s = init_pdmm(p);
    RoundInfo info;
    std::vector<SublinearPoint> series;
    SublinearReport rep;
    double prev_gap = std::numeric_limits<double>::infinity();
    double pointwise_sum = 0.0;
    rep.max_jensen_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r <= R; ++r) {
        s = gpdmm_round(s, p, cfg, {&info, nullptr});
        series.push_back({r, acc.add(info.xbar, s.lambda_c)});
        const double g = acc.combined_gap();
        if (r > 1) rep.max_jensen_increase = std::max(rep.max_jensen_increase, g - prev_gap);
        prev_gap = g;
        SublinearAccumulator single(p, opt, g1, cfg.eta);
        pointwise_sum += single.add(info.xbar, s.lambda_c);
        const double slack = g - pointwise_sum / static_cast<double>(r);
        rep.max_jensen_violation = std::max(rep.max_jensen_violation, slack / (1.0 + std::abs(g)));
    }
    const SublinearVerdict v = assess_sublinear(series, 1e-3);
    rep.relative_slope = v.relative_slope;
    rep.bound = v.bound;
    rep.tail_max = v.tail_max;
    rep.first = series.front().scaled_gap;
    rep.last = series.back().scaled_gap;
    rep.result = {"theorem2_sublinear", v.bounded,
                  "relative slope = " + sci(v.relative_slope) + " (tol 1e-3), tail max " + sci(v.tail_max) +
                      " vs first-quarter bound " + sci(v.bound) + ", mu = " + sci(p.modulus)};
    return rep;
}

PolarizationReport polarization(std::size_t draws) {
    PolarizationReport rep;
    constexpr std::size_t d = 7;
    for (std::size_t t = 0; t < draws; ++t) {
        const Vector y1 = gaussian(77, 1, t * d, d);
        const Vector y2 = gaussian(77, 2, t * d, d);
        const Vector y3 = gaussian(77, 3, t * d, d);
        const Vector y4 = gaussian(77, 4, t * d, d);
        const Polarization pz = polarization_identity(y1, y2, y3, y4);
        const double scale = 1.0 + norm_sq(y1) + norm_sq(y2) + norm_sq(y3) + norm_sq(y4);
        rep.max_err_standard = std::max(rep.max_err_standard, std::abs(pz.lhs - pz.rhs_standard) / scale);
        rep.max_err_printed = std::max(rep.max_err_printed, std::abs(pz.lhs - pz.rhs_printed) / scale);
    }
    rep.standard = {"polarization_standard", rep.max_err_standard <= 1e-13,
                    "standard reading max rel err " + sci(rep.max_err_standard) + "; printed reading max rel err " +
                        sci(rep.max_err_printed)};
    return rep;
}

}  // namespace cpx::checks
