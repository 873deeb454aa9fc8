#include "hmoe/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hmoe/errors.hpp"
#include "hmoe/parallel.hpp"

namespace hmoe {

namespace {

constexpr double kEmptyPathResp = 1e-12;

double log_gaussian(double y, double mu, double nu) {
    const double z = y - mu;
    return -0.5 * (std::log(2.0 * std::numbers::pi * nu) + z * z / nu);
}

}  // namespace

void FitConfig::validate() const {
    if (k1 < 1 || k2 < 1) throw InvalidInput("k1 and k2 must be >= 1");
    if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
    if (tol <= 0.0) throw InvalidInput("tol must be > 0");
    if (restarts < 1) throw InvalidInput("restarts must be >= 1");
    if (gate_steps < 1) throw InvalidInput("gate_steps must be >= 1");
}

Eigen::MatrixXd responsibilities(const MixingMeasure& G, GatingCombo combo,
                                 const Dataset& data) {
    G.validate();
    const int n = data.n();
    const int paths = G.total_paths();
    Eigen::MatrixXd resp(n, paths);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd x = data.x.row(i);
        const Eigen::VectorXd g1 = gate_weights(G, combo, x, Level::First);
        Eigen::VectorXd logw(paths);
        int p = 0;
        for (int i1 = 0; i1 < G.k1(); ++i1) {
            const Eigen::VectorXd g2 =
                gate_weights(G, combo, x, Level::Second, i1);
            for (int i2 = 0; i2 < G.k2(i1); ++i2, ++p) {
                const auto& e = G.groups[i1].experts[i2].expert;
                logw[p] = std::log(g1[i1]) + std::log(g2[i2]) +
                          log_gaussian(data.y[i], e.eta.dot(x) + e.tau, e.nu);
            }
        }
        const double m = logw.maxCoeff();
        Eigen::VectorXd w = (logw.array() - m).exp();
        resp.row(i) = (w / w.sum()).transpose();
    }
    return resp;
}

void m_step_experts(MixingMeasure& G, const Eigen::MatrixXd& resp,
                    const Dataset& data, double nu_min) {
    const int n = data.n();
    const int d = data.dim();
    int p = 0;
    for (auto& g : G.groups) {
        for (auto& atom : g.experts) {
            const Eigen::VectorXd w = resp.col(p++);
            const double wtot = w.sum();
            if (wtot < kEmptyPathResp) continue;  // frozen this iteration

            // Weighted normal equations on [x, 1].
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d + 1, d + 1);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
            for (int i = 0; i < n; ++i) {
                Eigen::VectorXd z(d + 1);
                z << data.x.row(i).transpose(), 1.0;
                A.noalias() += w[i] * z * z.transpose();
                rhs.noalias() += w[i] * data.y[i] * z;
            }
            Eigen::VectorXd theta = A.ldlt().solve(rhs);
            if (!theta.allFinite() ||
                (A * theta - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) {
                // degenerate weighted design; ridge fallback
                A.diagonal().array() += 1e-8;
                theta = A.ldlt().solve(rhs);
            }
            atom.expert.eta = theta.head(d);
            atom.expert.tau = theta[d];
            double sse = 0.0;
            for (int i = 0; i < n; ++i) {
                const double r = data.y[i] -
                                 atom.expert.eta.dot(data.x.row(i)) -
                                 atom.expert.tau;
                sse += w[i] * r * r;
            }
            atom.expert.nu = std::max(sse / wtot, nu_min);
        }
    }
}

double gate_objective(const MixingMeasure& G, GatingCombo combo,
                      const Eigen::MatrixXd& resp, const Dataset& data) {
    double q = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const Eigen::VectorXd x = data.x.row(i);
        const Eigen::VectorXd g1 = gate_weights(G, combo, x, Level::First);
        int p = 0;
        for (int i1 = 0; i1 < G.k1(); ++i1) {
            const Eigen::VectorXd g2 =
                gate_weights(G, combo, x, Level::Second, i1);
            double r1 = 0.0;
            for (int i2 = 0; i2 < G.k2(i1); ++i2, ++p) {
                const double r = resp(i, p);
                r1 += r;
                q += r * std::log(g2[i2]);
            }
            q += r1 * std::log(g1[i1]);
        }
    }
    return q;
}

Eigen::VectorXd pack_gate_params(const MixingMeasure& G) {
    const int d = G.dim;
    int size = G.k1() * (d + 1);
    for (int i1 = 0; i1 < G.k1(); ++i1) size += G.k2(i1) * (d + 1);
    Eigen::VectorXd theta(size);
    int at = 0;
    for (const auto& g : G.groups) {
        theta.segment(at, d) = g.a;
        theta[at + d] = g.b;
        at += d + 1;
    }
    for (const auto& g : G.groups) {
        for (const auto& e : g.experts) {
            theta.segment(at, d) = e.omega;
            theta[at + d] = e.beta;
            at += d + 1;
        }
    }
    return theta;
}

void unpack_gate_params(MixingMeasure& G, const Eigen::VectorXd& theta) {
    const int d = G.dim;
    int at = 0;
    for (auto& g : G.groups) {
        g.a = theta.segment(at, d);
        g.b = theta[at + d];
        at += d + 1;
    }
    for (auto& g : G.groups) {
        for (auto& e : g.experts) {
            e.omega = theta.segment(at, d);
            e.beta = theta[at + d];
            at += d + 1;
        }
    }
}

Eigen::VectorXd gate_gradient(const MixingMeasure& G, GatingCombo combo,
                              const Eigen::MatrixXd& resp,
                              const Dataset& data) {
    const int d = G.dim;
    const int k1 = G.k1();
    Eigen::VectorXd grad =
        Eigen::VectorXd::Zero(pack_gate_params(G).size());

    // d(logit)/d(slope) for one atom at input x.
    auto slope_jac = [&](const Eigen::VectorXd& atom, const Eigen::VectorXd& x,
                         bool laplace) -> Eigen::VectorXd {
        if (!laplace) return x;
        const Eigen::VectorXd diff = atom - x;
        const double nrm = diff.norm();
        if (nrm < 1e-12) return Eigen::VectorXd::Zero(d);
        return -diff / nrm;
    };

    const bool lap1 = first_level_is_laplace(combo);
    const bool lap2 = second_level_is_laplace(combo);

    int second_offset = k1 * (d + 1);
    for (int i = 0; i < data.n(); ++i) {
        const Eigen::VectorXd x = data.x.row(i);
        const Eigen::VectorXd g1 = gate_weights(G, combo, x, Level::First);
        int p = 0;
        int at2 = second_offset;
        for (int i1 = 0; i1 < k1; ++i1) {
            const Eigen::VectorXd g2 =
                gate_weights(G, combo, x, Level::Second, i1);
            double r1 = 0.0;
            for (int i2 = 0; i2 < G.k2(i1); ++i2, ++p) r1 += resp(i, p);
            p -= G.k2(i1);
            for (int i2 = 0; i2 < G.k2(i1); ++i2, ++p) {
                const double dl2 = resp(i, p) - r1 * g2[i2];
                grad.segment(at2, d) +=
                    dl2 * slope_jac(G.groups[i1].experts[i2].omega, x, lap2);
                grad[at2 + d] += dl2;
                at2 += d + 1;
            }
            const double dl1 = r1 - g1[i1];
            grad.segment(i1 * (d + 1), d) +=
                dl1 * slope_jac(G.groups[i1].a, x, lap1);
            grad[i1 * (d + 1) + d] += dl1;
        }
    }
    return grad;
}

void m_step_gates(MixingMeasure& G, GatingCombo combo,
                  const Eigen::MatrixXd& resp, const Dataset& data,
                  int budget, double param_clamp) {
    if (budget < 1) throw InvalidInput("gate step budget must be >= 1");
    const int n = data.n();
    double q = gate_objective(G, combo, resp, data);
    for (int step = 0; step < budget; ++step) {
        const Eigen::VectorXd grad = gate_gradient(G, combo, resp, data);
        const double gnorm = grad.norm();
        if (gnorm < 1e-14 * (1.0 + n)) break;
        const Eigen::VectorXd theta = pack_gate_params(G);
        double alpha = 1.0 / n;  // objective scales with n
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt, alpha *= 0.5) {
            Eigen::VectorXd cand = theta + alpha * grad;
            cand = cand.cwiseMax(-param_clamp).cwiseMin(param_clamp);
            MixingMeasure trial = G;
            unpack_gate_params(trial, cand);
            const double q_new = gate_objective(trial, combo, resp, data);
            if (std::isfinite(q_new) && q_new > q) {
                G = trial;
                q = q_new;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    G = normalize(G, combo);
}

namespace {

MixingMeasure init_measure(const Dataset& data, GatingCombo combo,
                           const FitConfig& cfg, Rng rng) {
    MixingMeasure G;
    G.dim = data.dim();
    const double y_var = std::max(
        1e-2, (data.y.array() - data.y.mean()).square().mean());

    if (cfg.init == InitScheme::PerturbedTruth) {
        if (!data.truth)
            throw InvalidInput("perturbed_truth init requires dataset truth");
        const MixingMeasure& T = *data.truth;
        if (T.k1() != cfg.k1)
            throw InvalidInput("truth k1 does not match fit config");
        const double s = cfg.perturb_scale;
        for (int i1 = 0; i1 < cfg.k1; ++i1) {
            Group g;
            g.a = T.groups[i1].a;
            g.b = T.groups[i1].b;
            for (int j = 0; j < G.dim; ++j) g.a[j] += s * rng.normal();
            g.b += s * rng.normal();
            const int k2_true = T.k2(i1);
            // Duplicated atoms split their gate mass so a zero-scale init
            // reproduces the truth density when k2 == k2_true.
            std::vector<int> copies(k2_true, 0);
            for (int i2 = 0; i2 < cfg.k2; ++i2) ++copies[i2 % k2_true];
            for (int i2 = 0; i2 < cfg.k2; ++i2) {
                const auto& base = T.groups[i1].experts[i2 % k2_true];
                SecondLevelAtom e = base;
                e.beta -= std::log(static_cast<double>(copies[i2 % k2_true]));
                for (int j = 0; j < G.dim; ++j) {
                    e.omega[j] += s * rng.normal();
                    e.expert.eta[j] += s * rng.normal();
                }
                e.beta += s * rng.normal();
                e.expert.tau += s * rng.normal();
                e.expert.nu =
                    std::max(cfg.nu_min,
                             e.expert.nu * std::exp(0.5 * s * rng.normal()));
                g.experts.push_back(std::move(e));
            }
            G.groups.push_back(std::move(g));
        }
        return normalize(G, combo);
    }

    for (int i1 = 0; i1 < cfg.k1; ++i1) {
        Group g;
        g.a.resize(G.dim);
        for (int j = 0; j < G.dim; ++j) g.a[j] = rng.uniform(-1.0, 1.0);
        g.b = rng.uniform(-1.0, 1.0);
        for (int i2 = 0; i2 < cfg.k2; ++i2) {
            SecondLevelAtom e;
            e.omega.resize(G.dim);
            e.expert.eta.resize(G.dim);
            for (int j = 0; j < G.dim; ++j) {
                e.omega[j] = rng.uniform(-1.0, 1.0);
                e.expert.eta[j] = rng.uniform(-2.0, 2.0);
            }
            e.beta = rng.uniform(-1.0, 1.0);
            e.expert.tau = data.y.mean() + rng.uniform(-1.0, 1.0);
            e.expert.nu = y_var;
            g.experts.push_back(std::move(e));
        }
        G.groups.push_back(std::move(g));
    }
    return normalize(G, combo);
}

struct RestartOutcome {
    bool ok = false;
    FitResult result;
};

RestartOutcome run_restart(const Dataset& data, GatingCombo combo,
                           const FitConfig& cfg, int restart_index) {
    RestartOutcome out;
    Rng rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(restart_index));
    MixingMeasure G = init_measure(data, combo, cfg, rng);

    std::vector<double> trace;
    double ll = log_likelihood(G, combo, data);
    if (!std::isfinite(ll)) return out;
    trace.push_back(ll);

    int iters = 0;
    for (; iters < cfg.max_iters; ++iters) {
        const MixingMeasure prev = G;
        const Eigen::MatrixXd resp = responsibilities(G, combo, data);
        m_step_experts(G, resp, data, cfg.nu_min);
        m_step_gates(G, combo, resp, data, cfg.gate_steps, cfg.param_clamp);
        const double ll_new = log_likelihood(G, combo, data);
        if (!std::isfinite(ll_new)) return out;
        if (ll_new < ll - 1e-9) {
            // numerical regression; keep the last monotone iterate
            G = prev;
            break;
        }
        trace.push_back(ll_new);
        const double rel = (ll_new - ll) / (std::abs(ll) + 1e-12);
        ll = ll_new;
        if (rel < cfg.tol) {
            ++iters;
            break;
        }
    }

    out.ok = true;
    out.result.estimate = normalize(G, combo);
    out.result.final_loglik = ll;
    out.result.iters = iters;
    out.result.restart_index = restart_index;
    out.result.trace = std::move(trace);
    return out;
}

}  // namespace

FitResult fit_mle(const Dataset& data, GatingCombo combo,
                  const FitConfig& cfg) {
    cfg.validate();
    const int param_count =
        cfg.k1 * (data.dim() + 1) +
        cfg.k1 * cfg.k2 * (2 * data.dim() + 3);
    if (data.n() < param_count)
        throw InvalidInput("dataset smaller than parameter count");

    std::vector<RestartOutcome> outcomes(cfg.restarts);
    parallel_for(cfg.restarts, cfg.threads, [&](int r) {
        outcomes[r] = run_restart(data, combo, cfg, r);
    });

    int best = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        if (!outcomes[r].ok) continue;
        if (best < 0 || outcomes[r].result.final_loglik >
                            outcomes[best].result.final_loglik)
            best = r;
    }
    if (best < 0)
        throw FitFailed("all " + std::to_string(cfg.restarts) +
                        " restarts diverged (non-finite log-likelihood)");
    return outcomes[best].result;
}

}  // namespace hmoe
