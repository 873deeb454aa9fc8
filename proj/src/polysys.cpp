#include "hmoe/polysys.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "hmoe/errors.hpp"
#include "hmoe/parallel.hpp"
#include "hmoe/rng.hpp"

namespace hmoe {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double vec_factorial(const Eigen::VectorXi& a) {
    double f = 1.0;
    for (int i = 0; i < a.size(); ++i) f *= factorial(a[i]);
    return f;
}

double ipow(double base, int e) {
    if (e == 0) return 1.0;  // 0^0 = 1 by convention
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

double vec_pow(const Eigen::VectorXd& v, const Eigen::VectorXi& a) {
    double r = 1.0;
    for (int i = 0; i < a.size(); ++i) r *= ipow(v[i], a[i]);
    return r;
}

// All componentwise multi-indices alpha <= cap.
void for_each_sub_index(const Eigen::VectorXi& cap,
                        const std::function<void(const Eigen::VectorXi&)>& fn) {
    Eigen::VectorXi a = Eigen::VectorXi::Zero(cap.size());
    while (true) {
        fn(a);
        int j = 0;
        while (j < a.size()) {
            if (a[j] < cap[j]) {
                ++a[j];
                break;
            }
            a[j] = 0;
            ++j;
        }
        if (j == a.size()) break;
    }
}

}  // namespace

void PolySystem::validate() const {
    if (m < 2) throw InvalidInput("polysys: m must be >= 2");
    if (r < 1) throw InvalidInput("polysys: r must be >= 1");
    if (d < 1) throw InvalidInput("polysys: d must be >= 1");
}

CandidateSolution CandidateSolution::zeros(const PolySystem& sys) {
    CandidateSolution s;
    s.p = Eigen::VectorXd::Zero(sys.m);
    s.q4 = Eigen::VectorXd::Zero(sys.m);
    s.q5 = Eigen::VectorXd::Zero(sys.m);
    if (sys.kind != GatingCombo::LL) {
        s.q2 = Eigen::VectorXd::Zero(sys.d);
        s.q3.assign(sys.m, Eigen::VectorXd::Zero(sys.d));
    }
    if (sys.kind == GatingCombo::SS)
        s.q1.assign(sys.m, Eigen::VectorXd::Zero(sys.d));
    return s;
}

std::vector<EquationIndex> enumerate_equations(const PolySystem& sys) {
    sys.validate();
    std::vector<EquationIndex> eqs;
    if (sys.kind == GatingCombo::LL) {
        for (int rho = 1; rho <= sys.r; ++rho)
            eqs.push_back({Eigen::VectorXi(), rho});
        return eqs;
    }
    Eigen::VectorXi cap = Eigen::VectorXi::Constant(sys.d, sys.r);
    for_each_sub_index(cap, [&](const Eigen::VectorXi& rho1) {
        const int s1 = rho1.sum();
        if (s1 > sys.r) return;
        for (int rho2 = std::max(0, 1 - s1); s1 + rho2 <= sys.r; ++rho2)
            eqs.push_back({rho1, rho2});
    });
    std::stable_sort(eqs.begin(), eqs.end(),
                     [](const EquationIndex& a, const EquationIndex& b) {
                         return a.total() < b.total();
                     });
    return eqs;
}

std::vector<TermTuple> enumerate_terms(const PolySystem& sys,
                                       const Eigen::VectorXi& rho1, int rho2) {
    sys.validate();
    std::vector<TermTuple> terms;
    auto push_a45 = [&](TermTuple base, int budget) {
        for (int a5 = 0; 2 * a5 <= budget; ++a5) {
            TermTuple t = base;
            t.a4 = budget - 2 * a5;
            t.a5 = a5;
            terms.push_back(std::move(t));
        }
    };
    if (sys.kind == GatingCombo::LL) {
        push_a45(TermTuple{}, rho2);
        return terms;
    }
    if (rho1.size() != sys.d) throw InvalidInput("enumerate_terms: bad rho1");
    // alpha3 <= rho1, then split the remainder between alpha1 and alpha2
    // (SL has no alpha1: the remainder goes entirely to alpha2).
    for_each_sub_index(rho1, [&](const Eigen::VectorXi& a3) {
        if (a3.sum() > rho2) return;
        const int budget = rho2 - a3.sum();
        const Eigen::VectorXi rest = rho1 - a3;
        if (sys.kind == GatingCombo::SL) {
            TermTuple t;
            t.a2 = rest;
            t.a3 = a3;
            push_a45(t, budget);
            return;
        }
        for_each_sub_index(rest, [&](const Eigen::VectorXi& a1) {
            TermTuple t;
            t.a1 = a1;
            t.a2 = rest - a1;
            t.a3 = a3;
            push_a45(t, budget);
        });
    });
    return terms;
}

Eigen::VectorXd residuals(const PolySystem& sys, const CandidateSolution& sol) {
    const auto eqs = enumerate_equations(sys);
    Eigen::VectorXd res(static_cast<int>(eqs.size()));
    for (std::size_t e = 0; e < eqs.size(); ++e) {
        const auto terms = enumerate_terms(sys, eqs[e].rho1, eqs[e].rho2);
        double sum = 0.0;
        for (const auto& t : terms) {
            const double coeff =
                1.0 / (vec_factorial(t.a1) * vec_factorial(t.a2) *
                       vec_factorial(t.a3) * factorial(t.a4) *
                       factorial(t.a5));
            for (int i = 0; i < sys.m; ++i) {
                double mono = sol.p[i] * sol.p[i] * ipow(sol.q4[i], t.a4) *
                              ipow(sol.q5[i], t.a5);
                if (sys.kind != GatingCombo::LL) {
                    mono *= vec_pow(sol.q2, t.a2) * vec_pow(sol.q3[i], t.a3);
                    if (sys.kind == GatingCombo::SS)
                        mono *= vec_pow(sol.q1[i], t.a1);
                }
                sum += coeff * mono;
            }
        }
        res[static_cast<int>(e)] = sum;
    }
    return res;
}

bool is_nontrivial(const CandidateSolution& sol, double tol) {
    if (tol <= 0.0) throw InvalidInput("is_nontrivial: tol must be > 0");
    return sol.p.cwiseAbs().minCoeff() > tol &&
           sol.q4.cwiseAbs().maxCoeff() > tol;
}

namespace {

// Free-variable layout: [u_p (m), u_q40, q4_1.. (m-1), q5 (m),
// q1 (m*d), q2 (d), q3 (m*d)] with p_i = 1 + u_p_i^2 and
// q4_0 = sign * (1 + u_q40^2), so every candidate is non-trivial.
//
// Pinning min p_i >= 1 and |q4_0| >= 1 (rather than small floors) loses no
// solutions: the system is invariant under p -> mu p and under
// (q3, q4, q5) -> (lambda q3, lambda q4, lambda^2 q5), and atoms are
// exchangeable, so any non-trivial solution can be rescaled and permuted
// until min_i p_i = 1 and |q4_0| = max_i |q4_i| = 1. With small floors
// instead, the optimizer can park p and q4 on their floors and shrink the
// rest, reaching tiny residuals on systems with no non-trivial solution.
struct Parameterization {
    const PolySystem& sys;
    double q40_sign;

    int size() const {
        int n = 3 * sys.m;  // p, q4, q5
        if (sys.kind != GatingCombo::LL) n += sys.d * (sys.m + 1);  // q3, q2
        if (sys.kind == GatingCombo::SS) n += sys.d * sys.m;        // q1
        return n;
    }

    CandidateSolution decode(const Eigen::VectorXd& u) const {
        CandidateSolution s = CandidateSolution::zeros(sys);
        int at = 0;
        for (int i = 0; i < sys.m; ++i, ++at) s.p[i] = 1.0 + u[at] * u[at];
        s.q4[0] = q40_sign * (1.0 + u[at] * u[at]);
        ++at;
        for (int i = 1; i < sys.m; ++i, ++at) s.q4[i] = u[at];
        for (int i = 0; i < sys.m; ++i, ++at) s.q5[i] = u[at];
        if (sys.kind != GatingCombo::LL) {
            s.q2 = u.segment(at, sys.d);
            at += sys.d;
            for (int i = 0; i < sys.m; ++i, at += sys.d)
                s.q3[i] = u.segment(at, sys.d);
        }
        if (sys.kind == GatingCombo::SS)
            for (int i = 0; i < sys.m; ++i, at += sys.d)
                s.q1[i] = u.segment(at, sys.d);
        return s;
    }
};

struct LocalResult {
    double residual_norm = std::numeric_limits<double>::infinity();
    CandidateSolution sol;
};

LocalResult levenberg_marquardt(const PolySystem& sys,
                                const Parameterization& par,
                                Eigen::VectorXd u) {
    auto eval = [&](const Eigen::VectorXd& v) {
        return residuals(sys, par.decode(v));
    };
    const int nv = par.size();
    Eigen::VectorXd f = eval(u);
    double cost = f.squaredNorm();
    double lambda = 1e-3;
    for (int iter = 0; iter < 200 && cost > 1e-24; ++iter) {
        Eigen::MatrixXd J(f.size(), nv);
        for (int j = 0; j < nv; ++j) {
            const double h = 1e-7 * (1.0 + std::abs(u[j]));
            Eigen::VectorXd up = u;
            up[j] += h;
            J.col(j) = (eval(up) - f) / h;
        }
        bool improved = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd A = J.transpose() * J;
            A.diagonal().array() += lambda;
            const Eigen::VectorXd step =
                A.ldlt().solve(-J.transpose() * f);
            Eigen::VectorXd u_new =
                (u + step).cwiseMax(-10.0).cwiseMin(10.0);
            const Eigen::VectorXd f_new = eval(u_new);
            const double cost_new = f_new.squaredNorm();
            if (std::isfinite(cost_new) && cost_new < cost) {
                u = u_new;
                f = f_new;
                cost = cost_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) break;
    }
    return {std::sqrt(cost), par.decode(u)};
}

}  // namespace

SearchReport search_nontrivial(const PolySystem& sys, int restarts,
                               std::uint64_t seed, int threads) {
    sys.validate();
    if (restarts < 1) throw InvalidInput("search: restarts must be >= 1");

    std::vector<LocalResult> results(restarts);
    parallel_for(restarts, threads, [&](int r) {
        Rng rng = Rng(seed).split(static_cast<std::uint64_t>(r));
        Parameterization par{sys, r % 2 == 0 ? 1.0 : -1.0};
        Eigen::VectorXd u(par.size());
        for (int j = 0; j < u.size(); ++j) u[j] = rng.uniform(-2.0, 2.0);
        results[r] = levenberg_marquardt(sys, par, u);
    });

    SearchReport report;
    report.attempts = restarts;
    report.best_residual = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        report.best_residual =
            std::min(report.best_residual, results[r].residual_norm);
        if (!report.found && results[r].residual_norm < 1e-10)
            report.found = results[r].sol;
    }
    return report;
}

}  // namespace hmoe
