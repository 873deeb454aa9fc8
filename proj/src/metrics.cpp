#include "hmoe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmoe/errors.hpp"
#include "hmoe/quadrature.hpp"

namespace hmoe {

namespace {

Eigen::VectorXd zeta(const SecondLevelAtom& e) {
    Eigen::VectorXd z(2 * e.omega.size() + 2);
    z << e.omega, e.expert.eta, e.expert.tau, e.expert.nu;
    return z;
}

int nearest(const Eigen::VectorXd& v,
            const std::vector<Eigen::VectorXd>& anchors) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < anchors.size(); ++j) {
        const double d = (v - anchors[j]).norm();
        if (d < best_d - 1e-15) {  // ties -> lowest true index
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

double order_of_system(int m, const ComboLossOptions& opts,
                       std::vector<std::pair<int, int>>* flagged, int j1,
                       int j2) {
    if (m == 2) return 4.0;
    if (m == 3) return 6.0;
    if (opts.strict)
        throw UnsupportedCellSize("cell with m >= 4 in strict mode");
    if (flagged) flagged->emplace_back(j1, j2);
    return opts.r_large;
}

}  // namespace

VoronoiAssignment voronoi_cells(const MixingMeasure& G,
                                const MixingMeasure& Gstar) {
    if (G.dim != Gstar.dim) throw InvalidInput("voronoi_cells: dim mismatch");
    VoronoiAssignment cells;
    cells.first_level.resize(Gstar.k1());
    cells.second_level.resize(Gstar.k1());

    std::vector<Eigen::VectorXd> a_star;
    for (const auto& g : Gstar.groups) a_star.push_back(g.a);
    for (int i1 = 0; i1 < G.k1(); ++i1)
        cells.first_level[nearest(G.groups[i1].a, a_star)].push_back(i1);

    for (int j1 = 0; j1 < Gstar.k1(); ++j1) {
        cells.second_level[j1].resize(Gstar.k2(j1));
        std::vector<Eigen::VectorXd> z_star;
        for (const auto& e : Gstar.groups[j1].experts) z_star.push_back(zeta(e));
        for (int i1 : cells.first_level[j1]) {
            for (int i2 = 0; i2 < G.k2(i1); ++i2) {
                const int j2 = nearest(zeta(G.groups[i1].experts[i2]), z_star);
                cells.second_level[j1][j2].emplace_back(i1, i2);
            }
        }
    }
    return cells;
}

// Shared evaluator: exps_for(m, j1, j2) supplies the over-specified
// exponents per cell.
template <typename ExpFn>
static double voronoi_loss_impl(const MixingMeasure& G,
                                const MixingMeasure& Gstar,
                                const VoronoiAssignment& cells,
                                ExpFn&& exps_for) {
    double loss = 0.0;
    for (int j1 = 0; j1 < Gstar.k1(); ++j1) {
        const auto& gs = Gstar.groups[j1];
        double wsum = 0.0;
        for (int i1 : cells.first_level[j1]) wsum += std::exp(G.groups[i1].b);
        loss += std::abs(wsum - std::exp(gs.b));

        for (int i1 : cells.first_level[j1]) {
            const auto& gf = G.groups[i1];
            const double w1 = std::exp(gf.b);
            loss += w1 * (gf.a - gs.a).norm();

            double inner = 0.0;
            for (int j2 = 0; j2 < Gstar.k2(j1); ++j2) {
                const auto& cell = cells.second_level[j1][j2];
                const int m = static_cast<int>(cell.size());
                const auto& es = gs.experts[j2];
                double w2sum = 0.0;
                for (const auto& [ci1, ci2] : cell) {
                    if (ci1 != i1) continue;  // weight by this group's atoms
                    const auto& ef = G.groups[ci1].experts[ci2];
                    const double w2 = std::exp(ef.beta);
                    const double dw = (ef.omega - es.omega).norm();
                    const double de = (ef.expert.eta - es.expert.eta).norm();
                    const double dt = std::abs(ef.expert.tau - es.expert.tau);
                    const double dn = std::abs(ef.expert.nu - es.expert.nu);
                    if (m == 1) {
                        inner += w2 * (dw + de + dt + dn);
                    } else {
                        const RateExponents r = exps_for(m, j1, j2);
                        inner += w2 * (dw * dw + std::pow(de, r.r1) +
                                       std::pow(dt, r.r2) + std::pow(dn, r.r3));
                    }
                }
                for (const auto& [ci1, ci2] : cell)
                    if (ci1 == i1)
                        w2sum += std::exp(G.groups[ci1].experts[ci2].beta);
                inner += std::abs(w2sum - std::exp(es.beta));
            }
            loss += w1 * inner;
        }
    }
    return loss;
}

double voronoi_loss(const MixingMeasure& G, const MixingMeasure& Gstar,
                    const RateExponents& exps, const VoronoiAssignment& cells) {
    return voronoi_loss_impl(G, Gstar, cells,
                             [&](int, int, int) { return exps; });
}

ComboLossResult loss_for_combo(const MixingMeasure& G,
                               const MixingMeasure& Gstar, GatingCombo combo,
                               const VoronoiAssignment& cells,
                               const ComboLossOptions& opts) {
    ComboLossResult result;
    result.value = voronoi_loss_impl(
        G, Gstar, cells, [&](int m, int j1, int j2) {
            const double r =
                order_of_system(m, opts, &result.flagged_cells, j1, j2);
            RateExponents e;
            if (combo == GatingCombo::LL) {
                e = {2.0, r, 0.5 * r};
            } else {
                e = {0.5 * r, r, 0.5 * r};
            }
            return e;
        });
    return result;
}

namespace {

// Integration window covering every mixture component at probe x.
std::pair<double, double> y_range(const MixingMeasure& G1,
                                  const MixingMeasure& G2,
                                  const Eigen::VectorXd& x, double span) {
    double mu_min = std::numeric_limits<double>::infinity();
    double mu_max = -mu_min;
    double nu_max = 0.0;
    for (const auto* G : {&G1, &G2}) {
        for (const auto& g : G->groups) {
            for (const auto& e : g.experts) {
                const double mu = e.expert.eta.dot(x) + e.expert.tau;
                mu_min = std::min(mu_min, mu);
                mu_max = std::max(mu_max, mu);
                nu_max = std::max(nu_max, e.expert.nu);
            }
        }
    }
    const double pad = span * std::sqrt(nu_max);
    return {mu_min - pad, mu_max + pad};
}

template <typename Integrand>
double probe_average(const MixingMeasure& G1, const MixingMeasure& G2,
                     const Eigen::MatrixXd& probes, const QuadratureSpec& quad,
                     Integrand&& make_value) {
    if (probes.rows() == 0) throw InvalidInput("no probes");
    if (probes.cols() != G1.dim) throw InvalidInput("probe dim mismatch");
    const AdaptiveQuadrature integrator(quad.abs_tol, quad.max_depth);
    double acc = 0.0;
    for (int p = 0; p < probes.rows(); ++p) {
        const Eigen::VectorXd x = probes.row(p);
        const auto [lo, hi] = y_range(G1, G2, x, quad.sigma_span);
        acc += make_value(integrator, x, lo, hi);
    }
    return acc / probes.rows();
}

}  // namespace

double hellinger(const MixingMeasure& G1, const MixingMeasure& G2,
                 GatingCombo combo, const Eigen::MatrixXd& x_probes,
                 const QuadratureSpec& quad) {
    return probe_average(
        G1, G2, x_probes, quad,
        [&](const AdaptiveQuadrature& integ, const Eigen::VectorXd& x,
            double lo, double hi) {
            const double h2 =
                0.5 * integ.integrate(
                          [&](double y) {
                              const double s =
                                  std::sqrt(conditional_density(G1, combo, x, y)) -
                                  std::sqrt(conditional_density(G2, combo, x, y));
                              return s * s;
                          },
                          lo, hi);
            return std::sqrt(std::max(0.0, h2));
        });
}

double total_variation(const MixingMeasure& G1, const MixingMeasure& G2,
                       GatingCombo combo, const Eigen::MatrixXd& x_probes,
                       const QuadratureSpec& quad) {
    return probe_average(
        G1, G2, x_probes, quad,
        [&](const AdaptiveQuadrature& integ, const Eigen::VectorXd& x,
            double lo, double hi) {
            return 0.5 * integ.integrate(
                             [&](double y) {
                                 return std::abs(
                                     conditional_density(G1, combo, x, y) -
                                     conditional_density(G2, combo, x, y));
                             },
                             lo, hi);
        });
}

ExpertError expert_error(const MixingMeasure& G_hat,
                         const MixingMeasure& Gstar,
                         const VoronoiAssignment& cells,
                         const Eigen::MatrixXd& x_probes) {
    ExpertError err;
    for (int j1 = 0; j1 < Gstar.k1(); ++j1) {
        for (int j2 = 0; j2 < Gstar.k2(j1); ++j2) {
            const auto& cell = cells.second_level[j1][j2];
            const bool over = cell.size() > 1;
            const auto& eta_star = Gstar.groups[j1].experts[j2].expert.eta;
            for (const auto& [i1, i2] : cell) {
                const Eigen::VectorXd d_eta =
                    G_hat.groups[i1].experts[i2].expert.eta - eta_star;
                err.max_eta_distance =
                    std::max(err.max_eta_distance, d_eta.norm());
                if (over)
                    err.max_eta_distance_over_specified = std::max(
                        err.max_eta_distance_over_specified, d_eta.norm());
                for (int p = 0; p < x_probes.rows(); ++p)
                    err.max_prediction_error =
                        std::max(err.max_prediction_error,
                                 std::abs(d_eta.dot(x_probes.row(p))));
            }
        }
    }
    return err;
}

Eigen::MatrixXd quasi_random_probes(int dim, int count) {
    // R_d sequence: x_n = frac(n * phi_d^{-k}) with phi_d the generalized
    // golden ratio, mapped onto [-1, 1]^d.
    double phi = 1.0;
    for (int it = 0; it < 64; ++it)
        phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    Eigen::VectorXd alpha(dim);
    double p = 1.0;
    for (int j = 0; j < dim; ++j) {
        p /= phi;
        alpha[j] = p;
    }
    Eigen::MatrixXd probes(count, dim);
    for (int n = 0; n < count; ++n)
        for (int j = 0; j < dim; ++j) {
            const double v = std::fmod(0.5 + (n + 1) * alpha[j], 1.0);
            probes(n, j) = 2.0 * v - 1.0;
        }
    return probes;
}

}  // namespace hmoe
