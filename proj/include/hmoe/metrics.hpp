#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmoe/model.hpp"

namespace hmoe {

/// Cell maps from true atoms to the fitted atoms nearest to them.
/// first_level[j1] lists fitted group indices; second_level[j1][j2] lists
/// (fitted_group, fitted_expert) pairs. Ties break to the lowest true index.
struct VoronoiAssignment {
    std::vector<std::vector<int>> first_level;
    std::vector<std::vector<std::vector<std::pair<int, int>>>> second_level;
};

/// Exponents applied to (||d_eta||, |d_tau|, |d_nu|) in over-specified cells.
struct RateExponents {
    double r1 = 1.0;
    double r2 = 1.0;
    double r3 = 1.0;
};

/// Order r(m) of the gating polynomial system: 4 for m=2, 6 for m=3,
/// `r_large` (conjectured, default 7) for m >= 4.
struct ComboLossOptions {
    double r_large = 7.0;
    bool strict = false;  // throw UnsupportedCellSize on cells with m >= 4
};

struct ComboLossResult {
    double value = 0.0;
    std::vector<std::pair<int, int>> flagged_cells;  // (j1, j2) with m >= 4
};

/// Nearest-neighbor assignment of fitted groups to true first-level atoms
/// (by ||a - a*||) and of fitted experts to true second-level atoms within
/// the matched group (by the concatenated (omega, eta, tau, nu) distance).
VoronoiAssignment voronoi_cells(const MixingMeasure& G,
                                const MixingMeasure& Gstar);

/// Voronoi loss with fixed exponents on all over-specified cells; the
/// omega term always uses exponent 2 there and exponent 1 in singleton cells.
double voronoi_loss(const MixingMeasure& G, const MixingMeasure& Gstar,
                    const RateExponents& exps, const VoronoiAssignment& cells);

/// Theorem-specific loss: per-cell exponents resolved from the cell
/// cardinality m via r(m); SS/SL use (r/2, r, r/2), LL uses (2, r, r/2).
ComboLossResult loss_for_combo(const MixingMeasure& G,
                               const MixingMeasure& Gstar, GatingCombo combo,
                               const VoronoiAssignment& cells,
                               const ComboLossOptions& opts = {});

struct QuadratureSpec {
    double abs_tol = 1e-9;
    int max_depth = 48;
    double sigma_span = 12.0;  // integration range in sqrt(nu_max) units
};

/// Probe-averaged Hellinger distance E_X[h(p_G1(.|X), p_G2(.|X))], one
/// adaptive quadrature in y per probe row.
double hellinger(const MixingMeasure& G1, const MixingMeasure& G2,
                 GatingCombo combo, const Eigen::MatrixXd& x_probes,
                 const QuadratureSpec& quad = {});

double total_variation(const MixingMeasure& G1, const MixingMeasure& G2,
                       GatingCombo combo, const Eigen::MatrixXd& x_probes,
                       const QuadratureSpec& quad = {});

struct ExpertError {
    double max_prediction_error = 0.0;  // max |eta_hat'x - eta*'x|
    double max_eta_distance = 0.0;      // max ||eta_hat - eta*||
    /// Same maxima restricted to over-specified cells (|V| > 1); zero when
    /// every cell is a singleton.
    double max_eta_distance_over_specified = 0.0;
};

ExpertError expert_error(const MixingMeasure& G_hat,
                         const MixingMeasure& Gstar,
                         const VoronoiAssignment& cells,
                         const Eigen::MatrixXd& x_probes);

/// Quasi-random probes (R_d additive recurrence) in [-1, 1]^d; fixed for a
/// given (dim, count) so metric reports are deterministic.
Eigen::MatrixXd quasi_random_probes(int dim, int count);

}  // namespace hmoe
