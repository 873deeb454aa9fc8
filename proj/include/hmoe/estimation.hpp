#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmoe/model.hpp"

namespace hmoe {

enum class InitScheme { Random, PerturbedTruth };

struct FitConfig {
    int k1 = 1;          // known first-level count
    int k2 = 1;          // (possibly over-specified) experts per group
    int max_iters = 500;
    double tol = 1e-8;   // relative log-likelihood improvement
    int restarts = 8;
    InitScheme init = InitScheme::Random;
    double perturb_scale = 0.25;  // used by PerturbedTruth
    int gate_steps = 5;           // gradient ascent budget per M-step
    std::uint64_t seed = 0;

    double nu_min = 1e-4;
    double param_clamp = 50.0;  // compact parameter box per coordinate
    int threads = 0;            // 0 = auto

    void validate() const;
};

struct FitResult {
    MixingMeasure estimate;  // normalized
    double final_loglik = 0.0;
    int iters = 0;
    int restart_index = 0;
    std::vector<double> trace;  // per-iteration log-likelihoods
};

/// E-step: row i holds the posterior over flattened (i1, i2) paths
/// (path = i1 * k2 + i2) given (x_i, y_i). Rows sum to 1.
Eigen::MatrixXd responsibilities(const MixingMeasure& G, GatingCombo combo,
                                 const Dataset& data);

/// Closed-form expert M-step: responsibility-weighted least squares for
/// (eta, tau) with a 1e-8 ridge fallback; nu = weighted mean squared
/// residual floored at nu_min. Paths with total responsibility < 1e-12 are
/// left untouched for this iteration.
void m_step_experts(MixingMeasure& G, const Eigen::MatrixXd& resp,
                    const Dataset& data, double nu_min);

/// Expected complete-data log-likelihood restricted to the gate parameters.
double gate_objective(const MixingMeasure& G, GatingCombo combo,
                      const Eigen::MatrixXd& resp, const Dataset& data);

/// Analytic gradient of gate_objective, flattened in the order
/// [a_0, b_0, ..., a_{k1-1}, b_{k1-1}, omega_00, beta_00, ...].
Eigen::VectorXd gate_gradient(const MixingMeasure& G, GatingCombo combo,
                              const Eigen::MatrixXd& resp,
                              const Dataset& data);

Eigen::VectorXd pack_gate_params(const MixingMeasure& G);
void unpack_gate_params(MixingMeasure& G, const Eigen::VectorXd& theta);

/// `budget` backtracking gradient-ascent steps on gate_objective; never
/// decreases it. Re-applies the translation normalization afterwards.
void m_step_gates(MixingMeasure& G, GatingCombo combo,
                  const Eigen::MatrixXd& resp, const Dataset& data,
                  int budget, double param_clamp);

/// Generalized EM with multi-start; best restart by final log-likelihood.
/// Deterministic given (data, cfg). Restarts run in parallel.
/// PerturbedTruth initialization requires data.truth.
FitResult fit_mle(const Dataset& data, GatingCombo combo,
                  const FitConfig& cfg);

}  // namespace hmoe
