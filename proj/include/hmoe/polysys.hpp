#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hmoe/model.hpp"

namespace hmoe {

/// One of the three gating polynomial-equation systems. The SS system has
/// unknowns (p, q1_i, q2, q3_i, q4_i, q5_i); SL drops q1; LL keeps only
/// (p, q4, q5).
struct PolySystem {
    GatingCombo kind = GatingCombo::SS;
    int m = 2;  // component count
    int r = 1;  // max total order
    int d = 1;  // gate dimension (unused by LL)

    void validate() const;
};

/// Multi-index tuple of one monomial. Vectors are empty when the kind
/// omits the corresponding variable block.
struct TermTuple {
    Eigen::VectorXi a1, a2, a3;  // size d (SS: all; SL: a2, a3; LL: none)
    int a4 = 0;
    int a5 = 0;
};

/// Equation index (rho1, rho2); LL uses rho2 only.
struct EquationIndex {
    Eigen::VectorXi rho1;
    int rho2 = 0;
    int total() const { return rho1.sum() + rho2; }
};

struct CandidateSolution {
    Eigen::VectorXd p;                // m
    std::vector<Eigen::VectorXd> q1;  // m x d (SS only)
    Eigen::VectorXd q2;               // d (SS, SL)
    std::vector<Eigen::VectorXd> q3;  // m x d (SS, SL)
    Eigen::VectorXd q4;               // m
    Eigen::VectorXd q5;               // m

    static CandidateSolution zeros(const PolySystem& sys);
};

/// All equations with 1 <= |rho1| + rho2 <= r, ordered by increasing total
/// order (so the order-r' residuals are a prefix of the order-r ones).
std::vector<EquationIndex> enumerate_equations(const PolySystem& sys);

/// Complete, duplicate-free enumeration of the monomial multi-indices of
/// one equation, per the kind's constraints.
std::vector<TermTuple> enumerate_terms(const PolySystem& sys,
                                       const Eigen::VectorXi& rho1, int rho2);

/// One residual per equation; monomial coefficient is 1/(a1! a2! a3! a4! a5!)
/// with vector factorials componentwise.
Eigen::VectorXd residuals(const PolySystem& sys, const CandidateSolution& sol);

/// True iff min |p_i| > tol and max |q4_i| > tol.
bool is_nontrivial(const CandidateSolution& sol, double tol);

struct SearchReport {
    std::optional<CandidateSolution> found;
    double best_residual = 0.0;  // best residual 2-norm over all restarts
    int attempts = 0;
};

/// Levenberg-Marquardt least-squares search over a parameterization that
/// builds non-triviality in (p_i >= 1, |q4_0| >= 1; both are without loss
/// of generality by the system's two scaling symmetries). Restarts
/// are independent and merged by index; deterministic given seed. A solution
/// is reported iff its residual 2-norm is below 1e-10. Evidence, not proof.
SearchReport search_nontrivial(const PolySystem& sys, int restarts,
                               std::uint64_t seed, int threads = 0);

}  // namespace hmoe
