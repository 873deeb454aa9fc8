#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmoe/errors.hpp"
#include "hmoe/rng.hpp"

namespace hmoe {

/// Gating family used at (first level, second level).
enum class GatingCombo { SS, SL, LL };

std::string to_string(GatingCombo combo);
GatingCombo combo_from_string(const std::string& s);

/// First-level gate uses linear logits a'x + b for SS/SL, distance logits
/// -||a - x|| + b for LL. Second level is linear for SS, distance for SL/LL.
bool first_level_is_laplace(GatingCombo combo);
bool second_level_is_laplace(GatingCombo combo);

struct ExpertAtom {
    Eigen::VectorXd eta;  // regression slope
    double tau = 0.0;     // intercept
    double nu = 1.0;      // variance, > 0
};

/// One second-level atom: its gate (omega, beta) and its Gaussian expert.
struct SecondLevelAtom {
    Eigen::VectorXd omega;
    double beta = 0.0;
    ExpertAtom expert;
};

struct Group {
    Eigen::VectorXd a;
    double b = 0.0;
    std::vector<SecondLevelAtom> experts;
};

/// Full parameter set of a two-level Gaussian HMoE.
struct MixingMeasure {
    int dim = 0;
    std::vector<Group> groups;

    int k1() const { return static_cast<int>(groups.size()); }
    int k2(int i1) const { return static_cast<int>(groups[i1].experts.size()); }
    int total_paths() const;

    /// Throws InvalidModel on shape errors, non-finite values, or nu <= 0.
    void validate() const;
};

enum class Level { First, Second };

enum class InputLaw { UniformBox, TruncatedNormal };

struct Dataset {
    Eigen::MatrixXd x;  // n x d
    Eigen::VectorXd y;  // n
    std::uint64_t seed = 0;
    std::optional<MixingMeasure> truth;
    std::optional<GatingCombo> truth_combo;

    int n() const { return static_cast<int>(y.size()); }
    int dim() const { return static_cast<int>(x.cols()); }
};

/// Overflow-safe softmax (max subtraction). Throws InvalidInput on
/// non-finite entries.
Eigen::VectorXd softmax(const Eigen::VectorXd& v);

/// Gate weights at x for one level. group_index is required (and only
/// meaningful) for Level::Second.
Eigen::VectorXd gate_weights(const MixingMeasure& G, GatingCombo combo,
                             const Eigen::VectorXd& x, Level level,
                             int group_index = -1);

/// p(y | x) under the combo's density family. Strictly positive.
double conditional_density(const MixingMeasure& G, GatingCombo combo,
                           const Eigen::VectorXd& x, double y);

/// Ancestral sampling: x ~ input law on [-1,1]^d, i1 ~ first-level gate,
/// i2 ~ second-level gate, y ~ N(eta'x + tau, nu). Bit-reproducible.
Dataset sample(const MixingMeasure& G, GatingCombo combo, int n,
               InputLaw law, std::uint64_t seed);

/// Mean log conditional density; density floored at 1e-300 before log.
double log_likelihood(const MixingMeasure& G, GatingCombo combo,
                      const Dataset& data);

/// Translation normalization (assumption-A.2 style): softmax levels pin the
/// last atom's (slope, bias) to zero, Laplace levels pin only the bias.
/// Leaves all gate weights, and hence the density, unchanged.
MixingMeasure normalize(const MixingMeasure& G, GatingCombo combo);

// --- serialization ---

/// {"combo": ..., "dim": ..., "groups": [{"a", "b", "experts": [...]}]}
std::string to_json(const MixingMeasure& G, GatingCombo combo);
std::pair<MixingMeasure, GatingCombo> measure_from_json(const std::string& text);

/// CSV with header x_0..x_{d-1},y; sidecar JSON carries seed and truth.
void write_dataset_csv(const Dataset& data, const std::string& csv_path,
                       const std::string& sidecar_path);
Dataset read_dataset_csv(const std::string& csv_path,
                         const std::string& sidecar_path = "");

}  // namespace hmoe
