#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "hmoe/estimation.hpp"
#include "hmoe/metrics.hpp"
#include "hmoe/model.hpp"

namespace hmoe {

enum class RateMetric { VoronoiCombo, Hellinger, ExpertError };

std::string to_string(RateMetric m);
RateMetric rate_metric_from_string(const std::string& s);

/// One convergence-rate experiment: sample -> fit -> metric over an
/// (n, replicate) grid, then OLS of log(median metric) on log(n).
struct RateExperiment {
    GatingCombo combo = GatingCombo::SS;
    MixingMeasure truth;
    int fit_k2 = 1;
    std::vector<int> n_grid;
    int replicates = 5;
    RateMetric metric = RateMetric::VoronoiCombo;
    FitConfig fit_cfg;
    std::uint64_t seed = 0;
    int probes = 512;  // quasi-random E_X probes for hellinger/expert error
    int threads = 0;
    double theoretical_exponent = -0.5;
    std::string checkpoint_path;  // empty = no checkpointing

    void validate() const;
};

struct CellResult {
    int n = 0;
    int replicate = 0;
    double metric_value = 0.0;
    double loglik = 0.0;
    double truth_loglik = 0.0;
    int iters = 0;
    bool ok = false;
};

struct RateReport {
    std::vector<CellResult> cells;  // sorted by (n, replicate)
    std::vector<std::pair<int, double>> median_per_n;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double theoretical_exponent = 0.0;
    int used_replicates = 0;
    int excluded_replicates = 0;
    std::string verdict;  // "ok" | "ExperimentDegraded"
};

/// Well-separated d=1, k1*=2, k2*=2 default truth for rate runs.
MixingMeasure default_rate_truth();

/// OLS on (ln n, ln value). Throws InvalidInput on nonpositive values or
/// fewer than 3 points.
std::tuple<double, double, double> fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points);

using CellFn = std::function<CellResult(int n, int replicate)>;

RateReport run_rate_experiment(const RateExperiment& exp);

/// Test hook: custom per-cell evaluator (used to inject exact metric
/// series); checkpointing and aggregation behave identically.
RateReport run_rate_experiment(const RateExperiment& exp, const CellFn& cell);

struct ComboComparison {
    struct Entry {
        GatingCombo combo;
        double slope = 0.0;
        double slope_stderr = 0.0;
        double loglik_gap = 0.0;  // median |fit loglik - truth loglik|
    };
    std::vector<Entry> entries;  // LL first when present
    double margin = 0.0;         // min over others of (slope_other - slope_LL)
    bool ordering_holds = false;
    std::string verdict;  // "ordering_holds" | "indistinguishable" | "ordering_violated"
};

/// Cross-combo ordering report on eta-error slopes (Table-style summary).
ComboComparison compare_combos(
    const std::vector<std::pair<GatingCombo, RateReport>>& reports,
    double required_margin);

}  // namespace hmoe
