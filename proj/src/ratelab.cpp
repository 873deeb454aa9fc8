#include "hmoe/ratelab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "hmoe/errors.hpp"
#include "hmoe/parallel.hpp"
#include "hmoe/rng.hpp"

namespace hmoe {

std::string to_string(RateMetric m) {
    switch (m) {
        case RateMetric::VoronoiCombo: return "voronoi_combo";
        case RateMetric::Hellinger: return "hellinger";
        case RateMetric::ExpertError: return "expert_error";
    }
    throw InvalidInput("unknown metric");
}

RateMetric rate_metric_from_string(const std::string& s) {
    if (s == "voronoi_combo") return RateMetric::VoronoiCombo;
    if (s == "hellinger") return RateMetric::Hellinger;
    if (s == "expert_error") return RateMetric::ExpertError;
    throw InvalidInput("unknown metric: " + s);
}

void RateExperiment::validate() const {
    truth.validate();
    if (n_grid.size() < 4) throw InvalidInput("n_grid needs >= 4 sizes");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw InvalidInput("n_grid must be strictly increasing");
    if (replicates < 5) throw InvalidInput("replicates must be >= 5");
    if (fit_k2 < 1) throw InvalidInput("fit_k2 must be >= 1");
}

MixingMeasure default_rate_truth() {
    // Gate locations stay strictly inside the [-1, 1] input box: a Laplace
    // logit -|a - x| + b is linear in x once |a| >= 1, so locations outside
    // the box leave only b - a identified and gate-parameter error stops
    // shrinking with n. Expert slope separations >= 1.0, nu = 0.25.
    auto atom = [](double omega, double beta, double eta, double tau) {
        SecondLevelAtom e;
        e.omega = Eigen::VectorXd::Constant(1, omega);
        e.beta = beta;
        e.expert.eta = Eigen::VectorXd::Constant(1, eta);
        e.expert.tau = tau;
        e.expert.nu = 0.25;
        return e;
    };
    MixingMeasure G;
    G.dim = 1;
    Group g0;
    g0.a = Eigen::VectorXd::Constant(1, 0.7);
    g0.b = 0.5;
    g0.experts = {atom(0.6, 0.5, 2.0, 1.0), atom(-0.6, 0.0, -1.0, -0.5)};
    Group g1;
    g1.a = Eigen::VectorXd::Constant(1, -0.7);
    g1.b = 0.0;
    g1.experts = {atom(-0.6, 0.5, 0.5, 2.0), atom(0.6, 0.0, 3.0, -2.0)};
    G.groups = {g0, g1};
    return G;
}

std::tuple<double, double, double> fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw InvalidInput("need >= 3 points");
    const int n = static_cast<int>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [nn, v] : points) {
        if (!(v > 0.0) || !(nn > 0.0))
            throw InvalidInput("loglog regression needs positive values");
        const double x = std::log(nn), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double ssr = 0.0;
    for (const auto& [nn, v] : points) {
        const double r = std::log(v) - intercept - slope * std::log(nn);
        ssr += r * r;
    }
    const double s2 = n > 2 ? ssr / (n - 2) : 0.0;
    const double stderr_slope = std::sqrt(s2 * n / denom);
    return {slope, intercept, stderr_slope};
}

namespace {

struct CellKey {
    int n, rep;
    bool operator<(const CellKey& o) const {
        return std::tie(n, rep) < std::tie(o.n, o.rep);
    }
};

std::map<CellKey, CellResult> read_checkpoint(const std::string& path) {
    std::map<CellKey, CellResult> done;
    std::ifstream in(path);
    if (!in) return done;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'n') continue;  // header
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cols;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        if (cols.size() != 7) continue;
        CellResult c;
        c.n = std::stoi(cols[0]);
        c.replicate = std::stoi(cols[1]);
        c.metric_value = std::stod(cols[2]);
        c.loglik = std::stod(cols[3]);
        c.truth_loglik = std::stod(cols[4]);
        c.iters = std::stoi(cols[5]);
        c.ok = cols[6] == "ok";
        done[{c.n, c.replicate}] = c;
    }
    return done;
}

void append_checkpoint(std::ofstream& out, const CellResult& c,
                       std::mutex& mu) {
    std::lock_guard<std::mutex> lock(mu);
    out.precision(17);
    out << c.n << "," << c.replicate << "," << c.metric_value << ","
        << c.loglik << "," << c.truth_loglik << "," << c.iters << ","
        << (c.ok ? "ok" : "failed") << "\n";
    out.flush();
}

CellResult default_cell(const RateExperiment& exp, int n_index, int rep) {
    const int n = exp.n_grid[n_index];
    CellResult cell;
    cell.n = n;
    cell.replicate = rep;

    const std::uint64_t cell_seed =
        Rng(exp.seed)
            .split(static_cast<std::uint64_t>(n_index) * 100003ULL +
                   static_cast<std::uint64_t>(rep))
            .next_u64();
    const MixingMeasure truth_norm = normalize(exp.truth, exp.combo);
    const Dataset data =
        sample(truth_norm, exp.combo, n, InputLaw::UniformBox, cell_seed);

    FitConfig cfg = exp.fit_cfg;
    cfg.k1 = truth_norm.k1();
    cfg.k2 = exp.fit_k2;
    cfg.seed = cell_seed;
    try {
        const FitResult fit = fit_mle(data, exp.combo, cfg);
        cell.loglik = fit.final_loglik;
        cell.truth_loglik = log_likelihood(truth_norm, exp.combo, data);
        cell.iters = fit.iters;
        const VoronoiAssignment cells = voronoi_cells(fit.estimate, truth_norm);
        switch (exp.metric) {
            case RateMetric::VoronoiCombo:
                cell.metric_value =
                    loss_for_combo(fit.estimate, truth_norm, exp.combo, cells)
                        .value;
                break;
            case RateMetric::Hellinger:
                cell.metric_value =
                    hellinger(fit.estimate, truth_norm, exp.combo,
                              quasi_random_probes(truth_norm.dim, exp.probes));
                break;
            case RateMetric::ExpertError: {
                const ExpertError err = expert_error(
                    fit.estimate, truth_norm, cells,
                    quasi_random_probes(truth_norm.dim, exp.probes));
                cell.metric_value = err.max_eta_distance_over_specified > 0.0
                                        ? err.max_eta_distance_over_specified
                                        : err.max_eta_distance;
                break;
            }
        }
        cell.ok = true;
    } catch (const FitFailed&) {
        cell.ok = false;
    }
    return cell;
}

}  // namespace

RateReport run_rate_experiment(const RateExperiment& exp, const CellFn& cell_fn) {
    exp.validate();
    std::map<CellKey, CellResult> done;
    std::ofstream ckpt;
    std::mutex ckpt_mu;
    if (!exp.checkpoint_path.empty()) {
        done = read_checkpoint(exp.checkpoint_path);
        ckpt.open(exp.checkpoint_path, std::ios::app);
    }

    struct Task {
        int n_index, rep;
    };
    std::vector<Task> tasks;
    for (std::size_t ni = 0; ni < exp.n_grid.size(); ++ni)
        for (int rep = 0; rep < exp.replicates; ++rep)
            if (!done.count({exp.n_grid[ni], rep}))
                tasks.push_back({static_cast<int>(ni), rep});

    std::vector<CellResult> fresh(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), exp.threads, [&](int t) {
        fresh[t] = cell_fn(exp.n_grid[tasks[t].n_index], tasks[t].rep);
        if (ckpt.is_open()) append_checkpoint(ckpt, fresh[t], ckpt_mu);
    });
    for (const auto& c : fresh) done[{c.n, c.replicate}] = c;

    RateReport report;
    report.theoretical_exponent = exp.theoretical_exponent;
    for (const auto& [key, c] : done) report.cells.push_back(c);

    std::vector<std::pair<double, double>> points;
    for (int n : exp.n_grid) {
        std::vector<double> vals;
        for (const auto& c : report.cells)
            if (c.n == n && c.ok) vals.push_back(c.metric_value);
        report.used_replicates += static_cast<int>(vals.size());
        report.excluded_replicates +=
            exp.replicates - static_cast<int>(vals.size());
        if (vals.empty()) continue;
        std::sort(vals.begin(), vals.end());
        const std::size_t h = vals.size() / 2;
        const double median = vals.size() % 2 == 1
                                  ? vals[h]
                                  : 0.5 * (vals[h - 1] + vals[h]);
        report.median_per_n.emplace_back(n, median);
        points.emplace_back(static_cast<double>(n), std::max(median, 1e-12));
    }
    if (points.size() >= 3)
        std::tie(report.slope, report.intercept, report.slope_stderr) =
            fit_loglog_slope(points);

    const int total =
        static_cast<int>(exp.n_grid.size()) * exp.replicates;
    report.verdict = report.excluded_replicates > 0.2 * total
                         ? "ExperimentDegraded"
                         : "ok";
    return report;
}

RateReport run_rate_experiment(const RateExperiment& exp) {
    return run_rate_experiment(exp, [&](int n, int rep) {
        int n_index = 0;
        for (std::size_t i = 0; i < exp.n_grid.size(); ++i)
            if (exp.n_grid[i] == n) n_index = static_cast<int>(i);
        return default_cell(exp, n_index, rep);
    });
}

ComboComparison compare_combos(
    const std::vector<std::pair<GatingCombo, RateReport>>& reports,
    double required_margin) {
    ComboComparison cmp;
    double ll_slope = 0.0, ll_stderr = 0.0;
    bool has_ll = false;
    for (const auto& [combo, rep] : reports) {
        ComboComparison::Entry e;
        e.combo = combo;
        e.slope = rep.slope;
        e.slope_stderr = rep.slope_stderr;
        std::vector<double> gaps;
        for (const auto& c : rep.cells)
            if (c.ok) gaps.push_back(std::abs(c.loglik - c.truth_loglik));
        if (!gaps.empty()) {
            std::sort(gaps.begin(), gaps.end());
            e.loglik_gap = gaps[gaps.size() / 2];
        }
        if (combo == GatingCombo::LL) {
            has_ll = true;
            ll_slope = rep.slope;
            ll_stderr = rep.slope_stderr;
            cmp.entries.insert(cmp.entries.begin(), e);
        } else {
            cmp.entries.push_back(e);
        }
    }
    if (!has_ll || reports.size() < 2) {
        cmp.verdict = "insufficient";
        return cmp;
    }
    double margin = std::numeric_limits<double>::infinity();
    double band = ll_stderr;
    for (const auto& e : cmp.entries) {
        if (e.combo == GatingCombo::LL) continue;
        margin = std::min(margin, e.slope - ll_slope);
        band = std::max(band, ll_stderr + e.slope_stderr);
    }
    cmp.margin = margin;
    cmp.ordering_holds = margin >= required_margin;
    if (cmp.ordering_holds)
        cmp.verdict = "ordering_holds";
    else if (std::abs(margin) <= band + 1e-12)
        cmp.verdict = "indistinguishable";
    else
        cmp.verdict = "ordering_violated";
    return cmp;
}

}  // namespace hmoe
