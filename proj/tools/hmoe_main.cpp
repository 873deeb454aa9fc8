// hmoe: workbench CLI for two-level Gaussian hierarchical mixtures of
// experts. Subcommands: simulate, fit, metrics, polysys, rates, route-demo.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmoe/estimation.hpp"
#include "hmoe/metrics.hpp"
#include "hmoe/model.hpp"
#include "hmoe/polysys.hpp"
#include "hmoe/ratelab.hpp"
#include "hmoe/routing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hmoe;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfigError = 2;
constexpr int kExitDegraded = 3;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("config parse error: ") + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

struct Manifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    void write(const fs::path& dir) const {
        json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["version"] = kVersion;
        j["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        j["outputs"] = outputs;
        write_text(dir / "manifest.json", j.dump(2) + "\n");
    }
};

FitConfig fit_config_from_json(const json& j) {
    FitConfig cfg;
    cfg.k1 = j.value("k1", 1);
    cfg.k2 = j.value("k2", 1);
    cfg.max_iters = j.value("max_iters", 500);
    cfg.tol = j.value("tol", 1e-8);
    cfg.restarts = j.value("restarts", 8);
    cfg.gate_steps = j.value("gate_steps", 5);
    cfg.seed = j.value("seed", 0ULL);
    cfg.perturb_scale = j.value("perturb_scale", 0.25);
    const std::string init = j.value("init", "random");
    if (init == "random")
        cfg.init = InitScheme::Random;
    else if (init == "perturbed_truth")
        cfg.init = InitScheme::PerturbedTruth;
    else
        throw InvalidInput("unknown init scheme: " + init);
    cfg.validate();
    return cfg;
}

int cmd_simulate(const std::string& config_path, const fs::path& out_dir) {
    const json cfg = load_config(config_path);
    auto [truth, combo] = measure_from_json(cfg.at("truth").dump());
    const int n = cfg.at("n");
    const std::uint64_t seed = cfg.value("seed", 0ULL);
    const InputLaw law = cfg.value("input_law", "uniform") == "normal"
                             ? InputLaw::TruncatedNormal
                             : InputLaw::UniformBox;

    Manifest man{"simulate", fnv1a(cfg.dump()), seed};
    const Dataset data = sample(truth, combo, n, law, seed);
    write_dataset_csv(data, (out_dir / "data.csv").string(),
                      (out_dir / "data.json").string());
    man.outputs = {"data.csv", "data.json"};
    man.write(out_dir);
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& config_path,
            const fs::path& out_dir, int threads) {
    const json cfg_json = load_config(config_path);
    FitConfig cfg = fit_config_from_json(cfg_json);
    cfg.threads = threads;
    const GatingCombo combo = combo_from_string(cfg_json.at("combo"));

    const std::string sidecar =
        fs::path(data_path).replace_extension(".json").string();
    const Dataset data =
        read_dataset_csv(data_path, fs::exists(sidecar) ? sidecar : "");

    Manifest man{"fit", fnv1a(cfg_json.dump()), cfg.seed};
    const FitResult fit = fit_mle(data, combo, cfg);

    json out;
    out["estimate"] = json::parse(to_json(fit.estimate, combo));
    out["final_loglik"] = fit.final_loglik;
    out["iters"] = fit.iters;
    out["restart_index"] = fit.restart_index;
    write_text(out_dir / "fit.json", out.dump(2) + "\n");

    std::ofstream trace(out_dir / "trace.csv");
    trace << "iter,loglik\n";
    trace.precision(17);
    for (std::size_t i = 0; i < fit.trace.size(); ++i)
        trace << i << "," << fit.trace[i] << "\n";

    man.outputs = {"fit.json", "trace.csv"};
    man.write(out_dir);
    return 0;
}

int cmd_metrics(const std::string& g1_path, const std::string& g2_path,
                const std::string& combo_str, int probes,
                const fs::path& out_dir) {
    auto [g1, c1] = measure_from_json(slurp(g1_path));
    auto [g2, c2] = measure_from_json(slurp(g2_path));
    (void)c1;
    (void)c2;
    const GatingCombo combo = combo_from_string(combo_str);
    Manifest man{"metrics",
                 fnv1a(g1_path + "|" + g2_path + "|" + combo_str), 0};

    const Eigen::MatrixXd x_probes = quasi_random_probes(g1.dim, probes);
    const VoronoiAssignment cells = voronoi_cells(g1, g2);
    const ComboLossResult combo_loss = loss_for_combo(g1, g2, combo, cells);
    const ExpertError experr = expert_error(g1, g2, cells, x_probes);

    json records = json::array();
    auto record = [&](const std::string& name, double value) {
        records.push_back({{"metric", name},
                           {"combo", combo_str},
                           {"value", value},
                           {"probes", probes},
                           {"tolerance", 1e-9}});
    };
    record("voronoi_combo", combo_loss.value);
    record("hellinger", hellinger(g1, g2, combo, x_probes));
    record("total_variation", total_variation(g1, g2, combo, x_probes));
    record("expert_prediction_error", experr.max_prediction_error);
    record("expert_eta_distance", experr.max_eta_distance);
    if (!combo_loss.flagged_cells.empty())
        std::cerr << "warning: " << combo_loss.flagged_cells.size()
                  << " cell(s) with m >= 4 used the conjectured order\n";

    write_text(out_dir / "metrics.json", records.dump(2) + "\n");
    man.outputs = {"metrics.json"};
    man.write(out_dir);
    return 0;
}

json solution_to_json(const CandidateSolution& sol, GatingCombo kind) {
    auto vec = [](const Eigen::VectorXd& v) {
        json a = json::array();
        for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
        return a;
    };
    json j;
    j["p"] = vec(sol.p);
    j["q4"] = vec(sol.q4);
    j["q5"] = vec(sol.q5);
    if (kind != GatingCombo::LL) {
        j["q2"] = vec(sol.q2);
        json q3 = json::array();
        for (const auto& v : sol.q3) q3.push_back(vec(v));
        j["q3"] = q3;
    }
    if (kind == GatingCombo::SS) {
        json q1 = json::array();
        for (const auto& v : sol.q1) q1.push_back(vec(v));
        j["q1"] = q1;
    }
    return j;
}

int cmd_polysys(const std::string& kind, int m, int r, int d, int restarts,
                std::uint64_t seed, int threads, const fs::path& out_dir) {
    PolySystem sys{combo_from_string(kind), m, r, d};
    Manifest man{"polysys",
                 fnv1a(kind + std::to_string(m) + "," + std::to_string(r)),
                 seed};
    const SearchReport rep = search_nontrivial(sys, restarts, seed, threads);

    json j;
    j["kind"] = kind;
    j["m"] = m;
    j["r"] = r;
    j["d"] = d;
    j["found"] = rep.found.has_value();
    j["best_residual"] = rep.best_residual;
    j["attempts"] = rep.attempts;
    j["note"] = "numerical evidence, not an algebraic certificate";
    if (rep.found) j["solution"] = solution_to_json(*rep.found, sys.kind);
    write_text(out_dir / "polysys.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    man.outputs = {"polysys.json"};
    man.write(out_dir);
    return 0;
}

RateExperiment rate_experiment_from_json(const json& cfg) {
    RateExperiment exp;
    exp.combo = combo_from_string(cfg.value("combo", "SS"));
    exp.truth = cfg.contains("truth")
                    ? measure_from_json(cfg.at("truth").dump()).first
                    : default_rate_truth();
    exp.fit_k2 = cfg.value("fit_k2", exp.truth.k2(0));
    exp.n_grid = cfg.value("n_grid",
                           std::vector<int>{1000, 3162, 10000, 31623, 100000});
    exp.replicates = cfg.value("replicates", 20);
    exp.metric = rate_metric_from_string(cfg.value("metric", "voronoi_combo"));
    exp.seed = cfg.value("seed", 0ULL);
    exp.probes = cfg.value("probes", 512);
    exp.theoretical_exponent = cfg.value("theoretical_exponent", -0.5);
    if (cfg.contains("fit")) exp.fit_cfg = fit_config_from_json(cfg["fit"]);
    exp.validate();
    return exp;
}

void write_rate_outputs(const RateReport& rep, const fs::path& out_dir) {
    std::ofstream raw(out_dir / "raw.csv");
    raw << "n,replicate,metric,loglik,truth_loglik,iters,status\n";
    raw.precision(17);
    for (const auto& c : rep.cells)
        raw << c.n << "," << c.replicate << "," << c.metric_value << ","
            << c.loglik << "," << c.truth_loglik << "," << c.iters << ","
            << (c.ok ? "ok" : "failed") << "\n";

    json summary;
    summary["slope"] = rep.slope;
    summary["intercept"] = rep.intercept;
    summary["slope_stderr"] = rep.slope_stderr;
    summary["theoretical_exponent"] = rep.theoretical_exponent;
    summary["used_replicates"] = rep.used_replicates;
    summary["excluded_replicates"] = rep.excluded_replicates;
    summary["verdict"] = rep.verdict;
    json med = json::array();
    for (const auto& [n, v] : rep.median_per_n)
        med.push_back({{"n", n}, {"median", v}});
    summary["median_per_n"] = med;
    write_text(out_dir / "summary.json", summary.dump(2) + "\n");

    std::ofstream plot(out_dir / "loglog.dat");
    plot << "# log(n) log(median)\n";
    plot.precision(17);
    for (const auto& [n, v] : rep.median_per_n)
        plot << std::log(static_cast<double>(n)) << " "
             << std::log(std::max(v, 1e-12)) << "\n";
}

int cmd_rates(const std::string& config_path, bool resume,
              const fs::path& out_dir, int threads) {
    const json cfg = load_config(config_path);
    RateExperiment exp = rate_experiment_from_json(cfg);
    exp.threads = threads;
    exp.checkpoint_path = (out_dir / "checkpoint.csv").string();
    if (!resume) fs::remove(exp.checkpoint_path);

    Manifest man{"rates", fnv1a(cfg.dump()), exp.seed};
    const RateReport rep = run_rate_experiment(exp);
    write_rate_outputs(rep, out_dir);
    man.outputs = {"raw.csv", "summary.json", "loglog.dat", "checkpoint.csv"};
    man.write(out_dir);
    std::cout << "slope=" << rep.slope << " stderr=" << rep.slope_stderr
              << " verdict=" << rep.verdict << "\n";
    return rep.verdict == "ExperimentDegraded" ? kExitDegraded : 0;
}

int cmd_route_demo(const std::string& config_path, const fs::path& out_dir) {
    const json cfg = load_config(config_path);
    RouteConfig rc;
    rc.e_outer = cfg.value("e_outer", 2);
    rc.e_inner = cfg.value("e_inner", 2);
    rc.topk_outer = cfg.value("topk_outer", 1);
    rc.topk_inner = cfg.value("topk_inner", 1);
    rc.gate_outer_kind = cfg.value("gate_outer", "softmax") == "laplace"
                             ? GateKind::Laplace
                             : GateKind::SoftmaxLinear;
    rc.gate_inner_kind = cfg.value("gate_inner", "softmax") == "laplace"
                             ? GateKind::Laplace
                             : GateKind::SoftmaxLinear;
    rc.loss_scale = cfg.value("loss_scale", 1.0);
    rc.renormalize_topk = cfg.value("renormalize_topk", true);
    rc.seed = cfg.value("seed", 0ULL);
    const int B = cfg.value("batch", 1);
    const int N = cfg.value("seq_len", 64);
    const int D = cfg.value("dim", 4);
    const int clusters = cfg.value("clusters", 4);
    rc.cap_outer = cfg.value("cap_outer", B * N);
    rc.cap_inner = cfg.value("cap_inner", B * N);
    rc.validate();

    Manifest man{"route-demo", fnv1a(cfg.dump()), rc.seed};

    // Synthetic clustered tokens around random centers.
    TokenBatch tokens;
    tokens.batch = B;
    tokens.seq_len = N;
    tokens.data.resize(B * N, D);
    std::vector<int> cluster_of(B * N);
    Rng rng(rc.seed);
    Eigen::MatrixXd centers(clusters, D);
    for (int c = 0; c < clusters; ++c)
        for (int j = 0; j < D; ++j) centers(c, j) = rng.uniform(-2.0, 2.0);
    for (int t = 0; t < B * N; ++t) {
        const int c = static_cast<int>(rng.uniform() * clusters);
        cluster_of[t] = c;
        for (int j = 0; j < D; ++j)
            tokens.data(t, j) = centers(c, j) + 0.2 * rng.normal();
    }

    std::vector<std::vector<ExpertFn>> bank(
        rc.e_outer,
        std::vector<ExpertFn>(rc.e_inner, [](const Eigen::VectorXd& v) {
            return v;
        }));
    const ForwardResult fwd = hmoe_forward(tokens, rc, bank);

    // Outer-expert occupancy per cluster.
    std::vector<std::vector<int>> hist(rc.e_outer,
                                       std::vector<int>(clusters, 0));
    for (const auto& r : fwd.outer_plan.routes)
        ++hist[r.expert][cluster_of[r.token]];
    std::ofstream out(out_dir / "routing_histogram.csv");
    out << "expert,cluster,count\n";
    for (int e = 0; e < rc.e_outer; ++e)
        for (int c = 0; c < clusters; ++c)
            out << e << "," << c << "," << hist[e][c] << "\n";

    json summary;
    summary["outer_loss"] = fwd.outer_loss;
    summary["inner_loss"] = fwd.inner_loss;
    summary["total_loss"] = fwd.total_loss;
    summary["dropped"] = fwd.outer_plan.dropped.size();
    write_text(out_dir / "route_summary.json", summary.dump(2) + "\n");

    man.outputs = {"routing_histogram.csv", "route_summary.json"};
    man.write(out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-level Gaussian HMoE workbench"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker pool size (0 = auto)");

    std::string config_path, out_dir_str = ".", data_path, g1, g2,
                combo = "SS", kind = "SS";
    int m = 2, r = 3, d = 1, restarts = 50, probes = 512;
    std::uint64_t seed = 0;
    bool resume = false;

    auto* sim = app.add_subcommand("simulate", "sample a synthetic dataset");
    sim->add_option("--config", config_path)->required();
    sim->add_option("--out", out_dir_str);

    auto* fit = app.add_subcommand("fit", "maximum-likelihood fit");
    fit->add_option("--data", data_path)->required();
    fit->add_option("--config", config_path)->required();
    fit->add_option("--out", out_dir_str);

    auto* met = app.add_subcommand("metrics", "distances between two models");
    met->add_option("--g1", g1)->required();
    met->add_option("--g2", g2)->required();
    met->add_option("--combo", combo)->required();
    met->add_option("--probes", probes);
    met->add_option("--out", out_dir_str);

    auto* poly = app.add_subcommand("polysys", "polynomial-system search");
    poly->add_option("--kind", kind)->required();
    poly->add_option("--m", m)->required();
    poly->add_option("--r", r)->required();
    poly->add_option("--d", d);
    poly->add_option("--restarts", restarts);
    poly->add_option("--seed", seed);
    poly->add_option("--out", out_dir_str);

    auto* rates = app.add_subcommand("rates", "convergence-rate experiment");
    rates->add_option("--config", config_path)->required();
    rates->add_flag("--resume", resume);
    rates->add_option("--out", out_dir_str);

    auto* demo = app.add_subcommand("route-demo", "token routing demo");
    demo->add_option("--config", config_path)->required();
    demo->add_option("--out", out_dir_str);

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out_dir(out_dir_str);
        fs::create_directories(out_dir);
        if (sim->parsed()) return cmd_simulate(config_path, out_dir);
        if (fit->parsed())
            return cmd_fit(data_path, config_path, out_dir, threads);
        if (met->parsed())
            return cmd_metrics(g1, g2, combo, probes, out_dir);
        if (poly->parsed())
            return cmd_polysys(kind, m, r, d, restarts, seed, threads,
                               out_dir);
        if (rates->parsed())
            return cmd_rates(config_path, resume, out_dir, threads);
        if (demo->parsed()) return cmd_route_demo(config_path, out_dir);
    } catch (const InvalidInput& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
