// Python bindings for the core workbench operations.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmoe/estimation.hpp"
#include "hmoe/metrics.hpp"
#include "hmoe/model.hpp"
#include "hmoe/polysys.hpp"
#include "hmoe/ratelab.hpp"
#include "hmoe/routing.hpp"

namespace py = pybind11;
using namespace hmoe;

PYBIND11_MODULE(_core, m) {
    m.doc() = "two-level Gaussian HMoE workbench core";

    py::register_exception<InvalidInput>(m, "InvalidInput");
    py::register_exception<InvalidModel>(m, "InvalidModel");
    py::register_exception<FitFailed>(m, "FitFailed");
    py::register_exception<QuadratureError>(m, "QuadratureError");
    py::register_exception<UnsupportedCellSize>(m, "UnsupportedCellSize");

    py::enum_<GatingCombo>(m, "GatingCombo")
        .value("SS", GatingCombo::SS)
        .value("SL", GatingCombo::SL)
        .value("LL", GatingCombo::LL);

    py::class_<ExpertAtom>(m, "ExpertAtom")
        .def(py::init<>())
        .def_readwrite("eta", &ExpertAtom::eta)
        .def_readwrite("tau", &ExpertAtom::tau)
        .def_readwrite("nu", &ExpertAtom::nu);

    py::class_<SecondLevelAtom>(m, "SecondLevelAtom")
        .def(py::init<>())
        .def_readwrite("omega", &SecondLevelAtom::omega)
        .def_readwrite("beta", &SecondLevelAtom::beta)
        .def_readwrite("expert", &SecondLevelAtom::expert);

    py::class_<Group>(m, "Group")
        .def(py::init<>())
        .def_readwrite("a", &Group::a)
        .def_readwrite("b", &Group::b)
        .def_readwrite("experts", &Group::experts);

    py::class_<MixingMeasure>(m, "MixingMeasure")
        .def(py::init<>())
        .def_readwrite("dim", &MixingMeasure::dim)
        .def_readwrite("groups", &MixingMeasure::groups)
        .def("k1", &MixingMeasure::k1)
        .def("k2", &MixingMeasure::k2)
        .def("total_paths", &MixingMeasure::total_paths)
        .def("validate", &MixingMeasure::validate);

    py::enum_<InputLaw>(m, "InputLaw")
        .value("UniformBox", InputLaw::UniformBox)
        .value("TruncatedNormal", InputLaw::TruncatedNormal);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("x", &Dataset::x)
        .def_readwrite("y", &Dataset::y)
        .def_readwrite("seed", &Dataset::seed)
        .def("n", &Dataset::n)
        .def("dim", &Dataset::dim);

    m.def("conditional_density", &conditional_density);
    m.def("sample", &sample, py::arg("measure"), py::arg("combo"),
          py::arg("n"), py::arg("law") = InputLaw::UniformBox,
          py::arg("seed") = 0);
    m.def("log_likelihood", &log_likelihood);
    m.def("normalize", &normalize);
    m.def("to_json", &to_json);
    m.def("measure_from_json", &measure_from_json);

    py::enum_<InitScheme>(m, "InitScheme")
        .value("Random", InitScheme::Random)
        .value("PerturbedTruth", InitScheme::PerturbedTruth);

    py::class_<FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("k1", &FitConfig::k1)
        .def_readwrite("k2", &FitConfig::k2)
        .def_readwrite("max_iters", &FitConfig::max_iters)
        .def_readwrite("tol", &FitConfig::tol)
        .def_readwrite("restarts", &FitConfig::restarts)
        .def_readwrite("init", &FitConfig::init)
        .def_readwrite("perturb_scale", &FitConfig::perturb_scale)
        .def_readwrite("gate_steps", &FitConfig::gate_steps)
        .def_readwrite("seed", &FitConfig::seed)
        .def_readwrite("threads", &FitConfig::threads);

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("estimate", &FitResult::estimate)
        .def_readonly("final_loglik", &FitResult::final_loglik)
        .def_readonly("iters", &FitResult::iters)
        .def_readonly("restart_index", &FitResult::restart_index)
        .def_readonly("trace", &FitResult::trace);

    m.def("fit_mle", &fit_mle, py::call_guard<py::gil_scoped_release>());

    py::class_<VoronoiAssignment>(m, "VoronoiAssignment")
        .def_readonly("first_level", &VoronoiAssignment::first_level)
        .def_readonly("second_level", &VoronoiAssignment::second_level);

    py::class_<ComboLossResult>(m, "ComboLossResult")
        .def_readonly("value", &ComboLossResult::value)
        .def_readonly("flagged_cells", &ComboLossResult::flagged_cells);

    m.def("voronoi_cells", &voronoi_cells);
    m.def("loss_for_combo",
          [](const MixingMeasure& g, const MixingMeasure& gstar,
             GatingCombo combo) {
              return loss_for_combo(g, gstar, combo, voronoi_cells(g, gstar));
          });
    m.def("hellinger",
          [](const MixingMeasure& g1, const MixingMeasure& g2,
             GatingCombo combo, int probes) {
              return hellinger(g1, g2, combo,
                               quasi_random_probes(g1.dim, probes));
          },
          py::arg("g1"), py::arg("g2"), py::arg("combo"),
          py::arg("probes") = 512);
    m.def("total_variation",
          [](const MixingMeasure& g1, const MixingMeasure& g2,
             GatingCombo combo, int probes) {
              return total_variation(g1, g2, combo,
                                     quasi_random_probes(g1.dim, probes));
          },
          py::arg("g1"), py::arg("g2"), py::arg("combo"),
          py::arg("probes") = 512);

    py::class_<PolySystem>(m, "PolySystem")
        .def(py::init<>())
        .def_readwrite("kind", &PolySystem::kind)
        .def_readwrite("m", &PolySystem::m)
        .def_readwrite("r", &PolySystem::r)
        .def_readwrite("d", &PolySystem::d);

    py::class_<CandidateSolution>(m, "CandidateSolution")
        .def(py::init<>())
        .def_readwrite("p", &CandidateSolution::p)
        .def_readwrite("q1", &CandidateSolution::q1)
        .def_readwrite("q2", &CandidateSolution::q2)
        .def_readwrite("q3", &CandidateSolution::q3)
        .def_readwrite("q4", &CandidateSolution::q4)
        .def_readwrite("q5", &CandidateSolution::q5)
        .def_static("zeros", &CandidateSolution::zeros);

    py::class_<SearchReport>(m, "SearchReport")
        .def_readonly("found", &SearchReport::found)
        .def_readonly("best_residual", &SearchReport::best_residual)
        .def_readonly("attempts", &SearchReport::attempts);

    m.def("residuals", &residuals);
    m.def("is_nontrivial", &is_nontrivial);
    m.def("search_nontrivial", &search_nontrivial, py::arg("sys"),
          py::arg("restarts"), py::arg("seed") = 0, py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());

    py::class_<RateExperiment>(m, "RateExperiment")
        .def(py::init<>())
        .def_readwrite("combo", &RateExperiment::combo)
        .def_readwrite("truth", &RateExperiment::truth)
        .def_readwrite("fit_k2", &RateExperiment::fit_k2)
        .def_readwrite("n_grid", &RateExperiment::n_grid)
        .def_readwrite("replicates", &RateExperiment::replicates)
        .def_readwrite("fit_cfg", &RateExperiment::fit_cfg)
        .def_readwrite("seed", &RateExperiment::seed)
        .def_readwrite("threads", &RateExperiment::threads)
        .def_readwrite("checkpoint_path", &RateExperiment::checkpoint_path);

    py::class_<RateReport>(m, "RateReport")
        .def_readonly("median_per_n", &RateReport::median_per_n)
        .def_readonly("slope", &RateReport::slope)
        .def_readonly("slope_stderr", &RateReport::slope_stderr)
        .def_readonly("used_replicates", &RateReport::used_replicates)
        .def_readonly("excluded_replicates", &RateReport::excluded_replicates)
        .def_readonly("verdict", &RateReport::verdict);

    m.def("default_rate_truth", &default_rate_truth);
    m.def("run_rate_experiment",
          [](const RateExperiment& exp) { return run_rate_experiment(exp); },
          py::call_guard<py::gil_scoped_release>());

    py::class_<TokenBatch>(m, "TokenBatch")
        .def(py::init<>())
        .def_readwrite("batch", &TokenBatch::batch)
        .def_readwrite("seq_len", &TokenBatch::seq_len)
        .def_readwrite("data", &TokenBatch::data);

    py::enum_<GateKind>(m, "GateKind")
        .value("SoftmaxLinear", GateKind::SoftmaxLinear)
        .value("Laplace", GateKind::Laplace);

    py::class_<RouteConfig>(m, "RouteConfig")
        .def(py::init<>())
        .def_readwrite("e_outer", &RouteConfig::e_outer)
        .def_readwrite("e_inner", &RouteConfig::e_inner)
        .def_readwrite("cap_outer", &RouteConfig::cap_outer)
        .def_readwrite("cap_inner", &RouteConfig::cap_inner)
        .def_readwrite("topk_outer", &RouteConfig::topk_outer)
        .def_readwrite("topk_inner", &RouteConfig::topk_inner)
        .def_readwrite("gate_outer_kind", &RouteConfig::gate_outer_kind)
        .def_readwrite("gate_inner_kind", &RouteConfig::gate_inner_kind)
        .def_readwrite("loss_scale", &RouteConfig::loss_scale)
        .def_readwrite("renormalize_topk", &RouteConfig::renormalize_topk)
        .def_readwrite("seed", &RouteConfig::seed);

    py::class_<ForwardResult>(m, "ForwardResult")
        .def_readonly("output", &ForwardResult::output)
        .def_readonly("total_loss", &ForwardResult::total_loss)
        .def_readonly("outer_loss", &ForwardResult::outer_loss)
        .def_readonly("inner_loss", &ForwardResult::inner_loss);

    m.def("hmoe_forward",
          [](const TokenBatch& tokens, const RouteConfig& cfg) {
              std::vector<std::vector<ExpertFn>> identity(
                  cfg.e_outer,
                  std::vector<ExpertFn>(
                      cfg.e_inner,
                      [](const Eigen::VectorXd& v) { return v; }));
              return hmoe_forward(tokens, cfg, identity);
          },
          "Two-level routing forward pass with identity experts.");
}
