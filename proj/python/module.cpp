#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "adoptnet/analysis.hpp"
#include "adoptnet/control.hpp"
#include "adoptnet/errors.hpp"
#include "adoptnet/io.hpp"
#include "adoptnet/model.hpp"
#include "adoptnet/network.hpp"
#include "adoptnet/scenario.hpp"

namespace py = pybind11;
using namespace adoptnet;

PYBIND11_MODULE(_core, m) {
  m.doc() = "coupled adoption-opinion dynamics on two-layer networks";

  py::register_exception<Error>(m, "Error");

  py::enum_<Channel>(m, "Channel")
      .value("Opinion", Channel::Opinion)
      .value("AdoptionRate", Channel::AdoptionRate)
      .value("Dissatisfaction", Channel::Dissatisfaction);
  m.def("channel_name", &channel_name);
  m.def("channel_from_name", &channel_from_name);

  py::enum_<ThresholdVerdict>(m, "ThresholdVerdict")
      .value("GAS", ThresholdVerdict::GAS)
      .value("Unstable", ThresholdVerdict::Unstable)
      .value("Inconclusive", ThresholdVerdict::Inconclusive);

  py::enum_<EquilibriumKind>(m, "EquilibriumKind")
      .value("AdoptionFree", EquilibriumKind::AdoptionFree)
      .value("AdoptionDiffused", EquilibriumKind::AdoptionDiffused);

  py::enum_<CcpFeasibilityMode>(m, "CcpFeasibilityMode")
      .value("Relaxed", CcpFeasibilityMode::Relaxed)
      .value("Strict", CcpFeasibilityMode::Strict);

  py::class_<Network>(m, "Network")
      .def_static("from_weights", &Network::from_weights, py::arg("weights"),
                  py::arg("row_sum_tolerance") = Network::kDefaultRowSumTolerance)
      .def("size", &Network::size)
      .def_property_readonly(
          "weights", [](const Network& w) { return w.weights(); });
  m.def("strongly_connected",
        [](const Eigen::MatrixXd& w, double threshold) {
          return strongly_connected(w, threshold);
        },
        py::arg("weights"), py::arg("threshold") = Network::kEdgeThreshold);
  m.def("spectral_radius", &spectral_radius, py::arg("m"),
        py::arg("tol") = 1e-12, py::arg("max_iters") = 10000);
  m.def("random_strongly_connected", &random_strongly_connected, py::arg("n"),
        py::arg("extra_edge_density"), py::arg("seed"));

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("beta", &ModelParams::beta)
      .def_readwrite("gamma", &ModelParams::gamma)
      .def_readwrite("theta", &ModelParams::theta)
      .def_readwrite("delta", &ModelParams::delta)
      .def_readwrite("alpha", &ModelParams::alpha)
      .def_readwrite("lam", &ModelParams::lambda)
      .def_readwrite("xi", &ModelParams::xi)
      .def_readwrite("x0", &ModelParams::x0)
      .def_readwrite("W", &ModelParams::W)
      .def_readwrite("Wt", &ModelParams::Wt)
      .def("size", &ModelParams::size)
      .def("validate", &ModelParams::validate);

  py::class_<State>(m, "State")
      .def(py::init<>())
      .def(py::init([](const Eigen::VectorXd& a, const Eigen::VectorXd& d,
                       const Eigen::VectorXd& x) {
             return State{a, d, x};
           }),
           py::arg("a"), py::arg("d"), py::arg("x"))
      .def_readwrite("a", &State::a)
      .def_readwrite("d", &State::d)
      .def_readwrite("x", &State::x)
      .def("size", &State::size)
      .def("validate", &State::validate);

  py::class_<ControlInput>(m, "ControlInput")
      .def(py::init([](const Eigen::VectorXd& u, Channel c) {
             return ControlInput{u, c};
           }),
           py::arg("u"), py::arg("channel"))
      .def_readwrite("u", &ControlInput::u)
      .def_readwrite("channel", &ControlInput::channel);

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("states", &Trajectory::states)
      .def_readwrite("controls", &Trajectory::controls)
      .def_readwrite("channel", &Trajectory::channel);

  m.def("step", &step, py::arg("s"), py::arg("p"),
        py::arg("ctrl") = std::nullopt);
  m.def("simulate",
        py::overload_cast<const State&, const ModelParams&, int>(&simulate),
        py::arg("s0"), py::arg("p"), py::arg("T"));
  m.def("simulate",
        py::overload_cast<const State&, const ModelParams&, int,
                          const ControlInput&>(&simulate),
        py::arg("s0"), py::arg("p"), py::arg("T"), py::arg("constant"));
  m.def("simulate_policy",
        py::overload_cast<const State&, const ModelParams&, int,
                          const Policy&>(&simulate),
        py::arg("s0"), py::arg("p"), py::arg("T"), py::arg("policy"));
  m.def("pack_state", &pack_state);
  m.def("unpack_state", &unpack_state);

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("certified", &Certificate::certified)
      .def_readonly("sigma1", &Certificate::sigma1)
      .def_readonly("sigma2", &Certificate::sigma2);

  py::class_<EquilibriumReport>(m, "EquilibriumReport")
      .def_readonly("kind", &EquilibriumReport::kind)
      .def_readonly("a_star", &EquilibriumReport::a_star)
      .def_readonly("d_star", &EquilibriumReport::d_star)
      .def_readonly("x_star", &EquilibriumReport::x_star)
      .def_readonly("r0_max", &EquilibriumReport::r0_max)
      .def_readonly("r0_min", &EquilibriumReport::r0_min)
      .def_readonly("threshold_verdict", &EquilibriumReport::threshold_verdict)
      .def_readonly("diffused_exists", &EquilibriumReport::diffused_exists)
      .def_readonly("certificate", &EquilibriumReport::certificate)
      .def_readonly("residual", &EquilibriumReport::residual)
      .def_readonly("note", &EquilibriumReport::note)
      .def("state", &EquilibriumReport::state);

  py::class_<StabilityConstants>(m, "StabilityConstants")
      .def_readonly("eta", &StabilityConstants::eta)
      .def_readonly("nu", &StabilityConstants::nu)
      .def_readonly("varphi", &StabilityConstants::varphi)
      .def_readonly("rho_bstar", &StabilityConstants::rho_bstar)
      .def_readonly("x_lower", &StabilityConstants::x_lower)
      .def_readonly("x_upper", &StabilityConstants::x_upper);

  py::class_<AnalysisOptions>(m, "AnalysisOptions")
      .def(py::init<>())
      .def_readwrite("x_upper_all_ones", &AnalysisOptions::x_upper_all_ones)
      .def_readwrite("tol", &AnalysisOptions::tol)
      .def_readwrite("max_iters", &AnalysisOptions::max_iters)
      .def_readwrite("damping", &AnalysisOptions::damping)
      .def_readwrite("newton_polish", &AnalysisOptions::newton_polish);

  m.def("psi", &psi, py::arg("x"), py::arg("p"));
  m.def("opinion_bounds", &opinion_bounds, py::arg("p"),
        py::arg("ctrl") = std::nullopt, py::arg("x_upper_all_ones") = false);
  m.def("r0", &r0, py::arg("x"), py::arg("p"), py::arg("ctrl") = std::nullopt);
  m.def("r0_extremes", &r0_extremes, py::arg("p"),
        py::arg("ctrl") = std::nullopt, py::arg("x_upper_all_ones") = false);
  m.def("adoption_free_equilibrium", &adoption_free_equilibrium, py::arg("p"),
        py::arg("ctrl") = std::nullopt);
  m.def("diffused_equilibrium", &diffused_equilibrium, py::arg("p"),
        py::arg("guess"), py::arg("options") = AnalysisOptions{},
        py::arg("ctrl") = std::nullopt);
  m.def("default_equilibrium_guess", &default_equilibrium_guess, py::arg("p"),
        py::arg("ctrl") = std::nullopt);
  m.def("stability_constants", &stability_constants, py::arg("p"),
        py::arg("eq"), py::arg("ctrl") = std::nullopt,
        py::arg("x_upper_all_ones") = false);
  m.def("certify", &certify, py::arg("p"), py::arg("eq"),
        py::arg("ctrl") = std::nullopt, py::arg("x_upper_all_ones") = false);

  py::class_<ControlSpec>(m, "ControlSpec")
      .def(py::init<>())
      .def_readwrite("channel", &ControlSpec::channel)
      .def_readwrite("budget", &ControlSpec::budget)
      .def_readwrite("u_upper", &ControlSpec::u_upper)
      .def_readwrite("Qa", &ControlSpec::Qa)
      .def_readwrite("Qd", &ControlSpec::Qd)
      .def_readwrite("L", &ControlSpec::L)
      .def_readwrite("linear_effort", &ControlSpec::linear_effort)
      .def("validate", &ControlSpec::validate);
  m.def("make_control_spec", &make_control_spec, py::arg("p"),
        py::arg("channel"), py::arg("budget"), py::arg("beta_cap") = 1.0);

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("step_tolerance", &SolverConfig::step_tolerance)
      .def_readwrite("fd_gradients", &SolverConfig::fd_gradients);

  py::class_<MpcConfig>(m, "MpcConfig")
      .def(py::init<>())
      .def_readwrite("horizon", &MpcConfig::horizon)
      .def_readwrite("terminal_tolerance", &MpcConfig::terminal_tolerance)
      .def_readwrite("terminal_penalty_weight",
                     &MpcConfig::terminal_penalty_weight)
      .def_readwrite("penalty_growth", &MpcConfig::penalty_growth)
      .def_readwrite("max_penalty_rounds", &MpcConfig::max_penalty_rounds)
      .def_readwrite("target_deviation_goal", &MpcConfig::target_deviation_goal)
      .def_readwrite("solver", &MpcConfig::solver)
      .def_readwrite("target", &MpcConfig::target)
      .def_readwrite("u_bar", &MpcConfig::u_bar);

  py::class_<PolicyResult>(m, "PolicyResult")
      .def_readonly("feasible", &PolicyResult::feasible)
      .def_readonly("u", &PolicyResult::u)
      .def_readonly("U", &PolicyResult::U)
      .def_readonly("cost", &PolicyResult::cost)
      .def_readonly("iterations", &PolicyResult::iterations)
      .def_readonly("kkt_residual", &PolicyResult::kkt_residual)
      .def_readonly("terminal_deviation", &PolicyResult::terminal_deviation)
      .def_readonly("final_penalty_weight", &PolicyResult::final_penalty_weight)
      .def_readonly("equilibrium", &PolicyResult::equilibrium)
      .def_readonly("note", &PolicyResult::note);

  py::class_<CcpConfig>(m, "CcpConfig")
      .def(py::init<>())
      .def_readwrite("mode", &CcpConfig::mode)
      .def_readwrite("starts", &CcpConfig::starts)
      .def_readwrite("max_iters", &CcpConfig::max_iters)
      .def_readwrite("step_tolerance", &CcpConfig::step_tolerance)
      .def_readwrite("fd_step", &CcpConfig::fd_step)
      .def_readwrite("seed", &CcpConfig::seed)
      .def_readwrite("analysis", &CcpConfig::analysis)
      .def_readwrite("rollout_start", &CcpConfig::rollout_start)
      .def_readwrite("rollout_steps", &CcpConfig::rollout_steps)
      .def_readwrite("rollout_tolerance", &CcpConfig::rollout_tolerance);

  py::class_<PolicyMetrics>(m, "PolicyMetrics")
      .def_readonly("total_adopters", &PolicyMetrics::total_adopters)
      .def_readonly("control_cost", &PolicyMetrics::control_cost);

  py::class_<ClosedLoopResult>(m, "ClosedLoopResult")
      .def_readonly("trajectory", &ClosedLoopResult::trajectory)
      .def_readonly("cost_series", &ClosedLoopResult::cost_series)
      .def_readonly("shifted_feasible", &ClosedLoopResult::shifted_feasible)
      .def_readonly("lost_feasibility_at", &ClosedLoopResult::lost_feasibility_at)
      .def_readonly("completed", &ClosedLoopResult::completed);

  m.def("project_budget_box", &project_budget_box, py::arg("v"), py::arg("C"),
        py::arg("ub"));
  m.def("trajectory_cost", &trajectory_cost, py::arg("traj"), py::arg("spec"));
  m.def("policy_metrics", &policy_metrics, py::arg("traj"),
        py::arg("linear_effort") = false);
  m.def("shifted_candidate", &shifted_candidate, py::arg("U_star"),
        py::arg("u_bar"));
  m.def(
      "mpc_objective",
      [](const State& s, const ModelParams& p, const ControlSpec& spec,
         const MpcConfig& cfg, const std::vector<Eigen::VectorXd>& U,
         double penalty_weight) {
        double dev = 0.0, stage = 0.0;
        const double value = mpc_objective(s, p, spec, cfg, U, penalty_weight,
                                           &dev, &stage);
        return py::make_tuple(value, dev, stage);
      },
      py::arg("s"), py::arg("p"), py::arg("spec"), py::arg("cfg"),
      py::arg("U"), py::arg("penalty_weight"),
      "Returns (value, terminal_deviation, stage_cost).");
  m.def("mpc_objective_gradient", &mpc_objective_gradient, py::arg("s"),
        py::arg("p"), py::arg("spec"), py::arg("cfg"), py::arg("U"),
        py::arg("penalty_weight"));
  m.def(
      "mpc_solve",
      [](const State& s, const ModelParams& p, const ControlSpec& spec,
         const MpcConfig& cfg,
         const std::optional<std::vector<Eigen::VectorXd>>& warm_start) {
        return mpc_solve(s, p, spec, cfg,
                         warm_start ? &*warm_start : nullptr);
      },
      py::arg("s"), py::arg("p"), py::arg("spec"), py::arg("cfg"),
      py::arg("warm_start") = std::nullopt);
  m.def("mpc_run", &mpc_run, py::arg("s0"), py::arg("p"), py::arg("spec"),
        py::arg("cfg"), py::arg("T"));
  m.def("solve_ccp", &solve_ccp, py::arg("p"), py::arg("spec"),
        py::arg("cfg") = CcpConfig{});
  m.def("mpc_config_from_ccp", &mpc_config_from_ccp, py::arg("ccp"),
        py::arg("horizon"));

  py::class_<ScenarioRanges>(m, "ScenarioRanges")
      .def(py::init<>())
      .def_readwrite("beta_min", &ScenarioRanges::beta_min)
      .def_readwrite("beta_max", &ScenarioRanges::beta_max)
      .def_readwrite("delta_min", &ScenarioRanges::delta_min)
      .def_readwrite("delta_max", &ScenarioRanges::delta_max)
      .def_readwrite("rate_sum_min", &ScenarioRanges::rate_sum_min)
      .def_readwrite("rate_sum_max", &ScenarioRanges::rate_sum_max)
      .def_readwrite("rate_ratio_min", &ScenarioRanges::rate_ratio_min)
      .def_readwrite("rate_ratio_max", &ScenarioRanges::rate_ratio_max)
      .def_readwrite("alpha_min", &ScenarioRanges::alpha_min)
      .def_readwrite("x0_min", &ScenarioRanges::x0_min)
      .def_readwrite("x0_max", &ScenarioRanges::x0_max)
      .def_readwrite("density", &ScenarioRanges::density)
      .def_readwrite("a0_value", &ScenarioRanges::a0_value)
      .def_readwrite("a0_fraction", &ScenarioRanges::a0_fraction);
  m.def("case_study_ranges", &case_study_ranges);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("params", &Scenario::params)
      .def_readwrite("s0", &Scenario::s0)
      .def_readwrite("spec", &Scenario::spec)
      .def_readwrite("mpc", &Scenario::mpc)
      .def_readwrite("T", &Scenario::T)
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("label", &Scenario::label)
      .def("validate", &Scenario::validate);
  m.def("random_scenario", &random_scenario, py::arg("n"), py::arg("seed"),
        py::arg("ranges") = ScenarioRanges{});
  m.def("scenario_from_json", &scenario_from_json, py::arg("text"),
        py::arg("base_dir") = std::filesystem::path("."));
  m.def("scenario_to_json", &scenario_to_json, py::arg("sc"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("save_scenario", &save_scenario, py::arg("sc"), py::arg("path"));
  m.def("calibrate_r0_max_below", &calibrate_r0_max_below, py::arg("p"),
        py::arg("target"));
  m.def("calibrate_r0_min_above", &calibrate_r0_min_above, py::arg("p"),
        py::arg("target"));

  m.def("equilibrium_report_json", &equilibrium_report_json, py::arg("rep"));
  m.def("equilibrium_report_text", &equilibrium_report_text, py::arg("rep"));
  m.def("policy_result_json", &policy_result_json, py::arg("res"),
        py::arg("channel"));
}
