#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "adoptnet/analysis.hpp"
#include "adoptnet/model.hpp"

namespace adoptnet {

struct ControlSpec {
  Channel channel = Channel::Opinion;
  double budget = 1.0;
  Eigen::VectorXd u_upper;
  Eigen::VectorXd Qa, Qd, L;
  bool linear_effort = false;

  void validate(int n) const;
};

// Default per-channel boxes: opinion u <= 1 - x0 (anchor headroom), beta
// u <= min(beta_cap, 1/beta - 1) so the boosted rate stays a probability,
// delta u <= 1. Weights Qa=1, Qd=0.2, L=0.05.
ControlSpec make_control_spec(const ModelParams& p, Channel channel,
                              double budget, double beta_cap = 1.0);

struct SolverConfig {
  int max_iters = 300;
  double step_tolerance = 1e-10;
  bool fd_gradients = false;
};

struct MpcConfig {
  int horizon = 40;
  double terminal_tolerance = 1e-6;
  double terminal_penalty_weight = 100.0;
  double penalty_growth = 10.0;
  int max_penalty_rounds = 8;
  double target_deviation_goal = 1e-8;
  SolverConfig solver;
  State target;
  Eigen::VectorXd u_bar;
};

struct PolicyResult {
  bool feasible = false;
  Eigen::VectorXd u;
  std::vector<Eigen::VectorXd> U;
  double cost = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double kkt_residual = std::numeric_limits<double>::quiet_NaN();
  double terminal_deviation = std::numeric_limits<double>::quiet_NaN();
  double final_penalty_weight = std::numeric_limits<double>::quiet_NaN();
  std::optional<EquilibriumReport> equilibrium;
  std::string note;
};

enum class CcpFeasibilityMode { Relaxed, Strict };

struct CcpConfig {
  CcpFeasibilityMode mode = CcpFeasibilityMode::Relaxed;
  int starts = 16;
  int max_iters = 80;
  double step_tolerance = 1e-9;
  double fd_step = 1e-6;
  std::uint64_t seed = 0;
  AnalysisOptions analysis;
  std::optional<State> rollout_start;
  int rollout_steps = 5000;
  double rollout_tolerance = 1e-6;
};

Eigen::VectorXd project_budget_box(const Eigen::VectorXd& v, double C,
                                   const Eigen::VectorXd& ub);

double trajectory_cost(const Trajectory& traj, const ControlSpec& spec);

struct PolicyMetrics {
  double total_adopters = 0.0;
  double control_cost = 0.0;
};

PolicyMetrics policy_metrics(const Trajectory& traj,
                             bool linear_effort = false);

// Penalized single-shooting objective: stage cost over k=0..N-1 plus
// penalty_weight * squared 2-norm terminal deviation from cfg.target.
// Invariant breaches during the rollout surface as +inf.
double mpc_objective(const State& s, const ModelParams& p,
                     const ControlSpec& spec, const MpcConfig& cfg,
                     const std::vector<Eigen::VectorXd>& U,
                     double penalty_weight,
                     double* terminal_deviation = nullptr,
                     double* stage_cost = nullptr);

std::vector<Eigen::VectorXd> mpc_objective_gradient(
    const State& s, const ModelParams& p, const ControlSpec& spec,
    const MpcConfig& cfg, const std::vector<Eigen::VectorXd>& U,
    double penalty_weight);

std::vector<Eigen::VectorXd> mpc_objective_gradient_fd(
    const State& s, const ModelParams& p, const ControlSpec& spec,
    const MpcConfig& cfg, const std::vector<Eigen::VectorXd>& U,
    double penalty_weight, double h = 1e-6);

std::vector<Eigen::VectorXd> shifted_candidate(
    const std::vector<Eigen::VectorXd>& U_star, const Eigen::VectorXd& u_bar);

PolicyResult mpc_solve(const State& s, const ModelParams& p,
                       const ControlSpec& spec, const MpcConfig& cfg,
                       const std::vector<Eigen::VectorXd>* warm_start = nullptr);

struct ClosedLoopResult {
  Trajectory trajectory;
  std::vector<double> cost_series;
  std::vector<bool> shifted_feasible;
  int lost_feasibility_at = -1;
  bool completed = true;
};

ClosedLoopResult mpc_run(const State& s0, const ModelParams& p,
                         const ControlSpec& spec, const MpcConfig& cfg, int T);

PolicyResult solve_ccp(const ModelParams& p, const ControlSpec& spec,
                       const CcpConfig& cfg = {});

// Wires a feasible CCP result into an MPC configuration (target equilibrium
// and steady control); remaining fields keep their defaults.
MpcConfig mpc_config_from_ccp(const PolicyResult& ccp, int horizon);

}  // namespace adoptnet
