#include "adoptnet/control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "adoptnet/errors.hpp"
#include "adoptnet/rng.hpp"

namespace adoptnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_weight_vector(const Eigen::VectorXd& v, int n, const char* name) {
  if (static_cast<int>(v.size()) != n) {
    std::ostringstream msg;
    msg << "control spec: " << name << " has size " << v.size()
        << ", expected " << n;
    throw ValidationError(msg.str());
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0) {
      std::ostringstream msg;
      msg << "control spec: " << name << "[" << i
          << "] must be finite and nonnegative, got " << v[i];
      throw ValidationError(msg.str());
    }
  }
}

double stage_cost(const State& z, const Eigen::VectorXd& u,
                  const ControlSpec& spec) {
  const double adopt = spec.Qa.cwiseProduct(z.a.cwiseProduct(z.a)).sum();
  const double dissat = spec.Qd.cwiseProduct(z.d.cwiseProduct(z.d)).sum();
  const double effort = spec.L.cwiseProduct(u.cwiseProduct(u)).sum();
  return -adopt + dissat + effort;
}

using ControlSeq = std::vector<Eigen::VectorXd>;

double seq_dot(const ControlSeq& a, const ControlSeq& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].dot(b[k]);
  return s;
}

double seq_dist_inf(const ControlSeq& a, const ControlSeq& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s = std::max(s, (a[k] - b[k]).lpNorm<Eigen::Infinity>());
  }
  return s;
}

ControlSeq seq_step(const ControlSeq& u, const ControlSeq& g, double t,
                    const ControlSpec& spec) {
  ControlSeq out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    out[k] = project_budget_box(u[k] - t * g[k], spec.budget, spec.u_upper);
  }
  return out;
}

struct Rollout {
  std::vector<State> states;
  double stage = kInf;
  double dev2 = kInf;
  double dev_inf = kInf;
  bool ok = false;
};

Rollout roll(const State& s, const ModelParams& p, const ControlSpec& spec,
             const MpcConfig& cfg, const ControlSeq& U) {
  Rollout r;
  r.states.reserve(U.size() + 1);
  r.states.push_back(s);
  double stage = 0;
  try {
    for (const Eigen::VectorXd& u : U) {
      stage += stage_cost(r.states.back(), u, spec);
      r.states.push_back(step(r.states.back(), p, ControlInput{u, spec.channel}));
    }
  } catch (const InvariantBreachError&) {
    return r;
  }
  const Eigen::VectorXd dv =
      pack_state(r.states.back()) - pack_state(cfg.target);
  r.stage = stage;
  r.dev2 = dv.squaredNorm();
  r.dev_inf = dv.lpNorm<Eigen::Infinity>();
  r.ok = true;
  return r;
}

struct PgOutcome {
  ControlSeq U;
  double value = kInf;
  double stage = kInf;
  double dev_inf = kInf;
  int iterations = 0;
  double kkt = kInf;
};

// Projected gradient with Barzilai-Borwein steps and an Armijo backtrack
// along the projection arc; monotone in the penalized objective.
PgOutcome solve_penalized(const State& s, const ModelParams& p,
                          const ControlSpec& spec, const MpcConfig& cfg,
                          ControlSeq U, double w) {
  auto value = [&](const ControlSeq& seq, double* dev, double* stage) {
    return mpc_objective(s, p, spec, cfg, seq, w, dev, stage);
  };
  auto grad = [&](const ControlSeq& seq) {
    return cfg.solver.fd_gradients
               ? mpc_objective_gradient_fd(s, p, spec, cfg, seq, w)
               : mpc_objective_gradient(s, p, spec, cfg, seq, w);
  };

  PgOutcome out;
  double dev = kInf, stg = kInf;
  double f = value(U, &dev, &stg);
  if (!std::isfinite(f)) {
    for (Eigen::VectorXd& u : U) u.setZero();
    f = value(U, &dev, &stg);
    if (!std::isfinite(f)) {
      out.U = U;
      return out;
    }
  }
  ControlSeq g = grad(U);
  double tau = 1.0;
  {
    double gn = 0;
    for (const auto& gk : g) gn = std::max(gn, gk.lpNorm<Eigen::Infinity>());
    tau = 1.0 / std::max(1.0, gn);
  }

  int it = 0;
  for (; it < cfg.solver.max_iters; ++it) {
    const ControlSeq fixed = seq_step(U, g, 1.0, spec);
    out.kkt = seq_dist_inf(fixed, U);
    if (out.kkt <= cfg.solver.step_tolerance) break;

    double t = std::clamp(tau, 1e-14, 1e10);
    bool accepted = false;
    ControlSeq V;
    double fV = kInf, devV = kInf, stgV = kInf;
    for (int bt = 0; bt < 60; ++bt) {
      V = seq_step(U, g, t, spec);
      if (seq_dist_inf(V, U) <= 1e-18) break;
      devV = kInf;
      stgV = kInf;
      fV = value(V, &devV, &stgV);
      ControlSeq diff(V.size());
      for (std::size_t k = 0; k < V.size(); ++k) diff[k] = V[k] - U[k];
      const double dirder = seq_dot(g, diff);
      if (std::isfinite(fV) && fV <= f + 1e-4 * dirder) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    const ControlSeq gV = grad(V);
    double ss = 0, sy = 0;
    for (std::size_t k = 0; k < V.size(); ++k) {
      const Eigen::VectorXd sv = V[k] - U[k];
      ss += sv.squaredNorm();
      sy += sv.dot(gV[k] - g[k]);
    }
    tau = sy > 1e-18 ? ss / sy : t * 2.0;
    U = std::move(V);
    g = gV;
    f = fV;
    dev = devV;
    stg = stgV;
  }

  if (!std::isfinite(dev)) f = value(U, &dev, &stg);
  out.U = std::move(U);
  out.value = f;
  out.stage = stg;
  out.dev_inf = dev;
  out.iterations = it;
  if (!std::isfinite(out.kkt)) {
    const ControlSeq fixed = seq_step(out.U, g, 1.0, spec);
    out.kkt = seq_dist_inf(fixed, out.U);
  }
  return out;
}

}  // namespace

void ControlSpec::validate(int n) const {
  if (!std::isfinite(budget) || budget < 0) {
    throw ValidationError("control spec: budget must be finite and >= 0");
  }
  check_weight_vector(u_upper, n, "u_upper");
  check_weight_vector(Qa, n, "Qa");
  check_weight_vector(Qd, n, "Qd");
  check_weight_vector(L, n, "L");
}

ControlSpec make_control_spec(const ModelParams& p, Channel channel,
                              double budget, double beta_cap) {
  const int n = p.size();
  ControlSpec spec;
  spec.channel = channel;
  spec.budget = budget;
  spec.Qa = Eigen::VectorXd::Constant(n, 1.0);
  spec.Qd = Eigen::VectorXd::Constant(n, 0.2);
  spec.L = Eigen::VectorXd::Constant(n, 0.05);
  spec.u_upper.resize(n);
  switch (channel) {
    case Channel::Opinion:
      spec.u_upper = (1.0 - p.x0.array()).max(0.0).matrix();
      break;
    case Channel::AdoptionRate:
      for (int i = 0; i < n; ++i) {
        // keep the boosted rate a probability: beta (1+u) <= 1
        const double headroom =
            p.beta[i] > 0 ? std::max(0.0, 1.0 / p.beta[i] - 1.0) : beta_cap;
        spec.u_upper[i] = std::min(beta_cap, headroom);
      }
      break;
    case Channel::Dissatisfaction:
      spec.u_upper.setConstant(1.0);
      break;
  }
  return spec;
}

Eigen::VectorXd project_budget_box(const Eigen::VectorXd& v, double C,
                                   const Eigen::VectorXd& ub) {
  if (v.size() != ub.size()) {
    throw ValidationError("project_budget_box: size mismatch");
  }
  if (!(C >= 0) || !std::isfinite(C)) {
    throw ValidationError("project_budget_box: budget must be finite and >= 0");
  }
  for (Eigen::Index i = 0; i < ub.size(); ++i) {
    if (!(ub[i] >= 0)) {
      throw ValidationError("project_budget_box: box upper bound must be >= 0");
    }
  }
  Eigen::VectorXd u = v.cwiseMax(0.0).cwiseMin(ub);
  if (u.sum() <= C) return u;
  // a zero budget pins the feasible set to the origin; skip the bisection
  if (C == 0.0) return Eigen::VectorXd::Zero(v.size());
  double lo = 0.0, hi = v.maxCoeff();
  double tau = hi;
  for (int it = 0; it < 200; ++it) {
    tau = 0.5 * (lo + hi);
    const double s = ((v.array() - tau).max(0.0).min(ub.array())).sum();
    if (std::abs(s - C) <= 1e-10) break;
    if (s > C) {
      lo = tau;
    } else {
      hi = tau;
    }
  }
  return ((v.array() - tau).max(0.0).min(ub.array())).matrix();
}

double trajectory_cost(const Trajectory& traj, const ControlSpec& spec) {
  const std::size_t N = traj.controls.size();
  if (traj.states.size() < N) {
    throw ValidationError("trajectory_cost: fewer states than controls");
  }
  double total = 0;
  for (std::size_t k = 0; k < N; ++k) {
    total += stage_cost(traj.states[k], traj.controls[k], spec);
  }
  return total;
}

PolicyMetrics policy_metrics(const Trajectory& traj, bool linear_effort) {
  PolicyMetrics m;
  for (const State& s : traj.states) m.total_adopters += s.a.sum();
  for (const Eigen::VectorXd& u : traj.controls) {
    m.control_cost += linear_effort ? u.sum() : u.squaredNorm();
  }
  return m;
}

double mpc_objective(const State& s, const ModelParams& p,
                     const ControlSpec& spec, const MpcConfig& cfg,
                     const ControlSeq& U, double penalty_weight,
                     double* terminal_deviation, double* stage_out) {
  const Rollout r = roll(s, p, spec, cfg, U);
  if (terminal_deviation) *terminal_deviation = r.dev_inf;
  if (stage_out) *stage_out = r.stage;
  if (!r.ok) return kInf;
  return r.stage + penalty_weight * r.dev2;
}

ControlSeq mpc_objective_gradient(const State& s, const ModelParams& p,
                                  const ControlSpec& spec,
                                  const MpcConfig& cfg, const ControlSeq& U,
                                  double penalty_weight) {
  const int N = static_cast<int>(U.size());
  const int n = p.size();
  const Rollout r = roll(s, p, spec, cfg, U);
  if (!r.ok) {
    throw InvariantBreachError(
        "mpc gradient requested at a rollout that leaves the invariant set");
  }
  Eigen::VectorXd lam =
      2.0 * penalty_weight * (pack_state(r.states[N]) - pack_state(cfg.target));
  ControlSeq g(N);
  for (int k = N - 1; k >= 0; --k) {
    const ControlInput ci{U[k], spec.channel};
    const StepJacobian jac = step_jacobian(r.states[k], p, ci);
    g[k] = 2.0 * spec.L.cwiseProduct(U[k]) + jac.dcontrol.transpose() * lam;
    Eigen::VectorXd stage_dz = Eigen::VectorXd::Zero(3 * n);
    stage_dz.head(n) = -2.0 * spec.Qa.cwiseProduct(r.states[k].a);
    stage_dz.segment(n, n) = 2.0 * spec.Qd.cwiseProduct(r.states[k].d);
    lam = stage_dz + jac.dstate.transpose() * lam;
  }
  return g;
}

ControlSeq mpc_objective_gradient_fd(const State& s, const ModelParams& p,
                                     const ControlSpec& spec,
                                     const MpcConfig& cfg, const ControlSeq& U,
                                     double penalty_weight, double h) {
  const int N = static_cast<int>(U.size());
  const int n = p.size();
  ControlSeq g(N, Eigen::VectorXd::Zero(n));
  ControlSeq probe = U;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < n; ++i) {
      const double base = U[k][i];
      const double up = std::min(base + h, spec.u_upper[i]);
      const double dn = std::max(base - h, 0.0);
      if (up - dn < 1e-14) continue;
      probe[k][i] = up;
      const double fu = mpc_objective(s, p, spec, cfg, probe, penalty_weight);
      probe[k][i] = dn;
      const double fd = mpc_objective(s, p, spec, cfg, probe, penalty_weight);
      probe[k][i] = base;
      g[k][i] = (fu - fd) / (up - dn);
    }
  }
  return g;
}

ControlSeq shifted_candidate(const ControlSeq& U_star,
                             const Eigen::VectorXd& u_bar) {
  if (U_star.empty()) {
    throw ValidationError("shifted_candidate: empty control sequence");
  }
  ControlSeq out(U_star.begin() + 1, U_star.end());
  out.push_back(u_bar);
  return out;
}

PolicyResult mpc_solve(const State& s, const ModelParams& p,
                       const ControlSpec& spec, const MpcConfig& cfg,
                       const ControlSeq* warm_start) {
  const int n = p.size();
  s.validate();
  spec.validate(n);
  if (cfg.horizon < 1) throw ValidationError("mpc: horizon must be >= 1");
  if (!(cfg.terminal_tolerance > 0) || !(cfg.target_deviation_goal > 0)) {
    throw ValidationError("mpc: tolerances must be positive");
  }
  cfg.target.validate();
  const int N = cfg.horizon;

  ControlSeq U;
  if (warm_start && static_cast<int>(warm_start->size()) == N) {
    U = *warm_start;
  } else if (cfg.u_bar.size() == n) {
    U.assign(N, cfg.u_bar);
  } else {
    U.assign(N, Eigen::VectorXd::Zero(n));
  }
  for (Eigen::VectorXd& u : U) {
    u = project_budget_box(u, spec.budget, spec.u_upper);
  }

  // Remember the initial candidate: on warm-started solves it realizes the
  // recursive-feasibility bound, so never report anything worse.
  double cand_dev = kInf, cand_stage = kInf;
  mpc_objective(s, p, spec, cfg, U, 0.0, &cand_dev, &cand_stage);
  const ControlSeq candidate = U;

  PolicyResult out;
  double w = cfg.terminal_penalty_weight;
  double best_dev = kInf, best_stage = kInf;
  ControlSeq best_U;
  double prev_dev = kInf;
  for (int round = 0; round < cfg.max_penalty_rounds; ++round) {
    PgOutcome pg = solve_penalized(s, p, spec, cfg, U, w);
    out.iterations += pg.iterations;
    out.kkt_residual = pg.kkt;
    out.final_penalty_weight = w;
    U = pg.U;
    if (pg.dev_inf < best_dev) {
      best_dev = pg.dev_inf;
      best_stage = pg.stage;
      best_U = pg.U;
    }
    if (pg.dev_inf <= cfg.target_deviation_goal) break;
    if (round > 0 && pg.dev_inf > 0.5 * prev_dev) break;
    prev_dev = pg.dev_inf;
    w *= cfg.penalty_growth;
  }

  if (std::isfinite(cand_dev) && cand_dev <= cfg.terminal_tolerance &&
      (best_dev > cfg.terminal_tolerance || cand_stage < best_stage)) {
    best_U = candidate;
    best_dev = cand_dev;
    best_stage = cand_stage;
    out.note = "initial candidate retained";
  }

  out.U = std::move(best_U);
  out.feasible = best_dev <= cfg.terminal_tolerance;
  out.cost = best_stage;
  out.terminal_deviation = best_dev;
  if (!out.U.empty()) out.u = out.U.front();
  return out;
}

ClosedLoopResult mpc_run(const State& s0, const ModelParams& p,
                         const ControlSpec& spec, const MpcConfig& cfg,
                         int T) {
  const int n = p.size();
  p.validate();
  s0.validate();
  spec.validate(n);
  if (T < 0) throw ValidationError("mpc_run: T must be >= 0");
  if (cfg.u_bar.size() != n) {
    throw ValidationError("mpc_run: cfg.u_bar must hold the steady control");
  }

  ClosedLoopResult out;
  out.trajectory.channel = spec.channel;
  out.trajectory.states.push_back(s0);
  State s = s0;
  ControlSeq warm;
  MpcConfig local = cfg;
  for (int t = 0; t < T; ++t) {
    if (!warm.empty()) {
      double dev = kInf;
      mpc_objective(s, p, spec, local, warm, 0.0, &dev);
      out.shifted_feasible.push_back(dev <= cfg.terminal_tolerance);
    }
    const PolicyResult sol =
        mpc_solve(s, p, spec, local, warm.empty() ? nullptr : &warm);
    if (!sol.feasible) {
      if (t == 0) {
        throw InfeasibleError(
            "receding horizon infeasible at the initial state");
      }
      out.lost_feasibility_at = t;
      out.completed = false;
      break;
    }
    if (std::isfinite(sol.final_penalty_weight)) {
      local.terminal_penalty_weight =
          std::max(cfg.terminal_penalty_weight, sol.final_penalty_weight);
    }
    out.cost_series.push_back(sol.cost);
    const Eigen::VectorXd u0 = sol.U.front();
    s = step(s, p, ControlInput{u0, spec.channel});
    out.trajectory.controls.push_back(u0);
    out.trajectory.states.push_back(s);
    warm = shifted_candidate(sol.U, cfg.u_bar);
  }
  return out;
}

PolicyResult solve_ccp(const ModelParams& p, const ControlSpec& spec,
                       const CcpConfig& cfg) {
  const int n = p.size();
  p.validate();
  spec.validate(n);

  // Feasible-candidate cost; nullopt when the threshold constraint fails or
  // no diffused equilibrium is reachable from the warm guess.
  auto evaluate = [&](const Eigen::VectorXd& u, State& guess)
      -> std::optional<std::pair<double, EquilibriumReport>> {
    const ControlInput ci{u, spec.channel};
    double r0mn = 0, r0mx = 0;
    try {
      std::tie(r0mn, r0mx) = r0_extremes(p, ci);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (!(r0mn > 1.0)) return std::nullopt;
    EquilibriumReport eq;
    try {
      eq = diffused_equilibrium(p, guess, cfg.analysis, ci);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (eq.kind != EquilibriumKind::AdoptionDiffused) return std::nullopt;
    guess = eq.state();
    eq.r0_min = r0mn;
    eq.r0_max = r0mx;
    const double cost =
        -spec.Qa.cwiseProduct(eq.a_star.cwiseProduct(eq.a_star)).sum() +
        spec.Qd.cwiseProduct(eq.d_star.cwiseProduct(eq.d_star)).sum() +
        spec.L.cwiseProduct(u.cwiseProduct(u)).sum();
    return std::make_pair(cost, eq);
  };

  auto gradient = [&](const Eigen::VectorXd& u, double f_center,
                      const State& guess) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    const double h = cfg.fd_step;
    for (int i = 0; i < n; ++i) {
      const double up = std::min(u[i] + h, spec.u_upper[i]);
      const double dn = std::max(u[i] - h, 0.0);
      if (up - dn < 1e-14) continue;
      Eigen::VectorXd probe = u;
      probe[i] = up;
      State gu = guess;
      const auto eu = evaluate(probe, gu);
      probe[i] = dn;
      State gd = guess;
      const auto ed = evaluate(probe, gd);
      if (eu && ed) {
        g[i] = (eu->first - ed->first) / (up - dn);
      } else if (eu && up > u[i]) {
        g[i] = (eu->first - f_center) / (up - u[i]);
      } else if (ed && u[i] > dn) {
        g[i] = (f_center - ed->first) / (u[i] - dn);
      }
    }
    return g;
  };

  // Lower reproduction number as a function of the control alone; monotone
  // nondecreasing in u on every channel (entrywise matrix dominance).
  auto r0_lower = [&](const Eigen::VectorXd& u) -> double {
    try {
      return r0_extremes(p, ControlInput{u, spec.channel}).first;
    } catch (const Error&) {
      return -kInf;
    }
  };

  // Deterministic start set: rest point, box corner, half box, a greedy
  // concentration on the nodes with the largest threshold leverage, then
  // random fill.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(n));
  starts.push_back(project_budget_box(spec.u_upper, spec.budget, spec.u_upper));
  starts.push_back(
      project_budget_box(0.5 * spec.u_upper, spec.budget, spec.u_upper));
  {
    const double f0 = r0_lower(Eigen::VectorXd::Zero(n));
    Eigen::VectorXd marginal = Eigen::VectorXd::Constant(n, -kInf);
    for (int i = 0; i < n; ++i) {
      const double h = std::min(spec.u_upper[i], 1e-4);
      if (h <= 0.0) continue;
      Eigen::VectorXd probe = Eigen::VectorXd::Zero(n);
      probe[i] = h;
      marginal[i] = (r0_lower(probe) - f0) / h;
    }
    std::vector<int> by_leverage(n);
    std::iota(by_leverage.begin(), by_leverage.end(), 0);
    std::stable_sort(by_leverage.begin(), by_leverage.end(),
                     [&](int a, int b) { return marginal[a] > marginal[b]; });
    Eigen::VectorXd greedy = Eigen::VectorXd::Zero(n);
    double left = spec.budget;
    for (const int i : by_leverage) {
      const double take = std::min(spec.u_upper[i], left);
      if (take <= 0.0) break;
      greedy[i] = take;
      left -= take;
    }
    starts.push_back(greedy);
  }
  Rng rng(cfg.seed, 0xCC9);
  while (static_cast<int>(starts.size()) < std::max(1, cfg.starts)) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(0.0, spec.u_upper[i]);
    starts.push_back(project_budget_box(v, spec.budget, spec.u_upper));
  }
  starts.resize(std::max(1, cfg.starts));

  struct StartResult {
    Eigen::VectorXd u;
    double cost = kInf;
    EquilibriumReport eq;
    State guess;
    int iterations = 0;
    double kkt = kInf;
    bool ok = false;
  };
  std::vector<StartResult> results;

  auto run_start = [&](const Eigen::VectorXd& start) -> StartResult {
    StartResult sr;
    sr.u = start;
    sr.guess = default_equilibrium_guess(p);
    auto ev = evaluate(sr.u, sr.guess);
    if (!ev) return sr;
    double f = ev->first;
    sr.eq = ev->second;
    Eigen::VectorXd g = gradient(sr.u, f, sr.guess);
    double tau = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < cfg.max_iters; ++it) {
      sr.kkt = (project_budget_box(sr.u - g, spec.budget, spec.u_upper) - sr.u)
                   .lpNorm<Eigen::Infinity>();
      if (sr.kkt <= cfg.step_tolerance) break;
      ++sr.iterations;
      double t = std::clamp(tau, 1e-14, 1e10);
      bool accepted = false;
      Eigen::VectorXd v;
      double fv = kInf;
      EquilibriumReport eqv;
      State guessv;
      for (int bt = 0; bt < 50; ++bt) {
        v = project_budget_box(sr.u - t * g, spec.budget, spec.u_upper);
        if ((v - sr.u).lpNorm<Eigen::Infinity>() <= 1e-18) break;
        guessv = sr.guess;
        const auto evv = evaluate(v, guessv);
        if (evv) {
          fv = evv->first;
          eqv = evv->second;
          const double dirder = g.dot(v - sr.u);
          if (fv <= f + 1e-4 * dirder) {
            accepted = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (!accepted) break;
      const Eigen::VectorXd gv = gradient(v, fv, guessv);
      const Eigen::VectorXd sv = v - sr.u;
      const double sy = sv.dot(gv - g);
      tau = sy > 1e-18 ? sv.squaredNorm() / sy : t * 2.0;
      sr.u = v;
      f = fv;
      sr.eq = eqv;
      sr.guess = guessv;
      g = gv;
    }
    sr.cost = f;
    sr.ok = true;
    return sr;
  };

  int total_iterations = 0;
  for (const Eigen::VectorXd& start : starts) {
    StartResult sr = run_start(start);
    total_iterations += sr.iterations;
    results.push_back(std::move(sr));
  }

  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(results.size()); ++i) {
    if (results[i].ok) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return results[a].cost < results[b].cost;
  });

  if (order.empty()) {
    // No start landed in the supercritical region. The threshold margin is
    // monotone in u, so climb it from the best start before giving up; a
    // failed climb makes the infeasibility verdict trustworthy.
    Eigen::VectorXd u = starts.front();
    double f = r0_lower(u);
    for (const Eigen::VectorXd& s : starts) {
      const double fs = r0_lower(s);
      if (fs > f) {
        f = fs;
        u = s;
      }
    }
    for (int it = 0; it < 80 && f < 1.05; ++it) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) {
        const double up = std::min(u[i] + cfg.fd_step, spec.u_upper[i]);
        const double dn = std::max(u[i] - cfg.fd_step, 0.0);
        if (up - dn < 1e-14) continue;
        Eigen::VectorXd probe = u;
        probe[i] = up;
        const double fu = r0_lower(probe);
        probe[i] = dn;
        g[i] = (fu - r0_lower(probe)) / (up - dn);
      }
      double t = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        const Eigen::VectorXd v =
            project_budget_box(u + t * g, spec.budget, spec.u_upper);
        if ((v - u).lpNorm<Eigen::Infinity>() <= 1e-16) break;
        const double fv = r0_lower(v);
        if (fv > f + 1e-14) {
          u = v;
          f = fv;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
    if (f > 1.0) {
      StartResult sr = run_start(u);
      total_iterations += sr.iterations;
      if (sr.ok) {
        results.push_back(std::move(sr));
        order.push_back(static_cast<int>(results.size()) - 1);
      }
    }
  }

  PolicyResult out;
  out.u = Eigen::VectorXd::Zero(n);
  out.iterations = total_iterations;
  for (const int idx : order) {
    StartResult& sr = results[idx];
    const ControlInput ci{sr.u, spec.channel};
    EquilibriumReport certified = certify(p, sr.eq, ci);
    if (cfg.mode == CcpFeasibilityMode::Strict) {
      if (!certified.certificate.certified) continue;
    } else {
      State z = cfg.rollout_start ? *cfg.rollout_start : State{};
      if (!cfg.rollout_start) {
        z.a = Eigen::VectorXd::Constant(n, 0.01);
        z.d = Eigen::VectorXd::Zero(n);
        z.x = p.x0;
      }
      bool converged = false;
      try {
        const Eigen::VectorXd target = pack_state(certified.state());
        for (int t = 0; t < cfg.rollout_steps; ++t) {
          z = step(z, p, ci);
          if ((pack_state(z) - target).lpNorm<Eigen::Infinity>() <=
              cfg.rollout_tolerance) {
            converged = true;
            break;
          }
        }
      } catch (const InvariantBreachError&) {
        converged = false;
      }
      if (!converged) continue;
    }
    out.feasible = true;
    out.u = sr.u;
    out.cost = sr.cost;
    out.kkt_residual = sr.kkt;
    out.equilibrium = std::move(certified);
    break;
  }
  if (!out.feasible) {
    out.note = order.empty()
                   ? "no start satisfied the threshold constraint"
                   : (cfg.mode == CcpFeasibilityMode::Strict
                          ? "no candidate produced a certified equilibrium"
                          : "no candidate attracted the verification rollout");
  }
  return out;
}

MpcConfig mpc_config_from_ccp(const PolicyResult& ccp, int horizon) {
  if (!ccp.feasible || !ccp.equilibrium) {
    throw ValidationError(
        "mpc_config_from_ccp: needs a feasible constant policy with its "
        "equilibrium attached");
  }
  MpcConfig cfg;
  cfg.horizon = horizon;
  cfg.target = ccp.equilibrium->state();
  cfg.u_bar = ccp.u;
  return cfg;
}

}  // namespace adoptnet
