#include "adoptnet/model.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "adoptnet/errors.hpp"

namespace adoptnet {

namespace {

constexpr double kInputDust = 1e-12;   // slack accepted on validated inputs
constexpr double kClampDust = 1e-9;    // drift repaired silently on outputs

void check_unit_vector(const Eigen::VectorXd& v, const char* name, int n,
                       double lo = 0.0, double hi = 1.0) {
  if (static_cast<int>(v.size()) != n) {
    std::ostringstream msg;
    msg << name << " has size " << v.size() << ", expected " << n;
    throw ValidationError(msg.str());
  }
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(v[i]) || v[i] < lo - kInputDust || v[i] > hi + kInputDust) {
      std::ostringstream msg;
      msg << name << "[" << i << "] = " << v[i] << " outside [" << lo << ", "
          << hi << "]";
      throw ValidationError(msg.str());
    }
  }
}

}  // namespace

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Opinion: return "opinion";
    case Channel::AdoptionRate: return "beta";
    case Channel::Dissatisfaction: return "delta";
  }
  return "?";
}

Channel channel_from_name(const std::string& name) {
  if (name == "opinion") return Channel::Opinion;
  if (name == "beta") return Channel::AdoptionRate;
  if (name == "delta") return Channel::Dissatisfaction;
  throw ValidationError("unknown channel '" + name +
                        "' (expected opinion, beta or delta)");
}

void ModelParams::validate() const {
  const int n = size();
  if (n < 1) throw ValidationError("model must have at least one node");
  check_unit_vector(beta, "beta", n);
  check_unit_vector(gamma, "gamma", n);
  check_unit_vector(theta, "theta", n);
  check_unit_vector(delta, "delta", n);
  check_unit_vector(alpha, "alpha", n);
  check_unit_vector(lambda, "lambda", n);
  check_unit_vector(xi, "xi", n);
  check_unit_vector(x0, "x0", n);
  if (W.size() != n || Wt.size() != n) {
    throw ValidationError("network sizes do not match the parameter vectors");
  }
  for (int i = 0; i < n; ++i) {
    const double sum = alpha[i] + lambda[i] + xi[i];
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "alpha+lambda+xi = " << sum << " at node " << i
          << ", expected 1";
      throw ValidationError(msg.str());
    }
    const double gt = gamma[i] + theta[i];
    if (!(gt > 0.0) || !(gt < 1.0)) {
      std::ostringstream msg;
      msg << "gamma+theta = " << gt << " at node " << i
          << " outside the open interval (0, 1)";
      throw ValidationError(msg.str());
    }
  }
  // Every node must reach an anchored node (alpha > 0) through Wt: search
  // backwards from the anchored set along Wt arcs.
  std::vector<bool> ok(n, false);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (alpha[i] > 0) {
      ok[i] = true;
      stack.push_back(i);
    }
  }
  const auto& wt = Wt.weights();
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int i = 0; i < n; ++i) {
      if (!ok[i] && wt(i, j) > Network::kEdgeThreshold) {
        ok[i] = true;
        stack.push_back(i);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!ok[i]) {
      std::ostringstream msg;
      msg << "node " << i << " reaches no anchored node (alpha > 0) through Wt";
      throw ValidationError(msg.str());
    }
  }
}

void State::validate() const {
  const int n = size();
  if (n < 1 || d.size() != n || x.size() != n) {
    throw ValidationError("state vectors must share one positive size");
  }
  check_unit_vector(a, "a", n);
  check_unit_vector(d, "d", n);
  check_unit_vector(x, "x", n);
  for (int i = 0; i < n; ++i) {
    if (a[i] + d[i] > 1.0 + kInputDust) {
      std::ostringstream msg;
      msg << "a+d = " << a[i] + d[i] << " at node " << i << " exceeds 1";
      throw ValidationError(msg.str());
    }
  }
}

EffectiveRates effective_rates(const ModelParams& p,
                               const std::optional<ControlInput>& ctrl) {
  EffectiveRates r{p.beta, p.delta, p.x0};
  if (!ctrl) return r;
  const int n = p.size();
  if (static_cast<int>(ctrl->u.size()) != n) {
    throw ValidationError("control vector size does not match the model");
  }
  for (int i = 0; i < n; ++i) {
    const double ui = ctrl->u[i];
    if (!std::isfinite(ui) || ui < -kInputDust) {
      std::ostringstream msg;
      msg << "control u[" << i << "] = " << ui << " must be nonnegative";
      throw ValidationError(msg.str());
    }
  }
  switch (ctrl->channel) {
    case Channel::Opinion:
      r.anchor = p.x0 + ctrl->u;
      for (int i = 0; i < n; ++i) {
        if (r.anchor[i] > 1.0 + kClampDust) {
          std::ostringstream msg;
          msg << "opinion anchor x0+u = " << r.anchor[i] << " at node " << i
              << " exceeds 1";
          throw InvariantBreachError(msg.str());
        }
        r.anchor[i] = std::min(r.anchor[i], 1.0);
      }
      break;
    case Channel::AdoptionRate:
      r.beta = p.beta.cwiseProduct(Eigen::VectorXd::Ones(n) + ctrl->u);
      break;
    case Channel::Dissatisfaction:
      for (int i = 0; i < n; ++i) {
        if (ctrl->u[i] > 1.0 + kInputDust) {
          std::ostringstream msg;
          msg << "dissatisfaction control u[" << i << "] = " << ctrl->u[i]
              << " exceeds 1";
          throw ValidationError(msg.str());
        }
      }
      r.delta = p.delta.cwiseProduct(Eigen::VectorXd::Ones(n) - ctrl->u)
                    .cwiseMax(0.0);
      break;
  }
  return r;
}

State step(const State& s, const ModelParams& p,
           const std::optional<ControlInput>& ctrl) {
  const int n = p.size();
  if (s.size() != n) throw ValidationError("state size does not match model");
  const EffectiveRates er = effective_rates(p, ctrl);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd sus = ones - s.a - s.d;
  const Eigen::VectorXd wa = p.W.weights() * s.a;
  const Eigen::VectorXd wx = p.Wt.weights() * s.x;

  State out;
  out.a = s.a + er.beta.cwiseProduct(s.x).cwiseProduct(sus).cwiseProduct(wa) -
          er.delta.cwiseProduct(s.a);
  out.d = s.d - p.gamma.cwiseProduct(s.x).cwiseProduct(s.d) +
          p.theta.cwiseProduct(ones - s.x).cwiseProduct(sus) +
          er.delta.cwiseProduct(s.a);
  out.x = p.alpha.cwiseProduct(er.anchor) + p.lambda.cwiseProduct(wx) +
          p.xi.cwiseProduct(wa);

  auto repair = [](Eigen::VectorXd& v, const char* name) {
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
      if (v[i] < -kClampDust || v[i] > 1.0 + kClampDust) {
        std::ostringstream msg;
        msg << name << "[" << i << "] = " << v[i]
            << " left [0, 1] by more than floating-point dust";
        throw InvariantBreachError(msg.str());
      }
      v[i] = std::min(std::max(v[i], 0.0), 1.0);
    }
  };
  repair(out.a, "a");
  repair(out.d, "d");
  repair(out.x, "x");
  for (int i = 0; i < n; ++i) {
    const double excess = out.a[i] + out.d[i] - 1.0;
    if (excess > kClampDust) {
      std::ostringstream msg;
      msg << "a+d = " << out.a[i] + out.d[i] << " at node " << i
          << " left the simplex by more than floating-point dust";
      throw InvariantBreachError(msg.str());
    }
    if (excess > 0) {
      const double shave = std::min(excess, out.d[i]);
      out.d[i] -= shave;
      out.a[i] -= excess - shave;
    }
  }
  return out;
}

namespace {

Trajectory run(const State& s0, const ModelParams& p, int T,
               const Policy* policy) {
  if (T < 0) throw ValidationError("horizon T must be nonnegative");
  s0.validate();
  Trajectory traj;
  traj.states.reserve(T + 1);
  traj.states.push_back(s0);
  for (int t = 0; t < T; ++t) {
    std::optional<ControlInput> ctrl;
    if (policy) {
      ctrl = (*policy)(t, traj.states.back());
      traj.channel = ctrl->channel;
      traj.controls.push_back(ctrl->u);
    }
    try {
      traj.states.push_back(step(traj.states.back(), p, ctrl));
    } catch (const InvariantBreachError& e) {
      throw InvariantBreachError(std::string(e.what()) + " (step " +
                                     std::to_string(t) + ")",
                                 t);
    }
  }
  return traj;
}

}  // namespace

Trajectory simulate(const State& s0, const ModelParams& p, int T) {
  return run(s0, p, T, nullptr);
}

Trajectory simulate(const State& s0, const ModelParams& p, int T,
                    const Policy& policy) {
  return run(s0, p, T, &policy);
}

Trajectory simulate(const State& s0, const ModelParams& p, int T,
                    const ControlInput& constant) {
  Policy policy = [&constant](int, const State&) { return constant; };
  return run(s0, p, T, &policy);
}

StepJacobian step_jacobian(const State& s, const ModelParams& p,
                           const std::optional<ControlInput>& ctrl) {
  const int n = p.size();
  if (s.size() != n) throw ValidationError("state size does not match model");
  const EffectiveRates er = effective_rates(p, ctrl);
  const Eigen::MatrixXd& W = p.W.weights();
  const Eigen::MatrixXd& Wt = p.Wt.weights();
  const Eigen::VectorXd sus = Eigen::VectorXd::Ones(n) - s.a - s.d;
  const Eigen::VectorXd wa = W * s.a;

  StepJacobian jac;
  jac.dstate = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  jac.dcontrol = Eigen::MatrixXd::Zero(3 * n, n);

  // a+ block row
  for (int i = 0; i < n; ++i) {
    const double bxsi = er.beta[i] * s.x[i];
    for (int j = 0; j < n; ++j) {
      jac.dstate(i, j) = bxsi * sus[i] * W(i, j);
    }
    jac.dstate(i, i) += 1.0 - er.delta[i] - bxsi * wa[i];
    jac.dstate(i, n + i) = -bxsi * wa[i];
    jac.dstate(i, 2 * n + i) = er.beta[i] * sus[i] * wa[i];
  }
  // d+ block row
  for (int i = 0; i < n; ++i) {
    jac.dstate(n + i, i) = er.delta[i] - p.theta[i] * (1.0 - s.x[i]);
    jac.dstate(n + i, n + i) =
        1.0 - p.gamma[i] * s.x[i] - p.theta[i] * (1.0 - s.x[i]);
    jac.dstate(n + i, 2 * n + i) = -p.gamma[i] * s.d[i] - p.theta[i] * sus[i];
  }
  // x+ block row
  jac.dstate.block(2 * n, 0, n, n) = p.xi.asDiagonal() * W;
  jac.dstate.block(2 * n, 2 * n, n, n) = p.lambda.asDiagonal() * Wt;

  if (ctrl) {
    switch (ctrl->channel) {
      case Channel::Opinion:
        for (int i = 0; i < n; ++i) jac.dcontrol(2 * n + i, i) = p.alpha[i];
        break;
      case Channel::AdoptionRate:
        for (int i = 0; i < n; ++i) {
          jac.dcontrol(i, i) = p.beta[i] * s.x[i] * sus[i] * wa[i];
        }
        break;
      case Channel::Dissatisfaction:
        for (int i = 0; i < n; ++i) {
          jac.dcontrol(i, i) = p.delta[i] * s.a[i];
          jac.dcontrol(n + i, i) = -p.delta[i] * s.a[i];
        }
        break;
    }
  }
  return jac;
}

Eigen::VectorXd pack_state(const State& s) {
  const int n = s.size();
  Eigen::VectorXd z(3 * n);
  z << s.a, s.d, s.x;
  return z;
}

State unpack_state(const Eigen::VectorXd& z) {
  const int n = static_cast<int>(z.size()) / 3;
  State s;
  s.a = z.segment(0, n);
  s.d = z.segment(n, n);
  s.x = z.segment(2 * n, n);
  return s;
}

}  // namespace adoptnet
