#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "adoptnet/network.hpp"

namespace adoptnet {

/// Intervention channel for a control vector u >= 0:
///  - Opinion: shifts the opinion anchors, x0 -> x0 + u (requires x0 + u <= 1)
///  - AdoptionRate: scales adoption rates, beta -> beta (1 + u)
///  - Dissatisfaction: scales abandonment rates, delta -> delta (1 - u), u <= 1
enum class Channel { Opinion, AdoptionRate, Dissatisfaction };

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

struct ControlInput {
  Eigen::VectorXd u;
  Channel channel = Channel::Dissatisfaction;
};

/// Node-wise model parameters on a two-layer network: W couples adoption
/// (physical layer), Wt couples opinions (social layer). All rate vectors are
/// entrywise in [0, 1]; alpha + lambda + xi == 1 per node; gamma + theta in
/// (0, 1) per node; every node must reach an anchored node (alpha > 0)
/// through Wt.
struct ModelParams {
  Eigen::VectorXd beta;    // adoption rate scale, beta_i(x) = beta_i x_i
  Eigen::VectorXd gamma;   // dissatisfaction recovery scale, gamma_i x_i
  Eigen::VectorXd theta;   // dissatisfaction influx scale, theta_i (1 - x_i)
  Eigen::VectorXd delta;   // abandonment rate
  Eigen::VectorXd alpha;   // anchor weight in the opinion update
  Eigen::VectorXd lambda;  // social-neighbor weight
  Eigen::VectorXd xi;      // adoption-feedback weight
  Eigen::VectorXd x0;      // opinion anchors in [0, 1]
  Network W;
  Network Wt;

  int size() const noexcept { return static_cast<int>(beta.size()); }
  /// Throws ValidationError naming the offending field and index.
  void validate() const;
};

/// Compartment fractions a (adopters), d (dissatisfied) and opinions x.
/// Valid states satisfy a, d, x in [0, 1] and a + d <= 1 entrywise.
struct State {
  Eigen::VectorXd a;
  Eigen::VectorXd d;
  Eigen::VectorXd x;

  int size() const noexcept { return static_cast<int>(a.size()); }
  void validate() const;
};

struct Trajectory {
  std::vector<State> states;                 // length T + 1
  std::vector<Eigen::VectorXd> controls;     // length T; empty if uncontrolled
  std::optional<Channel> channel;
};

/// Rates of the controlled system after applying the channel substitution.
struct EffectiveRates {
  Eigen::VectorXd beta;
  Eigen::VectorXd delta;
  Eigen::VectorXd anchor;
};
EffectiveRates effective_rates(const ModelParams& p,
                               const std::optional<ControlInput>& ctrl);

/// One synchronous update of the coupled adoption-opinion map:
///   a+ = a + beta x (1-a-d) (W a) - delta a
///   d+ = d - gamma x d + theta (1-x) (1-a-d) + delta a
///   x+ = alpha x0 + lambda (Wt x) + xi (W a)
/// (all products node-wise; channel substitutions applied when ctrl is set).
/// Outputs are clamped into [0, 1] only for drift below 1e-9; larger
/// violations raise InvariantBreachError.
State step(const State& s, const ModelParams& p,
           const std::optional<ControlInput>& ctrl = std::nullopt);

using Policy = std::function<ControlInput(int t, const State& s)>;

/// T steps from s0; records states (length T+1) and applied controls.
Trajectory simulate(const State& s0, const ModelParams& p, int T);
Trajectory simulate(const State& s0, const ModelParams& p, int T,
                    const Policy& policy);
/// Constant-control convenience overload.
Trajectory simulate(const State& s0, const ModelParams& p, int T,
                    const ControlInput& constant);

/// Dense Jacobian blocks of one step, ordered (a, d, x). dstate is 3n x 3n,
/// dcontrol is 3n x n (zero when ctrl is absent). Used by the adjoint
/// gradient and the optional Newton refinement.
struct StepJacobian {
  Eigen::MatrixXd dstate;
  Eigen::MatrixXd dcontrol;
};
StepJacobian step_jacobian(const State& s, const ModelParams& p,
                           const std::optional<ControlInput>& ctrl = std::nullopt);

/// Stack (a, d, x) into one 3n vector and back; the ordering used by
/// step_jacobian and the terminal penalties.
Eigen::VectorXd pack_state(const State& s);
State unpack_state(const Eigen::VectorXd& z);

}  // namespace adoptnet
