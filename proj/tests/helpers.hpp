#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "adoptnet/model.hpp"
#include "adoptnet/network.hpp"

namespace testutil {

using adoptnet::Channel;
using adoptnet::ControlInput;
using adoptnet::ModelParams;
using adoptnet::Network;
using adoptnet::State;

// Scalar reference setup used throughout: W = Wt = [1].
inline ModelParams scalar_params(double beta = 0.5, double gamma = 0.4,
                                 double theta = 0.2, double delta = 0.3,
                                 double alpha = 0.2, double lambda = 0.5,
                                 double xi = 0.3, double x0 = 0.5) {
  ModelParams p;
  const Network w = Network::from_weights(Eigen::MatrixXd::Ones(1, 1));
  p.W = w;
  p.Wt = w;
  p.beta = Eigen::VectorXd::Constant(1, beta);
  p.gamma = Eigen::VectorXd::Constant(1, gamma);
  p.theta = Eigen::VectorXd::Constant(1, theta);
  p.delta = Eigen::VectorXd::Constant(1, delta);
  p.alpha = Eigen::VectorXd::Constant(1, alpha);
  p.lambda = Eigen::VectorXd::Constant(1, lambda);
  p.xi = Eigen::VectorXd::Constant(1, xi);
  p.x0 = Eigen::VectorXd::Constant(1, x0);
  p.validate();
  return p;
}

// n-node params with +-5% multiplicative jitter around the given levels.
inline ModelParams jittered_params(int n, double beta, double delta,
                                   double gamma, double theta, double alpha,
                                   double lambda, double x0,
                                   std::uint64_t seed,
                                   double density = 0.5) {
  std::mt19937_64 eng(seed * 2654435769ULL + 97);
  std::uniform_real_distribution<double> jit(0.95, 1.05);
  ModelParams p;
  p.W = adoptnet::random_strongly_connected(n, density, seed * 3 + 1);
  p.Wt = adoptnet::random_strongly_connected(n, density, seed * 3 + 2);
  p.beta = p.gamma = p.theta = p.delta = Eigen::VectorXd(n);
  p.alpha = p.lambda = p.xi = p.x0 = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    p.beta[i] = std::min(1.0, beta * jit(eng));
    p.delta[i] = std::min(1.0, delta * jit(eng));
    p.gamma[i] = gamma * jit(eng);
    p.theta[i] = theta * jit(eng);
    const double al = std::min(0.95, alpha * jit(eng));
    const double la = std::min(1.0 - al, lambda * jit(eng));
    p.alpha[i] = al;
    p.lambda[i] = la;
    p.xi[i] = 1.0 - al - la;
    p.x0[i] = std::min(1.0, x0 * jit(eng));
  }
  p.validate();
  return p;
}

inline State random_state(int n, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  State s;
  s.a = s.d = s.x = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    const double a = uni(eng);
    s.a[i] = a;
    s.d[i] = uni(eng) * (1.0 - a);
    s.x[i] = uni(eng);
  }
  return s;
}

// Independent reference step: plain loops, explicit susceptible compartment
// s = 1 - a - d, channel substitutions spelled out.
inline State reference_step(const State& st, const ModelParams& p,
                            const std::optional<ControlInput>& ctrl) {
  const int n = p.size();
  std::vector<double> beta(n), delta(n), anchor(n);
  for (int i = 0; i < n; ++i) {
    beta[i] = p.beta[i];
    delta[i] = p.delta[i];
    anchor[i] = p.x0[i];
  }
  if (ctrl) {
    for (int i = 0; i < n; ++i) {
      const double u = ctrl->u[i];
      if (ctrl->channel == Channel::Opinion) anchor[i] += u;
      if (ctrl->channel == Channel::AdoptionRate) beta[i] *= 1.0 + u;
      if (ctrl->channel == Channel::Dissatisfaction) delta[i] *= 1.0 - u;
    }
  }
  State out;
  out.a = out.d = out.x = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    double wa = 0.0, wx = 0.0;
    for (int j = 0; j < n; ++j) {
      wa += p.W.weights()(i, j) * st.a[j];
      wx += p.Wt.weights()(i, j) * st.x[j];
    }
    const double s = 1.0 - st.a[i] - st.d[i];
    double a = st.a[i] + beta[i] * st.x[i] * s * wa - delta[i] * st.a[i];
    double d = st.d[i] - p.gamma[i] * st.x[i] * st.d[i] +
               p.theta[i] * (1.0 - st.x[i]) * s + delta[i] * st.a[i];
    double x = p.alpha[i] * anchor[i] + p.lambda[i] * wx + p.xi[i] * wa;
    auto clamp = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    out.a[i] = clamp(a);
    out.d[i] = clamp(d);
    out.x[i] = clamp(x);
  }
  return out;
}

// Reference supercritical draw used by the control and acceptance suites.
inline ModelParams supercritical_params(std::uint64_t seed, int n = 3) {
  return jittered_params(n, 0.85, 0.06, 0.3, 0.2, 0.3, 0.4, 0.8, seed);
}

// Brute-force certificate constants: eta and nu on a grid over the opinion
// box, varphi on a per-row grid over (a, d, x) in [0,1]^3 with h = 1 - a - d.
struct GridConstants {
  double eta, nu, varphi;
};

inline GridConstants grid_constants(const ModelParams& p,
                                    const Eigen::VectorXd& a_star,
                                    const Eigen::VectorXd& x_lower,
                                    const Eigen::VectorXd& x_upper,
                                    int pts = 21) {
  const int n = p.size();
  const Eigen::VectorXd wa_star = p.W.weights() * a_star;
  GridConstants g{0.0, -1e300, 0.0};
  double worst_rate = 1e300;
  for (int i = 0; i < n; ++i) {
    const double wii = p.W.weights()(i, i);
    const double off = p.W.weights().row(i).sum() - wii;
    for (int ka = 0; ka < pts; ++ka) {
      const double a = static_cast<double>(ka) / (pts - 1);
      for (int kd = 0; kd < pts; ++kd) {
        const double d = static_cast<double>(kd) / (pts - 1);
        const double h = 1.0 - a - d;
        for (int kx = 0; kx < pts; ++kx) {
          const double x = static_cast<double>(kx) / (pts - 1);
          const double diag = 1.0 - p.delta[i] - p.beta[i] * x * wa_star[i] +
                              p.beta[i] * x * h * wii;
          const double row =
              std::abs(diag) + p.beta[i] * x * std::abs(h) * off;
          g.varphi = std::max(g.varphi, row);
        }
      }
    }
    for (int k = 0; k < pts; ++k) {
      const double x =
          x_lower[i] + (x_upper[i] - x_lower[i]) * k / (pts - 1);
      worst_rate = std::min(worst_rate, p.gamma[i] * x + p.theta[i] * (1 - x));
      g.nu = std::max(g.nu, p.theta[i] * (1.0 - x) - p.delta[i]);
    }
  }
  g.eta = 1.0 - worst_rate;
  return g;
}

// Independent projection: clip to the box, then bisect the budget dual.
inline Eigen::VectorXd project_reference(const Eigen::VectorXd& v, double C,
                                         const Eigen::VectorXd& ub) {
  Eigen::VectorXd clipped = v.cwiseMax(0.0).cwiseMin(ub);
  if (clipped.sum() <= C + 1e-15) return clipped;
  double lo = 0.0, hi = (v.maxCoeff() > 0 ? v.maxCoeff() : 0.0) + 1.0;
  auto shrink = [&](double tau) {
    return (v.array() - tau).cwiseMax(0.0).cwiseMin(ub.array()).sum();
  };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (shrink(mid) > C ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  return (v.array() - tau).cwiseMax(0.0).cwiseMin(ub.array()).matrix();
}

}  // namespace testutil
