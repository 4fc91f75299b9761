#include "adoptnet/analysis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "adoptnet/errors.hpp"

namespace adoptnet {

namespace {

// Opinion fixed point: (I - Lambda Wt) x = alpha .* anchor + xi .* (W drive).
Eigen::VectorXd opinion_fixed_point(const ModelParams& p,
                                    const Eigen::VectorXd& anchor,
                                    const Eigen::VectorXd& adoption_drive) {
  const int n = p.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) -
                      p.lambda.asDiagonal() * p.Wt.weights();
  Eigen::VectorXd b = p.alpha.cwiseProduct(anchor) +
                      p.xi.cwiseProduct(p.W.weights() * adoption_drive);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    throw SingularSystemError(
        "opinion fixed point: I - Lambda*Wt is singular");
  }
  Eigen::VectorXd x = lu.solve(b);
  return x.cwiseMax(0.0).cwiseMin(1.0);
}

double residual_of(const State& eq, const ModelParams& p,
                   const std::optional<ControlInput>& ctrl) {
  const State next = step(eq, p, ctrl);
  double r = (next.a - eq.a).lpNorm<Eigen::Infinity>();
  r = std::max(r, (next.d - eq.d).lpNorm<Eigen::Infinity>());
  r = std::max(r, (next.x - eq.x).lpNorm<Eigen::Infinity>());
  return r;
}

}  // namespace

const char* threshold_verdict_name(ThresholdVerdict v) {
  switch (v) {
    case ThresholdVerdict::GAS: return "GAS";
    case ThresholdVerdict::Unstable: return "Unstable";
    case ThresholdVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

Eigen::VectorXd psi(const Eigen::VectorXd& x, const ModelParams& p) {
  const int n = p.size();
  if (static_cast<int>(x.size()) != n) {
    throw ValidationError("psi: opinion vector size does not match model");
  }
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const double denom = p.gamma[i] * x[i] + p.theta[i] * (1.0 - x[i]);
    if (!(denom > 0)) {
      std::ostringstream msg;
      msg << "psi denominator vanishes at node " << i << " (gamma=" << p.gamma[i]
          << ", theta=" << p.theta[i] << ", x=" << x[i] << ")";
      throw SingularDenominatorError(msg.str());
    }
    out[i] = p.theta[i] * (1.0 - x[i]) / denom;
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> opinion_bounds(
    const ModelParams& p, const std::optional<ControlInput>& ctrl,
    bool x_upper_all_ones) {
  const EffectiveRates er = effective_rates(p, ctrl);
  const int n = p.size();
  Eigen::VectorXd lower =
      opinion_fixed_point(p, er.anchor, Eigen::VectorXd::Zero(n));
  Eigen::VectorXd upper =
      x_upper_all_ones
          ? Eigen::VectorXd::Ones(n)
          : opinion_fixed_point(p, er.anchor, Eigen::VectorXd::Ones(n));
  return {lower, upper};
}

double r0(const Eigen::VectorXd& x, const ModelParams& p,
          const std::optional<ControlInput>& ctrl) {
  const int n = p.size();
  if (static_cast<int>(x.size()) != n) {
    throw ValidationError("r0: opinion vector size does not match model");
  }
  const EffectiveRates er = effective_rates(p, ctrl);
  const Eigen::VectorXd ps = psi(x, p);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double gain = er.beta[i] * x[i] * (1.0 - ps[i]);
    for (int j = 0; j < n; ++j) m(i, j) = gain * p.W.weights()(i, j);
    m(i, i) += 1.0 - er.delta[i];
  }
  return spectral_radius(m);
}

std::pair<double, double> r0_extremes(const ModelParams& p,
                                      const std::optional<ControlInput>& ctrl,
                                      bool x_upper_all_ones) {
  const auto [lower, upper] = opinion_bounds(p, ctrl, x_upper_all_ones);
  return {r0(lower, p, ctrl), r0(upper, p, ctrl)};
}

EquilibriumReport adoption_free_equilibrium(
    const ModelParams& p, const std::optional<ControlInput>& ctrl) {
  p.validate();
  const EffectiveRates er = effective_rates(p, ctrl);
  const int n = p.size();
  EquilibriumReport rep;
  rep.kind = EquilibriumKind::AdoptionFree;
  rep.x_star = opinion_fixed_point(p, er.anchor, Eigen::VectorXd::Zero(n));
  rep.d_star = psi(rep.x_star, p);
  rep.a_star = Eigen::VectorXd::Zero(n);
  rep.residual = residual_of(rep.state(), p, ctrl);
  return rep;
}

State default_equilibrium_guess(const ModelParams& p,
                                const std::optional<ControlInput>& ctrl) {
  const int n = p.size();
  const auto bounds = opinion_bounds(p, ctrl);
  State s;
  s.a = Eigen::VectorXd::Constant(n, 0.3);
  s.d = Eigen::VectorXd::Constant(n, 0.2);
  s.x = bounds.second;
  return s;
}

EquilibriumReport diffused_equilibrium(const ModelParams& p,
                                       const State& guess,
                                       const AnalysisOptions& options,
                                       const std::optional<ControlInput>& ctrl) {
  p.validate();
  guess.validate();
  if (guess.a.minCoeff() <= 0) {
    throw ValidationError(
        "diffused_equilibrium: the guess must have min a > 0");
  }
  if (!(options.damping > 0) || options.damping > 1) {
    throw ValidationError("damping must lie in (0, 1]");
  }
  const double w = options.damping;
  State z = guess;
  double res = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < options.max_iters; ++it) {
    const State next = step(z, p, ctrl);
    res = std::max({(next.a - z.a).lpNorm<Eigen::Infinity>(),
                    (next.d - z.d).lpNorm<Eigen::Infinity>(),
                    (next.x - z.x).lpNorm<Eigen::Infinity>()});
    if (res <= options.tol) {
      converged = true;
      break;
    }
    z.a += w * (next.a - z.a);
    z.d += w * (next.d - z.d);
    z.x += w * (next.x - z.x);
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "diffused_equilibrium: no convergence after " << options.max_iters
        << " iterations (residual " << res << ")";
    throw NoConvergenceError(msg.str());
  }

  if (options.newton_polish) {
    const int n = p.size();
    for (int it = 0; it < 20 && res > 1e-14; ++it) {
      const StepJacobian jac = step_jacobian(z, p, ctrl);
      const State fz = step(z, p, ctrl);
      const Eigen::VectorXd g = pack_state(fz) - pack_state(z);
      Eigen::MatrixXd A =
          jac.dstate - Eigen::MatrixXd::Identity(3 * n, 3 * n);
      Eigen::VectorXd delta = A.fullPivLu().solve(-g);
      const Eigen::VectorXd cand = pack_state(z) + delta;
      if (!cand.allFinite() || cand.minCoeff() < 0 || cand.maxCoeff() > 1) {
        break;
      }
      State zc = unpack_state(cand);
      bool simplex = true;
      for (int i = 0; i < n; ++i) {
        if (zc.a[i] + zc.d[i] > 1.0) simplex = false;
      }
      if (!simplex) break;
      const double cand_res = residual_of(zc, p, ctrl);
      if (cand_res >= res) break;
      z = zc;
      res = cand_res;
    }
  }

  EquilibriumReport rep;
  rep.a_star = z.a;
  rep.d_star = z.d;
  rep.x_star = z.x;
  rep.residual = residual_of(z, p, ctrl);
  if (z.a.minCoeff() > 10 * options.tol) {
    rep.kind = EquilibriumKind::AdoptionDiffused;
  } else {
    rep.kind = EquilibriumKind::AdoptionFree;
    rep.note = "iteration converged to the adoption-free equilibrium";
  }
  return rep;
}

StabilityConstants stability_constants(const ModelParams& p,
                                       const EquilibriumReport& eq,
                                       const std::optional<ControlInput>& ctrl,
                                       bool x_upper_all_ones) {
  const EffectiveRates er = effective_rates(p, ctrl);
  const int n = p.size();
  if (static_cast<int>(eq.a_star.size()) != n) {
    throw ValidationError("stability_constants: equilibrium size mismatch");
  }
  StabilityConstants c;
  std::tie(c.x_lower, c.x_upper) = opinion_bounds(p, ctrl, x_upper_all_ones);

  double worst_rate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto rate = [&](double x) {
      return p.gamma[i] * x + p.theta[i] * (1.0 - x);
    };
    // affine in x, so the interval minimum sits at an endpoint
    worst_rate = std::min({worst_rate, rate(c.x_lower[i]), rate(c.x_upper[i])});
  }
  c.eta = 1.0 - worst_rate;

  c.nu = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    c.nu = std::max(c.nu, p.theta[i] * (1.0 - c.x_lower[i]) - er.delta[i]);
  }

  const Eigen::VectorXd wa_star = p.W.weights() * eq.a_star;
  c.varphi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wii = p.W.weights()(i, i);
    const double off = p.W.weights().row(i).sum() - wii;
    // Row sum of |I - Delta - Bstar + B diag(x) diag(1-a-d) W| maximized over
    // the box: x_i in [0,1] and, with a_i and d_i independent in [0,1],
    // h = 1-a_i-d_i in [-1,1]. Each row value is convex in x_i and h_i
    // separately (abs of an affine map plus |h| times a nonnegative term),
    // so the maximum sits at one of the four per-row vertices.
    for (const double x : {0.0, 1.0}) {
      for (const double h : {-1.0, 1.0}) {
        const double diag = 1.0 - er.delta[i] - er.beta[i] * x * wa_star[i] +
                            er.beta[i] * x * h * wii;
        const double row =
            std::abs(diag) + er.beta[i] * x * std::abs(h) * off;
        c.varphi = std::max(c.varphi, row);
      }
    }
  }

  // Bstar is diagonal, so its spectral radius is the largest diagonal entry.
  c.rho_bstar = 0.0;
  for (int i = 0; i < n; ++i) {
    c.rho_bstar =
        std::max(c.rho_bstar, er.beta[i] * eq.x_star[i] * wa_star[i]);
  }
  return c;
}

EquilibriumReport certify(const ModelParams& p, EquilibriumReport eq,
                          const std::optional<ControlInput>& ctrl,
                          bool x_upper_all_ones) {
  std::tie(eq.r0_min, eq.r0_max) = r0_extremes(p, ctrl, x_upper_all_ones);
  if (eq.r0_max < 1.0) {
    eq.threshold_verdict = ThresholdVerdict::GAS;
  } else if (eq.r0_min > 1.0) {
    eq.threshold_verdict = ThresholdVerdict::Unstable;
  } else {
    eq.threshold_verdict = ThresholdVerdict::Inconclusive;
  }
  eq.diffused_exists = eq.r0_min > 1.0;

  eq.certificate = Certificate{};
  const StabilityConstants c =
      stability_constants(p, eq, ctrl, x_upper_all_ones);
  const EffectiveRates er = effective_rates(p, ctrl);
  const Eigen::VectorXd wa_star = p.W.weights() * eq.a_star;
  bool row_dominance = true;
  for (int i = 0; i < p.size(); ++i) {
    const double bstar_ii = er.beta[i] * eq.x_star[i] * wa_star[i];
    if (er.beta[i] * p.W.weights().row(i).sum() > er.delta[i] + bstar_ii) {
      row_dominance = false;
      break;
    }
  }
  if (!row_dominance || !(c.varphi < 1.0) || !(c.eta < 1.0)) {
    return eq;
  }

  const double eta2 = c.eta * c.eta;
  const double phi2 = c.varphi * c.varphi;
  const double nu2 = c.nu * c.nu;
  const double rho2 = c.rho_bstar * c.rho_bstar;
  const double gain_phi = phi2 / ((1.0 - phi2) * (1.0 - phi2));
  const double gain_eta = eta2 / ((1.0 - eta2) * (1.0 - eta2));
  constexpr int kGrid = 200;
  const double lo = std::log(1e-4), hi = std::log(1e4);
  for (int i = 0; i < kGrid && !eq.certificate.certified; ++i) {
    const double s1 = std::exp(lo + (hi - lo) * i / (kGrid - 1));
    for (int j = 0; j < kGrid; ++j) {
      const double s2 = std::exp(lo + (hi - lo) * j / (kGrid - 1));
      const double c1 = nu2 + s2 * nu2 / (1.0 - eta2) + s1 * s1 * gain_phi;
      const double c2 = rho2 + s1 * rho2 / (1.0 - phi2) + s2 * s2 * gain_eta;
      if (c1 < s1 && c2 < s2) {
        eq.certificate = Certificate{true, s1, s2};
        break;
      }
    }
  }
  return eq;
}

}  // namespace adoptnet
