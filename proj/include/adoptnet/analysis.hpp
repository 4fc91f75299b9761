#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "adoptnet/model.hpp"

namespace adoptnet {

/// Verdict of the opinion-extremal threshold test:
///   GAS          r0_max < 1  (adoption-free equilibrium globally attracting)
///   Unstable     r0_min > 1  (adoption-free equilibrium repelling)
///   Inconclusive otherwise.
enum class ThresholdVerdict { GAS, Unstable, Inconclusive };

const char* threshold_verdict_name(ThresholdVerdict v);

enum class EquilibriumKind { AdoptionFree, AdoptionDiffused };

/// Outcome of the spectral small-gain certificate search.
struct Certificate {
  bool certified = false;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

struct EquilibriumReport {
  EquilibriumKind kind = EquilibriumKind::AdoptionFree;
  Eigen::VectorXd a_star;
  Eigen::VectorXd d_star;
  Eigen::VectorXd x_star;
  double r0_max = std::numeric_limits<double>::quiet_NaN();
  double r0_min = std::numeric_limits<double>::quiet_NaN();
  ThresholdVerdict threshold_verdict = ThresholdVerdict::Inconclusive;
  /// Supercritical existence statement: true iff r0_min > 1.
  bool diffused_exists = false;
  Certificate certificate;
  /// Infinity norm of step(equilibrium) - equilibrium, recomputed from the
  /// returned vectors.
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::string note;

  State state() const { return State{a_star, d_star, x_star}; }
};

/// Contraction/gain constants entering the certificate conditions.
struct StabilityConstants {
  double eta = 0.0;       // dissatisfaction contraction factor
  double nu = 0.0;        // worst cross influx minus abandonment
  double varphi = 0.0;    // adoption error gain over the state box
  double rho_bstar = 0.0; // spectral radius of the equilibrium coupling block
  Eigen::VectorXd x_lower;
  Eigen::VectorXd x_upper;
};

struct AnalysisOptions {
  /// Use the all-ones vector as the opinion upper bound instead of the
  /// reachable fixed-point bound.
  bool x_upper_all_ones = false;
  double tol = 1e-12;
  int max_iters = 200000;
  /// Relaxation weight of the damped fixed-point iteration (1 = plain map).
  double damping = 0.5;
  /// Newton refinement after the damped iteration has converged.
  bool newton_polish = false;
};

/// Stationary dissatisfied fraction given opinions x:
/// psi_i = theta_i (1 - x_i) / (gamma_i x_i + theta_i (1 - x_i)).
/// Throws SingularDenominatorError when a denominator vanishes.
Eigen::VectorXd psi(const Eigen::VectorXd& x, const ModelParams& p);

/// Fixed points of the opinion layer under extreme adoption (a == 0 and
/// a == 1), clipped into [0, 1]: the box [x_lower, x_upper] is forward
/// invariant and attracts every trajectory geometrically.
std::pair<Eigen::VectorXd, Eigen::VectorXd> opinion_bounds(
    const ModelParams& p, const std::optional<ControlInput>& ctrl = std::nullopt,
    bool x_upper_all_ones = false);

/// Adoption reproduction number at a frozen opinion profile x:
/// spectral radius of I - Delta + B diag(x) (I - diag(psi(x))) W.
double r0(const Eigen::VectorXd& x, const ModelParams& p,
          const std::optional<ControlInput>& ctrl = std::nullopt);

/// (r0_min, r0_max): the reproduction number at x_lower and x_upper.
std::pair<double, double> r0_extremes(
    const ModelParams& p, const std::optional<ControlInput>& ctrl = std::nullopt,
    bool x_upper_all_ones = false);

/// Adoption-free equilibrium (a == 0): solves the anchored opinion fixed
/// point and the stationary dissatisfaction profile directly.
EquilibriumReport adoption_free_equilibrium(
    const ModelParams& p, const std::optional<ControlInput>& ctrl = std::nullopt);

/// Damped fixed-point iteration of the full map from an interior guess
/// (min a > 0 required), classifying the limit by min a*. Throws
/// NoConvergenceError after max_iters. Optional Newton refinement; Newton
/// steps are rejected unless they reduce the residual and stay in the state
/// box.
EquilibriumReport diffused_equilibrium(
    const ModelParams& p, const State& guess,
    const AnalysisOptions& options = {},
    const std::optional<ControlInput>& ctrl = std::nullopt);

/// Standard interior guess used when the caller has none.
State default_equilibrium_guess(const ModelParams& p,
                                const std::optional<ControlInput>& ctrl = std::nullopt);

/// Certificate constants for a given equilibrium. varphi maximizes the row
/// sums of the adoption error map over the box a, d, x in [0, 1]^n; each row
/// is convex in its own coordinates so only box vertices are evaluated.
StabilityConstants stability_constants(
    const ModelParams& p, const EquilibriumReport& eq,
    const std::optional<ControlInput>& ctrl = std::nullopt,
    bool x_upper_all_ones = false);

/// Fills r0 extremes, the threshold verdict, the existence statement and the
/// small-gain certificate of the given equilibrium. The certificate requires
/// the per-row dominance condition, eta < 1 and varphi < 1, then scans a
/// 200 x 200 logarithmic grid of (sigma1, sigma2) in [1e-4, 1e4]^2 for a
/// strictly feasible pair; the first hit in row-major order is reported.
EquilibriumReport certify(const ModelParams& p, EquilibriumReport eq,
                          const std::optional<ControlInput>& ctrl = std::nullopt,
                          bool x_upper_all_ones = false);

}  // namespace adoptnet
