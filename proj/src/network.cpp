#include "adoptnet/network.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <vector>

#include "adoptnet/errors.hpp"
#include "adoptnet/rng.hpp"

namespace adoptnet {

namespace {

// Forward/backward reachability from node 0; strong connectivity iff both
// searches cover every node (Kosaraju-style two-pass check).
std::vector<bool> reachable(const Eigen::MatrixXd& w, double threshold,
                            bool transpose) {
  const int n = static_cast<int>(w.rows());
  std::vector<bool> seen(n, false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      const double e = transpose ? w(j, i) : w(i, j);
      if (e > threshold && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

bool strongly_connected(const Eigen::MatrixXd& weights, double threshold,
                        std::pair<int, int>* unreachable_pair) {
  const int n = static_cast<int>(weights.rows());
  if (n == 0) return false;
  const auto fwd = reachable(weights, threshold, false);
  for (int i = 0; i < n; ++i) {
    if (!fwd[i]) {
      if (unreachable_pair) *unreachable_pair = {0, i};
      return false;
    }
  }
  const auto bwd = reachable(weights, threshold, true);
  for (int i = 0; i < n; ++i) {
    if (!bwd[i]) {
      if (unreachable_pair) *unreachable_pair = {i, 0};
      return false;
    }
  }
  return true;
}

Network Network::from_weights(const Eigen::MatrixXd& weights,
                              double row_sum_tolerance) {
  const auto rows = weights.rows();
  if (rows == 0 || rows != weights.cols()) {
    std::ostringstream msg;
    msg << "weight matrix must be square and non-empty, got " << rows << "x"
        << weights.cols();
    throw ValidationError(msg.str());
  }
  if (!(row_sum_tolerance > 0)) {
    throw ValidationError("row_sum_tolerance must be positive");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < rows; ++j) {
      const double e = weights(i, j);
      if (!std::isfinite(e) || e < 0) {
        std::ostringstream msg;
        msg << "weight (" << i << "," << j << ") = " << e
            << " is negative or not finite";
        throw NegativeWeightError(msg.str());
      }
    }
  }
  Eigen::Index worst = 0;
  double worst_dev = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double dev = std::abs(weights.row(i).sum() - 1.0);
    if (dev > worst_dev) {
      worst_dev = dev;
      worst = i;
    }
  }
  if (worst_dev > row_sum_tolerance) {
    std::ostringstream msg;
    msg << "row " << worst << " sums to " << weights.row(worst).sum()
        << " (deviation " << worst_dev << " exceeds tolerance "
        << row_sum_tolerance << ")";
    throw RowSumError(msg.str());
  }
  std::pair<int, int> pair{0, 0};
  if (!strongly_connected(weights, kEdgeThreshold, &pair)) {
    std::ostringstream msg;
    msg << "digraph is not strongly connected: no path from node " << pair.first
        << " to node " << pair.second;
    throw NotStronglyConnectedError(msg.str());
  }
  return Network(weights, row_sum_tolerance);
}

double spectral_radius(const Eigen::MatrixXd& m, double tol, int max_iters) {
  const auto n = m.rows();
  if (n == 0 || n != m.cols()) throw ValidationError("matrix must be square");
  if (!(tol > 0) || max_iters < 1)
    throw ValidationError("spectral_radius needs tol > 0 and max_iters >= 1");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!std::isfinite(m(i, j)) || m(i, j) < 0)
        throw ValidationError("spectral_radius expects a nonnegative matrix");

  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  v /= v.norm();
  double lambda = 0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = m * v;
    const double norm = w.norm();
    if (norm == 0) return 0.0;  // all-ones is positive, so m must be zero
    lambda = v.dot(w);
    const double resid = (w - lambda * v).lpNorm<Eigen::Infinity>();
    v = w / norm;
    if (resid <= tol * std::max(1.0, std::abs(lambda))) {
      return std::abs(lambda);
    }
  }
  // Reducible or tied-modulus spectrum: fall back to the full spectrum.
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NoConvergenceError(
        "spectral radius: power iteration stalled and the dense eigensolver "
        "failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Network random_strongly_connected(int n, double extra_edge_density,
                                  std::uint64_t seed) {
  if (n < 1) throw ValidationError("network size must be at least 1");
  if (!(extra_edge_density >= 0) || extra_edge_density > 1)
    throw ValidationError("extra_edge_density must lie in [0, 1]");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) {
    w(0, 0) = 1.0;
    return Network::from_weights(w);
  }
  Rng rng(seed, 0x6E657477ULL);
  for (int i = 0; i < n; ++i) {
    w(i, (i + 1) % n) = 1.0 - rng.uniform();  // uniform in (0, 1]
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || j == (i + 1) % n) continue;
      if (rng.uniform() < extra_edge_density) {
        w(i, j) = 1.0 - rng.uniform();
      }
    }
  }
  for (int i = 0; i < n; ++i) w.row(i) /= w.row(i).sum();
  return Network::from_weights(w);
}

}  // namespace adoptnet
