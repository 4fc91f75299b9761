#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace adoptnet {

/// Row-stochastic influence matrix over a strongly connected digraph.
/// from_weights validates; a constructed instance is immutable. The default
/// instance is the empty (0 x 0) placeholder and fails any size check.
class Network {
public:
  static constexpr double kDefaultRowSumTolerance = 1e-9;
  /// Entries at or below this threshold are treated as absent arcs.
  static constexpr double kEdgeThreshold = 1e-15;

  Network() = default;

  /// Validates shape, nonnegativity, row sums (each within
  /// row_sum_tolerance of 1) and strong connectivity of the positive-entry
  /// digraph. Throws NegativeWeightError / RowSumError /
  /// NotStronglyConnectedError / ValidationError.
  static Network from_weights(const Eigen::MatrixXd& weights,
                              double row_sum_tolerance = kDefaultRowSumTolerance);

  int size() const noexcept { return static_cast<int>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  double row_sum_tolerance() const noexcept { return row_sum_tolerance_; }

private:
  Network(Eigen::MatrixXd weights, double row_sum_tolerance)
      : weights_(std::move(weights)), row_sum_tolerance_(row_sum_tolerance) {}

  Eigen::MatrixXd weights_;
  double row_sum_tolerance_ = kDefaultRowSumTolerance;
};

/// True when the positive-entry digraph (entries > threshold) is strongly
/// connected. When it is not and unreachable_pair is non-null, the pair is
/// filled with (from, to) such that no directed path leads from `from` to
/// `to`.
bool strongly_connected(const Eigen::MatrixXd& weights,
                        double threshold = Network::kEdgeThreshold,
                        std::pair<int, int>* unreachable_pair = nullptr);

/// Spectral radius of a nonnegative square matrix. Power iteration from the
/// all-ones vector; falls back to a dense eigensolver when the iteration
/// stalls (reducible matrices, tied moduli). Throws ValidationError for
/// negative/non-finite input and NoConvergenceError if both stages fail.
double spectral_radius(const Eigen::MatrixXd& m, double tol = 1e-12,
                       int max_iters = 10000);

/// Random strongly connected row-stochastic network: a directed Hamiltonian
/// cycle plus each remaining off-diagonal arc independently with probability
/// extra_edge_density; arc weights uniform in (0, 1], rows normalized.
/// n == 1 degenerates to the 1x1 identity. Deterministic in seed.
Network random_strongly_connected(int n, double extra_edge_density,
                                  std::uint64_t seed);

}  // namespace adoptnet
