#pragma once

#include <cstdint>
#include <vector>

#include "sharplab/dataset.hpp"
#include "sharplab/matrix.hpp"
#include "sharplab/records.hpp"

namespace sharplab {

/// Fixed random projection followed by ReLU: features(x) = relu(xᵀ·proj + bias).
struct FeatureMap {
  std::size_t dim = 0;
  Matrix proj;                 // in_dim×dim, entries ~ normal(0, 1/sqrt(in_dim))
  std::vector<double> bias;    // dim entries ~ normal(0, 1)
  std::uint64_t seed = 0;
};

FeatureMap build_feature_map(std::uint64_t seed, std::size_t dim, std::size_t in_dim = kSmallPixels);
/// n×dim feature matrix for the rows of `x`.
Matrix apply_features(const FeatureMap& map, const Matrix& x);

struct LinearSolution {
  Matrix w;                    // d×c
  double anchor_norm = 0.0;
  std::size_t rank = 0;        // numerical rank of the feature matrix
  std::uint64_t feature_seed = 0;
  std::uint64_t anchor_seed = 0;
};

/// Least-squares solver for a fixed design matrix that returns, among all
/// minimizers of ‖phi·W − y‖_F, the one nearest to a given anchor:
///   W = anchor + phi⁺ (y − phi·anchor)
/// The pseudoinverse is computed once and reused for every anchor.
class AnchoredSolver {
public:
  AnchoredSolver(Matrix phi, double tol = 1e-10);

  Matrix solve(const Matrix& y, const Matrix& anchor) const;
  std::size_t rank() const noexcept { return rank_; }
  const Matrix& phi() const noexcept { return phi_; }
  const Matrix& pinv() const noexcept { return pinv_; }

private:
  Matrix phi_;
  Matrix pinv_;
  std::size_t rank_ = 0;
};

LinearSolution anchored_least_squares(const Matrix& phi, const Matrix& y, const Matrix& anchor,
                                      double tol = 1e-10);

/// Random normal direction rescaled to Frobenius norm `target_norm`.
Matrix make_anchor(std::uint64_t seed, std::size_t d, std::size_t c, double target_norm);

/// Mean over the first min(sample_cap, rows) feature rows φ of ‖∂softmax(Wᵀφ)/∂φ‖_F.
double softmax_sharpness_of_linear(const Matrix& w, const Matrix& features, std::size_t sample_cap);

struct LinearSweepConfig {
  std::vector<std::size_t> dims = {300, 800, 1200, 1800};
  double norm_min = 0.1;
  double norm_max = 1000.0;
  /// Total solutions; split across dims as evenly as possible, earlier dims
  /// taking the remainder (57 → 15, 14, 14, 14).
  std::size_t count = 57;
  std::uint64_t seed = 0;
  std::size_t sample_cap = 1000;
  double tol = 1e-10;

  void validate() const;
};

/// Anchor norms for one feature dim: `n` log-spaced values over [min, max].
std::vector<double> anchor_norms(double norm_min, double norm_max, std::size_t n);
std::vector<std::size_t> per_dim_counts(std::size_t count, std::size_t dims);

std::uint64_t linear_feature_seed(std::uint64_t master, std::size_t dim);
std::uint64_t linear_anchor_seed(std::uint64_t master, std::size_t dim, std::size_t index);

struct LinearDimSummary {
  std::size_t dim = 0;
  std::size_t rank = 0;
  std::uint64_t feature_seed = 0;
};

struct LinearSweepResult {
  std::vector<RunRecord> records;         // grid order: dims outer, norms inner
  std::vector<LinearDimSummary> dims;
};

/// For every (dim, anchor norm): solve on the training split, then record
/// ‖W‖ (raw and per-weight normalized), softmax sharpness on training
/// features, and mean squared error / argmax accuracy on both splits.
LinearSweepResult run_linear_sweep(const Dataset& data, const LinearSweepConfig& cfg);

/// Recomputes one linear row from its stored seeds, dim and anchor norm.
RunRecord replay_linear_record(const RunRecord& record, const Dataset& data,
                               std::size_t sample_cap = 1000, double tol = 1e-10);

}  // namespace sharplab
