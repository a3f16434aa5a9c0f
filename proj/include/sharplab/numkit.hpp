#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sharplab/matrix.hpp"

namespace sharplab {

/// xoshiro256** seeded through splitmix64.
///
/// The integer stream is fully specified and therefore identical on every
/// platform. Floating-point draws are derived from it without going through
/// `<random>` distributions, whose algorithms are implementation-defined:
///   - uniform(): top 53 bits of next() scaled by 2^-53, in [0, 1)
///   - normal():  Box-Muller on two uniforms, first draw u1 mapped to (0, 1]
///                as 1 - uniform(); the cosine branch is returned and the
///                sine branch is cached for the following call
///   - uniform_index(n): Lemire's multiply-shift with rejection
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double normal();
  std::uint64_t uniform_index(std::uint64_t n);

  /// Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic seed derivation: splitmix64 chained over the master seed, the
/// FNV-1a hash of `tag`, and each value in `parts`.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> parts = {});

/// rows×cols matrix of independent normal(mean, std) draws, filled row-major.
Matrix rng_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std);

struct Svd {
  Matrix u;                    // m×k, orthonormal columns
  std::vector<double> sigma;   // k values, descending
  Matrix v;                    // n×k, orthonormal columns
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations. k = min(m, n).
Svd jacobi_svd(const Matrix& m);

/// Moore-Penrose pseudoinverse. Singular values ≤ tol·σ_max are dropped.
Matrix pseudoinverse(const Matrix& m, double tol = 1e-10);

/// Number of singular values above tol·σ_max.
std::size_t numerical_rank(const Matrix& m, double tol = 1e-10);

/// Pearson product-moment correlation. Throws UndefinedCorrelation when either
/// sequence has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace sharplab
