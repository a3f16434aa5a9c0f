#include "sharplab/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sharplab/error.hpp"

namespace sharplab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    word = z ^ (z >> 31);
  }
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ParameterError("uniform_index: empty range");
  unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(next()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master ^ splitmix64(fnv1a(tag)));
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

Matrix rng_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean, double std) {
  if (!(std >= 0.0)) throw ParameterError("rng_normal: std must be non-negative");
  Matrix m(rows, cols);
  for (double& v : m.values()) v = mean + std * rng.normal();
  return m;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void rotate(std::vector<double>& p, std::vector<double>& q, double c, double s) {
  const std::size_t n = p.size();
  double* pp = p.data();
  double* qq = q.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pp[i];
    const double b = qq[i];
    pp[i] = c * a - s * b;
    qq[i] = s * a + c * b;
  }
}

// One-sided Jacobi on a tall (m ≥ n) matrix.
Svd jacobi_svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<std::vector<double>> cols(n, std::vector<double>(m));
  std::vector<std::vector<double>> vcols(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) cols[j][i] = a(i, j);
    vcols[j][j] = 1.0;
  }

  constexpr double eps = 1e-15;
  constexpr int max_sweeps = 80;
  std::vector<double> norms(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < n; ++j) norms[j] = dot(cols[j], cols[j]);
    const double largest = *std::max_element(norms.begin(), norms.end());
    if (largest == 0.0) break;
    const double negligible = largest * 1e-300;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = norms[p];
        const double beta = norms[q];
        if (alpha <= negligible || beta <= negligible) continue;
        const double gamma = dot(cols[p], cols[q]);
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(cols[p], cols[q], c, s);
        rotate(vcols[p], vcols[q], c, s);
        norms[p] = alpha - t * gamma;
        norms[q] = beta + t * gamma;
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(cols[j], cols[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    if (sigma[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = cols[j][i] / sigma[j];
    }
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vcols[j][i];
  }
  return out;
}

}  // namespace

Svd jacobi_svd(const Matrix& m) {
  if (m.empty()) throw ShapeError("jacobi_svd: empty matrix " + m.shape_string());
  if (m.rows() >= m.cols()) return jacobi_svd_tall(m);
  Svd t = jacobi_svd_tall(transpose(m));
  return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

Matrix pseudoinverse(const Matrix& m, double tol) {
  if (!(tol > 0.0)) throw ParameterError("pseudoinverse: tol must be positive");
  const Svd svd = jacobi_svd(m);
  const std::size_t k = svd.sigma.size();
  const double cutoff = tol * (k > 0 ? svd.sigma.front() : 0.0);
  // m⁺ = V Σ⁺ Uᵀ, accumulated as Σ_k v_k u_kᵀ / σ_k.
  Matrix scaled_v(m.cols(), k);
  for (std::size_t j = 0; j < k; ++j) {
    if (svd.sigma[j] <= cutoff || svd.sigma[j] == 0.0) continue;
    const double inv = 1.0 / svd.sigma[j];
    for (std::size_t i = 0; i < m.cols(); ++i) scaled_v(i, j) = svd.v(i, j) * inv;
  }
  return matmul_nt(scaled_v, svd.u);
}

std::size_t numerical_rank(const Matrix& m, double tol) {
  const Svd svd = jacobi_svd(m);
  if (svd.sigma.empty() || svd.sigma.front() == 0.0) return 0;
  const double cutoff = tol * svd.sigma.front();
  return static_cast<std::size_t>(
      std::count_if(svd.sigma.begin(), svd.sigma.end(), [&](double s) { return s > cutoff; }));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ParameterError("pearson: sequences have different lengths (" +
                         std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ParameterError("pearson: need at least 2 pairs");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("pearson: correlation undefined for a constant sequence");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace sharplab
