#include <cmath>
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

using namespace sharplab;

TEST_CASE("matmul examples") {
  const Matrix m{{1, 2}, {3, 4}};
  CHECK(matmul(Matrix::identity(2), m) == m);
  CHECK(matmul(Matrix{{1, 2}}, Matrix{{3}, {4}}) == Matrix{{11}});

  const Matrix a = oracle::random_matrix(1, 5, 7);
  const Matrix b = oracle::random_matrix(2, 7, 3);
  CHECK(max_abs_diff(matmul(a, b), oracle::naive_matmul(a, b)) <= 1e-12);
  CHECK(max_abs_diff(matmul_tn(oracle::naive_transpose(a), b), oracle::naive_matmul(a, b)) <= 1e-12);
  CHECK(max_abs_diff(matmul_nt(a, oracle::naive_transpose(b)), oracle::naive_matmul(a, b)) <= 1e-12);
}

TEST_CASE("matmul rejects mismatched shapes and names both") {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("matmul is associative") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix a = oracle::random_matrix(100 + s, 4, 6);
    const Matrix b = oracle::random_matrix(200 + s, 6, 5);
    const Matrix c = oracle::random_matrix(300 + s, 5, 3);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    CHECK(max_abs_diff(left, right) <= 1e-10 * std::max(1.0, frobenius_norm(left)));
  }
}

TEST_CASE("frobenius_norm") {
  CHECK(frobenius_norm(Matrix{{3, 4}, {0, 0}}) == 5.0);
  CHECK(frobenius_norm(Matrix(3, 3)) == 0.0);
  CHECK_THROWS_AS(frobenius_norm(Matrix()), ShapeError);

  const Matrix m = oracle::random_matrix(7, 4, 4);
  double direct = 0.0;
  for (double v : m.values()) direct += v * v;
  CHECK(std::abs(frobenius_norm(m) - std::sqrt(direct)) <= 1e-14);

  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix r = oracle::random_matrix(50 + s, 6, 6);
    const Matrix gram = oracle::naive_matmul(oracle::naive_transpose(r), r);
    double trace = 0.0;
    for (std::size_t i = 0; i < 6; ++i) trace += gram(i, i);
    CHECK(std::abs(frobenius_norm(r) - std::sqrt(trace)) <= 1e-12);
  }
}

namespace {

double penrose_error(const Matrix& m, const Matrix& p) {
  const Matrix mpm = oracle::naive_matmul(oracle::naive_matmul(m, p), m);
  const Matrix pmp = oracle::naive_matmul(oracle::naive_matmul(p, m), p);
  const Matrix mp = oracle::naive_matmul(m, p);
  const Matrix pm = oracle::naive_matmul(p, m);
  return std::max({max_abs_diff(mpm, m), max_abs_diff(pmp, p),
                   max_abs_diff(mp, oracle::naive_transpose(mp)),
                   max_abs_diff(pm, oracle::naive_transpose(pm))});
}

}  // namespace

TEST_CASE("pseudoinverse examples") {
  CHECK(max_abs_diff(pseudoinverse(Matrix::identity(3)), Matrix::identity(3)) <= 1e-15);
  CHECK(max_abs_diff(pseudoinverse(Matrix{{2, 0}, {0, 0}}), Matrix{{0.5, 0}, {0, 0}}) <= 1e-15);
  CHECK_THROWS_AS(pseudoinverse(Matrix()), ShapeError);
}

TEST_CASE("pseudoinverse matches the normal-equations inverse on full column rank") {
  const Matrix m = oracle::random_matrix(11, 20, 8);
  const Matrix mt = oracle::naive_transpose(m);
  const Matrix expected = oracle::naive_matmul(oracle::inverse(oracle::naive_matmul(mt, m)), mt);
  CHECK(max_abs_diff(pseudoinverse(m), expected) <= 1e-8);
}

TEST_CASE("pseudoinverse satisfies the Moore-Penrose conditions") {
  for (std::uint64_t s = 0; s < 8; ++s) {
    // full rank, tall and wide
    const Matrix tall = oracle::random_matrix(400 + s, 12, 7);
    CHECK(penrose_error(tall, pseudoinverse(tall)) <= 1e-8);
    const Matrix wide = oracle::random_matrix(500 + s, 5, 11);
    CHECK(penrose_error(wide, pseudoinverse(wide)) <= 1e-8);
    // rank 3 product of thin factors
    const Matrix deficient =
        oracle::naive_matmul(oracle::random_matrix(600 + s, 10, 3), oracle::random_matrix(700 + s, 3, 9));
    CHECK(numerical_rank(deficient) == 3);
    CHECK(penrose_error(deficient, pseudoinverse(deficient)) <= 1e-8);
  }
}

TEST_CASE("jacobi_svd reconstructs the input") {
  const Matrix m = oracle::random_matrix(31, 9, 6);
  const Svd svd = jacobi_svd(m);
  Matrix us = svd.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= svd.sigma[k];
  CHECK(max_abs_diff(oracle::naive_matmul(us, oracle::naive_transpose(svd.v)), m) <= 1e-12);
  CHECK(std::is_sorted(svd.sigma.rbegin(), svd.sigma.rend()));
}

TEST_CASE("pearson examples") {
  const std::vector<double> x{1, 2, 3};
  CHECK(pearson(x, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{5, 5, 5}), UndefinedCorrelation);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{2}), ParameterError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), ParameterError);
}

TEST_CASE("pearson matches the textbook formula") {
  Rng rng(99);
  std::vector<double> xs(100), ys(100);
  for (std::size_t i = 0; i < 100; ++i) {
    xs[i] = rng.normal();
    ys[i] = 0.3 * xs[i] + rng.normal();
  }
  const double n = 100.0;
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    cov += (xs[i] - mx) * (ys[i] - my);
    vx += (xs[i] - mx) * (xs[i] - mx);
    vy += (ys[i] - my) * (ys[i] - my);
  }
  const double textbook = cov / (std::sqrt(vx / n) * std::sqrt(vy / n) * n);
  CHECK(std::abs(pearson(xs, ys) - textbook) <= 1e-12);

  // invariance under positive affine maps of either argument
  std::vector<double> xs2(xs), ys2(ys);
  for (auto& v : xs2) v = 3.5 * v - 2.0;
  for (auto& v : ys2) v = 0.01 * v + 40.0;
  CHECK(std::abs(pearson(xs2, ys) - pearson(xs, ys)) <= 1e-12);
  CHECK(std::abs(pearson(xs, ys2) - pearson(xs, ys)) <= 1e-12);
}

TEST_CASE("rng determinism and normal statistics") {
  Rng a(5), b(5);
  const Matrix ma = rng_normal(a, 3, 4, 0.0, 1.0);
  const Matrix mb = rng_normal(b, 3, 4, 0.0, 1.0);
  CHECK(ma == mb);

  Rng c(1);
  const Matrix flat = rng_normal(c, 2, 2, 1.5, 0.0);
  for (double v : flat.values()) CHECK(v == 1.5);
  CHECK_THROWS_AS(rng_normal(c, 1, 1, 0.0, -1.0), ParameterError);

  Rng r(42);
  const Matrix big = rng_normal(r, 1000, 100, 0.0, 1.0);
  double mean = 0.0, sq = 0.0;
  for (double v : big.values()) mean += v;
  mean /= 1e5;
  for (double v : big.values()) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / (1e5 - 1));
  CHECK(std::abs(mean) <= 0.01);
  // standard error of the sample std is about 1/sqrt(2n)
  CHECK(std::abs(sd - 1.0) <= 3.0 / std::sqrt(2e5));
}

TEST_CASE("rng stream is pinned") {
  // First outputs of xoshiro256** seeded through splitmix64 with seed 0;
  // a change here breaks replay of every recorded run.
  Rng r(0);
  const std::uint64_t first = r.next();
  const std::uint64_t second = r.next();
  Rng again(0);
  CHECK(again.next() == first);
  CHECK(again.next() == second);
  CHECK(first == 0x99ec5f36cb75f2b4ULL);
  CHECK(second == 0xbf6e1f784956452aULL);
}

TEST_CASE("uniform_index stays in range and shuffle permutes") {
  Rng r(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[r.uniform_index(7)];
  for (int h : hits) CHECK(h > 800);
  std::vector<int> items(50);
  std::iota(items.begin(), items.end(), 0);
  r.shuffle(std::span<int>(items));
  std::vector<int> sorted(items);
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  CHECK(items != sorted);
}
