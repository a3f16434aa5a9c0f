#include "sharplab/closedform.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

FeatureMap build_feature_map(std::uint64_t seed, std::size_t dim, std::size_t in_dim) {
  if (dim == 0) throw ParameterError("build_feature_map: dim must be at least 1");
  Rng rng(seed);
  FeatureMap map;
  map.dim = dim;
  map.seed = seed;
  map.proj = rng_normal(rng, in_dim, dim, 0.0, 1.0 / std::sqrt(static_cast<double>(in_dim)));
  map.bias.resize(dim);
  for (double& b : map.bias) b = rng.normal();
  return map;
}

Matrix apply_features(const FeatureMap& map, const Matrix& x) {
  Matrix f = matmul(x, map.proj);
  for (std::size_t r = 0; r < f.rows(); ++r) {
    auto row = f.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = std::max(0.0, row[j] + map.bias[j]);
  }
  return f;
}

AnchoredSolver::AnchoredSolver(Matrix phi, double tol) : phi_(std::move(phi)) {
  if (phi_.empty()) throw ShapeError("anchored least squares: empty design matrix");
  if (!(tol > 0.0)) throw ParameterError("anchored least squares: tol must be positive");
  const Svd svd = jacobi_svd(phi_);
  const double cutoff = tol * svd.sigma.front();
  Matrix scaled_v(phi_.cols(), svd.sigma.size());
  for (std::size_t j = 0; j < svd.sigma.size(); ++j) {
    if (svd.sigma[j] <= cutoff || svd.sigma[j] == 0.0) continue;
    ++rank_;
    for (std::size_t i = 0; i < phi_.cols(); ++i) scaled_v(i, j) = svd.v(i, j) / svd.sigma[j];
  }
  pinv_ = matmul_nt(scaled_v, svd.u);
}

Matrix AnchoredSolver::solve(const Matrix& y, const Matrix& anchor) const {
  if (y.rows() != phi_.rows()) {
    throw ShapeError("anchored least squares: design " + phi_.shape_string() + " but targets " +
                     y.shape_string());
  }
  if (anchor.rows() != phi_.cols() || anchor.cols() != y.cols()) {
    throw ShapeError("anchored least squares: anchor " + anchor.shape_string() + ", expected " +
                     std::to_string(phi_.cols()) + "x" + std::to_string(y.cols()));
  }
  return anchor + matmul(pinv_, y - matmul(phi_, anchor));
}

LinearSolution anchored_least_squares(const Matrix& phi, const Matrix& y, const Matrix& anchor, double tol) {
  const AnchoredSolver solver(phi, tol);
  LinearSolution s;
  s.w = solver.solve(y, anchor);
  s.anchor_norm = frobenius_norm(anchor);
  s.rank = solver.rank();
  return s;
}

Matrix make_anchor(std::uint64_t seed, std::size_t d, std::size_t c, double target_norm) {
  if (!(target_norm > 0.0)) throw ParameterError("make_anchor: target_norm must be positive");
  Rng rng(seed);
  Matrix m = rng_normal(rng, d, c, 0.0, 1.0);
  const double norm = frobenius_norm(m);
  if (norm == 0.0) throw NumericError("make_anchor: degenerate direction");
  return (target_norm / norm) * m;
}

double softmax_sharpness_of_linear(const Matrix& w, const Matrix& features, std::size_t sample_cap) {
  if (features.cols() != w.rows()) {
    throw ShapeError("softmax sharpness: features " + features.shape_string() + " do not fit weights " +
                     w.shape_string());
  }
  const std::size_t n = std::min(sample_cap, features.rows());
  if (n == 0) throw ParameterError("softmax sharpness: no inputs to average over");
  const std::size_t c = w.cols();
  std::vector<double> p(c);
  Matrix s(c, c);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    std::fill(p.begin(), p.end(), 0.0);
    const auto phi = features.row(r);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      if (phi[i] == 0.0) continue;
      const auto wr = w.row(i);
      for (std::size_t j = 0; j < c; ++j) p[j] += phi[i] * wr[j];
    }
    const double top = *std::max_element(p.begin(), p.end());
    double mass = 0.0;
    for (double& v : p) {
      v = std::exp(v - top);
      mass += v;
    }
    for (double& v : p) v /= mass;
    // J = W·(diag(p) − p pᵀ)
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t j = 0; j < c; ++j) s(k, j) = (k == j ? p[k] : 0.0) - p[k] * p[j];
    total += frobenius_norm(matmul(w, s));
  }
  return total / static_cast<double>(n);
}

void LinearSweepConfig::validate() const {
  if (dims.empty()) throw ParameterError("linear sweep: no feature dims");
  if (!(norm_min > 0.0 && norm_max >= norm_min)) {
    throw ParameterError("linear sweep: need 0 < norm_min <= norm_max");
  }
  if (count < dims.size()) throw ParameterError("linear sweep: count must cover every dim");
  for (auto d : dims)
    if (d == 0) throw ParameterError("linear sweep: feature dims must be positive");
}

std::vector<double> anchor_norms(double norm_min, double norm_max, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = norm_min;
    return out;
  }
  const double lo = std::log10(norm_min);
  const double hi = std::log10(norm_max);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  out.front() = norm_min;
  out.back() = norm_max;
  return out;
}

std::vector<std::size_t> per_dim_counts(std::size_t count, std::size_t dims) {
  std::vector<std::size_t> out(dims, count / dims);
  for (std::size_t i = 0; i < count % dims; ++i) ++out[i];
  return out;
}

std::uint64_t linear_feature_seed(std::uint64_t master, std::size_t dim) {
  return derive_seed(master, "linear-features", {dim});
}

std::uint64_t linear_anchor_seed(std::uint64_t master, std::size_t dim, std::size_t index) {
  return derive_seed(master, "linear-anchor", {dim, index});
}

namespace {

struct LinearMetrics {
  double mse = 0.0;
  double accuracy = 0.0;
};

// Evaluates several weight matrices over one split, computing features once per chunk.
std::vector<LinearMetrics> evaluate_linear(const FeatureMap& map, const std::vector<Matrix>& ws,
                                           const Matrix& x, const Matrix& y,
                                           std::span<const std::uint8_t> labels) {
  constexpr std::size_t chunk = 2048;
  std::vector<LinearMetrics> out(ws.size());
  for (std::size_t begin = 0; begin < x.rows(); begin += chunk) {
    const std::size_t end = std::min(x.rows(), begin + chunk);
    const Matrix feats = apply_features(map, slice_rows(x, begin, end));
    for (std::size_t k = 0; k < ws.size(); ++k) {
      const Matrix pred = matmul(feats, ws[k]);
      for (std::size_t r = 0; r < pred.rows(); ++r) {
        const auto p = pred.row(r);
        const auto t = y.row(begin + r);
        double e = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) e += (p[j] - t[j]) * (p[j] - t[j]);
        out[k].mse += e;
        const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        if (best == labels[begin + r]) out[k].accuracy += 1.0;
      }
    }
  }
  for (auto& m : out) {
    m.mse /= static_cast<double>(x.rows());
    m.accuracy /= static_cast<double>(x.rows());
  }
  return out;
}

// Solves and measures every anchor of one feature dim.
std::vector<RunRecord> run_dim(const Dataset& data, const FeatureMap& map, const Matrix& train_feats,
                               const AnchoredSolver& solver, const std::vector<double>& norms,
                               const std::vector<std::uint64_t>& anchor_seeds, std::size_t sample_cap) {
  using clock = std::chrono::steady_clock;
  std::vector<Matrix> ws;
  std::vector<double> solve_time;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    const auto t0 = clock::now();
    ws.push_back(solver.solve(data.train_y_onehot, make_anchor(anchor_seeds[k], map.dim, kNumClasses, norms[k])));
    solve_time.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  const auto train_m = evaluate_linear(map, ws, data.train_x, data.train_y_onehot, data.train_y);
  const auto test_m = evaluate_linear(map, ws, data.test_x, data.test_y_onehot, data.test_y);

  std::vector<RunRecord> out;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const auto t0 = clock::now();
    RunRecord r;
    r.family = "linear";
    r.depth = 0;
    r.param_target = norms[k];
    r.units = map.dim;
    r.realized_params = ws[k].size();
    r.seed_init = anchor_seeds[k];
    r.seed_shuffle = map.seed;
    r.raw_norm = frobenius_norm(ws[k]);
    r.normalized_norm = r.raw_norm / std::sqrt(static_cast<double>(ws[k].size()));
    r.sharpness = softmax_sharpness_of_linear(ws[k], train_feats, sample_cap);
    r.sharpness_basis = "train/softmax";
    r.test_acc = test_m[k].accuracy;
    r.test_loss = test_m[k].mse;
    r.train_acc = train_m[k].accuracy;
    r.train_loss = train_m[k].mse;
    r.status = "ok";
    r.wall_time_s = solve_time[k] + std::chrono::duration<double>(clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

LinearSweepResult run_linear_sweep(const Dataset& data, const LinearSweepConfig& cfg) {
  cfg.validate();
  LinearSweepResult result;
  const auto counts = per_dim_counts(cfg.count, cfg.dims.size());
  for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
    const std::size_t dim = cfg.dims[di];
    const FeatureMap map = build_feature_map(linear_feature_seed(cfg.seed, dim), dim, data.train_x.cols());
    const Matrix train_feats = apply_features(map, data.train_x);
    const AnchoredSolver solver(train_feats, cfg.tol);
    const auto norms = anchor_norms(cfg.norm_min, cfg.norm_max, counts[di]);
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < norms.size(); ++k) seeds.push_back(linear_anchor_seed(cfg.seed, dim, k));
    auto records = run_dim(data, map, train_feats, solver, norms, seeds, cfg.sample_cap);
    result.records.insert(result.records.end(), records.begin(), records.end());
    result.dims.push_back({dim, solver.rank(), map.seed});
  }
  return result;
}

RunRecord replay_linear_record(const RunRecord& record, const Dataset& data, std::size_t sample_cap, double tol) {
  if (record.family != "linear") throw ParameterError("replay_linear_record: not a linear record");
  const FeatureMap map = build_feature_map(record.seed_shuffle, record.units, data.train_x.cols());
  const Matrix train_feats = apply_features(map, data.train_x);
  const AnchoredSolver solver(train_feats, tol);
  return run_dim(data, map, train_feats, solver, {record.param_target}, {record.seed_init}, sample_cap).front();
}

}  // namespace sharplab
