#include "sharplab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::tanh_softmax_xent: return "tanh_softmax_xent";
    case Family::relu_softmax_xent: return "relu_softmax_xent";
    case Family::relu_linear_sq: return "relu_linear_sq";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  for (Family f : kAllFamilies)
    if (to_string(f) == s) return f;
  throw ParameterError("unknown family '" + std::string(s) +
                       "' (expected tanh_softmax_xent, relu_softmax_xent or relu_linear_sq)");
}

FamilyTraits traits(Family f) {
  switch (f) {
    case Family::tanh_softmax_xent:
      return {Activation::tanh, Activation::softmax, LossKind::categorical_crossentropy};
    case Family::relu_softmax_xent:
      return {Activation::relu, Activation::softmax, LossKind::categorical_crossentropy};
    case Family::relu_linear_sq:
      return {Activation::relu, Activation::identity, LossKind::squared_error};
  }
  throw ParameterError("unknown family");
}

std::size_t mlp_params(std::size_t depth, std::size_t units, std::size_t in_dim, std::size_t out_dim) {
  return (in_dim * units + units) + (depth - 1) * (units * units + units) + (units * out_dim + out_dim);
}

std::size_t solve_units(std::size_t depth, std::size_t param_target, std::size_t in_dim, std::size_t out_dim) {
  if (depth == 0) throw ParameterError("solve_units: depth must be at least 1");
  if (param_target <= out_dim || mlp_params(depth, 1, in_dim, out_dim) > 2 * param_target) {
    throw ParameterError("solve_units: no width reaches about " + std::to_string(param_target) +
                         " parameters at depth " + std::to_string(depth));
  }
  auto distance = [&](std::size_t n) {
    const auto p = static_cast<long double>(mlp_params(depth, n, in_dim, out_dim));
    return std::abs(p - static_cast<long double>(param_target));
  };
  // params(n) is increasing in n; walk until it overshoots the target.
  std::size_t best = 1;
  for (std::size_t n = 1;; ++n) {
    if (distance(n) <= distance(best)) best = n;
    if (mlp_params(depth, n, in_dim, out_dim) >= param_target) break;
  }
  return best;
}

std::vector<std::size_t> ArchSpec::layer_sizes() const {
  std::vector<std::size_t> sizes{kSmallPixels};
  sizes.insert(sizes.end(), depth, units);
  sizes.push_back(kNumClasses);
  return sizes;
}

ArchSpec make_arch(Family family, std::size_t depth, std::size_t param_target) {
  return {family, depth, param_target, solve_units(depth, param_target)};
}

Scale parse_scale(std::string_view s) {
  if (s == "full") return Scale::full;
  if (s == "ci") return Scale::ci;
  throw ParameterError("unknown scale '" + std::string(s) + "' (expected full or ci)");
}

SweepConfig sweep_preset(Family family, Scale scale, std::uint64_t master_seed) {
  SweepConfig cfg;
  cfg.family = family;
  cfg.master_seed = master_seed;
  if (scale == Scale::ci) {
    cfg.depths = {1, 3, 6};
    cfg.param_targets = {1000, 8000, 14000};
    cfg.train.epochs = 500;
  }
  cfg.train.lr_decay = decay_for(cfg.train.epochs);
  return cfg;
}

std::uint64_t cell_init_seed(std::uint64_t master, Family f, std::size_t depth, std::size_t budget) {
  return derive_seed(master, to_string(f), {depth, budget, 0});
}

std::uint64_t cell_shuffle_seed(std::uint64_t master, Family f, std::size_t depth, std::size_t budget) {
  return derive_seed(master, to_string(f), {depth, budget, 1});
}

RunRecord run_cell(const ArchSpec& arch, const Dataset& data, const TrainConfig& train_cfg,
                   std::uint64_t seed_init, std::uint64_t seed_shuffle, std::size_t sharpness_cap,
                   JacobianEndpoint endpoint) {
  const auto start = std::chrono::steady_clock::now();
  const FamilyTraits t = traits(arch.family);
  RunRecord r;
  r.family = std::string(to_string(arch.family));
  r.depth = arch.depth;
  r.param_target = static_cast<double>(arch.param_target);
  r.units = arch.units;
  r.realized_params = arch.realized_params();
  r.seed_init = seed_init;
  r.seed_shuffle = seed_shuffle;
  r.sharpness_basis = "train/" + std::string(to_string(endpoint));

  Rng rng(seed_init);
  Mlp net = init_mlp(arch.layer_sizes(), t.hidden, t.output, rng);
  TrainConfig cfg = train_cfg;
  cfg.seed = seed_shuffle;
  try {
    net = train(std::move(net), data, t.loss, cfg).net;
    const WeightNorm norm = weight_norm(net);
    r.raw_norm = norm.raw_l2;
    r.normalized_norm = norm.normalized;
    r.sharpness = sharpness(net, data.train_x, sharpness_cap, endpoint);
    const Evaluation test = loss_and_accuracy(net, data.test_x, data.test_y_onehot, data.test_y, t.loss);
    const Evaluation tr = loss_and_accuracy(net, data.train_x, data.train_y_onehot, data.train_y, t.loss);
    r.test_acc = test.accuracy;
    r.test_loss = test.mean_loss;
    r.train_acc = tr.accuracy;
    r.train_loss = tr.mean_loss;
    const double fields[] = {r.raw_norm, r.sharpness, r.test_loss, r.train_loss};
    if (!std::all_of(std::begin(fields), std::end(fields), [](double v) { return std::isfinite(v); })) {
      throw DivergedError("non-finite measurement", cfg.epochs);
    }
  } catch (const Error& e) {
    if (e.kind() != "diverged" && e.kind() != "numeric") throw;
    r.raw_norm = r.normalized_norm = r.sharpness = 0.0;
    r.test_acc = r.test_loss = r.train_acc = r.train_loss = 0.0;
    r.status = "diverged";
  }
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<RunRecord> run_family_sweep(const Dataset& data, const SweepConfig& cfg, const ProgressFn& progress) {
  std::vector<ArchSpec> cells;
  for (auto d : cfg.depths)
    for (auto p : cfg.param_targets) cells.push_back(make_arch(cfg.family, d, p));

  std::vector<RunRecord> out(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        const ArchSpec& a = cells[i];
        out[i] = run_cell(a, data, cfg.train, cell_init_seed(cfg.master_seed, a.family, a.depth, a.param_target),
                          cell_shuffle_seed(cfg.master_seed, a.family, a.depth, a.param_target),
                          cfg.sharpness_cap, cfg.endpoint);
        if (progress) {
          std::lock_guard lock(report_mutex);
          progress(out[i]);
        }
      } catch (...) {
        std::lock_guard lock(report_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
        return;
      }
    }
  };

  const std::size_t n_workers = std::clamp<std::size_t>(cfg.workers, 1, cells.size());
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.family, a.depth, a.param_target) < std::tie(b.family, b.depth, b.param_target);
  });
  return out;
}

RunRecord replay_record(const RunRecord& record, const Dataset& data, const TrainConfig& train_cfg,
                        std::size_t sharpness_cap) {
  ArchSpec arch{parse_family(record.family), record.depth,
                static_cast<std::size_t>(std::llround(record.param_target)), record.units};
  const JacobianEndpoint endpoint =
      record.sharpness_basis.ends_with("/logits") ? JacobianEndpoint::logits : JacobianEndpoint::outputs;
  return run_cell(arch, data, train_cfg, record.seed_init, record.seed_shuffle, sharpness_cap, endpoint);
}

DepthSummary depth_study(const std::vector<RunRecord>& records) {
  std::map<std::size_t, std::pair<std::size_t, double>> by_depth;
  std::vector<double> depths, sharp;
  bool all_positive = true;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    auto& [count, total] = by_depth[r.depth];
    ++count;
    total += r.sharpness;
    depths.push_back(static_cast<double>(r.depth));
    sharp.push_back(r.sharpness);
    all_positive = all_positive && r.sharpness > 0.0;
  }
  if (by_depth.size() < 2) {
    throw ParameterError("depth_study: need successful runs at two or more distinct depths");
  }
  DepthSummary s;
  for (const auto& [depth, acc] : by_depth) {
    s.rows.push_back({depth, acc.first, acc.second / static_cast<double>(acc.first)});
  }
  s.r_depth_sharpness = pearson(depths, sharp);
  if (all_positive) {
    std::vector<double> logs(sharp.size());
    std::transform(sharp.begin(), sharp.end(), logs.begin(), [](double v) { return std::log(v); });
    s.r_depth_log_sharpness = pearson(depths, logs);
  }
  return s;
}

}  // namespace sharplab
