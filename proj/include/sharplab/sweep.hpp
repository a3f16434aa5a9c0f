#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sharplab/dataset.hpp"
#include "sharplab/network.hpp"
#include "sharplab/records.hpp"
#include "sharplab/trainer.hpp"

namespace sharplab {

enum class Family { tanh_softmax_xent, relu_softmax_xent, relu_linear_sq };

inline constexpr Family kAllFamilies[] = {Family::tanh_softmax_xent, Family::relu_softmax_xent,
                                          Family::relu_linear_sq};

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

struct FamilyTraits {
  Activation hidden;
  Activation output;
  LossKind loss;
};
FamilyTraits traits(Family f);

/// Parameters of a net with `depth` hidden layers of `units` each, biases included.
std::size_t mlp_params(std::size_t depth, std::size_t units, std::size_t in_dim = kSmallPixels,
                       std::size_t out_dim = kNumClasses);

/// Hidden width whose parameter count is closest to `param_target`; ties go
/// to the larger width, which is what the reference grid has at (1, 1000).
std::size_t solve_units(std::size_t depth, std::size_t param_target, std::size_t in_dim = kSmallPixels,
                        std::size_t out_dim = kNumClasses);

struct ArchSpec {
  Family family = Family::tanh_softmax_xent;
  std::size_t depth = 1;
  std::size_t param_target = 1000;
  std::size_t units = 0;

  std::size_t realized_params() const { return mlp_params(depth, units); }
  std::vector<std::size_t> layer_sizes() const;
};

ArchSpec make_arch(Family family, std::size_t depth, std::size_t param_target);

enum class Scale { full, ci };
Scale parse_scale(std::string_view s);

struct SweepConfig {
  Family family = Family::tanh_softmax_xent;
  std::vector<std::size_t> depths = {1, 2, 3, 4, 5, 6};
  std::vector<std::size_t> param_targets = {1000, 5000, 8000, 10000, 12000, 14000};
  /// `seed` is ignored; each cell derives its own shuffle seed.
  TrainConfig train;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  std::size_t sharpness_cap = 1000;
  JacobianEndpoint endpoint = JacobianEndpoint::outputs;
};

/// Full: 6×6 grid, 5000 epochs. CI: depths {1,3,6} × budgets {1000,8000,14000},
/// 500 epochs. The decay factor is rescaled so the final rate is lr0/100.
SweepConfig sweep_preset(Family family, Scale scale, std::uint64_t master_seed);

/// Seeds for one grid cell: derive_seed(master, family name, {depth, budget, salt})
/// with salt 0 for initialization and 1 for minibatch shuffling.
std::uint64_t cell_init_seed(std::uint64_t master, Family f, std::size_t depth, std::size_t budget);
std::uint64_t cell_shuffle_seed(std::uint64_t master, Family f, std::size_t depth, std::size_t budget);

/// Initializes, trains and measures one cell. Divergence is recorded with
/// status "diverged" rather than thrown.
RunRecord run_cell(const ArchSpec& arch, const Dataset& data, const TrainConfig& train_cfg,
                   std::uint64_t seed_init, std::uint64_t seed_shuffle, std::size_t sharpness_cap,
                   JacobianEndpoint endpoint = JacobianEndpoint::outputs);

using ProgressFn = std::function<void(const RunRecord&)>;

/// Every (depth, budget) cell, executed on up to `workers` threads; returned
/// sorted by (family, depth, param_target).
std::vector<RunRecord> run_family_sweep(const Dataset& data, const SweepConfig& cfg,
                                        const ProgressFn& progress = {});

/// Re-trains a family record from its seeds and architecture columns.
RunRecord replay_record(const RunRecord& record, const Dataset& data, const TrainConfig& train_cfg,
                        std::size_t sharpness_cap = 1000);

struct DepthRow {
  std::size_t depth = 0;
  std::size_t count = 0;
  double mean_sharpness = 0.0;
};

struct DepthSummary {
  std::vector<DepthRow> rows;          // ascending depth
  double r_depth_sharpness = 0.0;
  /// Empty when some sharpness is not positive.
  std::optional<double> r_depth_log_sharpness;
};

/// Only records with status "ok" take part. Throws ParameterError with fewer
/// than two distinct depths.
DepthSummary depth_study(const std::vector<RunRecord>& records);

}  // namespace sharplab
