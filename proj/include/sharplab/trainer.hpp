#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sharplab/dataset.hpp"
#include "sharplab/network.hpp"

namespace sharplab {

/// Per-epoch factor that takes the learning rate from lr0 to lr0/100 after
/// `epochs` epochs.
double decay_for(std::size_t epochs);

struct TrainConfig {
  std::size_t epochs = 5000;
  std::size_t batch_size = 32;
  double lr0 = 0.05;
  double lr_decay = decay_for(5000);
  double momentum = 0.9;
  std::uint64_t seed = 0;
  /// Abort when the epoch's mean loss exceeds this or turns non-finite.
  double divergence_threshold = 1e6;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;       // mean minibatch loss seen during each epoch
  std::vector<double> train_accuracy;
  std::vector<double> learning_rate;
  std::size_t epochs_completed = 0;
};

struct TrainResult {
  Mlp net;
  TrainHistory history;
};

/// lr0 · lr_decay^epoch
double lr_at(const TrainConfig& cfg, std::size_t epoch);

/// Minibatch SGD with classic momentum: v ← μv − η∇, w ← w + v.
/// Minibatches follow a fresh seeded shuffle each epoch; a trailing partial
/// batch is kept. Throws DivergedError carrying the epoch index.
TrainResult train(Mlp net, const Matrix& x, const Matrix& y_onehot, LossKind loss, const TrainConfig& cfg);
TrainResult train(Mlp net, const Dataset& data, LossKind loss, const TrainConfig& cfg);

}  // namespace sharplab
