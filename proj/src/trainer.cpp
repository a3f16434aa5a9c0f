#include "sharplab/trainer.hpp"

#include <cmath>
#include <numeric>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

double decay_for(std::size_t epochs) {
  return std::pow(100.0, -1.0 / static_cast<double>(epochs == 0 ? 1 : epochs));
}

void TrainConfig::validate() const {
  if (!(lr0 >= 0.0)) throw ParameterError("train: lr0 must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("train: momentum must be in [0, 1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ParameterError("train: lr_decay must be in (0, 1]");
  if (batch_size == 0) throw ParameterError("train: batch_size must be positive");
}

double lr_at(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

TrainResult train(Mlp net, const Matrix& x, const Matrix& y_onehot, LossKind loss, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  check_loss_pairing(net, loss);
  if (x.rows() == 0 || x.rows() != y_onehot.rows()) {
    throw ShapeError("train: " + x.shape_string() + " inputs and " + y_onehot.shape_string() +
                     " targets");
  }

  TrainResult result;
  TrainHistory& h = result.history;
  h.train_loss.reserve(cfg.epochs);
  h.train_accuracy.reserve(cfg.epochs);
  h.learning_rate.reserve(cfg.epochs);

  Gradients grads = zero_gradients(net);
  Gradients velocity = zero_gradients(net);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  const std::size_t n = x.rows();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Matrix bx = gather_rows(x, idx);
      const Matrix by = gather_rows(y_onehot, idx);
      const BatchStats stats = batch_gradients(net, bx, by, loss, grads);
      loss_sum += stats.loss_sum;
      correct += stats.correct;
      for (std::size_t l = 0; l < net.depth(); ++l) {
        auto v = velocity.weights[l].values();
        auto g = grads.weights[l].values();
        auto w = net.weights[l].values();
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = cfg.momentum * v[i] - lr * g[i];
          w[i] += v[i];
        }
        auto& vb = velocity.biases[l];
        auto& gb = grads.biases[l];
        auto& b = net.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) {
          vb[i] = cfg.momentum * vb[i] - lr * gb[i];
          b[i] += vb[i];
        }
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean_loss) || mean_loss > cfg.divergence_threshold) {
      throw DivergedError("training diverged at epoch " + std::to_string(epoch) + " (mean loss " +
                              std::to_string(mean_loss) + ")",
                          epoch);
    }
    h.train_loss.push_back(mean_loss);
    h.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
    h.learning_rate.push_back(lr);
    h.epochs_completed = epoch + 1;
  }
  result.net = std::move(net);
  return result;
}

TrainResult train(Mlp net, const Dataset& data, LossKind loss, const TrainConfig& cfg) {
  return train(std::move(net), data.train_x, data.train_y_onehot, loss, cfg);
}

}  // namespace sharplab
