#include "sharplab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

double GradCheckResult::max_error() const {
  return std::max({max_weight_error, max_bias_error, max_jacobian_error});
}

namespace {

std::vector<double> endpoint_values(const Mlp& net, std::span<const double> x, JacobianEndpoint endpoint) {
  const ForwardTrace t = forward(net, x);
  if (endpoint == JacobianEndpoint::logits) return t.pre_activations.back();
  return t.activations.back();
}

double loss_at(const Mlp& net, std::span<const double> x, std::span<const double> target, LossKind loss) {
  return example_loss(net, forward(net, x), target, loss);
}

bool near_relu_kink(const Mlp& net, std::span<const double> x, double margin) {
  if (net.hidden_activation != Activation::relu) return false;
  const ForwardTrace t = forward(net, x);
  for (std::size_t l = 1; l < net.depth(); ++l)
    for (double z : t.pre_activations[l])
      if (std::abs(z) < margin) return true;
  return false;
}

}  // namespace

Matrix numeric_jacobian(const Mlp& net, std::span<const double> x, double h, JacobianEndpoint endpoint) {
  Matrix out(net.input_size(), net.output_size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const auto plus = endpoint_values(net, probe, endpoint);
    probe[i] = saved - h;
    const auto minus = endpoint_values(net, probe, endpoint);
    probe[i] = saved;
    for (std::size_t j = 0; j < plus.size(); ++j) out(i, j) = (plus[j] - minus[j]) / (2.0 * h);
  }
  return out;
}

Gradients numeric_gradients(const Mlp& net, std::span<const double> x, std::span<const double> target,
                            LossKind loss, double h) {
  Mlp probe = net;
  Gradients g = zero_gradients(net);
  auto central = [&](double& param) {
    const double saved = param;
    param = saved + h;
    const double plus = loss_at(probe, x, target, loss);
    param = saved - h;
    const double minus = loss_at(probe, x, target, loss);
    param = saved;
    return (plus - minus) / (2.0 * h);
  };
  for (std::size_t l = 0; l < probe.depth(); ++l) {
    auto w = probe.weights[l].values();
    auto gw = g.weights[l].values();
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] = central(w[i]);
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i) g.biases[l][i] = central(probe.biases[l][i]);
  }
  return g;
}

GradCheckResult run_gradient_check(Activation hidden, Activation output, LossKind loss,
                                   std::size_t nets, std::uint64_t seed, double h) {
  GradCheckResult result;
  Rng rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform_index(hi - lo + 1));
  };
  for (std::size_t n = 0; n < nets; ++n) {
    std::vector<std::size_t> sizes;
    if (n == 0) {
      sizes = {49, 50, 50, 10};
    } else {
      sizes.push_back(pick(2, 49));
      const std::size_t hidden_layers = pick(1, 2);
      for (std::size_t l = 0; l < hidden_layers; ++l) sizes.push_back(pick(1, 50));
      sizes.push_back(pick(2, 10));
    }
    Mlp net = init_mlp(sizes, hidden, output, rng);
    for (auto& b : net.biases)
      for (double& v : b) v = 0.1 * rng.normal();

    std::vector<double> x(net.input_size());
    for (int attempt = 0;; ++attempt) {
      for (double& v : x) v = rng.uniform();
      if (!near_relu_kink(net, x, 1e-4)) break;
      ++result.redrawn_inputs;
      if (attempt > 1000) throw NumericError("gradient check: could not find a kink-free input");
    }
    std::vector<double> target(net.output_size(), 0.0);
    target[rng.uniform_index(target.size())] = 1.0;

    const ForwardTrace trace = forward(net, x);
    const BackwardResult analytic = backward(net, trace, target, loss);
    const Gradients numeric = numeric_gradients(net, x, target, loss, h);
    for (std::size_t l = 0; l < net.depth(); ++l) {
      for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
        const double a = analytic.grads.weights[l].values()[i];
        const double n = numeric.weights[l].values()[i];
        result.max_weight_error = std::max(result.max_weight_error, relative_error(a, n));
        result.max_abs_diff = std::max(result.max_abs_diff, std::abs(a - n));
      }
      for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
        const double a = analytic.grads.biases[l][i];
        const double n = numeric.biases[l][i];
        result.max_bias_error = std::max(result.max_bias_error, relative_error(a, n));
        result.max_abs_diff = std::max(result.max_abs_diff, std::abs(a - n));
      }
    }
    const JacobianRecord jac = jacobian(net, x);
    const Matrix fd = numeric_jacobian(net, x, h);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      result.max_jacobian_error =
          std::max(result.max_jacobian_error, relative_error(jac.beta0.values()[i], fd.values()[i]));
      result.max_abs_diff = std::max(result.max_abs_diff, std::abs(jac.beta0.values()[i] - fd.values()[i]));
    }
    ++result.nets;
  }
  return result;
}

}  // namespace sharplab
