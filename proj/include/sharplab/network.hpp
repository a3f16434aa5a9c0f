#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sharplab/matrix.hpp"

namespace sharplab {

class Rng;

enum class Activation { identity, relu, tanh, softmax };
enum class LossKind { squared_error, categorical_crossentropy };

/// Which map the input–output Jacobian is taken of: the network outputs
/// (through the output activation) or the output-layer pre-activations.
enum class JacobianEndpoint { outputs, logits };

std::string_view to_string(Activation a);
std::string_view to_string(LossKind l);
std::string_view to_string(JacobianEndpoint e);
Activation parse_activation(std::string_view s);
/// Accepts "squared_error"/"sq"/"mse" and "categorical_crossentropy"/"xent".
LossKind parse_loss(std::string_view s);

/// Dense multilayer perceptron.
///
/// Layer l (1-based, l = 1…L) maps N(l-1) activations to N(l) through
///   z⁽ˡ⁾ = a⁽ˡ⁻¹⁾·W⁽ˡ⁾ + b⁽ˡ⁾,   a⁽ˡ⁾ = f⁽ˡ⁾(z⁽ˡ⁾)
/// with W⁽ˡ⁾ stored as the N(l-1)×N(l) matrix `weights[l-1]`, so that
/// W⁽ˡ⁾(k, i) connects input unit k to output unit i.
struct Mlp {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::softmax;

  std::size_t depth() const noexcept { return weights.size(); }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  /// f⁽ˡ⁾ for 1 ≤ l ≤ L.
  Activation activation(std::size_t layer) const;
  std::size_t weight_count() const;
  std::size_t parameter_count() const;
  /// Throws ShapeError/ConfigError when shapes or activation placement are invalid.
  void validate() const;
};

/// All parameters zero.
Mlp make_mlp(std::vector<std::size_t> layer_sizes, Activation hidden, Activation output);
/// Weights ~ normal(0, 1/sqrt(fan_in)), biases 0. Layers drawn in order, row-major.
Mlp init_mlp(std::vector<std::size_t> layer_sizes, Activation hidden, Activation output, Rng& rng);

/// Per-layer values of one forward pass. Index l holds layer l; index 0 of
/// `pre_activations` is empty and `activations[0]` is the input.
struct ForwardTrace {
  std::vector<std::vector<double>> pre_activations;
  std::vector<std::vector<double>> activations;
  std::span<const double> output() const { return activations.back(); }
};

ForwardTrace forward(const Mlp& net, std::span<const double> x);
/// Outputs for every row of `x`.
Matrix predict_batch(const Mlp& net, const Matrix& x);

struct Gradients {
  std::vector<Matrix> weights;               // same shapes as Mlp::weights
  std::vector<std::vector<double>> biases;   // same shapes as Mlp::biases
};

Gradients zero_gradients(const Mlp& net);

struct BackwardResult {
  Gradients grads;
  /// betas[l] is N(l)×N(L) with entry (i, j) = ∂a⁽ᴸ⁾_j / ∂a⁽ˡ⁾_i, l = 0…L.
  std::vector<Matrix> betas;
};

/// Throws ConfigError unless crossentropy↔softmax or squared_error↔identity.
void check_loss_pairing(const Mlp& net, LossKind loss);

/// Per-example loss. Squared error is Σⱼ (oⱼ − yⱼ)²; crossentropy is
/// −Σⱼ yⱼ log oⱼ, evaluated from the logits.
double example_loss(const Mlp& net, const ForwardTrace& trace, std::span<const double> target,
                    LossKind loss);

/// Gradient of one example's loss, assembled from the beta matrices: the
/// error signal at layer l is βˡ·∂e/∂a⁽ᴸ⁾, multiplied by the local activation
/// derivative and the incoming activation.
BackwardResult backward(const Mlp& net, const ForwardTrace& trace, std::span<const double> target,
                        LossKind loss);

/// The same gradient by conventional layer-by-layer delta propagation.
Gradients backward_delta(const Mlp& net, const ForwardTrace& trace, std::span<const double> target,
                         LossKind loss);

struct BatchStats {
  double loss_sum = 0.0;
  std::size_t correct = 0;
};

/// Batched forward + delta backprop. Writes the mean gradient over the rows of
/// `x` into `grads` (which must already have the net's shapes).
BatchStats batch_gradients(const Mlp& net, const Matrix& x, const Matrix& y, LossKind loss,
                           Gradients& grads);

struct JacobianRecord {
  Matrix beta0;   // N(0)×N(L), entry (i, j) = ∂oⱼ/∂xᵢ
  double frob = 0.0;
};

JacobianRecord jacobian(const Mlp& net, std::span<const double> x,
                        JacobianEndpoint endpoint = JacobianEndpoint::outputs);

/// Mean Frobenius norm of the input–output Jacobian over the first
/// min(sample_cap, rows) rows of `inputs`.
double sharpness(const Mlp& net, const Matrix& inputs, std::size_t sample_cap,
                 JacobianEndpoint endpoint = JacobianEndpoint::outputs);

struct WeightNorm {
  double raw_l2 = 0.0;       // biases excluded
  double normalized = 0.0;   // raw_l2 / sqrt(weight_count)
};

WeightNorm weight_norm(const Mlp& net);

struct Evaluation {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

Evaluation loss_and_accuracy(const Mlp& net, const Matrix& x, const Matrix& y_onehot,
                             std::span<const std::uint8_t> labels, LossKind loss);

}  // namespace sharplab
