#include "sharplab/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sharplab/error.hpp"
#include "sharplab/numkit.hpp"

namespace sharplab {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

std::string_view to_string(LossKind l) {
  return l == LossKind::squared_error ? "squared_error" : "categorical_crossentropy";
}

std::string_view to_string(JacobianEndpoint e) {
  return e == JacobianEndpoint::outputs ? "softmax" : "logits";
}

Activation parse_activation(std::string_view s) {
  if (s == "identity" || s == "linear") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "softmax") return Activation::softmax;
  throw ParameterError("unknown activation '" + std::string(s) + "'");
}

LossKind parse_loss(std::string_view s) {
  if (s == "squared_error" || s == "sq" || s == "mse") return LossKind::squared_error;
  if (s == "categorical_crossentropy" || s == "xent" || s == "crossentropy")
    return LossKind::categorical_crossentropy;
  throw ParameterError("unknown loss '" + std::string(s) + "'");
}

Activation Mlp::activation(std::size_t layer) const {
  return layer == depth() ? output_activation : hidden_activation;
}

std::size_t Mlp::weight_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  return n;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = weight_count();
  for (const auto& b : biases) n += b.size();
  return n;
}

void Mlp::validate() const {
  if (layer_sizes.size() < 2) throw ShapeError("mlp: need at least an input and an output layer");
  if (weights.size() + 1 != layer_sizes.size() || biases.size() != weights.size()) {
    throw ShapeError("mlp: layer count does not match layer_sizes");
  }
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    const auto& w = weights[l - 1];
    if (w.rows() != layer_sizes[l - 1] || w.cols() != layer_sizes[l] ||
        biases[l - 1].size() != layer_sizes[l]) {
      throw ShapeError("mlp: layer " + std::to_string(l) + " has weights " + w.shape_string() +
                       " and " + std::to_string(biases[l - 1].size()) + " biases, expected " +
                       std::to_string(layer_sizes[l - 1]) + "x" + std::to_string(layer_sizes[l]));
    }
  }
  if (hidden_activation == Activation::softmax) {
    throw ConfigError("mlp: softmax is only allowed on the output layer");
  }
}

Mlp make_mlp(std::vector<std::size_t> layer_sizes, Activation hidden, Activation output) {
  Mlp net;
  net.layer_sizes = std::move(layer_sizes);
  net.hidden_activation = hidden;
  net.output_activation = output;
  if (net.layer_sizes.size() < 2) throw ShapeError("mlp: need at least an input and an output layer");
  for (std::size_t l = 1; l < net.layer_sizes.size(); ++l) {
    if (net.layer_sizes[l - 1] == 0 || net.layer_sizes[l] == 0) throw ShapeError("mlp: empty layer");
    net.weights.emplace_back(net.layer_sizes[l - 1], net.layer_sizes[l]);
    net.biases.emplace_back(net.layer_sizes[l], 0.0);
  }
  net.validate();
  return net;
}

Mlp init_mlp(std::vector<std::size_t> layer_sizes, Activation hidden, Activation output, Rng& rng) {
  Mlp net = make_mlp(std::move(layer_sizes), hidden, output);
  for (auto& w : net.weights) {
    const double std = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (double& v : w.values()) v = std * rng.normal();
  }
  return net;
}

namespace {

void softmax_inplace(std::span<double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : v) x /= total;
}

void apply_activation(Activation f, std::span<double> v) {
  switch (f) {
    case Activation::identity: break;
    case Activation::relu:
      for (double& x : v) x = x > 0.0 ? x : 0.0;
      break;
    case Activation::tanh:
      for (double& x : v) x = std::tanh(x);
      break;
    case Activation::softmax: softmax_inplace(v); break;
  }
}

// f'(z) for elementwise activations, given z and a = f(z).
double elementwise_derivative(Activation f, double z, double a) {
  switch (f) {
    case Activation::identity: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - a * a;
    case Activation::softmax: break;
  }
  throw ConfigError("softmax has no elementwise derivative");
}

// Multiplies the vector v by D = ∂a/∂z (symmetric for every supported f).
std::vector<double> apply_local_derivative(Activation f, std::span<const double> z,
                                           std::span<const double> a, std::span<const double> v) {
  std::vector<double> out(v.size());
  if (f == Activation::softmax) {
    double dot = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) dot += a[k] * v[k];
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = a[k] * (v[k] - dot);
  } else {
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = elementwise_derivative(f, z[k], a[k]) * v[k];
  }
  return out;
}

// Left-multiplies `m` (N×C) by D = ∂a/∂z (N×N).
Matrix apply_local_derivative_rows(Activation f, std::span<const double> z, std::span<const double> a,
                                   const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  if (f == Activation::softmax) {
    // D(k, m) = a_k (δ_km − a_m)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double dot = 0.0;
      for (std::size_t k = 0; k < m.rows(); ++k) dot += a[k] * m(k, c);
      for (std::size_t k = 0; k < m.rows(); ++k) out(k, c) = a[k] * (m(k, c) - dot);
    }
  } else {
    for (std::size_t k = 0; k < m.rows(); ++k) {
      const double d = elementwise_derivative(f, z[k], a[k]);
      for (std::size_t c = 0; c < m.cols(); ++c) out(k, c) = d * m(k, c);
    }
  }
  return out;
}

void require_input(const Mlp& net, std::size_t n) {
  if (n != net.input_size()) {
    throw ShapeError("input has " + std::to_string(n) + " values, network expects " +
                     std::to_string(net.input_size()));
  }
}

double log_sum_exp(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - top);
  return top + std::log(total);
}

double loss_from(LossKind loss, std::span<const double> logits, std::span<const double> out,
                 std::span<const double> target) {
  double e = 0.0;
  if (loss == LossKind::squared_error) {
    for (std::size_t j = 0; j < out.size(); ++j) e += (out[j] - target[j]) * (out[j] - target[j]);
  } else {
    const double lse = log_sum_exp(logits);
    for (std::size_t j = 0; j < out.size(); ++j)
      if (target[j] != 0.0) e += target[j] * (lse - logits[j]);
  }
  return e;
}

// ∂e/∂a⁽ᴸ⁾.
std::vector<double> loss_gradient(LossKind loss, std::span<const double> out,
                                  std::span<const double> target) {
  std::vector<double> g(out.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (loss == LossKind::squared_error) {
      g[j] = 2.0 * (out[j] - target[j]);
    } else {
      g[j] = target[j] == 0.0
                 ? 0.0
                 : -target[j] / std::max(out[j], std::numeric_limits<double>::min());
    }
  }
  return g;
}

// δ⁽ᴸ⁾ = ∂e/∂z⁽ᴸ⁾; softmax + crossentropy collapses to a − y.
std::vector<double> output_delta(const Mlp& net, LossKind loss, std::span<const double> z,
                                 std::span<const double> out, std::span<const double> target) {
  if (loss == LossKind::categorical_crossentropy && net.output_activation == Activation::softmax) {
    double mass = 0.0;
    for (double t : target) mass += t;
    std::vector<double> d(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) d[j] = mass * out[j] - target[j];
    return d;
  }
  return apply_local_derivative(net.output_activation, z, out, loss_gradient(loss, out, target));
}

void accumulate_layer(Gradients& g, std::size_t layer, std::span<const double> input,
                      std::span<const double> delta) {
  Matrix& gw = g.weights[layer - 1];
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double a = input[i];
    for (std::size_t j = 0; j < delta.size(); ++j) gw(i, j) = a * delta[j];
  }
  std::copy(delta.begin(), delta.end(), g.biases[layer - 1].begin());
}

}  // namespace

ForwardTrace forward(const Mlp& net, std::span<const double> x) {
  require_input(net, x.size());
  ForwardTrace t;
  const std::size_t L = net.depth();
  t.pre_activations.resize(L + 1);
  t.activations.resize(L + 1);
  t.activations[0].assign(x.begin(), x.end());
  for (std::size_t l = 1; l <= L; ++l) {
    const Matrix& w = net.weights[l - 1];
    std::vector<double> z = net.biases[l - 1];
    const auto& prev = t.activations[l - 1];
    for (std::size_t k = 0; k < w.rows(); ++k) {
      const double a = prev[k];
      const auto wr = w.row(k);
      for (std::size_t i = 0; i < w.cols(); ++i) z[i] += wr[i] * a;
    }
    std::vector<double> a = z;
    apply_activation(net.activation(l), a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(z[i]) || !std::isfinite(a[i])) {
        throw NumericError("non-finite value in layer " + std::to_string(l));
      }
    }
    t.pre_activations[l] = std::move(z);
    t.activations[l] = std::move(a);
  }
  return t;
}

namespace {

// Batched forward pass keeping every layer's pre-activations and activations.
struct BatchTrace {
  std::vector<Matrix> z;   // z[l], l = 1…L (z[0] unused)
  std::vector<Matrix> a;   // a[0] = x
};

BatchTrace forward_rows(const Mlp& net, const Matrix& x) {
  require_input(net, x.cols());
  const std::size_t L = net.depth();
  BatchTrace t;
  t.z.resize(L + 1);
  t.a.resize(L + 1);
  t.a[0] = x;
  for (std::size_t l = 1; l <= L; ++l) {
    Matrix z = matmul(t.a[l - 1], net.weights[l - 1]);
    const auto& b = net.biases[l - 1];
    for (std::size_t r = 0; r < z.rows(); ++r) {
      auto row = z.row(r);
      for (std::size_t i = 0; i < row.size(); ++i) row[i] += b[i];
    }
    Matrix a = z;
    const Activation f = net.activation(l);
    for (std::size_t r = 0; r < a.rows(); ++r) apply_activation(f, a.row(r));
    t.z[l] = std::move(z);
    t.a[l] = std::move(a);
  }
  return t;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t argmax_label(std::span<const double> onehot) { return argmax(onehot); }

}  // namespace

Matrix predict_batch(const Mlp& net, const Matrix& x) {
  constexpr std::size_t chunk = 4096;
  Matrix out(x.rows(), net.output_size());
  for (std::size_t begin = 0; begin < x.rows(); begin += chunk) {
    const std::size_t end = std::min(x.rows(), begin + chunk);
    const BatchTrace t = forward_rows(net, slice_rows(x, begin, end));
    std::copy(t.a.back().values().begin(), t.a.back().values().end(),
              out.row(begin).begin());
  }
  return out;
}

Gradients zero_gradients(const Mlp& net) {
  Gradients g;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    g.weights.emplace_back(net.weights[l].rows(), net.weights[l].cols());
    g.biases.emplace_back(net.biases[l].size(), 0.0);
  }
  return g;
}

void check_loss_pairing(const Mlp& net, LossKind loss) {
  if (loss == LossKind::categorical_crossentropy && net.output_activation != Activation::softmax) {
    throw ConfigError("categorical_crossentropy requires a softmax output layer, got " +
                      std::string(to_string(net.output_activation)));
  }
  if (loss == LossKind::squared_error && net.output_activation != Activation::identity) {
    throw ConfigError("squared_error requires an identity output layer, got " +
                      std::string(to_string(net.output_activation)));
  }
}

double example_loss(const Mlp& net, const ForwardTrace& trace, std::span<const double> target,
                    LossKind loss) {
  check_loss_pairing(net, loss);
  if (target.size() != net.output_size()) throw ShapeError("target length does not match output layer");
  return loss_from(loss, trace.pre_activations.back(), trace.output(), target);
}

BackwardResult backward(const Mlp& net, const ForwardTrace& trace, std::span<const double> target,
                        LossKind loss) {
  check_loss_pairing(net, loss);
  const std::size_t L = net.depth();
  if (target.size() != net.output_size()) throw ShapeError("target length does not match output layer");
  if (trace.activations.size() != L + 1) throw ShapeError("trace does not belong to this network");

  BackwardResult r;
  r.grads = zero_gradients(net);
  r.betas.resize(L + 1);
  r.betas[L] = Matrix::identity(net.output_size());
  for (std::size_t l = L; l-- > 0;) {
    // β⁽ˡ⁾ = W⁽ˡ⁺¹⁾ · D⁽ˡ⁺¹⁾ · β⁽ˡ⁺¹⁾
    const Matrix local = apply_local_derivative_rows(
        net.activation(l + 1), trace.pre_activations[l + 1], trace.activations[l + 1], r.betas[l + 1]);
    r.betas[l] = matmul(net.weights[l], local);
  }

  const std::vector<double> de_da = loss_gradient(loss, trace.output(), target);
  for (std::size_t l = 1; l <= L; ++l) {
    std::vector<double> delta;
    if (l == L) {
      delta = output_delta(net, loss, trace.pre_activations[L], trace.output(), target);
    } else {
      // ∂e/∂a⁽ˡ⁾_j = Σ_k β⁽ˡ⁾_jk ∂e/∂a⁽ᴸ⁾_k
      const Matrix& beta = r.betas[l];
      std::vector<double> de_dal(beta.rows(), 0.0);
      for (std::size_t j = 0; j < beta.rows(); ++j)
        for (std::size_t k = 0; k < beta.cols(); ++k) de_dal[j] += beta(j, k) * de_da[k];
      delta = apply_local_derivative(net.activation(l), trace.pre_activations[l],
                                     trace.activations[l], de_dal);
    }
    accumulate_layer(r.grads, l, trace.activations[l - 1], delta);
  }
  return r;
}

Gradients backward_delta(const Mlp& net, const ForwardTrace& trace, std::span<const double> target,
                         LossKind loss) {
  check_loss_pairing(net, loss);
  const std::size_t L = net.depth();
  if (target.size() != net.output_size()) throw ShapeError("target length does not match output layer");
  Gradients g = zero_gradients(net);
  std::vector<double> delta = output_delta(net, loss, trace.pre_activations[L], trace.output(), target);
  for (std::size_t l = L; l >= 1; --l) {
    accumulate_layer(g, l, trace.activations[l - 1], delta);
    if (l == 1) break;
    const Matrix& w = net.weights[l - 1];
    std::vector<double> back(w.rows(), 0.0);
    for (std::size_t k = 0; k < w.rows(); ++k) {
      const auto wr = w.row(k);
      for (std::size_t i = 0; i < w.cols(); ++i) back[k] += wr[i] * delta[i];
    }
    delta = apply_local_derivative(net.activation(l - 1), trace.pre_activations[l - 1],
                                   trace.activations[l - 1], back);
  }
  return g;
}

BatchStats batch_gradients(const Mlp& net, const Matrix& x, const Matrix& y, LossKind loss,
                           Gradients& grads) {
  check_loss_pairing(net, loss);
  if (x.rows() != y.rows() || y.cols() != net.output_size()) {
    throw ShapeError("batch_gradients: inputs " + x.shape_string() + " and targets " +
                     y.shape_string() + " do not fit the network");
  }
  const std::size_t L = net.depth();
  const std::size_t rows = x.rows();
  const BatchTrace t = forward_rows(net, x);

  BatchStats stats;
  Matrix delta(rows, net.output_size());
  for (std::size_t r = 0; r < rows; ++r) {
    const auto out = t.a[L].row(r);
    const auto target = y.row(r);
    stats.loss_sum += loss_from(loss, t.z[L].row(r), out, target);
    if (argmax(out) == argmax_label(target)) ++stats.correct;
    const auto d = output_delta(net, loss, t.z[L].row(r), out, target);
    std::copy(d.begin(), d.end(), delta.row(r).begin());
  }

  const double scale = 1.0 / static_cast<double>(rows);
  for (std::size_t l = L; l >= 1; --l) {
    grads.weights[l - 1] = scale * matmul_tn(t.a[l - 1], delta);
    auto& gb = grads.biases[l - 1];
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto d = delta.row(r);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += d[i];
    }
    for (double& v : gb) v *= scale;
    if (l == 1) break;
    Matrix back = matmul_nt(delta, net.weights[l - 1]);
    const Activation f = net.activation(l - 1);
    for (std::size_t r = 0; r < rows; ++r) {
      auto br = back.row(r);
      const auto zr = t.z[l - 1].row(r);
      const auto ar = t.a[l - 1].row(r);
      for (std::size_t k = 0; k < br.size(); ++k) br[k] *= elementwise_derivative(f, zr[k], ar[k]);
    }
    delta = std::move(back);
  }
  return stats;
}

JacobianRecord jacobian(const Mlp& net, std::span<const double> x, JacobianEndpoint endpoint) {
  const ForwardTrace t = forward(net, x);
  const std::size_t L = net.depth();
  const std::size_t n_out = net.output_size();
  // β⁽ᴸ⁻¹⁾ = W⁽ᴸ⁾·D⁽ᴸ⁾, then β⁽ˡ⁾ = W⁽ˡ⁺¹⁾·D⁽ˡ⁺¹⁾·β⁽ˡ⁺¹⁾ down to l = 0.
  Matrix beta = Matrix::identity(n_out);
  for (std::size_t l = L; l >= 1; --l) {
    Activation f = net.activation(l);
    if (l == L && endpoint == JacobianEndpoint::logits) f = Activation::identity;
    if (f != Activation::identity) {
      beta = apply_local_derivative_rows(f, t.pre_activations[l], t.activations[l], beta);
    }
    beta = matmul(net.weights[l - 1], beta);
  }
  JacobianRecord rec;
  rec.frob = frobenius_norm(beta);
  rec.beta0 = std::move(beta);
  return rec;
}

double sharpness(const Mlp& net, const Matrix& inputs, std::size_t sample_cap,
                 JacobianEndpoint endpoint) {
  const std::size_t n = std::min(sample_cap, inputs.rows());
  if (n == 0) throw ParameterError("sharpness: no inputs to average over");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += jacobian(net, inputs.row(i), endpoint).frob;
  return total / static_cast<double>(n);
}

WeightNorm weight_norm(const Mlp& net) {
  double scale = 0.0;
  for (const auto& w : net.weights)
    for (double v : w.values()) scale = std::max(scale, std::abs(v));
  WeightNorm out;
  if (scale == 0.0) return out;
  double acc = 0.0;
  for (const auto& w : net.weights)
    for (double v : w.values()) {
      const double t = v / scale;
      acc += t * t;
    }
  out.raw_l2 = scale * std::sqrt(acc);
  out.normalized = out.raw_l2 / std::sqrt(static_cast<double>(net.weight_count()));
  return out;
}

Evaluation loss_and_accuracy(const Mlp& net, const Matrix& x, const Matrix& y_onehot,
                             std::span<const std::uint8_t> labels, LossKind loss) {
  check_loss_pairing(net, loss);
  if (x.rows() != y_onehot.rows() || x.rows() != labels.size() ||
      y_onehot.cols() != net.output_size()) {
    throw ShapeError("loss_and_accuracy: inputs " + x.shape_string() + ", targets " +
                     y_onehot.shape_string() + " and " + std::to_string(labels.size()) +
                     " labels are inconsistent");
  }
  if (x.rows() == 0) throw ParameterError("loss_and_accuracy: empty evaluation set");
  constexpr std::size_t chunk = 4096;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < x.rows(); begin += chunk) {
    const std::size_t end = std::min(x.rows(), begin + chunk);
    const BatchTrace t = forward_rows(net, slice_rows(x, begin, end));
    const std::size_t L = net.depth();
    for (std::size_t r = 0; r < end - begin; ++r) {
      const auto out = t.a[L].row(r);
      loss_sum += loss_from(loss, t.z[L].row(r), out, y_onehot.row(begin + r));
      if (argmax(out) == labels[begin + r]) ++correct;
    }
  }
  const double n = static_cast<double>(x.rows());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

}  // namespace sharplab
