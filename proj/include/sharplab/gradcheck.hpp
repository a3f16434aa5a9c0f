#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "sharplab/network.hpp"

namespace sharplab {

/// Central-difference derivatives computed from forward passes only, used to
/// audit `backward` and `jacobian`.

/// 0 when |analytic − numeric| ≤ abs_floor, otherwise the difference divided
/// by max(|analytic|, |numeric|).
double relative_error(double analytic, double numeric, double abs_floor = 1e-8);

/// N(0)×N(L) matrix of ∂oⱼ/∂xᵢ.
Matrix numeric_jacobian(const Mlp& net, std::span<const double> x, double h,
                        JacobianEndpoint endpoint = JacobianEndpoint::outputs);

Gradients numeric_gradients(const Mlp& net, std::span<const double> x,
                            std::span<const double> target, LossKind loss, double h);

struct GradCheckResult {
  std::size_t nets = 0;
  double max_weight_error = 0.0;
  double max_bias_error = 0.0;
  double max_jacobian_error = 0.0;
  /// Largest raw |analytic − numeric| before the absolute floor applies.
  double max_abs_diff = 0.0;
  /// Inputs redrawn because a ReLU pre-activation sat too close to its kink.
  std::size_t redrawn_inputs = 0;

  double max_error() const;
};

/// Checks gradients and the input–output Jacobian of `nets` random networks
/// with the given activations and loss. Network 0 is 49-50-50-10; the rest
/// have random widths (input 2–49, one or two hidden layers of 1–50 units,
/// output 2–10).
GradCheckResult run_gradient_check(Activation hidden, Activation output, LossKind loss,
                                   std::size_t nets, std::uint64_t seed, double h = 1e-6);

}  // namespace sharplab
