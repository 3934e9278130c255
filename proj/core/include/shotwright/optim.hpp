#pragma once

#include <functional>
#include <span>

#include "shotwright/autograd.hpp"
#include "shotwright/rng.hpp"

namespace shotwright {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected adaptive-moment update per parameter; clears the
/// gradients afterwards.
void adam_step(std::span<Parameter* const> params, const AdamConfig& config);

void zero_grad(std::span<Parameter* const> params);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares tape gradients of the scalar built by `loss` against central
/// finite differences. Checks up to `max_coords_per_param` randomly chosen
/// coordinates of every parameter (all of them when the tensor is smaller).
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheckResult grad_check(const std::function<Var(Tape&)>& loss, std::span<Parameter* const> params,
                           double perturbation, std::size_t max_coords_per_param, Rng& rng, double floor = 1e-7);

}  // namespace shotwright
