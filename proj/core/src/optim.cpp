#include "shotwright/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shotwright {

void adam_step(std::span<Parameter* const> params, const AdamConfig& config) {
  for (Parameter* p : params) {
    ++p->step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(p->step));
    auto value = p->value.data();
    auto grad = p->grad.data();
    auto m = p->first_moment.data();
    auto v = p->second_moment.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      value[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.eps);
      grad[i] = 0.0;
    }
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

GradCheckResult grad_check(const std::function<Var(Tape&)>& loss, std::span<Parameter* const> params,
                           double perturbation, std::size_t max_coords_per_param, Rng& rng, double floor) {
  GradCheckResult result;
  if (params.empty()) return result;

  zero_grad(params);
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto evaluate = [&loss] {
    Tape tape;
    return tape.value(loss(tape))[0];
  };

  for (Parameter* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng.engine());
      coords.resize(max_coords_per_param);
    }
    for (std::size_t c : coords) {
      const double original = p->value[c];
      p->value[c] = original + perturbation;
      const double up = evaluate();
      p->value[c] = original - perturbation;
      const double down = evaluate();
      p->value[c] = original;
      const double numeric = (up - down) / (2.0 * perturbation);
      const double analytic = p->grad[c];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
      ++result.coordinates;
    }
  }
  zero_grad(params);
  return result;
}

}  // namespace shotwright
