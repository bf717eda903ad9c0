#include <algorithm>
#include <cmath>

#include "kernels_common.hpp"
#include "lkcert/kernels.hpp"

namespace lkcert::kernels::scalar {

double max_norm(std::span<const double> states, std::size_t dim) {
  const std::size_t count = detail::state_count(states, dim);
  double best = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double* x = states.data() + k * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += x[i] * x[i];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

double weighted_norm_power_sum(std::span<const double> states, std::size_t dim,
                               std::span<const double> weights, double exponent) {
  const std::size_t count = detail::state_count(states, dim);
  detail::require_weights(weights, count);
  const double half = 0.5 * exponent;
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double* x = states.data() + k * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += x[i] * x[i];
    acc += weights[k] * detail::pow_of_square(s, half);
  }
  return acc;
}

void weighted_vector_sum(std::span<const double> states, std::size_t dim,
                         std::span<const double> weights, std::span<double> out) {
  const std::size_t count = detail::state_count(states, dim);
  detail::require_weights(weights, count);
  detail::require_out(out, dim);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const double* x = states.data() + k * dim;
    for (std::size_t i = 0; i < dim; ++i) out[i] += weights[k] * x[i];
  }
}

}  // namespace lkcert::kernels::scalar
