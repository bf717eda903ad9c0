#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "lkcert/types.hpp"

namespace lkcert::kernels::detail {

inline std::size_t state_count(std::span<const double> states, std::size_t dim) {
  if (dim == 0 || states.size() % dim != 0) {
    throw InvalidArgument("kernels: state array length is not a multiple of the dimension");
  }
  return states.size() / dim;
}

inline void require_weights(std::span<const double> weights, std::size_t count) {
  if (weights.size() != count) throw InvalidArgument("kernels: weight count mismatch");
}

inline void require_out(std::span<double> out, std::size_t dim) {
  if (out.size() != dim) throw InvalidArgument("kernels: output dimension mismatch");
}

// Largest half-exponent handled by repeated squaring in both variants.
inline constexpr unsigned kMaxIntegerHalfExponent = 64;

inline bool integer_half_exponent(double half, unsigned* k) {
  if (half >= 0.0 && half <= kMaxIntegerHalfExponent && half == std::floor(half)) {
    *k = static_cast<unsigned>(half);
    return true;
  }
  return false;
}

// s^half for s = |x|^2 >= 0. Binary exponentiation when half is a small
// non-negative integer so that the vector variants can match it exactly.
inline double pow_of_square(double s, double half) {
  unsigned k = 0;
  if (integer_half_exponent(half, &k)) {
    double r = 1.0;
    double b = s;
    while (k != 0) {
      if (k & 1u) r *= b;
      b *= b;
      k >>= 1u;
    }
    return r;
  }
  return std::pow(s, half);
}

}  // namespace lkcert::kernels::detail
