// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_common.hpp"
#include "lkcert/kernels.hpp"

namespace lkcert::kernels::avx2 {

namespace {

// Squared norms of states k..k+3, in state order. The additions happen in the
// same order as the scalar loop so the results are bit-identical.
inline __m256d squared_norms4(const double* base, std::size_t dim, std::size_t k) {
  if (dim == 1) {
    const __m256d x = _mm256_loadu_pd(base + k);
    return _mm256_mul_pd(x, x);
  }
  if (dim == 2) {
    const __m256d lo = _mm256_loadu_pd(base + 2 * k);
    const __m256d hi = _mm256_loadu_pd(base + 2 * k + 4);
    const __m256d s = _mm256_hadd_pd(_mm256_mul_pd(lo, lo), _mm256_mul_pd(hi, hi));
    // hadd yields (s0, s2, s1, s3).
    return _mm256_permute4x64_pd(s, 0b11011000);
  }
  alignas(32) double tmp[4];
  for (std::size_t j = 0; j < 4; ++j) {
    const double* x = base + (k + j) * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += x[i] * x[i];
    tmp[j] = s;
  }
  return _mm256_load_pd(tmp);
}

inline __m256d pow_of_square4(__m256d s, double half) {
  unsigned k = 0;
  if (detail::integer_half_exponent(half, &k)) {
    __m256d r = _mm256_set1_pd(1.0);
    __m256d b = s;
    while (k != 0) {
      if (k & 1u) r = _mm256_mul_pd(r, b);
      b = _mm256_mul_pd(b, b);
      k >>= 1u;
    }
    return r;
  }
  alignas(32) double tmp[4];
  _mm256_store_pd(tmp, s);
  for (double& v : tmp) v = std::pow(v, half);
  return _mm256_load_pd(tmp);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace

bool available() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

double max_norm(std::span<const double> states, std::size_t dim) {
  const std::size_t count = detail::state_count(states, dim);
  const double* base = states.data();
  __m256d best = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) best = _mm256_max_pd(best, squared_norms4(base, dim, k));
  double m = hmax(best);
  for (; k < count; ++k) {
    const double* x = base + k * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += x[i] * x[i];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

double weighted_norm_power_sum(std::span<const double> states, std::size_t dim,
                               std::span<const double> weights, double exponent) {
  const std::size_t count = detail::state_count(states, dim);
  detail::require_weights(weights, count);
  const double half = 0.5 * exponent;
  const double* base = states.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d p = pow_of_square4(squared_norms4(base, dim, k), half);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(weights.data() + k), p, acc);
  }
  double total = hsum(acc);
  for (; k < count; ++k) {
    const double* x = base + k * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += x[i] * x[i];
    total += weights[k] * detail::pow_of_square(s, half);
  }
  return total;
}

void weighted_vector_sum(std::span<const double> states, std::size_t dim,
                         std::span<const double> weights, std::span<double> out) {
  const std::size_t count = detail::state_count(states, dim);
  detail::require_weights(weights, count);
  detail::require_out(out, dim);
  const double* base = states.data();
  if (dim == 1) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= count; k += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(weights.data() + k), _mm256_loadu_pd(base + k), acc);
    }
    double total = hsum(acc);
    for (; k < count; ++k) total += weights[k] * base[k];
    out[0] = total;
    return;
  }
  if (dim == 2) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 2 <= count; k += 2) {
      // (w_k, w_k, w_k+1, w_k+1)
      const __m128d w2 = _mm_loadu_pd(weights.data() + k);
      const __m256d w = _mm256_permute4x64_pd(_mm256_castpd128_pd256(w2), 0b01010000);
      acc = _mm256_fmadd_pd(w, _mm256_loadu_pd(base + 2 * k), acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    out[0] = lanes[0] + lanes[2];
    out[1] = lanes[1] + lanes[3];
    for (; k < count; ++k) {
      out[0] += weights[k] * base[2 * k];
      out[1] += weights[k] * base[2 * k + 1];
    }
    return;
  }
  scalar::weighted_vector_sum(states, dim, weights, out);
}

}  // namespace lkcert::kernels::avx2
