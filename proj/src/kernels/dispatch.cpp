#include <atomic>
#include <cstdlib>
#include <cstring>

#include "lkcert/kernels.hpp"

namespace lkcert::kernels {

#if !LKCERT_HAVE_AVX2
namespace avx2 {
bool available() { return false; }
double max_norm(std::span<const double> s, std::size_t d) { return scalar::max_norm(s, d); }
double weighted_norm_power_sum(std::span<const double> s, std::size_t d,
                               std::span<const double> w, double e) {
  return scalar::weighted_norm_power_sum(s, d, w, e);
}
void weighted_vector_sum(std::span<const double> s, std::size_t d, std::span<const double> w,
                         std::span<double> o) {
  scalar::weighted_vector_sum(s, d, w, o);
}
}  // namespace avx2
#endif

namespace {

Isa initial_isa() {
  // LKCERT_ISA=scalar pins the reference kernels.
  if (const char* env = std::getenv("LKCERT_ISA"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::Scalar;
  }
  return detected_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detected_isa() { return avx2::available() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

Isa set_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2::available()) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
  return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

double max_norm(std::span<const double> states, std::size_t dim) {
  return active_isa() == Isa::Avx2 ? avx2::max_norm(states, dim) : scalar::max_norm(states, dim);
}

double weighted_norm_power_sum(std::span<const double> states, std::size_t dim,
                               std::span<const double> weights, double exponent) {
  return active_isa() == Isa::Avx2 ? avx2::weighted_norm_power_sum(states, dim, weights, exponent)
                                   : scalar::weighted_norm_power_sum(states, dim, weights, exponent);
}

void weighted_vector_sum(std::span<const double> states, std::size_t dim,
                         std::span<const double> weights, std::span<double> out) {
  if (active_isa() == Isa::Avx2) {
    avx2::weighted_vector_sum(states, dim, weights, out);
  } else {
    scalar::weighted_vector_sum(states, dim, weights, out);
  }
}

}  // namespace lkcert::kernels
