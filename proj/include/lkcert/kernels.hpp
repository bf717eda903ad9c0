#pragma once

// Reductions over solution segments stored as contiguous row-major state
// arrays (count x dim). Each kernel has a scalar reference implementation and
// an AVX2 variant; the variant is chosen once at runtime from the CPU feature
// bits and can be overridden for equivalence testing.

#include <cstddef>
#include <span>
#include <string_view>

namespace lkcert::kernels {

enum class Isa { Scalar, Avx2 };

/// max_k ||x_k||.
double max_norm(std::span<const double> states, std::size_t dim);

/// sum_k weights[k] * ||x_k||^exponent  (exponent >= 0; 0^0 is taken as 1).
double weighted_norm_power_sum(std::span<const double> states, std::size_t dim,
                               std::span<const double> weights, double exponent);

/// out = sum_k weights[k] * x_k.
void weighted_vector_sum(std::span<const double> states, std::size_t dim,
                         std::span<const double> weights, std::span<double> out);

/// Isa currently used by the dispatching entry points.
Isa active_isa();

/// Best Isa supported by this build and CPU.
Isa detected_isa();

/// Forces an Isa (falls back to Scalar if the requested one is unavailable).
/// Returns the Isa actually installed.
Isa set_isa(Isa isa);

std::string_view isa_name(Isa isa);

namespace scalar {
double max_norm(std::span<const double> states, std::size_t dim);
double weighted_norm_power_sum(std::span<const double> states, std::size_t dim,
                               std::span<const double> weights, double exponent);
void weighted_vector_sum(std::span<const double> states, std::size_t dim,
                         std::span<const double> weights, std::span<double> out);
}  // namespace scalar

namespace avx2 {
bool available();
double max_norm(std::span<const double> states, std::size_t dim);
double weighted_norm_power_sum(std::span<const double> states, std::size_t dim,
                               std::span<const double> weights, double exponent);
void weighted_vector_sum(std::span<const double> states, std::size_t dim,
                         std::span<const double> weights, std::span<double> out);
}  // namespace avx2

}  // namespace lkcert::kernels
