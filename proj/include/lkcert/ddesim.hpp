#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lkcert/model.hpp"
#include "lkcert/types.hpp"

namespace lkcert {

/// Continuous initial function phi on [-h, 0].
class InitialFunction {
 public:
  using Evaluator = std::function<State(double theta)>;

  /// sup_norm is computed on `grid_points` equally spaced points of [-h, 0].
  InitialFunction(Evaluator eval, int dim, double h, std::size_t grid_points = 1001);

  static InitialFunction constant(const State& value, double h);

  State operator()(double theta) const { return eval_(theta); }
  int dim() const { return dim_; }
  double h() const { return h_; }
  double sup_norm() const { return sup_norm_; }

  /// Sampled continuity check: adjacent values on a grid of spacing
  /// h/(points-1) differ by at most modulus * spacing.
  bool looks_continuous(double modulus, std::size_t points = 1001) const;

 private:
  Evaluator eval_;
  int dim_;
  double h_;
  double sup_norm_ = 0.0;
};

struct SimConfig {
  double step = 1e-2;
  double t_end = 1.0;
  std::size_t record_stride = 1;

  /// Number of steps per delay; throws unless h/step is a positive integer.
  std::size_t steps_per_delay(double h) const;
  void validate(double h) const;
};

/// Delay system as seen by the integrator: x' = rhs(t, x(t), x(t-h)).
struct DelayRhs {
  int n = 0;
  double h = 0.0;
  std::function<State(double t, const State& x, const State& x_del)> eval;

  static DelayRhs from_spec(const SystemSpec& spec);
};

/// Node-sampled solution on [t0, t_end] with stored derivatives, plus the
/// initial function on the grid [t0-h, t0). Dense evaluation is the cubic
/// Hermite interpolant between nodes (C1 within each step).
class Trajectory {
 public:
  Trajectory(InitialFunction phi, double t0, double step, std::size_t steps_per_delay, int dim);

  double t0() const { return t0_; }
  double t_end() const { return t0_ + step_ * static_cast<double>(node_count() - 1); }
  double step() const { return step_; }
  double h() const { return step_ * static_cast<double>(steps_per_delay_); }
  int dim() const { return dim_; }
  std::size_t steps_per_delay() const { return steps_per_delay_; }
  /// Nodes at t0 + k*step, k = 0..node_count()-1.
  std::size_t node_count() const { return derivs_.size() / static_cast<std::size_t>(dim_); }
  const InitialFunction& initial_function() const { return phi_; }

  double node_time(std::size_t k) const { return t0_ + step_ * static_cast<double>(k); }
  Eigen::Map<const State> node(std::size_t k) const;
  Eigen::Map<const State> node_derivative(std::size_t k) const;

  /// x(t) for t in [t0-h, t_end].
  State sample(double t) const;

  /// Contiguous states x(t_k + theta_j), theta_j = -h + j*step, j = 0..H,
  /// row-major (H+1) x dim. For k < H the leading rows are phi samples.
  std::span<const double> segment(std::size_t k) const;

  /// ||x_t||_h approximated on the node grid (plus interval ends).
  double segment_sup_norm(double t) const;

  /// ||x(t+theta)|| <= alpha ||x(t)|| for every grid theta in [-h, 0].
  bool in_S_alpha(double t, double alpha) const;

  // Integrator access.
  void append(const State& x);
  void set_derivative(std::size_t k, const State& dx);

 private:
  std::size_t locate_node(double t, bool* exact) const;
  std::size_t offset(std::size_t k) const { return (k + steps_per_delay_) * dim_; }

  InitialFunction phi_;
  double t0_;
  double step_;
  std::size_t steps_per_delay_;
  int dim_;
  // (H + node_count) rows: phi on the prefix grid, then the nodes.
  std::vector<double> values_;
  std::vector<double> derivs_;
};

/// Classical RK4 with delayed values from the initial function (first delay
/// interval) or from Hermite interpolation of completed steps. Throws
/// IntegrationFailure on a non-finite state.
Trajectory simulate(const DelayRhs& system, const InitialFunction& phi, const SimConfig& cfg);

inline Trajectory simulate(const SystemSpec& spec, const InitialFunction& phi,
                           const SimConfig& cfg) {
  return simulate(DelayRhs::from_spec(spec), phi, cfg);
}

/// Cubic Hermite interpolation on [0, dt] at s in [0, dt].
State hermite(const State& x0, const State& d0, const State& x1, const State& d1, double dt,
              double s);

}  // namespace lkcert
