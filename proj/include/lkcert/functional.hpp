#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lkcert/certificate.hpp"
#include "lkcert/ddesim.hpp"
#include "lkcert/model.hpp"

namespace lkcert {

/// L(t, eps) = int_{-h}^{t} exp(-eps (t - s)) B(s + h) ds, carried as the
/// solution of dL/dt = -eps L + B(t + h), L(-h) = 0.
struct LState {
  double t = 0.0;
  double eps = 0.0;
  Matrix L;
};

LState initial_L_state(int n, double h, double eps);

/// One RK4 step of length dt.
LState advance_L(const LState& state, double dt, double h, const MatrixEvaluator& b_eval);

/// Composite Simpson weights on H+1 equally spaced nodes (3/8 rule on the last
/// three intervals when H is odd, trapezoid when H = 1).
std::vector<double> simpson_weights(std::size_t H, double step);

/// Value of the functional at time t on a segment sampled at theta_j = -h + j*step,
/// j = 0..H (row-major, dim columns). L must be L(t, eps).
double eval_v(double t, std::span<const double> segment, int dim, double step, const Matrix& L,
              const SystemSpec& spec, const LyapunovSpec& lyap, const WSplit& ws);

/// Right side of the derivative bound:
///   -c0 |x(t)|^p - c1 |x(t-h)|^p - c2 int |x(t+theta)|^p dtheta,  p = gamma + mu - 1.
double derivative_bound_rhs(std::span<const double> segment, int dim, double step,
                            const Certificate& cert);

struct FunctionalTrace {
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> dvdt;            // finite difference
  std::vector<double> bound_rhs;       // derivative bound at t
  std::vector<double> comparison_rhs;  // -rho v^((gamma+mu-1)/gamma)
  std::vector<double> tol;             // finite-difference allowance
  std::vector<double> seg_norm;        // ||x_t||_h on the node grid
  std::vector<double> x_norm;          // ||x(t)||
  std::vector<char> in_S_alpha;
  std::vector<char> checked;  // seg_norm <= delta
  double fd_dt = 0.0;
  double max_L_norm = 0.0;
  double L_bound = 0.0;

  std::size_t size() const { return t.size(); }
};

/// Evaluates v on every stride-th node, advancing L from -h with the trajectory step.
FunctionalTrace trace_functional(const Trajectory& traj, const Certificate& cert,
                                 const SystemSpec& spec, const LyapunovSpec& lyap,
                                 std::size_t stride);

struct DerivativeReport {
  double worst_slack = 0.0;  // min over checked samples of rhs + tol - dvdt
  std::optional<std::size_t> first_violation;
  std::string first_violation_kind;
  std::size_t checked = 0;
  std::size_t violations = 0;
  bool L_bound_ok = true;
  std::vector<double> slack;  // per sample, NaN where unchecked

  bool ok() const { return violations == 0 && L_bound_ok; }
};

/// Pointwise checks, on samples with ||x_t||_h <= delta:
///   (i)  dv/dt <= bound_rhs + tol
///   (ii) dv/dt <= -rho v^((gamma+mu-1)/gamma) + tol   (where v > 0)
DerivativeReport check_derivative_bound(const FunctionalTrace& trace, const Certificate& cert);

}  // namespace lkcert
