#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lkcert/types.hpp"

namespace lkcert {

using PairEvaluator = std::function<State(const State& x1, const State& x2)>;
using MatrixEvaluator = std::function<Matrix(double t)>;

/// Perturbed constant-delay system
///   x'(t) = f(x(t), x(t-h)) + B(t) Q(x(t), x(t-h))
/// together with the homogeneity degrees and norm-bound constants of f, Q
/// and B. All bounds use the Euclidean norm and the induced spectral norm.
struct SystemSpec {
  std::string name;
  int n = 0;
  double h = 0.0;
  double mu = 0.0;
  double sigma = 0.0;

  PairEvaluator f_eval;
  PairEvaluator q_eval;
  MatrixEvaluator b_eval;

  double b_hat = 0.0;
  // ||f(x1,x2)|| <= m1 |x1|^mu + m2 |x2|^mu
  double m1 = 0.0, m2 = 0.0;
  // ||df/dx1|| <= eta11 |x1|^(mu-1) + eta12 |x2|^(mu-1)
  double eta11 = 0.0, eta12 = 0.0;
  // ||Q(x1,x2)|| <= p1 |x1|^sigma + p2 |x2|^sigma
  double p1 = 0.0, p2 = 0.0;
  // ||dQ/dxj|| <= qj1 |x1|^(sigma-1) + qj2 |x2|^(sigma-1)
  double q11 = 0.0, q12 = 0.0, q21 = 0.0, q22 = 0.0;

  /// Right-hand side f(x, x_del) + B(t) Q(x, x_del).
  State rhs(double t, const State& x, const State& x_del) const;

  /// Structural checks (degrees, delay, sign of constants, evaluators set).
  /// Throws InvalidArgument naming the first offending field.
  void validate() const;
};

/// Delay-free Lyapunov function V of degree gamma with
///   grad V . f(x,x) <= -w |x|^(gamma+mu-1)
///   alpha0 |x|^gamma <= V(x) <= alpha1 |x|^gamma
///   |grad V| <= beta |x|^(gamma-1),  |Hess V| <= psi |x|^(gamma-2)
struct LyapunovSpec {
  std::function<double(const State&)> v_eval;
  std::function<State(const State&)> grad_eval;
  double gamma = 0.0;
  double w = 0.0;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta = 0.0;
  double psi = 0.0;

  void validate() const;
};

/// Perturbation with bounded integral: ||L(t,0)|| <= l0.
struct BoundedIntegral {
  double l0 = 0.0;
};

/// Zero-mean perturbation with unbounded integral:
/// eps ||L(t,eps)|| <= omega(eps), omega(eps) -> 0 as eps -> 0.
struct VanishingMean {
  std::function<double(double)> omega;
};

using PerturbationClass = std::variant<BoundedIntegral, VanishingMean>;

/// Rejects a class whose degree condition fails for the given system:
/// bounded integral needs sigma > (mu+1)/2, vanishing mean needs sigma >= mu.
/// Throws Infeasible.
void require_class_conditions(const SystemSpec& spec, const PerturbationClass& pclass);

/// Checks that omega is nonincreasing toward 0 on a decreasing eps grid.
bool omega_vanishes(const std::function<double(double)>& omega, double eps_max = 1e-2,
                    double eps_min = 1e-16, int points = 29);

// -- Built-in example family ------------------------------------------------
//
//   x1' = x2^mu,  x2' = -x1^mu - x2^mu(t-h)
//       + diag(cos t + sin(sqrt2 t), cos t + cos(sqrt2 t)) (x1^sigma(t-h), x2^sigma(t))
//   V(x) = (x1^(mu+1) + x2^(mu+1)) / (mu+1) + zeta x1^mu x2

struct ExampleParams {
  int mu = 5;
  int sigma = 5;
  double h = 10.0;
  double zeta = 1e-4;
  bool perturbed = true;
};

struct KappaW {
  double kappa;
  double w;
};

/// Admissible interval upper end for zeta: min{1/(mu+1), 4/(mu+1)^2}.
double zeta_upper_bound(double mu);

/// Decay constant of the example's Lyapunov function:
/// kappa = min{1 - zeta(mu+1), zeta, zeta/(1+zeta) (1 - zeta(1+mu)^2/4)},
/// w = kappa / 2^(mu-1).
KappaW kappa_and_w(double zeta, double mu);

/// Closed-form omega(eps) for the example's B(t).
double example_omega(double eps);

/// Sup of ||L(t,0)|| for the example's B(t): 1 + sqrt(2).
double example_l0();

/// Builds the example system and its Lyapunov function with every bound
/// constant filled in. Requires odd mu, sigma >= 3 and zeta admissible.
std::pair<SystemSpec, LyapunovSpec> build_example_system(const ExampleParams& params);

// -- Randomised validation of the bound constants ---------------------------

struct BoundCheck {
  std::string name;
  double worst_slack = 0.0;  // relative; negative means violated
  std::size_t samples = 0;
  bool holds = true;
};

struct BoundReport {
  std::uint64_t seed = 0;
  std::vector<BoundCheck> checks;

  bool all_hold() const;
  const BoundCheck* find(const std::string& name) const;
};

struct BoundCheckOptions {
  std::size_t n_samples = 1000;
  double radius = 1.0;
  std::uint64_t seed = 20240917;
  double rel_tol = 1e-9;
  double homogeneity_tol = 1e-10;
  double b_time_horizon = 200.0;
  std::size_t b_time_samples = 2001;
  // Finite-difference checks of the Jacobian bounds (eta, q) and of psi.
  bool check_jacobians = false;
};

/// Checks every bound inequality at the given state pairs.
BoundReport check_bound_constants_at(const SystemSpec& spec, const LyapunovSpec& lyap,
                                     std::span<const std::pair<State, State>> samples,
                                     const BoundCheckOptions& options = {});

/// Seeded random version: samples state pairs uniformly in the ball of the
/// given radius.
BoundReport check_bound_constants(const SystemSpec& spec, const LyapunovSpec& lyap,
                                  const BoundCheckOptions& options = {});

}  // namespace lkcert
