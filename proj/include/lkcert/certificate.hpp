#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lkcert/model.hpp"

namespace lkcert {

/// Aggregates of the bound constants used by every estimate below.
struct DerivedConstants {
  double m = 0.0, eta = 0.0, p = 0.0, q = 0.0;
  double kappa1 = 0.0, kappa2 = 0.0;
  double L1 = 0.0, L2 = 0.0, L3 = 0.0;
};

DerivedConstants derive_aggregate_constants(const SystemSpec& spec, const LyapunovSpec& lyap);

/// w = w0 + w1 + h*w2 with all three parts positive.
struct WSplit {
  double w0 = 0.0, w1 = 0.0, w2 = 0.0;
};

/// w1 = w1_fraction * w, w2 = w2_fraction * w / h.
struct WSplitPolicy {
  double w1_fraction = 0.25;
  double w2_fraction = 0.25;
};

WSplit split_w(double w, double h, const WSplitPolicy& policy = {});

/// omega(eps) and omega(eps)/eps. For a bounded-integral perturbation the
/// pair is (0, l0).
struct PerturbationTerms {
  double omega = 0.0;
  double omega_over_eps = 0.0;
};

struct DecayConstants {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};

/// Coefficients of the derivative bound
///   dv/dt <= -c0 |x(t)|^p - c1 |x(t-h)|^p - c2 int |x(t+theta)|^p,  p = gamma+mu-1,
/// valid for ||x_t||_h <= delta. Values may be non-positive; callers decide.
DecayConstants lemma1_constants(const SystemSpec& spec, const LyapunovSpec& lyap,
                                const DerivedConstants& dc, const WSplit& ws, double delta,
                                const PerturbationTerms& pt);

/// Bounded-integral form of the same constants (no omega term, l0 in place of
/// omega/eps).
DecayConstants lemma1_constants_bounded(const SystemSpec& spec, const LyapunovSpec& lyap,
                                        const DerivedConstants& dc, const WSplit& ws,
                                        double delta, double l0);

/// Lower-bound coefficient a1(alpha) on S_alpha.
double lemma2_a1(const SystemSpec& spec, const LyapunovSpec& lyap, double alpha, double delta,
                 double omega_over_eps);

struct UpperConstants {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
};

UpperConstants lemma3_b(const SystemSpec& spec, const LyapunovSpec& lyap, const DerivedConstants& dc,
                        const WSplit& ws, double delta, double omega_over_eps);

struct DeltaSearch {
  double safety = 0.5;
  double cap = 1.0;  // used when every correction term vanishes
};

struct DeltaResult {
  double delta = 0.0;
  double delta_max = 0.0;  // +inf when unbounded
  bool capped = false;
};

/// delta = safety * sup{delta : c0, c1, c2, a1(alpha) > 0}, by bisection.
/// Throws Infeasible when no delta > 0 works.
DeltaResult find_delta(const SystemSpec& spec, const LyapunovSpec& lyap, const DerivedConstants& dc,
                       const WSplit& ws, double alpha, const PerturbationTerms& pt,
                       const DeltaSearch& search = {});

/// Names the first of c0, c1, c2, a1 that is not positive at delta, or empty.
std::string first_nonpositive(const SystemSpec& spec, const LyapunovSpec& lyap,
                              const DerivedConstants& dc, const WSplit& ws, double alpha,
                              double delta, const PerturbationTerms& pt);

struct CapitalDelta {
  double value = 0.0;
  bool clamped = false;  // root exceeded delta and was clamped
};

/// Positive root of alpha1 D^g + b2 D^(g+mu-1) + b3 D^(g+sigma-1) = a1 delta^g.
CapitalDelta find_capital_delta(double alpha1, double a1, double b2, double b3, double delta,
                                double gamma, double mu, double sigma);

/// Relative residual of the attraction-radius equation at D.
double capital_delta_residual(double alpha1, double a1, double b2, double b3, double delta,
                              double gamma, double mu, double sigma, double D);

/// rho = min{c0,c2} / (max{b0,b1}^((g+mu-1)/g) (2 max{1,h})^((mu-1)/g)).
double compute_rho(double b0, double b1, double c0, double c2, double gamma, double mu, double h);

/// alpha1 + b2 D^(mu-1) + b3 D^(sigma-1).
double envelope_scale(double alpha1, double b2, double b3, double Delta, double mu, double sigma);

/// Largest rho_tilde with
///   1 + rho_tilde h ((mu-1)/g) K^((mu-1)/g) D^(mu-1) <= alpha^(mu-1).
double rho_tilde_limit(double alpha, double h, double gamma, double mu, double K, double Delta);

/// min(margin * rho, rho_tilde_limit(...)).
double choose_rho_tilde(double rho, double alpha, double h, double gamma, double mu, double sigma,
                        double alpha1, double b2, double b3, double Delta, double margin);

enum class CaseKind { BoundedIntegral, VanishingMean };

struct Certificate {
  CaseKind kind = CaseKind::VanishingMean;
  double alpha = 0.0;
  double eps = 0.0;
  double omega = 0.0;
  double omega_over_eps = 0.0;  // l0 for a bounded integral
  double w = 0.0;
  WSplit wsplit;
  double delta = 0.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double a1 = 0.0;
  double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
  double Delta = 0.0;
  double rho = 0.0;
  double rho_tilde = 0.0;
  double c_hat1 = 0.0, c_hat2 = 0.0;
  double alpha1 = 0.0;
  double gamma = 0.0, mu = 0.0, sigma = 0.0, h = 0.0;

  /// alpha1 + b2 Delta^(mu-1) + b3 Delta^(sigma-1).
  double scale() const { return envelope_scale(alpha1, b2, b3, Delta, mu, sigma); }

  /// Every invariant of a valid certificate; returns the violated ones.
  std::vector<std::string> invariant_violations() const;
};

struct CertifyOptions {
  double safety = 0.5;
  double margin = 0.99;
  double delta_cap = 1.0;
  WSplitPolicy wsplit;
  // Logarithmic eps grid for vanishing-mean perturbations.
  double eps_min = 1e-16;
  double eps_max = 1e-2;
  int eps_per_decade = 2;
  // Pinned values (skip the corresponding search).
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<double> rho_tilde;
};

std::vector<double> eps_grid(const CertifyOptions& options);

/// Builds a certificate for the system at the given alpha > 1.
/// Throws Infeasible (case conditions, no feasible delta/eps, pinned values
/// violating a constraint) or InvalidArgument (malformed inputs).
Certificate certify(const SystemSpec& spec, const LyapunovSpec& lyap, const PerturbationClass& pclass,
                    double alpha, const CertifyOptions& options = {});

/// c_hat1 |phi|_h [1 + c_hat2 |phi|_h^(mu-1) t]^(-1/(mu-1)); requires |phi|_h < Delta.
double envelope(const Certificate& cert, double phi_norm, double t);

/// u(t) = u0 [1 + rho_tilde ((mu-1)/g) u0^((mu-1)/g) t]^(-g/(mu-1)),
/// u0 = scale() * |phi|_h^g.
double comparison_solution(const Certificate& cert, double phi_norm, double t);

}  // namespace lkcert
