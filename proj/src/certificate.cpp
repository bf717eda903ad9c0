#include "lkcert/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lkcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// coef * delta^e, with a zero coefficient contributing exactly zero.
double term(double coef, double delta, double e) {
  if (coef == 0.0) return 0.0;
  return coef * std::pow(delta, e);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

DerivedConstants derive_aggregate_constants(const SystemSpec& s, const LyapunovSpec& l) {
  DerivedConstants d;
  d.m = s.m1 + s.m2;
  d.eta = s.eta11 + s.eta12;
  d.p = s.p1 + s.p2;
  d.q = s.q11 + s.q12;
  d.kappa1 = l.psi * s.m2 + l.beta * s.eta12;
  d.kappa2 = l.psi * s.p2 + l.beta * s.q12;
  d.L1 = l.psi * d.m + l.beta * d.eta;
  d.L2 = l.psi * d.p + l.beta * d.q;
  d.L3 = d.L2 + l.beta * (s.q21 + s.q22);
  return d;
}

WSplit split_w(double w, double h, const WSplitPolicy& policy) {
  if (!(w > 0.0)) throw InvalidArgument("split_w: w must be > 0");
  if (!(h > 0.0)) throw InvalidArgument("split_w: h must be > 0");
  if (!(policy.w1_fraction > 0.0) || !(policy.w2_fraction > 0.0)) {
    throw InvalidArgument("split_w: w1 and w2 fractions must be > 0");
  }
  WSplit ws;
  ws.w1 = policy.w1_fraction * w;
  ws.w2 = policy.w2_fraction * w / h;
  ws.w0 = w - ws.w1 - h * ws.w2;
  if (!(ws.w0 > 0.0)) {
    throw InvalidArgument("split_w: fractions leave w0 = " + fmt(ws.w0) + " (must be > 0)");
  }
  return ws;
}

DecayConstants lemma1_constants(const SystemSpec& s, const LyapunovSpec& l,
                                const DerivedConstants& dc, const WSplit& ws, double delta,
                                const PerturbationTerms& pt) {
  const double mu = s.mu, sigma = s.sigma, h = s.h, b = s.b_hat, oe = pt.omega_over_eps;
  const double e_mu = mu - 1.0, e_sig = sigma - 1.0, e_mix = 2.0 * sigma - mu - 1.0;
  DecayConstants c;
  c.c0 = ws.w0 - term(l.beta * dc.p * pt.omega, delta, sigma - mu) -
         term(dc.m * h * dc.L1, delta, e_mu) -
         term(b * h * (dc.p * dc.L1 + dc.m * dc.L2) + dc.m * dc.L3 * oe, delta, e_sig) -
         term(dc.p * b * (b * h * dc.L2 + dc.L3 * oe), delta, e_mix);
  c.c1 = ws.w1 - term(s.m2 * h * dc.L1, delta, e_mu) -
         term(b * h * (s.p2 * dc.L1 + s.m2 * dc.L2) + s.m2 * dc.L3 * oe, delta, e_sig) -
         term(s.p2 * b * (b * h * dc.L2 + dc.L3 * oe), delta, e_mix);
  c.c2 = ws.w2 - term(dc.m * dc.kappa1, delta, e_mu) -
         term(b * (dc.p * dc.kappa1 + dc.m * dc.kappa2), delta, e_sig) -
         term(dc.p * b * b * dc.kappa2, delta, e_mix);
  return c;
}

DecayConstants lemma1_constants_bounded(const SystemSpec& s, const LyapunovSpec&,
                                        const DerivedConstants& dc, const WSplit& ws,
                                        double delta, double l0) {
  const double mu = s.mu, sigma = s.sigma, h = s.h, b = s.b_hat;
  const double e_mu = mu - 1.0, e_sig = sigma - 1.0, e_mix = 2.0 * sigma - mu - 1.0;
  DecayConstants c;
  c.c0 = ws.w0 - term(dc.m * h * dc.L1, delta, e_mu) -
         term(b * h * (dc.p * dc.L1 + dc.m * dc.L2) + dc.m * dc.L3 * l0, delta, e_sig) -
         term(dc.p * b * (b * h * dc.L2 + dc.L3 * l0), delta, e_mix);
  c.c1 = ws.w1 - term(s.m2 * h * dc.L1, delta, e_mu) -
         term(b * h * (s.p2 * dc.L1 + s.m2 * dc.L2) + s.m2 * dc.L3 * l0, delta, e_sig) -
         term(s.p2 * b * (b * h * dc.L2 + dc.L3 * l0), delta, e_mix);
  c.c2 = ws.w2 - term(dc.m * dc.kappa1, delta, e_mu) -
         term(b * (dc.p * dc.kappa1 + dc.m * dc.kappa2), delta, e_sig) -
         term(dc.p * b * b * dc.kappa2, delta, e_mix);
  return c;
}

double lemma2_a1(const SystemSpec& s, const LyapunovSpec& l, double alpha, double delta,
                 double omega_over_eps) {
  const double p = s.p1 + s.p2;
  return l.alpha0 -
         term(l.beta * s.h * (s.m1 + s.m2 * std::pow(alpha, s.mu)), delta, s.mu - 1.0) -
         term(l.beta * s.b_hat * s.h * (s.p1 + s.p2 * std::pow(alpha, s.sigma)) +
                  l.beta * p * omega_over_eps,
              delta, s.sigma - 1.0);
}

UpperConstants lemma3_b(const SystemSpec& s, const LyapunovSpec& l, const DerivedConstants& dc,
                        const WSplit& ws, double delta, double omega_over_eps) {
  const double h = s.h;
  UpperConstants u;
  u.b0 = l.alpha1 + term(l.beta * dc.m * h, delta, s.mu - 1.0) +
         term(l.beta * dc.p * (s.b_hat * h + omega_over_eps), delta, s.sigma - 1.0);
  u.b1 = term(l.beta * s.m2 + ws.w1 + h * ws.w2, delta, s.mu - 1.0) +
         term(l.beta * s.p2 * s.b_hat, delta, s.sigma - 1.0);
  u.b2 = (l.beta * dc.m + ws.w1 + h * ws.w2) * h;
  u.b3 = l.beta * dc.p * (s.b_hat * h + omega_over_eps);
  return u;
}

std::string first_nonpositive(const SystemSpec& spec, const LyapunovSpec& lyap,
                              const DerivedConstants& dc, const WSplit& ws, double alpha,
                              double delta, const PerturbationTerms& pt) {
  const DecayConstants c = lemma1_constants(spec, lyap, dc, ws, delta, pt);
  if (!(c.c0 > 0.0)) return "c0";
  if (!(c.c1 > 0.0)) return "c1";
  if (!(c.c2 > 0.0)) return "c2";
  if (!(lemma2_a1(spec, lyap, alpha, delta, pt.omega_over_eps) > 0.0)) return "a1";
  return {};
}

DeltaResult find_delta(const SystemSpec& spec, const LyapunovSpec& lyap, const DerivedConstants& dc,
                       const WSplit& ws, double alpha, const PerturbationTerms& pt,
                       const DeltaSearch& search) {
  if (!(search.safety > 0.0 && search.safety < 1.0)) {
    throw InvalidArgument("find_delta: safety must lie in (0, 1)");
  }
  auto feasible = [&](double d) {
    return first_nonpositive(spec, lyap, dc, ws, alpha, d, pt).empty();
  };

  constexpr double kTiny = 1e-300;
  if (!feasible(kTiny)) {
    throw Infeasible("no feasible neighbourhood: " +
                     first_nonpositive(spec, lyap, dc, ws, alpha, kTiny, pt) +
                     " is not positive even as delta -> 0");
  }

  double lo = kTiny;
  double hi = 1.0;
  if (feasible(hi)) {
    lo = hi;
    while (true) {
      hi = lo * 2.0;
      if (hi > 1e300) {
        DeltaResult r;
        r.delta_max = kInf;
        r.delta = search.cap;
        r.capped = true;
        return r;
      }
      if (!feasible(hi)) break;
      lo = hi;
    }
  }
  // Geometric bisection until the bracket collapses to adjacent doubles.
  for (int it = 0; it < 400; ++it) {
    const double mid = (hi / lo > 2.0) ? std::sqrt(lo) * std::sqrt(hi) : lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (feasible(mid) ? lo : hi) = mid;
  }
  DeltaResult r;
  r.delta_max = lo;
  r.delta = search.safety * lo;
  return r;
}

double capital_delta_residual(double alpha1, double a1, double b2, double b3, double delta,
                              double gamma, double mu, double sigma, double D) {
  const double lhs = alpha1 * std::pow(D, gamma) + b2 * std::pow(D, gamma + mu - 1.0) +
                     b3 * std::pow(D, gamma + sigma - 1.0);
  const double rhs = a1 * std::pow(delta, gamma);
  return std::abs(lhs - rhs) / rhs;
}

CapitalDelta find_capital_delta(double alpha1, double a1, double b2, double b3, double delta,
                                double gamma, double mu, double sigma) {
  if (!(a1 > 0.0) || !(delta > 0.0)) {
    throw InvalidArgument("find_capital_delta: need a1 > 0 and delta > 0");
  }
  // Work with r = D / delta: alpha1 r^g + b2 delta^(mu-1) r^(g+mu-1)
  //                          + b3 delta^(sigma-1) r^(g+sigma-1) - a1.
  const double k2 = b2 * std::pow(delta, mu - 1.0);
  const double k3 = b3 * std::pow(delta, sigma - 1.0);
  auto g = [&](double r) {
    return alpha1 * std::pow(r, gamma) + k2 * std::pow(r, gamma + mu - 1.0) +
           k3 * std::pow(r, gamma + sigma - 1.0) - a1;
  };
  CapitalDelta out;
  if (g(1.0) < 0.0) {
    out.value = delta;
    out.clamped = true;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  // Pick the bracket end with the smaller residual.
  const double r = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
  out.value = r * delta;
  return out;
}

double compute_rho(double b0, double b1, double c0, double c2, double gamma, double mu, double h) {
  const double b = std::max(b0, b1);
  const double c = std::min(c0, c2);
  return c / (std::pow(b, (gamma + mu - 1.0) / gamma) *
              std::pow(2.0 * std::max(1.0, h), (mu - 1.0) / gamma));
}

double envelope_scale(double alpha1, double b2, double b3, double Delta, double mu, double sigma) {
  return alpha1 + b2 * std::pow(Delta, mu - 1.0) + b3 * std::pow(Delta, sigma - 1.0);
}

double rho_tilde_limit(double alpha, double h, double gamma, double mu, double K, double Delta) {
  if (!(alpha > 1.0)) throw InvalidArgument("rho_tilde_limit: alpha must be > 1");
  const double denom =
      h * ((mu - 1.0) / gamma) * std::pow(K, (mu - 1.0) / gamma) * std::pow(Delta, mu - 1.0);
  const double room = std::pow(alpha, mu - 1.0) - 1.0;
  if (denom == 0.0) return kInf;
  return room / denom;
}

double choose_rho_tilde(double rho, double alpha, double h, double gamma, double mu, double sigma,
                        double alpha1, double b2, double b3, double Delta, double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw InvalidArgument("choose_rho_tilde: margin must lie in (0, 1)");
  const double K = envelope_scale(alpha1, b2, b3, Delta, mu, sigma);
  return std::min(margin * rho, rho_tilde_limit(alpha, h, gamma, mu, K, Delta));
}

std::vector<std::string> Certificate::invariant_violations() const {
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) out.push_back(what);
  };
  need(alpha > 1.0, "alpha > 1");
  need(delta > 0.0, "delta > 0");
  need(wsplit.w0 > 0.0 && wsplit.w1 > 0.0 && wsplit.w2 > 0.0, "w0, w1, w2 > 0");
  need(c0 > 0.0 && c1 > 0.0 && c2 > 0.0, "c0, c1, c2 > 0");
  need(a1 > 0.0, "a1 > 0");
  need(b0 > 0.0 && b1 > 0.0 && b2 > 0.0 && b3 >= 0.0, "b0, b1, b2 > 0 and b3 >= 0");
  need(Delta > 0.0 && Delta <= delta, "0 < Delta <= delta");
  need(rho > 0.0 && rho_tilde > 0.0 && rho_tilde < rho, "0 < rho_tilde < rho");
  need(c_hat1 > 0.0 && c_hat2 > 0.0, "c_hat1, c_hat2 > 0");
  if (Delta > 0.0 && a1 > 0.0 && delta > 0.0) {
    need(capital_delta_residual(alpha1, a1, b2, b3, delta, gamma, mu, sigma, Delta) <= 1e-10,
         "attraction-radius residual <= 1e-10");
    need(std::abs(c_hat1 - delta / Delta) <= 1e-12 * c_hat1, "c_hat1 = delta / Delta");
    if (alpha > 1.0) {
      const double lhs = 1.0 + rho_tilde * h * ((mu - 1.0) / gamma) *
                                   std::pow(scale(), (mu - 1.0) / gamma) *
                                   std::pow(Delta, mu - 1.0);
      need(lhs <= std::pow(alpha, mu - 1.0), "rho_tilde admissibility");
    }
  }
  return out;
}

std::vector<double> eps_grid(const CertifyOptions& o) {
  if (!(o.eps_min > 0.0) || !(o.eps_max >= o.eps_min) || o.eps_per_decade < 1) {
    throw InvalidArgument("eps grid: need 0 < eps_min <= eps_max and eps_per_decade >= 1");
  }
  const double decades = std::log10(o.eps_max / o.eps_min);
  const int intervals = std::max(0, static_cast<int>(std::ceil(decades * o.eps_per_decade - 1e-9)));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) {
    const double frac = intervals == 0 ? 0.0 : static_cast<double>(i) / intervals;
    grid.push_back(o.eps_min * std::pow(10.0, decades * frac));
  }
  return grid;
}

namespace {

struct Candidate {
  CaseKind kind;
  double eps;
  PerturbationTerms terms;
};

Certificate build(const SystemSpec& spec, const LyapunovSpec& lyap, const DerivedConstants& dc,
                  const WSplit& ws, double alpha, const Candidate& cand, const CertifyOptions& o) {
  Certificate c;
  c.kind = cand.kind;
  c.alpha = alpha;
  c.eps = cand.eps;
  c.omega = cand.terms.omega;
  c.omega_over_eps = cand.terms.omega_over_eps;
  c.w = lyap.w;
  c.wsplit = ws;
  c.alpha1 = lyap.alpha1;
  c.gamma = lyap.gamma;
  c.mu = spec.mu;
  c.sigma = spec.sigma;
  c.h = spec.h;

  if (o.delta) {
    c.delta = *o.delta;
    if (!(c.delta > 0.0)) throw InvalidArgument("certify: pinned delta must be > 0");
    const std::string bad = first_nonpositive(spec, lyap, dc, ws, alpha, c.delta, cand.terms);
    if (!bad.empty()) {
      throw Infeasible("pinned delta = " + fmt(c.delta) + ": " + bad + " is not positive");
    }
  } else {
    c.delta = find_delta(spec, lyap, dc, ws, alpha, cand.terms, {o.safety, o.delta_cap}).delta;
  }

  const DecayConstants dec =
      cand.kind == CaseKind::BoundedIntegral
          ? lemma1_constants_bounded(spec, lyap, dc, ws, c.delta, cand.terms.omega_over_eps)
          : lemma1_constants(spec, lyap, dc, ws, c.delta, cand.terms);
  c.c0 = dec.c0;
  c.c1 = dec.c1;
  c.c2 = dec.c2;
  c.a1 = lemma2_a1(spec, lyap, alpha, c.delta, cand.terms.omega_over_eps);
  const UpperConstants up = lemma3_b(spec, lyap, dc, ws, c.delta, cand.terms.omega_over_eps);
  c.b0 = up.b0;
  c.b1 = up.b1;
  c.b2 = up.b2;
  c.b3 = up.b3;

  c.Delta = find_capital_delta(c.alpha1, c.a1, c.b2, c.b3, c.delta, c.gamma, c.mu, c.sigma).value;
  c.rho = compute_rho(c.b0, c.b1, c.c0, c.c2, c.gamma, c.mu, c.h);
  const double K = c.scale();
  const double limit = rho_tilde_limit(alpha, c.h, c.gamma, c.mu, K, c.Delta);
  if (o.rho_tilde) {
    c.rho_tilde = *o.rho_tilde;
    if (!(c.rho_tilde > 0.0)) throw InvalidArgument("certify: pinned rho_tilde must be > 0");
    if (!(c.rho_tilde < c.rho)) {
      throw Infeasible("pinned rho_tilde = " + fmt(c.rho_tilde) + " is not below rho = " + fmt(c.rho));
    }
    if (!(c.rho_tilde <= limit)) {
      throw Infeasible("pinned rho_tilde = " + fmt(c.rho_tilde) +
                       " violates the S_alpha admissibility limit " + fmt(limit));
    }
  } else {
    c.rho_tilde = std::min(o.margin * c.rho, limit);
  }
  c.c_hat1 = std::pow(K / c.a1, 1.0 / c.gamma);
  c.c_hat2 = c.rho_tilde * ((c.mu - 1.0) / c.gamma) * std::pow(K, (c.mu - 1.0) / c.gamma);
  return c;
}

}  // namespace

Certificate certify(const SystemSpec& spec, const LyapunovSpec& lyap, const PerturbationClass& pclass,
                    double alpha, const CertifyOptions& options) {
  spec.validate();
  lyap.validate();
  if (!(alpha > 1.0)) throw InvalidArgument("certify: alpha must be > 1");
  if (!(options.safety > 0.0 && options.safety < 1.0)) throw InvalidArgument("certify: safety must lie in (0, 1)");
  if (!(options.margin > 0.0 && options.margin < 1.0)) throw InvalidArgument("certify: margin must lie in (0, 1)");
  require_class_conditions(spec, pclass);

  const DerivedConstants dc = derive_aggregate_constants(spec, lyap);
  const WSplit ws = split_w(lyap.w, spec.h, options.wsplit);

  std::vector<Candidate> candidates;
  if (const auto* a = std::get_if<BoundedIntegral>(&pclass)) {
    candidates.push_back({CaseKind::BoundedIntegral, 0.0, {0.0, a->l0}});
  } else {
    const auto& omega = std::get<VanishingMean>(pclass).omega;
    const std::vector<double> grid = options.eps ? std::vector<double>{*options.eps} : eps_grid(options);
    for (const double eps : grid) {
      if (!(eps > 0.0)) throw InvalidArgument("certify: eps must be > 0 for a vanishing-mean perturbation");
      const double om = omega(eps);
      candidates.push_back({CaseKind::VanishingMean, eps, {om, om / eps}});
    }
  }

  std::optional<Certificate> best;
  std::string first_failure;
  for (const Candidate& cand : candidates) {
    try {
      Certificate c = build(spec, lyap, dc, ws, alpha, cand, options);
      if (!best || c.Delta > best->Delta) best = std::move(c);
    } catch (const Infeasible& e) {
      if (first_failure.empty()) {
        first_failure = e.what();
        if (cand.kind == CaseKind::VanishingMean) first_failure += " (eps = " + fmt(cand.eps) + ")";
      }
    }
  }
  if (!best) {
    throw Infeasible(candidates.size() > 1 ? "infeasible at every eps in the grid: " + first_failure
                                           : first_failure);
  }
  return *best;
}

double envelope(const Certificate& cert, double phi_norm, double t) {
  if (!(phi_norm >= 0.0)) throw InvalidArgument("envelope: |phi|_h must be >= 0");
  if (!(phi_norm < cert.Delta)) {
    throw Infeasible("envelope: |phi|_h = " + fmt(phi_norm) + " is not below Delta = " + fmt(cert.Delta));
  }
  if (!(t >= 0.0)) throw InvalidArgument("envelope: t must be >= 0");
  const double e = cert.mu - 1.0;
  return cert.c_hat1 * phi_norm * std::pow(1.0 + cert.c_hat2 * std::pow(phi_norm, e) * t, -1.0 / e);
}

double comparison_solution(const Certificate& cert, double phi_norm, double t) {
  const double g = cert.gamma;
  const double e = (cert.mu - 1.0) / g;
  const double u0 = cert.scale() * std::pow(phi_norm, g);
  return u0 * std::pow(1.0 + cert.rho_tilde * e * std::pow(u0, e) * t, -1.0 / e);
}

}  // namespace lkcert
