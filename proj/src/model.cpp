#include "lkcert/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace lkcert {

namespace {

// Sign-preserving integer power.
double ipow(double x, int k) {
  double r = 1.0;
  double b = x;
  unsigned e = static_cast<unsigned>(k);
  while (e != 0) {
    if (e & 1u) r *= b;
    b *= b;
    e >>= 1u;
  }
  return r;
}

double rel_slack(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  return (rhs - lhs) / scale;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

bool is_odd_positive(int k) { return k > 0 && (k % 2) == 1; }

}  // namespace

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.isDiagonal(0.0)) return m.diagonal().cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

State SystemSpec::rhs(double t, const State& x, const State& x_del) const {
  if (x.size() != n || x_del.size() != n) {
    std::ostringstream os;
    os << "rhs: state dimension mismatch (expected " << n << ", got " << x.size() << " and "
       << x_del.size() << ")";
    throw InvalidArgument(os.str());
  }
  State out = f_eval(x, x_del);
  if (b_eval && q_eval) {
    out.noalias() += b_eval(t) * q_eval(x, x_del);
  }
  return out;
}

void SystemSpec::validate() const {
  require(n > 0, "system.n must be a positive integer");
  require(h > 0.0 && std::isfinite(h), "system.h must be > 0");
  require(mu > 1.0, "system.mu must be > 1");
  require(sigma > 1.0, "system.sigma must be > 1");
  require(b_hat >= 0.0, "system.b_hat must be >= 0");
  const std::pair<const char*, double> constants[] = {
      {"m1", m1},   {"m2", m2},   {"eta11", eta11}, {"eta12", eta12}, {"p1", p1},
      {"p2", p2},   {"q11", q11}, {"q12", q12},     {"q21", q21},     {"q22", q22}};
  for (const auto& [key, value] : constants) {
    require(value >= 0.0 && std::isfinite(value), std::string("system.") + key + " must be >= 0");
  }
  require(static_cast<bool>(f_eval), "system: f evaluator missing");
  require(static_cast<bool>(q_eval), "system: Q evaluator missing");
  require(static_cast<bool>(b_eval), "system: B evaluator missing");
}

void LyapunovSpec::validate() const {
  require(static_cast<bool>(v_eval) && static_cast<bool>(grad_eval),
          "lyapunov: V or gradient evaluator missing");
  require(gamma >= 2.0, "lyapunov.gamma must be >= 2");
  require(w > 0.0, "lyapunov.w must be > 0");
  require(alpha0 > 0.0 && alpha0 <= alpha1, "lyapunov: need 0 < alpha0 <= alpha1");
  require(beta > 0.0, "lyapunov.beta must be > 0");
  require(psi > 0.0, "lyapunov.psi must be > 0");
}

void require_class_conditions(const SystemSpec& spec, const PerturbationClass& pclass) {
  if (const auto* a = std::get_if<BoundedIntegral>(&pclass)) {
    if (!(spec.sigma > (spec.mu + 1.0) / 2.0)) {
      std::ostringstream os;
      os << "bounded-integral perturbation requires sigma > (mu+1)/2 (sigma = " << spec.sigma
         << ", mu = " << spec.mu << ")";
      throw Infeasible(os.str());
    }
    if (!(a->l0 >= 0.0)) throw InvalidArgument("perturbation.l0 must be >= 0");
  } else {
    const auto& b = std::get<VanishingMean>(pclass);
    if (!(spec.sigma >= spec.mu)) {
      std::ostringstream os;
      os << "vanishing-mean perturbation requires sigma >= mu (sigma = " << spec.sigma
         << ", mu = " << spec.mu << ")";
      throw Infeasible(os.str());
    }
    if (!b.omega) throw InvalidArgument("perturbation: omega evaluator missing");
  }
}

bool omega_vanishes(const std::function<double(double)>& omega, double eps_max, double eps_min,
                    int points) {
  double prev = std::numeric_limits<double>::infinity();
  const double ratio = std::pow(eps_min / eps_max, 1.0 / (points - 1));
  double eps = eps_max;
  for (int i = 0; i < points; ++i, eps *= ratio) {
    const double value = omega(eps);
    if (!(value >= 0.0) || value > prev * (1.0 + 1e-12)) return false;
    prev = value;
  }
  return prev <= 1e-6 * omega(eps_max) || prev <= 1e-12;
}

double zeta_upper_bound(double mu) {
  return std::min(1.0 / (mu + 1.0), 4.0 / ((mu + 1.0) * (mu + 1.0)));
}

KappaW kappa_and_w(double zeta, double mu) {
  if (!(mu > 1.0)) throw InvalidArgument("kappa_and_w: mu must be > 1");
  if (!(zeta > 0.0 && zeta < zeta_upper_bound(mu))) {
    std::ostringstream os;
    os << "zeta = " << zeta << " outside the admissible interval (0, " << zeta_upper_bound(mu)
       << ")";
    throw InvalidArgument(os.str());
  }
  const double kappa =
      std::min({1.0 - zeta * (mu + 1.0), zeta,
                zeta / (1.0 + zeta) * (1.0 - zeta * (1.0 + mu) * (1.0 + mu) / 4.0)});
  return {kappa, kappa / std::pow(2.0, mu - 1.0)};
}

double example_omega(double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("example_omega: eps must be > 0");
  const double s2 = std::sqrt(2.0);
  const double e2 = eps * eps;
  return eps * ((2.0 * eps + 1.0) / (e2 + 1.0) +
                std::max(eps + 2.0 * s2, 2.0 * eps + s2) / (e2 + 2.0));
}

double example_l0() { return 1.0 + std::sqrt(2.0); }

std::pair<SystemSpec, LyapunovSpec> build_example_system(const ExampleParams& p) {
  if (!is_odd_positive(p.mu) || p.mu < 3) {
    throw InvalidArgument("example: mu must be an odd integer >= 3");
  }
  if (!is_odd_positive(p.sigma) || p.sigma < 3) {
    throw InvalidArgument("example: sigma must be an odd integer >= 3");
  }
  if (!(p.h > 0.0)) throw InvalidArgument("example: h must be > 0");
  const double mu = p.mu;
  const KappaW kw = kappa_and_w(p.zeta, mu);  // validates zeta

  SystemSpec spec;
  spec.name = "example";
  spec.n = 2;
  spec.h = p.h;
  spec.mu = mu;
  spec.sigma = p.sigma;

  const int m = p.mu;
  const int s = p.sigma;
  spec.f_eval = [m](const State& x1, const State& x2) {
    State out(2);
    out << ipow(x1(1), m), -ipow(x1(0), m) - ipow(x2(1), m);
    return out;
  };
  spec.m1 = spec.m2 = std::sqrt(2.0);
  spec.eta11 = mu;
  spec.eta12 = 0.0;

  if (p.perturbed) {
    spec.q_eval = [s](const State& x1, const State& x2) {
      State out(2);
      out << ipow(x2(0), s), ipow(x1(1), s);
      return out;
    };
    spec.b_eval = [](double t) {
      const double r2t = std::sqrt(2.0) * t;
      Matrix b = Matrix::Zero(2, 2);
      b(0, 0) = std::cos(t) + std::sin(r2t);
      b(1, 1) = std::cos(t) + std::cos(r2t);
      return b;
    };
    spec.b_hat = 2.0;
    spec.p1 = spec.p2 = 1.0;
    spec.q11 = spec.q22 = p.sigma;
    spec.q12 = spec.q21 = 0.0;
  } else {
    spec.q_eval = [](const State& x1, const State&) { return State::Zero(x1.size()); };
    spec.b_eval = [](double) { return Matrix::Zero(2, 2); };
  }

  LyapunovSpec lyap;
  const double zeta = p.zeta;
  lyap.v_eval = [m, zeta](const State& x) {
    return (ipow(x(0), m + 1) + ipow(x(1), m + 1)) / (m + 1) + zeta * ipow(x(0), m) * x(1);
  };
  lyap.grad_eval = [m, zeta](const State& x) {
    State g(2);
    g << ipow(x(0), m) + zeta * m * ipow(x(0), m - 1) * x(1), ipow(x(1), m) + zeta * ipow(x(0), m);
    return g;
  };
  lyap.gamma = mu + 1.0;
  lyap.w = kw.w;
  lyap.alpha0 = std::pow(0.5, (mu - 1.0) / 2.0) * (1.0 / (mu + 1.0) - zeta);
  lyap.alpha1 = 1.0 / (mu + 1.0) + zeta;
  lyap.beta = std::sqrt((1.0 + zeta * mu) * (1.0 + zeta * mu) + (1.0 + zeta) * (1.0 + zeta));
  lyap.psi = 2.0 * (mu + mu * mu * zeta);
  return {std::move(spec), std::move(lyap)};
}

// -- bound checks -------------------------------------------------------------

bool BoundReport::all_hold() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.holds; });
}

const BoundCheck* BoundReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

class CheckAccumulator {
 public:
  explicit CheckAccumulator(std::string name, double tol) : tol_(tol) { check_.name = std::move(name); }

  // Inequality lhs <= rhs.
  void le(double lhs, double rhs) { record(rel_slack(lhs, rhs)); }
  // Tolerance-type check: slack = tol - err.
  void within(double err, double tol) { record(tol - err, 0.0); }

  BoundCheck finish() {
    if (check_.samples == 0) check_.worst_slack = 0.0;
    return check_;
  }

 private:
  void record(double slack) { record(slack, -tol_); }
  void record(double slack, double threshold) {
    if (check_.samples == 0 || slack < check_.worst_slack) check_.worst_slack = slack;
    ++check_.samples;
    if (!(slack >= threshold)) check_.holds = false;
  }

  double tol_;
  BoundCheck check_;
};

double rel_diff(const State& a, const State& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

Matrix fd_jacobian(const std::function<State(const State&)>& g, const State& x, double step) {
  const State g0 = g(x);
  Matrix jac(g0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    State xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    jac.col(j) = (g(xp) - g(xm)) / (2.0 * step);
  }
  return jac;
}

}  // namespace

BoundReport check_bound_constants_at(const SystemSpec& spec, const LyapunovSpec& lyap,
                                     std::span<const std::pair<State, State>> samples,
                                     const BoundCheckOptions& options) {
  const double tol = options.rel_tol;
  const double mu = spec.mu, sigma = spec.sigma, gamma = lyap.gamma;
  CheckAccumulator f_bound("f_bound", tol), q_bound("q_bound", tol), v_lower("v_lower", tol),
      v_upper("v_upper", tol), grad_bound("grad_bound", tol), decay("decay", tol),
      f_hom("f_homogeneity", tol), v_hom("v_homogeneity", tol), b_bound("b_bound", tol);
  CheckAccumulator f_jac("f_jacobian", 1e-5), q_jac1("q_jacobian_1", 1e-5),
      q_jac2("q_jacobian_2", 1e-5), hess("hessian", 1e-5);

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> scale_dist(0.1, 10.0);

  for (const auto& [x1, x2] : samples) {
    const double n1 = x1.norm(), n2 = x2.norm();
    f_bound.le(spec.f_eval(x1, x2).norm(),
               spec.m1 * std::pow(n1, mu) + spec.m2 * std::pow(n2, mu));
    q_bound.le(spec.q_eval(x1, x2).norm(),
               spec.p1 * std::pow(n1, sigma) + spec.p2 * std::pow(n2, sigma));

    const double v = lyap.v_eval(x1);
    v_lower.le(lyap.alpha0 * std::pow(n1, gamma), v);
    v_upper.le(v, lyap.alpha1 * std::pow(n1, gamma));
    const State grad = lyap.grad_eval(x1);
    grad_bound.le(grad.norm(), lyap.beta * std::pow(n1, gamma - 1.0));
    decay.le(grad.dot(spec.f_eval(x1, x1)), -lyap.w * std::pow(n1, gamma + mu - 1.0));

    const double c = scale_dist(rng);
    f_hom.within(rel_diff(spec.f_eval(c * x1, c * x2), std::pow(c, mu) * spec.f_eval(x1, x2)),
                 options.homogeneity_tol);
    const double vc = lyap.v_eval(c * x1);
    const double vs = std::pow(c, gamma) * v;
    const double vscale = std::max(std::abs(vc), std::abs(vs));
    v_hom.within(vscale == 0.0 ? 0.0 : std::abs(vc - vs) / vscale, options.homogeneity_tol);

    if (options.check_jacobians) {
      const double step = 1e-6 * (n1 + n2) + 1e-300;
      const double jtol = 1e-6 * std::pow(n1 + n2, mu - 1.0);
      const auto fx1 = [&](const State& y) { return spec.f_eval(y, x2); };
      f_jac.le(spectral_norm(fd_jacobian(fx1, x1, step)) - jtol,
               spec.eta11 * std::pow(n1, mu - 1.0) + spec.eta12 * std::pow(n2, mu - 1.0));
      const double qtol = 1e-6 * std::pow(n1 + n2, sigma - 1.0);
      const auto qx1 = [&](const State& y) { return spec.q_eval(y, x2); };
      const auto qx2 = [&](const State& y) { return spec.q_eval(x1, y); };
      q_jac1.le(spectral_norm(fd_jacobian(qx1, x1, step)) - qtol,
                spec.q11 * std::pow(n1, sigma - 1.0) + spec.q12 * std::pow(n2, sigma - 1.0));
      q_jac2.le(spectral_norm(fd_jacobian(qx2, x2, step)) - qtol,
                spec.q21 * std::pow(n1, sigma - 1.0) + spec.q22 * std::pow(n2, sigma - 1.0));
      const double htol = 1e-6 * std::pow(n1, gamma - 2.0);
      hess.le(spectral_norm(fd_jacobian(lyap.grad_eval, x1, 1e-6 * n1 + 1e-300)) - htol,
              lyap.psi * std::pow(n1, gamma - 2.0));
    }
  }

  const std::size_t nt = std::max<std::size_t>(options.b_time_samples, 2);
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = options.b_time_horizon * static_cast<double>(i) / static_cast<double>(nt - 1);
    b_bound.le(spectral_norm(spec.b_eval(t)), spec.b_hat);
  }

  BoundReport report;
  report.seed = options.seed;
  for (auto* acc : {&f_bound, &q_bound, &b_bound, &v_lower, &v_upper, &grad_bound, &decay, &f_hom,
                    &v_hom}) {
    report.checks.push_back(acc->finish());
  }
  if (options.check_jacobians) {
    for (auto* acc : {&f_jac, &q_jac1, &q_jac2, &hess}) report.checks.push_back(acc->finish());
  }
  return report;
}

BoundReport check_bound_constants(const SystemSpec& spec, const LyapunovSpec& lyap,
                                  const BoundCheckOptions& options) {
  if (options.n_samples == 0) throw InvalidArgument("check_bound_constants: n_samples must be > 0");
  if (!(options.radius > 0.0)) throw InvalidArgument("check_bound_constants: radius must be > 0");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = spec.n;
  auto draw = [&] {
    State x(n);
    for (int i = 0; i < n; ++i) x(i) = normal(rng);
    const double norm = x.norm();
    if (norm == 0.0) return State(State::Zero(n));
    const double r = options.radius * std::pow(unit(rng), 1.0 / n);
    return State(x * (r / norm));
  };
  std::vector<std::pair<State, State>> samples;
  samples.reserve(options.n_samples);
  for (std::size_t i = 0; i < options.n_samples; ++i) {
    State a = draw();
    State b = draw();
    samples.emplace_back(std::move(a), std::move(b));
  }
  return check_bound_constants_at(spec, lyap, samples, options);
}

}  // namespace lkcert
