// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "lkcert/cli.hpp"
#include "lkcert/functional.hpp"
#include "support.hpp"

using namespace lkcert;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << "AC" << id << " " << (ok ? "PASS" : "FAIL") << "  " << title << "  [" << detail << "]\n";
  std::cout.flush();
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CertifyOptions published_options() {
  CertifyOptions o;
  o.eps = 1e-14;
  o.delta = 1e-3;
  o.rho_tilde = 3.3e-7;
  return o;
}

void ac1_table() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto [spec, lyap] = build_example_system(ExampleParams{});
  const DerivedConstants dc = derive_aggregate_constants(spec, lyap);
  const WSplit ws = split_w(lyap.w, spec.h);
  const PerturbationTerms pt{example_omega(1e-14), example_omega(1e-14) / 1e-14};
  const DecayConstants dec = lemma1_constants(spec, lyap, dc, ws, 1e-3, pt);
  const double a1 = lemma2_a1(spec, lyap, 1.1, 1e-3, pt.omega_over_eps);
  const bool feasible = dec.c0 > 0 && dec.c1 > 0 && dec.c2 > 0 && a1 > 0;
  bool ok = feasible;
  std::ostringstream d;
  d << "c0,c1,c2,a1 > 0: " << (feasible ? "yes" : "no");
  try {
    const Certificate c = certify(spec, lyap, VanishingMean{example_omega}, 1.1, published_options());
    const double limit = rho_tilde_limit(1.1, c.h, c.gamma, c.mu, c.scale(), c.Delta);
    const double secs = seconds_since(t0);
    const bool delta_ok = c.Delta >= 5e-4 && c.Delta <= 1e-3;
    const bool c2_ok = std::abs(c.c_hat2 - 6.7e-8) <= 0.15 * 6.7e-8;
    const bool rho_ok = 3.3e-7 < c.rho && 3.3e-7 <= limit;
    ok = ok && delta_ok && c2_ok && rho_ok && secs < 1.0;
    d << "; Delta " << c.Delta << "; c_hat2 " << c.c_hat2 << "; rho " << c.rho << ", limit " << limit
      << "; " << fmt("%.3f s", secs);
  } catch (const Error& e) {
    ok = false;
    d << "; certify failed: " << e.what();
  }
  report(1, "reference constants", ok, d.str());
}

void ac2_w() {
  const KappaW kw = kappa_and_w(1e-4, 5);
  report(2, "w reproduction", std::abs(kw.w - 6.2e-6) <= 0.02 * 6.2e-6, "w = " + fmt("%.6g", kw.w));
}

void ac3_identity() {
  int configs = 0, bad = 0;
  double worst_id = 0.0, worst_res = 0.0;
  for (const auto& cs : testsupport::certify_grid()) {
    const auto [spec, lyap] = build_example_system(cs.params);
    try {
      const Certificate c = certify(spec, lyap, testsupport::grid_class(cs), cs.alpha);
      const double id = std::abs(c.c_hat1 - c.delta / c.Delta) / c.c_hat1;
      const double res =
          capital_delta_residual(c.alpha1, c.a1, c.b2, c.b3, c.delta, c.gamma, c.mu, c.sigma, c.Delta);
      worst_id = std::max(worst_id, id);
      worst_res = std::max(worst_res, res);
      if (id > 1e-12 || res > 1e-10) ++bad;
    } catch (const Error&) {
      ++bad;
    }
    ++configs;
  }
  std::ostringstream d;
  d << configs << " configurations; worst |c_hat1 - delta/Delta| rel " << worst_id << "; worst residual "
    << worst_res;
  report(3, "internal identity", bad == 0, d.str());
}

void ac4_ac5_trajectory() {
  const auto [spec, lyap] = build_example_system(ExampleParams{});
  const Certificate c = certify(spec, lyap, VanishingMean{example_omega}, 1.1, published_options());
  const State x0 = State::Constant(2, 4.9e-4);
  const double phi = x0.norm();

  const auto t0 = std::chrono::steady_clock::now();
  const Trajectory traj = simulate(spec, InitialFunction::constant(x0, spec.h), SimConfig{1e-2, 1e4, 1});
  std::size_t above = 0;
  double max_seg = 0.0, min_margin = INFINITY;
  for (std::size_t k = 0; k < traj.node_count(); ++k) {
    const double t = traj.node_time(k);
    const double xn = traj.node(k).norm();
    const double env = envelope(c, phi, t);
    if (xn > env) ++above;
    min_margin = std::min(min_margin, env - xn);
    max_seg = std::max(max_seg, xn);
  }
  const double secs = seconds_since(t0);
  std::ostringstream d4;
  d4 << traj.node_count() << " nodes; " << above << " above envelope; min margin " << min_margin
     << "; max |x| " << max_seg << " vs delta " << c.delta << "; " << fmt("%.2f s", secs);
  report(4, "envelope dominance", above == 0 && max_seg <= c.delta && secs < 60.0, d4.str());

  const FunctionalTrace tr = trace_functional(traj, c, spec, lyap, 100);
  const DerivativeReport rep = check_derivative_bound(tr, c);
  std::ostringstream d5;
  d5 << rep.checked << "/" << tr.size() << " samples checked; " << rep.violations << " violations; |L| max "
     << tr.max_L_norm << " <= " << tr.L_bound;
  report(5, "functional inequalities", rep.ok() && rep.checked == tr.size(), d5.str());
}

void ac6_sandwich() {
  const auto [spec, lyap] = build_example_system(ExampleParams{});
  const Certificate c = certify(spec, lyap, VanishingMean{example_omega}, 1.1, published_options());
  const auto r = testsupport::sandwich(spec, lyap, c, 20240917, 100);
  std::ostringstream d;
  d << r.trials << " segments; lower " << r.lower_violations << ", upper " << r.upper1_violations << " + "
    << r.upper2_violations << " violations";
  report(6, "sandwich bounds", r.trials == 100 && r.violations() == 0, d.str());
}

void ac7_oracles() {
  const auto [spec, lyap] = build_example_system(ExampleParams{});
  double worst_L = 0.0;
  LState s = initial_L_state(2, spec.h, 0.0);
  for (int k = 1; k <= 100; ++k) {
    while (s.t < -spec.h + 1.5 * k - 0.005) s = advance_L(s, 0.01, spec.h, spec.b_eval);
    const Matrix ref = testsupport::L_quadrature(spec.b_eval, 2, s.t, spec.h, 0.0);
    worst_L = std::max(worst_L, (s.L - ref).norm() / std::max(1.0, ref.norm()));
  }

  DelayRhs lin;
  lin.n = 1;
  lin.h = 1.0;
  lin.eval = [](double, const State&, const State& xd) -> State { return -xd; };
  const Trajectory traj = simulate(lin, InitialFunction::constant(State::Constant(1, 1.0), 1.0), {1e-3, 2.0, 1});
  double worst_x = 0.0;
  for (double t : {0.5, 1.0, 2.0}) {
    worst_x = std::max(worst_x, std::abs(traj.sample(t)(0) - testsupport::linear_delay_const(t)));
  }

  const InitialFunction cphi([](double th) { return State::Constant(1, std::cos(th)); }, 1, 1.0);
  auto err = [&](double step) {
    const Trajectory tj = simulate(lin, cphi, {step, 2.0, 1});
    double e = 0.0;
    for (std::size_t k = 0; k < tj.node_count(); ++k) {
      e = std::max(e, std::abs(tj.node(k)(0) - testsupport::linear_delay_cos(tj.node_time(k))));
    }
    return e;
  };
  double min_ratio = INFINITY, prev = err(0.1);
  for (double step : {0.05, 0.025, 0.0125}) {
    const double e = err(step);
    min_ratio = std::min(min_ratio, prev / e);
    prev = e;
  }
  std::ostringstream d;
  d << "L rel error " << worst_L << "; linear oracle error " << worst_x << "; min halving ratio " << min_ratio;
  report(7, "oracle suites", worst_L <= 1e-8 && worst_x <= 1e-9 && min_ratio >= 8.0, d.str());
}

void ac8_unification() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int compared = 0, mismatched = 0;
  for (const auto& cs : testsupport::certify_grid()) {
    const auto [spec, lyap] = build_example_system(cs.params);
    const DerivedConstants dc = derive_aggregate_constants(spec, lyap);
    const WSplit ws = split_w(lyap.w, spec.h);
    for (int i = 0; i < 25; ++i) {
      const double delta = std::pow(10.0, -6.0 + 5.0 * u(rng));
      const double l0 = 5.0 * u(rng);
      const DecayConstants a = lemma1_constants_bounded(spec, lyap, dc, ws, delta, l0);
      const DecayConstants b = lemma1_constants(spec, lyap, dc, ws, delta, {0.0, l0});
      const double a1a = lemma2_a1(spec, lyap, cs.alpha, delta, l0);
      const UpperConstants ua = lemma3_b(spec, lyap, dc, ws, delta, l0);
      if (a.c0 != b.c0 || a.c1 != b.c1 || a.c2 != b.c2) ++mismatched;
      if (a1a != lemma2_a1(spec, lyap, cs.alpha, delta, PerturbationTerms{0.0, l0}.omega_over_eps)) ++mismatched;
      if (ua.b0 != lemma3_b(spec, lyap, dc, ws, delta, l0).b0) ++mismatched;
      ++compared;
    }
  }
  std::ostringstream d;
  d << compared << " inputs; " << mismatched << " mismatches";
  report(8, "bounded/vanishing unification", mismatched == 0, d.str());
}

void ac9_falsification() {
  namespace fs = std::filesystem;
  const fs::path dir = testsupport::scratch_dir("acceptance_ac9");
  cli::CommandOptions o;
  o.config = std::string(LKCERT_SOURCE_DIR) + "/configs/mu3_fast_decay.ini";
  o.out = dir.string();
  std::ostringstream log, err;
  const int certified = cli::cmd_certify(o, log, err);
  if (certified != cli::kOk) {
    report(9, "falsification", false, "certify exited " + std::to_string(certified) + ": " + err.str());
    return;
  }
  const int valid = cli::cmd_trace(o, log, err);

  Certificate c = cli::load_certificate((dir / "certificate.txt").string());
  c.c0 *= 2.0;
  cli::save_certificate((dir / "corrupted.txt").string(), c);
  o.cert = (dir / "corrupted.txt").string();
  std::ostringstream err2;
  const int corrupted = cli::cmd_trace(o, log, err2);
  std::string first = err2.str();
  if (!first.empty() && first.back() == '\n') first.pop_back();
  std::ostringstream d;
  d << "valid certificate exits " << valid << "; c0 x2 exits " << corrupted << " (" << first << ")";
  report(9, "falsification", valid == cli::kOk && corrupted == cli::kViolation, d.str());
}

}  // namespace

int main() {
  const auto guard = [](int id, void (*fn)()) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, "unexpected exception", false, e.what());
    }
  };
  guard(1, ac1_table);
  guard(2, ac2_w);
  guard(3, ac3_identity);
  guard(4, ac4_ac5_trajectory);
  guard(6, ac6_sandwich);
  guard(7, ac7_oracles);
  guard(8, ac8_unification);
  guard(9, ac9_falsification);
  std::cout << (failures == 0 ? "all acceptance criteria pass" : std::to_string(failures) + " criteria fail")
            << "\n";
  return failures == 0 ? 0 : 1;
}
