#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lkcert/functional.hpp"
#include "support.hpp"

using namespace lkcert;

namespace {

Certificate published_certificate(SystemSpec* spec, LyapunovSpec* lyap) {
  auto [s, l] = build_example_system(ExampleParams{});
  CertifyOptions o;
  o.eps = 1e-14;
  o.delta = 1e-3;
  o.rho_tilde = 3.3e-7;
  const Certificate c = certify(s, l, VanishingMean{example_omega}, 1.1, o);
  *spec = std::move(s);
  *lyap = std::move(l);
  return c;
}

// Unperturbed cubic system with the decay constant used by the shipped config.
Certificate cubic_certificate(SystemSpec* spec, LyapunovSpec* lyap) {
  ExampleParams p;
  p.mu = 3;
  p.sigma = 3;
  p.h = 0.5;
  p.zeta = 0.05;
  p.perturbed = false;
  auto [s, l] = build_example_system(p);
  l.w = 0.025;
  const Certificate c = certify(s, l, BoundedIntegral{0.0}, 1.1);
  *spec = std::move(s);
  *lyap = std::move(l);
  return c;
}

}  // namespace

TEST(LTracker, ZeroPerturbationStaysZero) {
  const MatrixEvaluator zero = [](double) { return Matrix::Zero(2, 2); };
  LState s = initial_L_state(2, 1.0, 0.3);
  for (int i = 0; i < 100; ++i) s = advance_L(s, 0.05, 1.0, zero);
  EXPECT_EQ(s.L.norm(), 0.0);
  EXPECT_NEAR(s.t, 4.0, 1e-12);
}

TEST(LTracker, ConstantMatrixWithoutDiscount) {
  Matrix b0(2, 2);
  b0 << 1.0, -2.0, 0.5, 3.0;
  const MatrixEvaluator b = [&](double) { return b0; };
  const double h = 2.0;
  LState s = initial_L_state(2, h, 0.0);
  for (int i = 0; i < 300; ++i) s = advance_L(s, 0.01, h, b);
  EXPECT_LT((s.L - (s.t + h) * b0).norm(), 1e-12);
}

TEST(LTracker, MatchesQuadratureOfExampleB) {
  const auto [spec, lyap] = build_example_system(ExampleParams{});
  const double h = spec.h, dt = 0.01;
  for (double eps : {0.0, 1e-3}) {
    LState s = initial_L_state(2, h, eps);
    int checked = 0;
    for (int k = 1; k <= 100; ++k) {
      const double target = -h + 1.5 * k;
      while (s.t < target - 0.5 * dt) s = advance_L(s, dt, h, spec.b_eval);
      const Matrix ref = testsupport::L_quadrature(spec.b_eval, 2, s.t, h, eps);
      EXPECT_LE((s.L - ref).norm(), 1e-8 * std::max(1.0, ref.norm())) << "eps " << eps << " t " << s.t;
      const double bound = eps > 0.0 ? example_omega(eps) / eps : example_l0();
      EXPECT_LE(spectral_norm(s.L), bound * (1.0 + 1e-9));
      ++checked;
    }
    EXPECT_EQ(checked, 100);
  }
}

TEST(Simpson, WeightsIntegrateCubicsExactly) {
  for (std::size_t H : {2u, 3u, 4u, 5u, 7u, 10u, 1000u}) {
    const double a = -1.7, step = 2.5 / static_cast<double>(H);
    const auto w = simpson_weights(H, step);
    double sum = 0.0;
    for (std::size_t j = 0; j <= H; ++j) {
      const double x = a + step * static_cast<double>(j);
      sum += w[j] * (2.0 * x * x * x - x * x + 3.0 * x - 1.0);
    }
    const auto F = [](double x) { return 0.5 * x * x * x * x - x * x * x / 3.0 + 1.5 * x * x - x; };
    EXPECT_NEAR(sum, F(a + 2.5) - F(a), 1e-12) << H;
  }
  const auto t = simpson_weights(1, 0.5);
  EXPECT_EQ(t[0], 0.25);
  EXPECT_EQ(t[1], 0.25);
  EXPECT_THROW(simpson_weights(0, 1.0), InvalidArgument);
}

TEST(EvalV, ZeroSegment) {
  SystemSpec spec;
  LyapunovSpec lyap;
  const Certificate c = published_certificate(&spec, &lyap);
  const std::vector<double> seg(2 * 101, 0.0);
  EXPECT_EQ(eval_v(3.0, seg, 2, 0.1, Matrix::Identity(2, 2), spec, lyap, c.wsplit), 0.0);
}

TEST(EvalV, ConstantSegmentClosedForm) {
  SystemSpec spec;
  LyapunovSpec lyap;
  const Certificate c = cubic_certificate(&spec, &lyap);
  State x(2);
  x << 0.03, -0.02;
  const std::size_t H = 50;
  const double step = spec.h / H;
  std::vector<double> seg;
  for (std::size_t j = 0; j <= H; ++j) seg.insert(seg.end(), {x(0), x(1)});
  const double v = eval_v(0.0, seg, 2, step, Matrix::Zero(2, 2), spec, lyap, c.wsplit);
  const double h = spec.h;
  const double expect = lyap.v_eval(x) + h * lyap.grad_eval(x).dot(spec.f_eval(x, x)) +
                        (c.wsplit.w1 * h + c.wsplit.w2 * h * h / 2.0) *
                            std::pow(x.norm(), lyap.gamma + spec.mu - 1.0);
  EXPECT_NEAR(v, expect, 1e-13 * std::abs(expect));
}

TEST(EvalV, RejectsMisalignedGrid) {
  SystemSpec spec;
  LyapunovSpec lyap;
  const Certificate c = published_certificate(&spec, &lyap);
  const std::vector<double> seg(2 * 101, 1e-4);
  EXPECT_THROW(eval_v(0.0, seg, 2, 0.3, Matrix::Zero(2, 2), spec, lyap, c.wsplit), InvalidArgument);
  EXPECT_THROW(eval_v(0.0, std::vector<double>(201, 0.0), 2, 0.1, Matrix::Zero(2, 2), spec, lyap, c.wsplit),
               InvalidArgument);
  EXPECT_THROW(derivative_bound_rhs(seg, 2, 0.3, c), InvalidArgument);
}

TEST(EvalV, SandwichPublishedExample) {
  SystemSpec spec;
  LyapunovSpec lyap;
  const Certificate c = published_certificate(&spec, &lyap);
  const auto r = testsupport::sandwich(spec, lyap, c, 11);
  EXPECT_EQ(r.trials, 100);
  EXPECT_EQ(r.lower_violations, 0);
  EXPECT_EQ(r.upper1_violations, 0);
  EXPECT_EQ(r.upper2_violations, 0);
}

TEST(EvalV, SandwichPerturbedCubic) {
  ExampleParams p;
  p.mu = 3;
  p.sigma = 3;
  p.h = 0.5;
  p.zeta = 0.05;
  const auto [spec, lyap] = build_example_system(p);
  const Certificate c = certify(spec, lyap, BoundedIntegral{example_l0()}, 1.1);
  const auto r = testsupport::sandwich(spec, lyap, c, 12);
  EXPECT_EQ(r.violations(), 0);
}

TEST(Trace, ZeroTrajectory) {
  SystemSpec spec;
  LyapunovSpec lyap;
  const Certificate c = published_certificate(&spec, &lyap);
  const auto traj = simulate(spec, InitialFunction::constant(State::Zero(2), spec.h), SimConfig{0.1, 50.0, 1});
  const FunctionalTrace tr = trace_functional(traj, c, spec, lyap, 10);
  ASSERT_EQ(tr.size(), 51u);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_EQ(tr.v[i], 0.0);
    EXPECT_EQ(tr.dvdt[i], 0.0);
  }
  const DerivativeReport rep = check_derivative_bound(tr, c);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.checked, 51u);
}

TEST(Trace, CubicDecayAndComparisonDominance) {
  SystemSpec spec;
  LyapunovSpec lyap;
  const Certificate c = cubic_certificate(&spec, &lyap);
  State x0(2);
  x0 << 5e-3, 5e-3;
  const double phi = x0.norm();
  ASSERT_LT(phi, c.Delta);
  const auto traj = simulate(spec, InitialFunction::constant(x0, spec.h), SimConfig{0.05, 2e4, 1});
  const FunctionalTrace tr = trace_functional(traj, c, spec, lyap, 20);
  const DerivativeReport rep = check_derivative_bound(tr, c);
  EXPECT_TRUE(rep.ok()) << rep.violations << " violations, first " << rep.first_violation_kind;
  EXPECT_EQ(rep.checked, tr.size());
  EXPECT_GT(rep.worst_slack, 0.0);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    EXPECT_LE(tr.v[i], comparison_solution(c, phi, tr.t[i])) << tr.t[i];
    EXPECT_LE(tr.x_norm[i], envelope(c, phi, tr.t[i])) << tr.t[i];
  }
}

TEST(Trace, CorruptedCertificateIsDetected) {
  SystemSpec spec;
  LyapunovSpec lyap;
  Certificate c = cubic_certificate(&spec, &lyap);
  c.c0 *= 2.0;
  State x0(2);
  x0 << 5e-3, 5e-3;
  const auto traj = simulate(spec, InitialFunction::constant(x0, spec.h), SimConfig{0.05, 5e4, 1});
  const DerivativeReport rep = check_derivative_bound(trace_functional(traj, c, spec, lyap, 20), c);
  EXPECT_FALSE(rep.ok());
  EXPECT_GT(rep.violations, 0u);
  ASSERT_TRUE(rep.first_violation.has_value());
  EXPECT_EQ(rep.first_violation_kind, "derivative bound");
}
