#pragma once

// Independent oracles and small helpers shared by the test binaries.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lkcert/certificate.hpp"
#include "lkcert/functional.hpp"
#include "lkcert/model.hpp"

namespace testsupport {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lkcert_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& p,
                                                 std::vector<std::string>* header = nullptr) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::getline(in, line);
  if (header) {
    header->clear();
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header->push_back(cell);
  }
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

// x' = -x(t-1): method-of-steps solution for phi = 1 and phi = cos(theta).
inline double linear_delay_const(double t) {
  if (t <= 1.0) return 1.0 - t;
  return -2.0 * (t - 1.0) + 0.5 * (t * t - 1.0);
}

inline double linear_delay_cos(double t) {
  const double s1 = std::sin(1.0);
  if (t <= 1.0) return 1.0 - std::sin(t - 1.0) - s1;
  const double x1 = 1.0 - s1;
  return x1 - (1.0 - s1) * (t - 1.0) - std::cos(t - 2.0) + std::cos(1.0);
}

// L(t, eps) = int_0^{t+h} exp(-eps (t+h-s)) B(s) ds by composite Simpson.
inline lkcert::Matrix L_quadrature(const lkcert::MatrixEvaluator& b, int n, double t, double h,
                                   double eps, int intervals = 40000) {
  const double T = t + h;
  const double dx = T / intervals;
  lkcert::Matrix acc = lkcert::Matrix::Zero(n, n);
  for (int i = 0; i <= intervals; ++i) {
    const double s = dx * i;
    const double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += c * std::exp(-eps * (T - s)) * b(s);
  }
  return acc * (dx / 3.0);
}

inline lkcert::ExampleParams example_params(int mu, int sigma, double h, double zeta, bool perturbed = true) {
  lkcert::ExampleParams p;
  p.mu = mu;
  p.sigma = sigma;
  p.h = h;
  p.zeta = zeta;
  p.perturbed = perturbed;
  return p;
}

struct GridCase {
  lkcert::ExampleParams params;
  bool vanishing;
  double alpha;
};

// Configurations every certification test sweeps.
inline std::vector<GridCase> certify_grid() {
  return {
      {example_params(5, 5, 10.0, 1e-4), true, 1.1},  {example_params(5, 5, 10.0, 1e-4), true, 1.5},
      {example_params(5, 5, 10.0, 1e-4), false, 1.1}, {example_params(5, 7, 1.0, 1e-3), true, 2.0},
      {example_params(3, 3, 0.5, 0.05), true, 1.1},   {example_params(3, 3, 0.5, 0.05), false, 1.2},
      {example_params(3, 5, 2.0, 0.02), false, 1.05}, {example_params(3, 3, 0.5, 0.05, false), false, 1.1},
  };
}

inline lkcert::PerturbationClass grid_class(const GridCase& c) {
  if (c.vanishing) return lkcert::VanishingMean{lkcert::example_omega};
  return lkcert::BoundedIntegral{c.params.perturbed ? lkcert::example_l0() : 0.0};
}

struct SandwichResult {
  int trials = 0;
  int lower_violations = 0;
  int upper1_violations = 0;
  int upper2_violations = 0;
  int violations() const { return lower_violations + upper1_violations + upper2_violations; }
};

// Random segments in S_alpha with |phi|_h <= delta, with L diagonal inside the
// certified bound, checked against the lower and both upper estimates of v.
inline SandwichResult sandwich(const lkcert::SystemSpec& spec, const lkcert::LyapunovSpec& lyap,
                               const lkcert::Certificate& c, std::uint64_t seed, int trials = 100) {
  using lkcert::State;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t H = 40;
  const double step = spec.h / H;
  const auto w = lkcert::simpson_weights(H, step);
  const double g = c.gamma;
  SandwichResult res;
  for (int trial = 0; trial < trials; ++trial) {
    State x0(2);
    x0 << u(rng), u(rng);
    const double r0 = c.delta / c.alpha * (0.05 + 0.95 * std::abs(u(rng)));
    x0 *= r0 / x0.norm();
    std::vector<double> seg;
    double sup = r0, int_g = 0.0;
    for (std::size_t j = 0; j <= H; ++j) {
      State xj(2);
      if (j == H) {
        xj = x0;
      } else {
        xj << u(rng), u(rng);
        xj *= c.alpha * r0 * std::abs(u(rng)) / xj.norm();
      }
      sup = std::max(sup, xj.norm());
      int_g += w[j] * std::pow(xj.norm(), g);
      seg.insert(seg.end(), {xj(0), xj(1)});
    }
    lkcert::Matrix L = lkcert::Matrix::Zero(2, 2);
    L(0, 0) = c.omega_over_eps * u(rng);
    L(1, 1) = c.omega_over_eps * u(rng);
    const double t = 100.0 * std::abs(u(rng));
    const double v = lkcert::eval_v(t, seg, 2, step, L, spec, lyap, c.wsplit);
    const double n0 = std::pow(r0, g);
    const double lower = c.a1 * n0;
    const double upper1 = c.b0 * n0 + c.b1 * int_g;
    const double upper2 = c.alpha1 * n0 + c.b2 * std::pow(sup, g + c.mu - 1.0) +
                          c.b3 * std::pow(sup, g + c.sigma - 1.0);
    ++res.trials;
    if (v < lower * (1.0 - 1e-12)) ++res.lower_violations;
    if (v > upper1 * (1.0 + 1e-12)) ++res.upper1_violations;
    if (v > upper2 * (1.0 + 1e-12)) ++res.upper2_violations;
  }
  return res;
}

}  // namespace testsupport
