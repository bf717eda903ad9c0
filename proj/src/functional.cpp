#include "lkcert/functional.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>

#include "lkcert/kernels.hpp"

namespace lkcert {

namespace {

std::size_t segment_intervals(std::span<const double> segment, int dim, double step, double h) {
  if (dim <= 0 || segment.size() % static_cast<std::size_t>(dim) != 0) {
    throw InvalidArgument("segment size is not a multiple of the state dimension");
  }
  const std::size_t rows = segment.size() / static_cast<std::size_t>(dim);
  if (rows < 2) throw InvalidArgument("segment needs at least two nodes");
  const std::size_t H = rows - 1;
  if (std::abs(static_cast<double>(H) * step - h) > 1e-9 * h) {
    std::ostringstream os;
    os << "segment grid misaligned: " << H << " intervals of " << step << " do not span h = " << h;
    throw InvalidArgument(os.str());
  }
  return H;
}

Eigen::Map<const State> row(std::span<const double> segment, int dim, std::size_t j) {
  return Eigen::Map<const State>(segment.data() + j * static_cast<std::size_t>(dim), dim);
}

double rhs_with_weights(std::span<const double> segment, int dim, std::span<const double> weights,
                        const Certificate& cert) {
  const double p = cert.gamma + cert.mu - 1.0;
  const std::size_t H = weights.size() - 1;
  const double now = std::pow(row(segment, dim, H).norm(), p);
  const double past = std::pow(row(segment, dim, 0).norm(), p);
  const double integral =
      kernels::weighted_norm_power_sum(segment, static_cast<std::size_t>(dim), weights, p);
  return -cert.c0 * now - cert.c1 * past - cert.c2 * integral;
}

double v_with_weights(double t, std::span<const double> segment, int dim, std::span<const double> weights,
                      std::span<const double> tail_weights, double step, const Matrix& L,
                      const SystemSpec& spec, const LyapunovSpec& lyap) {
  const std::size_t H = weights.size() - 1;
  const double h = spec.h;
  const State x0 = row(segment, dim, H);

  std::vector<double> integrand((H + 1) * static_cast<std::size_t>(dim));
  for (std::size_t j = 0; j <= H; ++j) {
    const State xj = row(segment, dim, j);
    State g = spec.f_eval(x0, xj);
    const State q = spec.q_eval(x0, xj);
    if (!q.isZero(0.0)) {
      const double theta = -h + step * static_cast<double>(j);
      g += spec.b_eval(t + theta + h) * q;
    }
    std::copy(g.data(), g.data() + dim, integrand.begin() + static_cast<std::ptrdiff_t>(j * dim));
  }
  State integral(dim);
  kernels::weighted_vector_sum(integrand, static_cast<std::size_t>(dim), weights,
                               std::span<double>(integral.data(), static_cast<std::size_t>(dim)));

  const State q00 = spec.q_eval(x0, x0);
  if (!q00.isZero(0.0)) integral -= L * q00;

  const double tail = kernels::weighted_norm_power_sum(segment, static_cast<std::size_t>(dim),
                                                       tail_weights, lyap.gamma + spec.mu - 1.0);
  return lyap.v_eval(x0) + lyap.grad_eval(x0).dot(integral) + tail;
}

std::vector<double> tail_weights_for(std::span<const double> weights, double step, double h,
                                     const WSplit& ws) {
  std::vector<double> out(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double theta = -h + step * static_cast<double>(j);
    out[j] = weights[j] * (ws.w1 + (h + theta) * ws.w2);
  }
  return out;
}

}  // namespace

LState initial_L_state(int n, double h, double eps) {
  if (n <= 0) throw InvalidArgument("L state: dimension must be positive");
  if (!(eps >= 0.0)) throw InvalidArgument("L state: eps must be >= 0");
  return LState{-h, eps, Matrix::Zero(n, n)};
}

LState advance_L(const LState& s, double dt, double h, const MatrixEvaluator& b_eval) {
  if (!(dt > 0.0)) throw InvalidArgument("advance_L: dt must be > 0");
  const Matrix b0 = b_eval(s.t + h);
  const Matrix bm = b_eval(s.t + 0.5 * dt + h);
  const Matrix b1 = b_eval(s.t + dt + h);
  const Matrix k1 = -s.eps * s.L + b0;
  const Matrix k2 = -s.eps * (s.L + 0.5 * dt * k1) + bm;
  const Matrix k3 = -s.eps * (s.L + 0.5 * dt * k2) + bm;
  const Matrix k4 = -s.eps * (s.L + dt * k3) + b1;
  return LState{s.t + dt, s.eps, s.L + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
}

std::vector<double> simpson_weights(std::size_t H, double step) {
  if (H == 0) throw InvalidArgument("simpson_weights: need at least one interval");
  std::vector<double> w(H + 1, 0.0);
  if (H == 1) {
    w[0] = w[1] = 0.5 * step;
    return w;
  }
  // Simpson on the first `even` intervals, 3/8 rule on the last three if H is odd.
  const std::size_t even = (H % 2 == 0) ? H : H - 3;
  for (std::size_t j = 0; j + 2 <= even; j += 2) {
    w[j] += step / 3.0;
    w[j + 1] += 4.0 * step / 3.0;
    w[j + 2] += step / 3.0;
  }
  if (even != H) {
    const double c = 3.0 * step / 8.0;
    w[even] += c;
    w[even + 1] += 3.0 * c;
    w[even + 2] += 3.0 * c;
    w[even + 3] += c;
  }
  return w;
}

double eval_v(double t, std::span<const double> segment, int dim, double step, const Matrix& L,
              const SystemSpec& spec, const LyapunovSpec& lyap, const WSplit& ws) {
  const std::size_t H = segment_intervals(segment, dim, step, spec.h);
  if (L.rows() != dim || L.cols() != dim) throw InvalidArgument("eval_v: L has wrong shape");
  const std::vector<double> weights = simpson_weights(H, step);
  const std::vector<double> tail = tail_weights_for(weights, step, spec.h, ws);
  return v_with_weights(t, segment, dim, weights, tail, step, L, spec, lyap);
}

double derivative_bound_rhs(std::span<const double> segment, int dim, double step,
                            const Certificate& cert) {
  const std::size_t H = segment_intervals(segment, dim, step, cert.h);
  const std::vector<double> weights = simpson_weights(H, step);
  return rhs_with_weights(segment, dim, weights, cert);
}

FunctionalTrace trace_functional(const Trajectory& traj, const Certificate& cert,
                                 const SystemSpec& spec, const LyapunovSpec& lyap,
                                 std::size_t stride) {
  if (stride == 0) throw InvalidArgument("trace: stride must be >= 1");
  if (traj.dim() != spec.n) throw InvalidArgument("trace: trajectory dimension mismatch");
  if (std::abs(traj.h() - spec.h) > 1e-9 * spec.h) throw InvalidArgument("trace: trajectory delay differs from h");

  const int dim = traj.dim();
  const double step = traj.step();
  const std::size_t H = traj.steps_per_delay();
  const std::vector<double> weights = simpson_weights(H, step);
  const std::vector<double> tail = tail_weights_for(weights, step, spec.h, cert.wsplit);
  const double eps = cert.kind == CaseKind::BoundedIntegral ? 0.0 : cert.eps;

  FunctionalTrace tr;
  tr.fd_dt = step * static_cast<double>(stride);
  tr.L_bound = cert.omega_over_eps;

  LState ls = initial_L_state(dim, spec.h, eps);
  std::size_t l_index = 0;  // ls.t = t0 - h + l_index * step
  const double t_start = traj.t0() - spec.h;
  auto advance_to = [&](std::size_t target) {
    while (l_index < target) {
      ls = advance_L(ls, step, spec.h, spec.b_eval);
      ++l_index;
      ls.t = t_start + step * static_cast<double>(l_index);
      tr.max_L_norm = std::max(tr.max_L_norm, spectral_norm(ls.L));
    }
  };

  for (std::size_t k = 0; k < traj.node_count(); k += stride) {
    advance_to(k + H);
    const double t = traj.node_time(k);
    const auto seg = traj.segment(k);
    const double v = v_with_weights(t, seg, dim, weights, tail, step, ls.L, spec, lyap);
    const double sn = kernels::max_norm(seg, static_cast<std::size_t>(dim));
    const double xn = traj.node(k).norm();
    tr.t.push_back(t);
    tr.v.push_back(v);
    tr.bound_rhs.push_back(rhs_with_weights(seg, dim, weights, cert));
    tr.comparison_rhs.push_back(
        v > 0.0 ? -cert.rho * std::pow(v, (cert.gamma + cert.mu - 1.0) / cert.gamma) : 0.0);
    tr.seg_norm.push_back(sn);
    tr.x_norm.push_back(xn);
    tr.in_S_alpha.push_back(sn <= cert.alpha * xn ? 1 : 0);
    tr.checked.push_back(sn <= cert.delta ? 1 : 0);
  }

  const std::size_t n = tr.size();
  const double dt = tr.fd_dt;
  tr.dvdt.assign(n, std::numeric_limits<double>::quiet_NaN());
  tr.tol.assign(n, 0.0);
  if (n < 2) {
    std::fill(tr.checked.begin(), tr.checked.end(), 0);
    return tr;
  }
  const auto& v = tr.v;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    double trunc_coef = 0.0;  // error = trunc_coef * dt^2 * |v'''|
    double vmax = 0.0;
    if (n == 2) {
      d = (v[1] - v[0]) / dt;
      vmax = std::max(std::abs(v[0]), std::abs(v[1]));
    } else if (i == 0) {
      d = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
      trunc_coef = 1.0 / 3.0;
      vmax = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
    } else if (i == n - 1) {
      d = (3.0 * v[i] - 4.0 * v[i - 1] + v[i - 2]) / (2.0 * dt);
      trunc_coef = 1.0 / 3.0;
      vmax = std::max({std::abs(v[i]), std::abs(v[i - 1]), std::abs(v[i - 2])});
    } else {
      d = (v[i + 1] - v[i - 1]) / (2.0 * dt);
      trunc_coef = 1.0 / 6.0;
      vmax = std::max(std::abs(v[i - 1]), std::abs(v[i + 1]));
    }
    double third = 0.0;
    if (n >= 4) {
      const std::size_t j = std::min(i > 0 ? i - 1 : 0, n - 4);
      third = std::abs(v[j + 3] - 3.0 * v[j + 2] + 3.0 * v[j + 1] - v[j]) / (dt * dt * dt);
    }
    tr.dvdt[i] = d;
    tr.tol[i] = 2.0 * trunc_coef * dt * dt * third + 16.0 * DBL_EPSILON * vmax / dt +
                1e-9 * std::abs(v[i]);
  }
  return tr;
}

DerivativeReport check_derivative_bound(const FunctionalTrace& tr, const Certificate& cert) {
  if (tr.size() == 0) throw InvalidArgument("check_derivative_bound: empty trace");
  DerivativeReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  rep.slack.assign(tr.size(), std::numeric_limits<double>::quiet_NaN());
  rep.L_bound_ok = tr.max_L_norm <= tr.L_bound * (1.0 + 1e-9) + 1e-12;
  const double power = (cert.gamma + cert.mu - 1.0) / cert.gamma;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (!tr.checked[i] || std::isnan(tr.dvdt[i])) continue;
    ++rep.checked;
    const double s1 = tr.bound_rhs[i] + tr.tol[i] - tr.dvdt[i];
    double s = s1;
    std::string kind = "derivative bound";
    if (tr.v[i] > 0.0) {
      const double s2 = -cert.rho * std::pow(tr.v[i], power) + tr.tol[i] - tr.dvdt[i];
      if (s2 < s) {
        s = s2;
        kind = "comparison bound";
      }
    }
    rep.slack[i] = s;
    rep.worst_slack = std::min(rep.worst_slack, s);
    if (s < 0.0) {
      ++rep.violations;
      if (!rep.first_violation) {
        rep.first_violation = i;
        rep.first_violation_kind = kind;
      }
    }
  }
  if (rep.checked == 0) rep.worst_slack = 0.0;
  return rep;
}

}  // namespace lkcert
