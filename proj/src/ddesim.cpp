#include "lkcert/ddesim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "lkcert/kernels.hpp"

namespace lkcert {

InitialFunction::InitialFunction(Evaluator eval, int dim, double h, std::size_t grid_points)
    : eval_(std::move(eval)), dim_(dim), h_(h) {
  if (!eval_) throw InvalidArgument("initial function: evaluator missing");
  if (dim <= 0) throw InvalidArgument("initial function: dimension must be positive");
  if (!(h > 0.0)) throw InvalidArgument("initial function: h must be > 0");
  grid_points = std::max<std::size_t>(grid_points, 2);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double theta = -h + h * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const State v = eval_(theta);
    if (v.size() != dim) throw InvalidArgument("initial function: value has wrong dimension");
    sup_norm_ = std::max(sup_norm_, v.norm());
  }
  sup_norm_ = std::max(sup_norm_, eval_(0.0).norm());
}

InitialFunction InitialFunction::constant(const State& value, double h) {
  return InitialFunction([value](double) { return value; }, static_cast<int>(value.size()), h, 2);
}

bool InitialFunction::looks_continuous(double modulus, std::size_t points) const {
  points = std::max<std::size_t>(points, 2);
  const double spacing = h_ / static_cast<double>(points - 1);
  State prev = eval_(-h_);
  for (std::size_t i = 1; i < points; ++i) {
    const State cur = eval_(-h_ + spacing * static_cast<double>(i));
    if ((cur - prev).norm() > modulus * spacing) return false;
    prev = cur;
  }
  return true;
}

std::size_t SimConfig::steps_per_delay(double h) const {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("sim.step must be > 0");
  if (!(h > 0.0)) throw InvalidArgument("delay h must be > 0");
  const double ratio = h / step;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "h / step must be a positive integer (h = " << h << ", step = " << step << ")";
    throw InvalidArgument(os.str());
  }
  return static_cast<std::size_t>(rounded);
}

void SimConfig::validate(double h) const {
  steps_per_delay(h);
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("sim.t_end must be > 0");
  if (record_stride < 1) throw InvalidArgument("sim.record_stride must be >= 1");
}

DelayRhs DelayRhs::from_spec(const SystemSpec& spec) {
  DelayRhs r;
  r.n = spec.n;
  r.h = spec.h;
  r.eval = [&spec](double t, const State& x, const State& xd) { return spec.rhs(t, x, xd); };
  return r;
}

State hermite(const State& x0, const State& d0, const State& x1, const State& d1, double dt,
              double s) {
  const double tau = s / dt;
  const double tau2 = tau * tau;
  const double tau3 = tau2 * tau;
  const double h00 = 2.0 * tau3 - 3.0 * tau2 + 1.0;
  const double h10 = tau3 - 2.0 * tau2 + tau;
  const double h01 = -2.0 * tau3 + 3.0 * tau2;
  const double h11 = tau3 - tau2;
  return h00 * x0 + (h10 * dt) * d0 + h01 * x1 + (h11 * dt) * d1;
}

// -- Trajectory ---------------------------------------------------------------

Trajectory::Trajectory(InitialFunction phi, double t0, double step, std::size_t steps_per_delay,
                       int dim)
    : phi_(std::move(phi)), t0_(t0), step_(step), steps_per_delay_(steps_per_delay), dim_(dim) {
  if (phi_.dim() != dim) throw InvalidArgument("trajectory: initial function dimension mismatch");
  if (steps_per_delay_ == 0) throw InvalidArgument("trajectory: h must be a positive multiple of step");
  values_.reserve((steps_per_delay_ + 1) * dim_);
  for (std::size_t j = 0; j < steps_per_delay_; ++j) {
    const double theta = -step_ * static_cast<double>(steps_per_delay_ - j);
    const State v = phi_(theta);
    values_.insert(values_.end(), v.data(), v.data() + dim_);
  }
}

Eigen::Map<const State> Trajectory::node(std::size_t k) const {
  return Eigen::Map<const State>(values_.data() + offset(k), dim_);
}

Eigen::Map<const State> Trajectory::node_derivative(std::size_t k) const {
  return Eigen::Map<const State>(derivs_.data() + k * dim_, dim_);
}

void Trajectory::append(const State& x) {
  values_.insert(values_.end(), x.data(), x.data() + dim_);
  derivs_.resize(derivs_.size() + dim_, 0.0);
}

void Trajectory::set_derivative(std::size_t k, const State& dx) {
  std::copy(dx.data(), dx.data() + dim_, derivs_.begin() + static_cast<std::ptrdiff_t>(k * dim_));
}

std::size_t Trajectory::locate_node(double t, bool* exact) const {
  const double u = (t - t0_) / step_;
  const double nearest = std::round(u);
  const double tol = 1e-9;
  if (std::abs(u - nearest) <= tol) {
    *exact = true;
    return static_cast<std::size_t>(std::max(0.0, nearest));
  }
  *exact = false;
  return static_cast<std::size_t>(std::floor(u));
}

State Trajectory::sample(double t) const {
  const double slack = 1e-9 * step_;
  if (!(t >= t0_ - h() - slack) || !(t <= t_end() + slack)) {
    std::ostringstream os;
    os << "sample: t = " << t << " outside [" << t0_ - h() << ", " << t_end() << "]";
    throw InvalidArgument(os.str());
  }
  if (t < t0_) return phi_(std::max(t - t0_, -h()));
  bool exact = false;
  const std::size_t k = locate_node(t, &exact);
  if (exact) return node(std::min(k, node_count() - 1));
  return hermite(node(k), node_derivative(k), node(k + 1), node_derivative(k + 1), step_,
                 t - node_time(k));
}

std::span<const double> Trajectory::segment(std::size_t k) const {
  if (k >= node_count()) throw InvalidArgument("segment: node index out of range");
  return std::span<const double>(values_.data() + k * dim_, (steps_per_delay_ + 1) * dim_);
}

double Trajectory::segment_sup_norm(double t) const {
  if (!(t >= t0_ - 1e-9 * step_) || !(t <= t_end() + 1e-9 * step_)) {
    throw InvalidArgument("segment_sup_norm: t outside [t0, t_end]");
  }
  bool exact = false;
  const std::size_t k = locate_node(t, &exact);
  if (exact) return kernels::max_norm(segment(std::min(k, node_count() - 1)), dim_);

  double best = std::max(sample(t).norm(), sample(t - h()).norm());
  // Grid points strictly inside (t-h, t): prefix rows and nodes.
  const double lo = t - h();
  for (std::size_t row = 0; row < values_.size() / dim_; ++row) {
    const double tr = t0_ + step_ * (static_cast<double>(row) - static_cast<double>(steps_per_delay_));
    if (tr <= lo || tr >= t) continue;
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += values_[row * dim_ + i] * values_[row * dim_ + i];
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

bool Trajectory::in_S_alpha(double t, double alpha) const {
  return segment_sup_norm(t) <= alpha * sample(t).norm();
}

// -- integrator ---------------------------------------------------------------

Trajectory simulate(const DelayRhs& system, const InitialFunction& phi, const SimConfig& cfg) {
  cfg.validate(system.h);
  if (phi.dim() != system.n) throw InvalidArgument("simulate: initial function dimension mismatch");
  const std::size_t H = cfg.steps_per_delay(system.h);
  const double s = cfg.step;
  const auto n_steps = static_cast<std::size_t>(std::ceil(cfg.t_end / s - 1e-9));

  Trajectory traj(phi, 0.0, s, H, system.n);
  traj.append(phi(0.0));

  // Delayed value x(t_k + frac*s - h) for frac in {0, 1/2, 1}.
  auto delayed = [&](std::size_t k, int half_steps) -> State {
    if (k + static_cast<std::size_t>(half_steps > 0 ? 1 : 0) <= H) {
      const double theta =
          (static_cast<double>(k) - static_cast<double>(H)) * s + 0.5 * s * half_steps;
      return phi(std::min(theta, 0.0));
    }
    const std::size_t j = k - H;
    if (half_steps == 0) return traj.node(j);
    if (half_steps == 2) return traj.node(j + 1);
    return hermite(traj.node(j), traj.node_derivative(j), traj.node(j + 1),
                   traj.node_derivative(j + 1), s, 0.5 * s);
  };

  auto fail = [](double t) {
    std::ostringstream os;
    os << "integrator produced a non-finite state at t = " << t;
    throw IntegrationFailure(os.str(), t);
  };

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = traj.node_time(k);
    const State x = traj.node(k);
    const State k1 = system.eval(t, x, delayed(k, 0));
    traj.set_derivative(k, k1);
    const State xh = delayed(k, 1);
    const State k2 = system.eval(t + 0.5 * s, x + (0.5 * s) * k1, xh);
    const State k3 = system.eval(t + 0.5 * s, x + (0.5 * s) * k2, xh);
    const State k4 = system.eval(t + s, x + s * k3, delayed(k, 2));
    State next = x + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) fail(t + s);
    traj.append(next);
  }
  const std::size_t last = traj.node_count() - 1;
  const State d_last = system.eval(traj.node_time(last), traj.node(last), delayed(last, 0));
  if (!d_last.allFinite()) fail(traj.node_time(last));
  traj.set_derivative(last, d_last);
  return traj;
}

}  // namespace lkcert
