#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lkcert {

using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: violated precondition, malformed configuration, bad shape.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A certificate cannot be built (theorem case violated or no feasible
/// neighbourhood), or a query lies outside the certified region.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// The integrator produced a non-finite state.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Spectral (induced 2-) norm.
double spectral_norm(const Matrix& m);

}  // namespace lkcert
