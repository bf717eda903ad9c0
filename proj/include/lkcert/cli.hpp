#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lkcert/certificate.hpp"
#include "lkcert/ddesim.hpp"
#include "lkcert/model.hpp"

namespace lkcert::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kInfeasible = 2,
  kIntegratorFailure = 3,
  kViolation = 4,
  kReproFailure = 5,
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Parsed run configuration. Sections: system, lyapunov, perturbation, sim,
/// certify, output (INI syntax). Unknown sections and keys are rejected.
struct RunConfig {
  std::string source = "<config>";

  // [system]
  std::string system = "example";  // example | linear_delay | zero
  ExampleParams example;
  double linear_a = 1.0;
  double linear_h = 1.0;
  int zero_n = 2;
  std::vector<std::pair<std::string, double>> system_overrides;

  // [lyapunov]
  std::vector<std::pair<std::string, double>> lyapunov_overrides;

  // [perturbation]
  std::optional<char> pclass;  // 'A' or 'B'
  std::optional<double> l0;

  // [sim]
  SimConfig sim{1e-2, 1e4, 100};
  std::vector<double> initial_value;
  std::size_t trace_stride = 100;

  // [certify]
  double alpha = 1.1;
  CertifyOptions certify;
  std::optional<std::uint64_t> seed;

  // [output]
  std::string out_dir = ".";
  bool plot_script = false;
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// System assembled from a config. Only the example family carries the
/// Lyapunov data needed for certification.
struct BuiltSystem {
  std::string name;
  std::unique_ptr<SystemSpec> spec;
  std::unique_ptr<LyapunovSpec> lyap;
  std::optional<PerturbationClass> pclass;
  DelayRhs rhs;

  double h() const { return rhs.h; }
  int n() const { return rhs.n; }
  bool certifiable() const { return spec && lyap && pclass; }
};

BuiltSystem build_system(const RunConfig& cfg);
InitialFunction initial_function(const RunConfig& cfg, const BuiltSystem& sys);

// -- certificate files --------------------------------------------------------

void write_certificate(std::ostream& out, const Certificate& cert);
Certificate read_certificate(std::istream& in, const std::string& source = "<certificate>");
void save_certificate(const std::string& path, const Certificate& cert);
Certificate load_certificate(const std::string& path);

// -- commands -----------------------------------------------------------------

struct CommandOptions {
  std::optional<std::string> config;
  std::optional<std::string> cert;
  std::optional<std::string> out;
  bool plot_script = false;
  std::optional<double> step;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
};

int cmd_certify(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_simulate(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_envelope(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_trace(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_repro_example(const CommandOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace lkcert::cli
