#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lkcert/cli.hpp"
#include "support.hpp"

using namespace lkcert;
using namespace lkcert::cli;
namespace fs = std::filesystem;

namespace {

const char* kCubic = R"([system]
name = example
mu = 3
sigma = 3
h = 0.5
zeta = 0.05
perturbed = false

[lyapunov]
w = 0.025

[perturbation]
class = A
l0 = 0

[sim]
step = 0.05
t_end = 200
record_stride = 10
initial_value = 5e-3, 5e-3
trace_stride = 20
)";

struct Outcome {
  int code;
  std::string log;
  std::string err;
};

template <class F>
Outcome run(F cmd, const CommandOptions& o) {
  std::ostringstream log, err;
  const int code = cmd(o, log, err);
  return {code, log.str(), err.str()};
}

CommandOptions options(const fs::path& dir, const std::string& config_text) {
  testsupport::write_file(dir / "run.ini", config_text);
  CommandOptions o;
  o.config = (dir / "run.ini").string();
  o.out = (dir / "out").string();
  return o;
}

}  // namespace

TEST(Config, UnknownKeyReportsLine) {
  std::istringstream in("[system]\nname = example\n\n[sim]\nstep = 0.01\nstpe = 0.02\n");
  try {
    parse_config(in, "bad.ini");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.ini:6"), std::string::npos) << msg;
    EXPECT_NE(msg.find("stpe"), std::string::npos) << msg;
  }
  std::istringstream sec("[sytem]\nname = example\n");
  EXPECT_THROW(parse_config(sec, "x.ini"), ConfigError);
}

TEST(Config, DefaultsAndParsing) {
  std::istringstream in(kCubic);
  const RunConfig cfg = parse_config(in);
  EXPECT_EQ(cfg.example.mu, 3);
  EXPECT_FALSE(cfg.example.perturbed);
  ASSERT_TRUE(cfg.pclass.has_value());
  EXPECT_EQ(*cfg.pclass, 'A');
  ASSERT_EQ(cfg.initial_value.size(), 2u);
  EXPECT_EQ(cfg.trace_stride, 20u);
  EXPECT_DOUBLE_EQ(cfg.alpha, 1.1);
  const BuiltSystem sys = build_system(cfg);
  EXPECT_TRUE(sys.certifiable());
  EXPECT_EQ(sys.lyap->w, 0.025);

  std::istringstream lin("[system]\nname = linear_delay\na = 2\nh = 1\n");
  const RunConfig lc = parse_config(lin);
  const BuiltSystem ls = build_system(lc);
  EXPECT_FALSE(ls.certifiable());
  EXPECT_EQ(ls.n(), 1);
}

TEST(Cli, NegativeDelayIsConfigError) {
  const auto dir = testsupport::scratch_dir("cli_negh");
  const Outcome r = run(cmd_simulate, options(dir, "[system]\nname = linear_delay\nh = -1\n"));
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("h"), std::string::npos);
}

TEST(Cli, ClassConditionFailureIsInfeasible) {
  const auto dir = testsupport::scratch_dir("cli_class");
  const Outcome r = run(cmd_certify, options(dir, "[system]\nname = example\nmu = 5\nsigma = 3\n"
                                              "[perturbation]\nclass = B\n"));
  EXPECT_EQ(r.code, kInfeasible);
  EXPECT_NE(r.err.find("sigma >= mu"), std::string::npos) << r.err;
}

TEST(Cli, CertificateRoundTrip) {
  const auto dir = testsupport::scratch_dir("cli_roundtrip");
  const Outcome r = run(cmd_certify, options(dir, kCubic));
  ASSERT_EQ(r.code, kOk) << r.err;
  const Certificate a = load_certificate((dir / "out" / "certificate.txt").string());
  std::ostringstream os;
  write_certificate(os, a);
  std::istringstream is(os.str());
  const Certificate b = read_certificate(is);
  EXPECT_EQ(a.delta, b.delta);
  EXPECT_EQ(a.Delta, b.Delta);
  EXPECT_EQ(a.rho_tilde, b.rho_tilde);
  EXPECT_EQ(a.c_hat1, b.c_hat1);
  EXPECT_EQ(a.wsplit.w2, b.wsplit.w2);
  EXPECT_EQ(a.kind, CaseKind::BoundedIntegral);
  EXPECT_TRUE(b.invariant_violations().empty());

  std::istringstream dup("kind = vanishing_mean\nkind = vanishing_mean\n");
  EXPECT_THROW(read_certificate(dup), ConfigError);
  std::istringstream missing("kind = vanishing_mean\n");
  EXPECT_THROW(read_certificate(missing), ConfigError);
}

TEST(Cli, ZeroSystemRows) {
  const auto dir = testsupport::scratch_dir("cli_zero");
  const Outcome r = run(cmd_simulate, options(dir, "[system]\nname = zero\nn = 3\nh = 1\n"
                                              "[sim]\nstep = 0.1\nt_end = 5\nrecord_stride = 1\n"
                                              "initial_value = 0.5, -1, 2\n"));
  ASSERT_EQ(r.code, kOk) << r.err;
  std::vector<std::string> header;
  const auto rows = testsupport::read_csv(dir / "out" / "trajectory.csv", &header);
  EXPECT_EQ(header, (std::vector<std::string>{"t", "x_1", "x_2", "x_3", "norm_x"}));
  ASSERT_EQ(rows.size(), 51u);
  for (const auto& row : rows) {
    EXPECT_EQ(row[1], 0.5);
    EXPECT_EQ(row[2], -1.0);
    EXPECT_EQ(row[3], 2.0);
  }
}

TEST(Cli, LinearDelayCrossesZeroAtOne) {
  const auto dir = testsupport::scratch_dir("cli_linear");
  const std::string cfg = "[system]\nname = linear_delay\na = 1\nh = 1\n"
                          "[sim]\nstep = 1e-3\nt_end = 2\nrecord_stride = 1\ninitial_value = 1\n";
  const Outcome r = run(cmd_simulate, options(dir, cfg));
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rows = testsupport::read_csv(dir / "out" / "trajectory.csv");
  ASSERT_EQ(rows.size(), 2001u);
  EXPECT_NEAR(rows[1000][0], 1.0, 1e-12);
  EXPECT_NEAR(rows[1000][1], 0.0, 1e-9);
  EXPECT_NEAR(rows[2000][1], testsupport::linear_delay_const(2.0), 1e-9);

  const std::string first = testsupport::read_file(dir / "out" / "trajectory.csv");
  ASSERT_EQ(run(cmd_simulate, options(dir, cfg)).code, kOk);
  EXPECT_EQ(testsupport::read_file(dir / "out" / "trajectory.csv"), first);
}

TEST(Cli, EnvelopeFile) {
  const auto dir = testsupport::scratch_dir("cli_envelope");
  CommandOptions o = options(dir, kCubic);
  ASSERT_EQ(run(cmd_certify, o).code, kOk);
  o.plot_script = true;
  const Outcome r = run(cmd_envelope, o);
  ASSERT_EQ(r.code, kOk) << r.err;
  const Certificate c = load_certificate((dir / "out" / "certificate.txt").string());
  const auto rows = testsupport::read_csv(dir / "out" / "envelope.csv");
  ASSERT_EQ(rows.size(), 401u);
  EXPECT_DOUBLE_EQ(rows[0][1], c.c_hat1 * 5e-3 * std::sqrt(2.0));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i][1], rows[i - 1][1]);
  EXPECT_TRUE(fs::exists(dir / "out" / "envelope.plot"));

  std::string big = kCubic;
  big.replace(big.find("5e-3, 5e-3"), 10, "0.1, 0.1");
  CommandOptions ob = options(dir, big);
  ob.cert = (dir / "out" / "certificate.txt").string();
  const Outcome rb = run(cmd_envelope, ob);
  EXPECT_EQ(rb.code, kInfeasible);
  EXPECT_NE(rb.err.find("Delta"), std::string::npos) << rb.err;
}

TEST(Cli, TraceOfZeroInitialValue) {
  const auto dir = testsupport::scratch_dir("cli_trace_zero");
  std::string cfg = kCubic;
  cfg.replace(cfg.find("5e-3, 5e-3"), 10, "0, 0");
  CommandOptions o = options(dir, cfg);
  ASSERT_EQ(run(cmd_certify, o).code, kOk);
  const Outcome r = run(cmd_trace, o);
  ASSERT_EQ(r.code, kOk) << r.err;
  std::vector<std::string> header;
  const auto rows = testsupport::read_csv(dir / "out" / "trace.csv", &header);
  EXPECT_EQ(header.size(), 7u);
  EXPECT_EQ(header[4], "slack");
  ASSERT_FALSE(rows.empty());
  for (const auto& row : rows) EXPECT_EQ(row[1], 0.0);
}

TEST(Cli, BlowUpIsIntegratorFailure) {
  const auto dir = testsupport::scratch_dir("cli_blowup");
  std::string cfg = kCubic;
  cfg.replace(cfg.find("5e-3, 5e-3"), 10, "1e3, 1e3");
  const Outcome r = run(cmd_simulate, options(dir, cfg));
  EXPECT_EQ(r.code, kIntegratorFailure);
  EXPECT_NE(r.err.find("integrator failure"), std::string::npos);
}

TEST(Cli, TraceCertificateMismatch) {
  const auto dir = testsupport::scratch_dir("cli_mismatch");
  CommandOptions o = options(dir, kCubic);
  ASSERT_EQ(run(cmd_certify, o).code, kOk);
  std::string other = kCubic;
  other.replace(other.find("h = 0.5"), 7, "h = 1.0");
  CommandOptions o2 = options(dir, other);
  o2.cert = (dir / "out" / "certificate.txt").string();
  EXPECT_EQ(run(cmd_trace, o2).code, kConfigError);
}
