#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "lkcert/cli.hpp"
#include "lkcert/functional.hpp"
#include "lkcert/kernels.hpp"

namespace lkcert::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig cfg;
  BuiltSystem sys;
  fs::path out;
};

Context prepare(const CommandOptions& opts, bool config_required = true) {
  Context ctx;
  if (opts.config) {
    ctx.cfg = load_config(*opts.config);
  } else if (config_required) {
    throw ConfigError("--config is required");
  }
  if (opts.step) ctx.cfg.sim.step = *opts.step;
  if (opts.t_end) ctx.cfg.sim.t_end = *opts.t_end;
  if (opts.seed) ctx.cfg.seed = *opts.seed;
  if (opts.plot_script) ctx.cfg.plot_script = true;
  ctx.sys = build_system(ctx.cfg);
  try {
    ctx.cfg.sim.validate(ctx.sys.h());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  ctx.out = opts.out ? fs::path(*opts.out) : fs::path(ctx.cfg.out_dir);
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + ctx.out.string() + "': " + ec.message());
  return ctx;
}

void require_certifiable(const Context& ctx) {
  if (!ctx.sys.certifiable()) {
    throw ConfigError("system '" + ctx.sys.name + "' carries no Lyapunov data; only 'example' can be certified");
  }
}

Certificate certificate_for(const CommandOptions& opts, const Context& ctx) {
  const fs::path path = opts.cert ? fs::path(*opts.cert) : ctx.out / "certificate.txt";
  Certificate cert = load_certificate(path.string());
  if (ctx.sys.spec) {
    const SystemSpec& s = *ctx.sys.spec;
    if (cert.mu != s.mu || cert.sigma != s.sigma || std::abs(cert.h - s.h) > 1e-12 * s.h) {
      throw ConfigError("certificate " + path.string() + " was issued for different mu, sigma or h");
    }
  }
  return cert;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::size_t step_count(const SimConfig& sim) {
  return static_cast<std::size_t>(std::ceil(sim.t_end / sim.step - 1e-9));
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, std::size_t stride) {
  std::ofstream out = open_out(path);
  out << "t";
  for (int i = 1; i <= traj.dim(); ++i) out << ",x_" << i;
  out << ",norm_x\n";
  for (std::size_t k = 0; k < traj.node_count(); k += stride) {
    const auto x = traj.node(k);
    out << num(traj.node_time(k));
    for (int i = 0; i < traj.dim(); ++i) out << "," << num(x(i));
    out << "," << num(x.norm()) << "\n";
  }
}

void write_plot_script(const fs::path& path, const std::string& title, const std::string& data_a,
                       const std::string& col_a, const std::string& data_b, const std::string& col_b) {
  std::ofstream out = open_out(path);
  out << "# two series over t; any plotting tool can replay these commands\n"
      << "title \"" << title << "\"\n"
      << "xlabel \"t\"\n"
      << "ylabel \"norm\"\n"
      << "yscale log\n"
      << "series file=\"" << data_a << "\" x=t y=" << col_a << " style=solid label=\"|x(t)|\"\n"
      << "series file=\"" << data_b << "\" x=t y=" << col_b << " style=dashed label=\"envelope\"\n";
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const IntegrationFailure& e) {
    err << "integrator failure at t = " << e.time() << ": " << e.what() << "\n";
    return kIntegratorFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

void print_certificate(std::ostream& log, const Certificate& c) {
  log << "  kind      " << (c.kind == CaseKind::BoundedIntegral ? "bounded integral" : "vanishing mean") << "\n"
      << "  eps       " << c.eps << "\n"
      << "  delta     " << c.delta << "\n"
      << "  Delta     " << c.Delta << "\n"
      << "  rho       " << c.rho << "\n"
      << "  rho_tilde " << c.rho_tilde << "\n"
      << "  c_hat1    " << c.c_hat1 << "\n"
      << "  c_hat2    " << c.c_hat2 << "\n";
}

}  // namespace

int cmd_certify(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Context ctx = prepare(opts);
    require_certifiable(ctx);

    BoundCheckOptions bopts;
    if (ctx.cfg.seed) bopts.seed = *ctx.cfg.seed;
    const BoundReport bounds = check_bound_constants(*ctx.sys.spec, *ctx.sys.lyap, bopts);
    for (const auto& c : bounds.checks) {
      if (!c.holds) {
        throw Infeasible("bound constant check '" + c.name + "' fails on seeded samples (worst slack " +
                         num(c.worst_slack) + ")");
      }
    }

    const Certificate cert =
        certify(*ctx.sys.spec, *ctx.sys.lyap, *ctx.sys.pclass, ctx.cfg.alpha, ctx.cfg.certify);
    const auto bad = cert.invariant_violations();
    if (!bad.empty()) throw Infeasible("certificate invariant fails: " + bad.front());

    const fs::path path = ctx.out / "certificate.txt";
    save_certificate(path.string(), cert);
    log << "certificate written to " << path.string() << "\n";
    print_certificate(log, cert);
    return static_cast<int>(kOk);
  });
}

int cmd_simulate(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Context ctx = prepare(opts);
    const InitialFunction phi = initial_function(ctx.cfg, ctx.sys);
    const Trajectory traj = simulate(ctx.sys.rhs, phi, ctx.cfg.sim);
    const fs::path path = ctx.out / "trajectory.csv";
    write_trajectory_csv(path, traj, ctx.cfg.sim.record_stride);
    log << "simulated " << traj.node_count() - 1 << " steps to t = " << traj.t_end() << "; wrote "
        << path.string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_envelope(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Context ctx = prepare(opts);
    const Certificate cert = certificate_for(opts, ctx);
    const InitialFunction phi = initial_function(ctx.cfg, ctx.sys);
    const double norm = phi.sup_norm();
    envelope(cert, norm, 0.0);  // region check before writing anything

    const fs::path path = ctx.out / "envelope.csv";
    std::ofstream out = open_out(path);
    out << "t,envelope\n";
    const std::size_t n = step_count(ctx.cfg.sim);
    for (std::size_t k = 0; k <= n; k += ctx.cfg.sim.record_stride) {
      const double t = ctx.cfg.sim.step * static_cast<double>(k);
      out << num(t) << "," << num(envelope(cert, norm, t)) << "\n";
    }
    log << "wrote " << path.string() << " (|phi|_h = " << norm << ", Delta = " << cert.Delta << ")\n";
    if (ctx.cfg.plot_script) {
      const fs::path script = ctx.out / "envelope.plot";
      write_plot_script(script, "solution norm and certified envelope", "trajectory.csv", "norm_x",
                        "envelope.csv", "envelope");
      log << "wrote " << script.string() << "\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_trace(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    Context ctx = prepare(opts);
    require_certifiable(ctx);
    const Certificate cert = certificate_for(opts, ctx);
    const InitialFunction phi = initial_function(ctx.cfg, ctx.sys);
    const Trajectory traj = simulate(ctx.sys.rhs, phi, ctx.cfg.sim);
    const FunctionalTrace tr =
        trace_functional(traj, cert, *ctx.sys.spec, *ctx.sys.lyap, ctx.cfg.trace_stride);
    const DerivativeReport rep = check_derivative_bound(tr, cert);

    const fs::path path = ctx.out / "trace.csv";
    std::ofstream out = open_out(path);
    out << "t,v,dvdt_fd,bound_rhs,slack,in_S_alpha,seg_norm\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
      out << num(tr.t[i]) << "," << num(tr.v[i]) << "," << num(tr.dvdt[i]) << ","
          << num(tr.bound_rhs[i]) << "," << (std::isnan(rep.slack[i]) ? "nan" : num(rep.slack[i]))
          << "," << static_cast<int>(tr.in_S_alpha[i]) << "," << num(tr.seg_norm[i]) << "\n";
    }
    out.close();

    log << "wrote " << path.string() << ": " << tr.size() << " samples, " << rep.checked
        << " checked, worst slack " << rep.worst_slack << "\n";
    if (!rep.L_bound_ok) {
      err << "violation: |L(t,eps)| reached " << tr.max_L_norm << " > bound " << tr.L_bound << "\n";
    }
    if (rep.first_violation) {
      const std::size_t i = *rep.first_violation;
      err << "violation: " << rep.violations << " samples break the certified inequalities; first at t = "
          << tr.t[i] << " (" << rep.first_violation_kind << ", slack " << rep.slack[i] << ")\n";
    }
    return static_cast<int>(rep.ok() ? kOk : kViolation);
  });
}

int cmd_repro_example(const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto t_start = std::chrono::steady_clock::now();
    CommandOptions o = opts;
    o.config.reset();  // the published inputs are fixed
    Context ctx = prepare(o, false);
    ctx.cfg.sim.step = opts.step.value_or(1e-2);
    ctx.cfg.sim.t_end = opts.t_end.value_or(1e4);
    ctx.cfg.sim.validate(ctx.sys.h());

    std::ostringstream report;
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
      report << (ok ? "PASS  " : "FAIL  ") << name << "  " << detail << "\n";
      if (!ok) ++failures;
    };
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };

    const SystemSpec& spec = *ctx.sys.spec;
    const LyapunovSpec& lyap = *ctx.sys.lyap;
    report << "Published example: mu = sigma = 5, h = 10, zeta = 1e-4, alpha = 1.1, eps = 1e-14,\n"
           << "rho_tilde = 3.3e-7, phi = (4.9e-4, 4.9e-4), delta pinned to 1e-3\n\n";

    const double w = kappa_and_w(1e-4, 5.0).w;
    check("w", rel(w, 6.2e-6) <= 0.02, "computed " + num(w) + ", published 6.2e-6 (2%)");

    CertifyOptions copts;
    copts.eps = 1e-14;
    copts.delta = 1e-3;
    copts.rho_tilde = 3.3e-7;
    const Certificate cert = certify(spec, lyap, VanishingMean{example_omega}, 1.1, copts);
    save_certificate((ctx.out / "certificate.txt").string(), cert);

    check("delta feasible", cert.c0 > 0 && cert.c1 > 0 && cert.c2 > 0 && cert.a1 > 0,
          "c0 = " + num(cert.c0) + ", c1 = " + num(cert.c1) + ", c2 = " + num(cert.c2) +
              ", a1 = " + num(cert.a1));
    check("Delta range", cert.Delta >= 5e-4 && cert.Delta <= 1e-3,
          "computed " + num(cert.Delta) + ", published 7e-4, accepted [5e-4, 1e-3]");
    check("c_hat2", rel(cert.c_hat2, 6.7e-8) <= 0.15, "computed " + num(cert.c_hat2) + ", published 6.7e-8 (15%)");
    const double limit = rho_tilde_limit(cert.alpha, cert.h, cert.gamma, cert.mu, cert.scale(), cert.Delta);
    check("rho_tilde admissible", cert.rho_tilde < cert.rho && cert.rho_tilde <= limit,
          "rho_tilde = 3.3e-7, rho = " + num(cert.rho) + ", S_alpha limit = " + num(limit));
    check("c_hat1 = delta/Delta", std::abs(cert.c_hat1 - cert.delta / cert.Delta) <= 1e-12 * cert.c_hat1,
          "c_hat1 = " + num(cert.c_hat1) + " (published 1.41)");
    const double resid = capital_delta_residual(cert.alpha1, cert.a1, cert.b2, cert.b3, cert.delta,
                                                cert.gamma, cert.mu, cert.sigma, cert.Delta);
    check("attraction-radius residual", resid <= 1e-10, "relative residual " + num(resid));

    const InitialFunction phi = InitialFunction::constant(State::Constant(2, 4.9e-4), spec.h);
    const double norm = phi.sup_norm();
    const Trajectory traj = simulate(spec, phi, ctx.cfg.sim);
    double worst_ratio = 0.0;
    double max_norm = norm;
    std::size_t first_bad = 0;
    bool dominated = true;
    for (std::size_t k = 0; k < traj.node_count(); ++k) {
      const double xn = traj.node(k).norm();
      const double env = envelope(cert, norm, traj.node_time(k));
      worst_ratio = std::max(worst_ratio, xn / env);
      max_norm = std::max(max_norm, xn);
      if (xn > env && dominated) {
        dominated = false;
        first_bad = k;
      }
    }
    check("envelope dominance", dominated,
          "max |x|/envelope = " + num(worst_ratio) + " over " + std::to_string(traj.node_count()) + " nodes" +
              (dominated ? "" : ", first failure at t = " + num(traj.node_time(first_bad))));
    check("segment norm <= delta", max_norm <= cert.delta, "max |x_t|_h = " + num(max_norm));

    const FunctionalTrace tr = trace_functional(traj, cert, spec, lyap, 100);
    const DerivativeReport rep = check_derivative_bound(tr, cert);
    check("functional inequalities", rep.ok(),
          std::to_string(rep.checked) + " samples checked, " + std::to_string(rep.violations) +
              " violations, worst slack " + num(rep.worst_slack));

    const fs::path fig = ctx.out / "fig1.csv";
    {
      std::ofstream out = open_out(fig);
      out << "t,norm_x,envelope\n";
      for (std::size_t k = 0; k < traj.node_count(); k += 100) {
        const double t = traj.node_time(k);
        out << num(t) << "," << num(traj.node(k).norm()) << "," << num(envelope(cert, norm, t)) << "\n";
      }
    }
    write_plot_script(ctx.out / "fig1.plot", "example response and certified bound", "fig1.csv", "norm_x",
                      "fig1.csv", "envelope");

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report << "\nhorizon [0, " << num(traj.t_end()) << "], step " << num(traj.step())
           << ", kernels " << kernels::isa_name(kernels::active_isa()) << ", " << secs << " s\n";
    report << (failures == 0 ? "RESULT: all checks passed\n"
                             : "RESULT: " + std::to_string(failures) + " check(s) failed\n");

    std::ofstream(ctx.out / "report.txt") << report.str();
    log << report.str();
    if (failures != 0) {
      err << "reproduction failed: " << failures << " check(s) outside tolerance\n";
      return static_cast<int>(kReproFailure);
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace lkcert::cli
