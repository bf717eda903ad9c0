#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lkcert/cli.hpp"

int main(int argc, char** argv) {
  using namespace lkcert::cli;

  CLI::App app{"lkcert: Lyapunov-Krasovskii certificates for perturbed homogeneous delay systems"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string config, cert, out;
  double step = 0.0, t_end = 0.0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_config, bool needs_cert) {
    if (needs_config) sub->add_option("--config", config, "Run configuration (INI)")->required();
    if (needs_cert) sub->add_option("--cert", cert, "Certificate file (default <out>/certificate.txt)");
    sub->add_option("--out", out, "Output directory (overrides [output] dir)");
    sub->add_option("--step", step, "Integration step (h/step must be an integer)")->check(CLI::PositiveNumber);
    sub->add_option("--t-end", t_end, "Simulation horizon")->check(CLI::PositiveNumber);
  };

  auto* certify = app.add_subcommand("certify", "Compute and write a certificate");
  add_common(certify, true, false);
  certify->add_option("--seed", seed, "Seed for the randomised bound-constant check");

  auto* simulate = app.add_subcommand("simulate", "Integrate the system and write trajectory.csv");
  add_common(simulate, true, false);

  auto* envelope = app.add_subcommand("envelope", "Write the certified decay envelope");
  add_common(envelope, true, true);
  envelope->add_flag("--plot-script", opts.plot_script, "Also write envelope.plot");

  auto* trace = app.add_subcommand("trace", "Evaluate the functional along a trajectory and check its bounds");
  add_common(trace, true, true);

  auto* repro = app.add_subcommand("repro-example", "Reproduce the published example end to end");
  add_common(repro, false, false);

  CLI11_PARSE(app, argc, argv);

  for (auto* sub : app.get_subcommands()) {
    auto given = [sub](const char* name) {
      const CLI::Option* opt = sub->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (given("--config")) opts.config = config;
    if (given("--cert")) opts.cert = cert;
    if (given("--out")) opts.out = out;
    if (given("--step")) opts.step = step;
    if (given("--t-end")) opts.t_end = t_end;
    if (given("--seed")) opts.seed = seed;
  }

  if (certify->parsed()) return cmd_certify(opts, std::cout, std::cerr);
  if (simulate->parsed()) return cmd_simulate(opts, std::cout, std::cerr);
  if (envelope->parsed()) return cmd_envelope(opts, std::cout, std::cerr);
  if (trace->parsed()) return cmd_trace(opts, std::cout, std::cerr);
  return cmd_repro_example(opts, std::cout, std::cerr);
}
