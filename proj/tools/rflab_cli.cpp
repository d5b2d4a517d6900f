// rflab: Ricci flow runs, constant tables and estimate checks on homogeneous models.

#include "rflab/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Ricci flow on homogeneous models and verification of L^{n/2} curvature estimates"};
  app.require_subcommand(1);

  rflab::CliOptions opts;
  std::uint64_t seed = 0;
  app.add_option("--config", opts.config, "Run configuration file")->required();
  app.add_option("--out", opts.out, "Output path prefix (extensions are appended)");
  app.add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  auto* seed_opt = app.add_option("--seed", seed, "Seed for witness sampling and random measures");
  app.add_option("--override", opts.overrides, "section.key=value, repeatable")
      ->allow_extra_args(false);

  auto* flow = app.add_subcommand("flow", "Integrate the Ricci flow and write the trajectory");
  auto* check = app.add_subcommand("check", "Run the estimate checks on a trajectory");
  check->add_option("--trajectory", opts.trajectory, "Trajectory CSV")->required();
  check->add_option("--checks", opts.checks, "Comma-separated check names, repeatable")
      ->allow_extra_args(false);
  auto* constants = app.add_subcommand("constants", "Tabulate the derived constants");
  auto* sweep = app.add_subcommand("sweep", "Static invariants over a parameter grid");
  sweep->add_option("--grid", opts.grid, "section.key=v1,v2,...");
  for (auto* sub : {flow, check, constants, sweep}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*seed_opt) opts.seed = seed;

  return rflab::guarded(
      [&] {
        if (*flow) return rflab::cmd_flow(opts, std::cout, std::cerr);
        if (*check) return rflab::cmd_check(opts, std::cout, std::cerr);
        if (*constants) return rflab::cmd_constants(opts, std::cout, std::cerr);
        return rflab::cmd_sweep(opts, std::cout, std::cerr);
      },
      std::cerr);
}
