// Command-line front end: predict / validate / dift / catalog.
#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "eigperturb/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"eigperturb: first-order perturbation of multiple Dirichlet eigenvalues"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int workers = 0;
  bool quick = false;
  bool dump_mesh = false;
  uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config)
      cmd->add_option("config", config_path, "scenario configuration (JSON)")->required();
    cmd->add_option("--out-dir", out_dir, "directory for report files");
    cmd->add_option("--workers", workers, "scenario-level worker count");
    cmd->add_flag("--quick", quick, "halve all resolutions for a smoke run");
    cmd->add_option("--seed", seed, "override the random seed");
  };

  auto* predict = app.add_subcommand("predict", "assemble pencils and predict branch slopes");
  add_common(predict, true);
  auto* validate = app.add_subcommand(
      "validate", "predict and independently validate the slopes with the FEM engine");
  add_common(validate, true);
  validate->add_flag("--dump-mesh", dump_mesh, "write the t = 0 meshes per level");

  std::string example_name;
  auto* dift_cmd = app.add_subcommand("dift", "run a named degenerate-IFT example");
  dift_cmd->add_option("example", example_name, "example name (see catalog)")->required();
  dift_cmd->add_option("--out-dir", out_dir, "directory for report files");

  auto* catalog = app.add_subcommand("catalog", "list built-in domains, families and examples");

  CLI11_PARSE(app, argc, argv);

  eigperturb::cli::Settings overrides;
  overrides.out_dir = out_dir;
  overrides.workers = workers;
  overrides.quick = quick;
  overrides.seed = seed;
  overrides.dump_mesh = dump_mesh;

  if (catalog->parsed()) {
    for (const auto& name : eigperturb::cli::list_catalog()) std::cout << name << "\n";
    return 0;
  }
  if (dift_cmd->parsed())
    return static_cast<int>(eigperturb::cli::run_dift(example_name, out_dir, std::cout));

  // `predict` runs the pencil pipelines only; `validate` honors the config.
  const bool allow_fem = validate->parsed();
  return static_cast<int>(eigperturb::cli::run(config_path, overrides, std::cout, allow_fem));
}
