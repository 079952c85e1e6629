// roaforge <subcommand> --config <path> [--seed N] [--out DIR]

#include <CLI11.hpp>
#include <iostream>

#include "roaforge/run.hpp"

int main(int argc, char** argv) {
  using namespace roaforge;

  CLI::App app{"Linear state-feedback synthesis trading LQR cost against certified region of attraction"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;

  const std::map<std::string, std::string> help{
      {"synth", "one swarm synthesis with the configured weights"},
      {"compare", "K_O and K_max against K_LQR over particle counts"},
      {"mass-sweep", "certified ROA of K_O across pendulum masses"},
      {"grid-sweep", "certified ROA and time of K_LQR across grid resolutions"},
      {"simulate", "nonlinear recovery runs of K_LQR, K_O and K_max"},
      {"roa", "certify one gain (K_LQR unless 'gain' is set)"},
  };
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out_dir, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  auto drop_default = [&cfg](const std::string& key) {
    std::erase_if(cfg.defaults_applied, [&](const std::string& d) { return d.rfind(key + " = ", 0) == 0; });
  };
  if (seed) {
    cfg.seed = *seed;
    drop_default("seed");
  }
  if (out_dir) {
    cfg.output_dir = *out_dir;
    drop_default("output_dir");
  }
  return run_subcommand(subcommand, cfg, std::cerr);
}
