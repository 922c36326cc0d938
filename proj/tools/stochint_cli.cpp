// stochint: simulate | estimate | benchmark | optimize
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "stochint/experiment.hpp"

namespace {

std::string flag_name(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic intervention effects: estimation, benchmarks and policy search"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON or key = value config file");
  app.add_option("--out", out_dir, "output directory (default: $STOCHINT_OUT_ROOT/<command>)");

  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_options;
  for (const auto& s : stochint::settings()) {
    flag_options.emplace_back(s.key, app.add_option(flag_name(s.key), flag_values[s.key], s.help));
  }

  app.add_subcommand("simulate", "generate a dataset and its truth file");
  app.add_subcommand("estimate", "cross-fitted stochastic intervention effect");
  app.add_subcommand("benchmark", "epsilon_ATE of sie, ols and ipwe over replications");
  app.add_subcommand("optimize", "genetic search for per-unit stochastic degrees");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    stochint::ExperimentConfig cfg;
    std::vector<std::pair<std::string, std::string>> kv;
    if (!config_path.empty()) kv = stochint::read_config_file(config_path);
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) kv.emplace_back(key, flag_values[key]);
    }
    stochint::apply_settings(cfg, kv);

    const std::filesystem::path out =
        out_dir.empty() ? stochint::default_output_root() / command : std::filesystem::path(out_dir);
    const stochint::RunResult result = stochint::run_command(command, cfg, out);
    std::cout << result.summary << '\n' << "outputs: " << result.dir.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "stochint " << command << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
