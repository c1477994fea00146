#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "seqlrp/cli/pipeline.hpp"

namespace cli = seqlrp::cli;

int main(int argc, char** argv) {
  CLI::App app{"seqlrp: relevance propagation and attribution evaluation for DNA sequence classifiers"};
  std::vector<std::string> names(cli::kCommands.begin(), cli::kCommands.end());
  names.emplace_back("all");

  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool print_config = false;

  app.add_option("command", command, "gen | train | explain | transform | metrics | faithfulness | motifs | report | all")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("-c,--config", config_path, "JSON configuration file");
  app.add_option("-s,--set", overrides, "override a config key, e.g. --set train.glm.epochs=2");
  app.add_option("-o,--output-dir", output_dir, "output directory (relative paths go under $SEQLRP_OUTPUT_ROOT)");
  app.add_option("--seed", seed, "run seed");
  app.add_option("-j,--workers", workers, "worker threads");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    nlohmann::json user = config_path.empty() ? nlohmann::json::object() : cli::load_config_file(config_path);
    if (output_dir) user["output_dir"] = *output_dir;
    if (seed) user["seed"] = *seed;
    if (workers) user["workers"] = *workers;
    const auto resolved = cli::resolve_config(user, overrides);
    const auto settings = cli::Settings::from(resolved);
    if (print_config) {
      std::cout << resolved.dump(2) << "\n";
      return cli::kExitOk;
    }
    if (command == "all")
      cli::run_all(settings, std::cerr);
    else
      cli::run(command, settings, std::cerr);
    return cli::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "seqlrp " << command << ": error: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
}
