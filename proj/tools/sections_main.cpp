// Command-line front end: a config file in, a report bundle out.
//
//   sections run --config cfg.json --out results/ [--quiet]
//
// Exit codes: 0 ok, 2 config error, 3 analysis precondition failure,
// 4 internal invariant breach.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sections/errors.hpp"
#include "sections/run.hpp"
#include "sections/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"verification toolkit for intrinsically quasi-symmetric sections"};
  app.set_version_flag("--version", sections::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  bool quiet = false;

  CLI::App* run_cmd = app.add_subcommand("run", "execute the analyses selected by a config file");
  run_cmd->add_option("--config", config_path, "path to the JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "directory that receives the report bundle");
  run_cmd->add_flag("--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  nlohmann::json document;
  try {
    std::ifstream in(config_path, std::ios::binary);
    document = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
    return 2;
  }

  sections::RunConfig config;
  try {
    config = sections::parse_run_config(document);
  } catch (const sections::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const sections::RunResult result = sections::run(config, out_dir, quiet);
    if (!quiet)
      for (const std::string& line : result.log) std::cout << line << "\n";
    if (result.exit_code == 0 && !quiet)
      std::cout << "bundle: " << result.bundle_dir.string() << "\n";
    if (result.exit_code != 0)
      std::cerr << "run finished with exit code " << result.exit_code << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
