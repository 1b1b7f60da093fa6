#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "mopt/mopt.hpp"

namespace {

mopt::Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw mopt::ConfigError("cannot open config file " + path);
  return mopt::Json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiobjective first-order optimization harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int jobs = 1;
  long snapshot = 25;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config JSON")->required();
    sub->add_option("--out", out_override, "override the config's output directory");
    sub->add_option("--jobs", jobs, "number of concurrent starts")->check(CLI::PositiveNumber);
  };
  CLI::App* cmd_run = app.add_subcommand("run", "write one iteration-trace CSV per (method, start)");
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "median iterations and wall time to residual thresholds");
  CLI::App* cmd_front =
      app.add_subcommand("front", "dominance-filtered objective snapshots at a fixed iteration");
  add_common(cmd_run);
  add_common(cmd_compare);
  add_common(cmd_front);
  cmd_front->add_option("--snapshot", snapshot, "iteration at which objectives are sampled")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    mopt::ExperimentConfig cfg = mopt::experiment_config_from_json(load_json(config_path));
    if (!out_override.empty()) cfg.output_dir = out_override;

    mopt::CmdReport report;
    if (cmd_run->parsed())
      report = mopt::cmd_run(cfg, jobs);
    else if (cmd_compare->parsed())
      report = mopt::cmd_compare(cfg, jobs);
    else
      report = mopt::cmd_front(cfg, snapshot, jobs);

    for (const std::string& err : report.errors) std::cerr << "error: " << err << "\n";
    if (report.failed_starts > 0) {
      std::cerr << report.failed_starts << " start(s) failed\n";
      return 3;
    }
    std::cout << "wrote " << cfg.output_dir << "\n";
    return 0;
  } catch (const mopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mopt::Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
