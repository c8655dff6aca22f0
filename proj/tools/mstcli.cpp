// Command-line front end: `run` integrates a configured scenario, `reduce`
// performs a one-shot MaxEnt or flux reduction, `verify` runs the structural
// check suite. Exit codes: 0 pass, 1 usage or config error, 2 numerical
// failure, 3 verification check failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mst/scenario.hpp"
#include "mst/verify.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mst::ConfigError("config: cannot open file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw mst::ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiscale thermodynamics toolbox"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string checks_arg;
  std::string inject_arg;
  std::uint64_t seed = 1;

  CLI::App* run = app.add_subcommand("run", "integrate a configured scenario");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--seed", seed, "seed echoed into the outputs");

  CLI::App* reduce =
      app.add_subcommand("reduce", "one-shot MaxEnt or flux reduction");
  reduce->add_option("--config", config_path, "JSON config file")->required();
  reduce->add_option("--out", out_dir, "output directory");
  reduce->add_option("--seed", seed, "seed echoed into the outputs");

  CLI::App* verify = app.add_subcommand("verify", "run structural checks");
  verify->add_option("--checks", checks_arg,
                     "comma-separated check names (default: all)");
  verify->add_option("--seed", seed, "seed for randomized checks");
  verify->add_option("--inject", inject_arg,
                     "fault fixture: fp-sign or quad-weight");
  verify->add_option("--out", out_dir, "directory for verify_report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) {
      mst::ScenarioConfig cfg = mst::load_config_file(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (run->count("--seed") > 0) cfg.seed = seed;
      const mst::ScenarioOutcome oc = mst::run_scenario(cfg);
      std::cout << (oc.exit_code == 0 ? "ok: " : "numerical failure: ")
                << cfg.out_dir << "/summary.json\n";
      return oc.exit_code;
    }

    if (reduce->parsed()) {
      const nlohmann::json j = load_json(config_path);
      const std::string dir = out_dir.empty() ? "out" : out_dir;
      const mst::ScenarioOutcome oc = mst::run_reduce(j, dir);
      std::cout << (oc.exit_code == 0 ? "ok: " : "numerical failure: ") << dir
                << "/summary.json\n";
      return oc.exit_code;
    }

    mst::FaultInjection inject;
    if (inject_arg == "fp-sign") {
      inject.flip_fp_sign = true;
    } else if (inject_arg == "quad-weight") {
      inject.corrupt_quadrature = true;
    } else if (!inject_arg.empty()) {
      std::cerr << "error: unknown --inject value '" << inject_arg
                << "' (use fp-sign or quad-weight)\n";
      return 1;
    }

    const std::vector<std::string> names = verify->count("--checks") > 0
                                               ? split_list(checks_arg)
                                               : mst::verify_check_names();
    const mst::VerifyReport report = mst::run_verify(names, seed, inject);
    const nlohmann::json out = report.to_json();
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      std::ofstream f(
          (std::filesystem::path(out_dir) / "verify_report.json").string());
      f << out.dump(2) << "\n";
    }
    std::cout << out.dump(2) << "\n";
    if (!report.warning.empty())
      std::cerr << "warning: " << report.warning << "\n";
    return report.all_pass ? 0 : 3;
  } catch (const mst::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
