#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "krylov_td.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2 };

std::string category(const std::exception& e) {
  if (dynamic_cast<const krylov_td::NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const krylov_td::StructuralError*>(&e)) return "structural";
  if (dynamic_cast<const krylov_td::DegeneracyError*>(&e)) return "degeneracy";
  return "runtime";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov methods for time-dependent generators: experiment runner and validation suite"};
  app.require_subcommand(1);

  std::string config_path, out_dir, suite = "fast";
  int threads = 1;
  bool full_scale = false, quiet = false;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Path to the experiment config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
  run->add_option("--threads", threads, "Worker threads for sweep points")->check(CLI::PositiveNumber);
  run->add_flag("--full-scale", full_scale, "Use the full_scale block of the config (fig2 N=24, fig3 N=100)");

  auto* val = app.add_subcommand("validate", "Run the acceptance criteria");
  val->add_option("--suite", suite, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  val->add_flag("--quiet", quiet, "Only print one line per criterion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) {
      const auto cfg = krylov_td::parse_config_file(config_path, full_scale);
      std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
      if (dir.empty()) dir = "out/" + cfg.name;
      const auto rs = krylov_td::run_experiment(cfg, dir, threads);
      std::cout << "wrote " << rs.files.size() << " files + manifest.json to " << rs.out_dir.string() << "\n";
      return kOk;
    }
    const bool ok = krylov_td::run_validation(suite, std::cout, !quiet);
    std::cout << (ok ? "ALL PASS" : "SOME CRITERIA FAILED") << " (suite " << suite << ")\n";
    return ok ? kOk : kFailure;
  } catch (const krylov_td::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error [" << category(e) << "]: " << e.what() << "\n";
    return kFailure;
  }
}
