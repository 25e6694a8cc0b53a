#include "v2xsim/cli.hpp"

#include <cstdlib>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2xsim/config.hpp"
#include "v2xsim/engine.hpp"
#include "v2xsim/output.hpp"

namespace v2xsim::cli {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Downlink system-level simulator for roadside units on a highway"};
  std::string config_path = "configs/paper.ini";
  std::string output_dir;
  std::uint64_t seed = 0;
  int drops = 0;
  int ttis = 0;
  std::string experiments;
  int threads = 1;
  app.add_option("--config", config_path, "Experiment config file")->capture_default_str();
  app.add_option("--output-dir", output_dir,
                 "Output directory (default: $V2XSIM_OUTPUT, else ./v2xsim_out)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed; drop d uses seed + d");
  auto* drops_opt = app.add_option("--drops", drops, "Drops per experiment")->check(CLI::PositiveNumber);
  auto* ttis_opt = app.add_option("--ttis", ttis, "TTIs (ms) per drop")->check(CLI::PositiveNumber);
  app.add_option("--experiments", experiments, "Comma-separated experiment labels to run (default: all)");
  app.add_option("--threads", threads, "Worker threads across drops and experiments")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  if (output_dir.empty()) {
    const char* env = std::getenv("V2XSIM_OUTPUT");
    output_dir = env != nullptr && *env != '\0' ? env : "v2xsim_out";
  }

  try {
    BatchConfig batch = parse_config_file(config_path);
    std::vector<ExperimentSpec> selected;
    if (experiments.empty()) {
      selected = batch.experiments;
    } else {
      for (const std::string& label : split_list(experiments)) {
        bool found = false;
        for (const auto& spec : batch.experiments) {
          if (spec.label == label) {
            selected.push_back(spec);
            found = true;
          }
        }
        if (!found) throw ConfigError("unknown experiment '" + label + "'");
      }
    }
    for (auto& spec : selected) {
      if (*seed_opt) spec.config.engine.master_seed = seed;
      if (*drops_opt) spec.config.engine.num_drops = drops;
      if (*ttis_opt) spec.config.engine.ttis_per_drop = ttis;
      spec.config.validate();
    }
    const auto results = engine::run_batch(selected, threads);
    output::write_batch(output_dir, results);
    output::print_summary(out, results);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace v2xsim::cli
