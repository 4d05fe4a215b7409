// Command-line front end: experiment dispatch over JSON run configurations.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "atomcav/dispatch.hpp"

using namespace atomcav;

int main(int argc, char** argv) {
  CLI::App app{"atomcav: driven-dissipative atom-cavity simulator"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, mode, input;
  std::uint64_t seed = 0;
  bool seed_set = false, mode_set = false, out_set = false;
  int workers = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--preset", preset,
                    "paper-theory | paper-experiment | figS5-finite-size | "
                    "figS11-longtime");
    sub->add_option("--seed", seed, "master seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--workers", workers, "worker thread count");
    sub->add_option("--out", out_dir, "output directory")
        ->each([&](const std::string&) { out_set = true; });
    sub->add_option("--mode", mode, "mf | twa")
        ->check(CLI::IsMember({"mf", "twa"}))
        ->each([&](const std::string&) { mode_set = true; });
  };

  const std::vector<std::string> experiments = {
      "simulate",   "ensemble",   "tongue",      "locking-curve",
      "detuning-map", "robustness", "ratio-scan", "finite-size",
      "momentum-dynamics", "analyze"};
  for (const std::string& name : experiments) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub);
    if (name == "analyze")
      sub->add_option("--input", input, "run directory to analyze");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "config error: cannot open " << config_path << '\n';
        return kExitConfig;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      j = json::parse(ss.str());
      if (!j.is_object()) {
        std::cerr << "config error: config must be a JSON object\n";
        return kExitConfig;
      }
    }
    if (!preset.empty()) j["preset"] = preset;

    RunConfig cfg = parse_config_json(j);
    cfg.experiment = app.get_subcommands().front()->get_name();
    if (seed_set) cfg.seed = seed;
    if (out_set) cfg.out = out_dir;
    if (mode_set) cfg.mode = mode;
    if (!input.empty()) cfg.analyze_input = input;
    if (workers >= 0) {
      cfg.workers = workers;
    } else if (cfg.workers == 0) {
      if (const char* env = std::getenv("ATOMCAV_WORKERS"))
        cfg.workers = std::atoi(env);
    }
    cfg.validate();
    return dispatch(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}
