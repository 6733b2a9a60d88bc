#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "memeguard/pipeline.hpp"

namespace mg = memeguard;

int main(int argc, char** argv) {
  CLI::App app{"memeguard: hateful-meme detection pipeline"};
  app.set_version_flag("--version", std::string(mg::kVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir, preset;
  app.add_option("-c,--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "global seed (overrides config)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides config)");
  auto* preset_opt = app.add_option("--preset", preset, "training preset: visualbert | uniter-appendix");

  const char* help[] = {"tag meme texts with the lexicon",
                        "train the fusion classifier",
                        "write prediction CSVs with a trained model",
                        "combine base-model predictions",
                        "report AUROC and accuracy",
                        "incidence and correlation of tags vs labels",
                        "run the whole pipeline on synthetic data"};
  for (std::size_t i = 0; i < std::size(mg::kSubcommands); ++i) {
    auto* sub = app.add_subcommand(std::string(mg::kSubcommands[i]), help[i]);
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    mg::PipelineConfig cfg;
    if (!config_path.empty()) {
      cfg = mg::load_config(config_path);
    } else {
      cfg.propagate_seed();
    }
    mg::Overrides ov;
    if (seed_opt->count()) ov.seed = seed;
    if (out_opt->count()) ov.output_dir = std::filesystem::path(out_dir);
    if (preset_opt->count()) ov.preset = preset;
    mg::apply_overrides(cfg, ov);

    const std::string sub = app.get_subcommands().front()->get_name();
    mg::run(sub, cfg, std::cerr);
    return 0;
  } catch (const mg::ConfigError& e) {
    std::cerr << "memeguard: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "memeguard: error: " << e.what() << "\n";
    return 1;
  }
}
