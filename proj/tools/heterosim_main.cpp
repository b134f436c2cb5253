#include <CLI11.hpp>
#include <iostream>

#include "heterosim/errors.hpp"
#include "heterosim/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"heterosim - AlGaN/GaN HEMT drift-diffusion simulator"};
  app.require_subcommand(1);

  std::string config_path;
  heterosim::RunOverrides ov;

  const char* names[] = {"band", "dc", "output", "breakdown", "fp-study", "ac"};
  const char* descs[] = {
      "1D band diagram / 2DEG under the gate",
      "transfer sweep and DC metrics",
      "drain characteristic family",
      "off-state breakdown ramp",
      "breakdown grid over field-plate length and passivation dielectric",
      "small-signal two-port analysis at an operating point"};
  std::string chosen;
  for (int k = 0; k < 6; ++k) {
    CLI::App* sub = app.add_subcommand(names[k], descs[k]);
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", ov.out_dir, "output directory (overrides config)");
    sub->add_option("--workers", ov.workers, "worker threads (overrides config)");
    sub->add_option("--refinement", ov.refinement, "coarse|normal|fine (overrides config)");
    sub->add_option("--materials", ov.materials,
                    "materials file (HETEROSIM_MATERIALS overrides both)");
    sub->callback([&chosen, k, &names]() { chosen = names[k]; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    heterosim::RunConfig cfg = heterosim::load_config(config_path);
    return heterosim::run_command(std::move(cfg), chosen, ov);
  } catch (const heterosim::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
