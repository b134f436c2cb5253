#pragma once

#include <string>
#include <vector>

#include "heterosim/device_mesh.hpp"
#include "heterosim/physics_models.hpp"

namespace heterosim {

// Fully resolved run configuration: every field is either from the file or a
// documented default. Unknown keys, missing units and malformed numbers are
// collected and reported together.
struct RunConfig {
  DeviceSpec device;
  PhysicsConfig physics;
  std::string materials_file = "data/materials.params";

  // transfer sweep
  double tr_v_ds = 1.0, tr_v_start = -8.0, tr_v_stop = 0.0, tr_step = 0.25;
  // output sweep
  std::vector<double> out_v_gs = {-4, -2, 0, 2, 4};
  double out_v_ds_stop = 40.0, out_step = 0.5;
  // breakdown
  double br_v_gs_off = -8.0, br_i_crit_mA_mm = 1.0, br_v_cap = 1500.0, br_coarse_step = 10.0;
  // field-plate study
  std::vector<double> fp_lengths_um = {1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
  std::vector<std::string> fp_dielectrics = {"HfO2", "Al2O3", "Si3N4"};
  // ac
  double ac_v_gs = -2.0, ac_v_ds = 20.0;
  double ac_f_min = 1e6, ac_f_max = 100e9;
  int ac_points_per_decade = 40;
  double ac_r_gate_ohm_mm = 1.0;
  bool ac_s2p = false;
  // run
  std::string out_dir = "out";
  int workers = 2;
  std::string refinement = "normal";
};

RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

// Canonical echo with defaults expanded; parses back to an equal config.
std::string config_to_text(const RunConfig& c);
bool config_equal(const RunConfig& a, const RunConfig& b);

}  // namespace heterosim
