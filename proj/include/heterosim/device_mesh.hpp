#pragma once

#include <string>
#include <vector>

#include "heterosim/materials.hpp"

namespace heterosim {

// Lateral layout, y measured downward from the barrier surface:
//   x: | source | L_gs | gate (L_g) | L_gd | drain |
//   y: passivation [-t_pass, 0] / barrier [0, t_bar] / channel [t_bar, t_bar + t_ch]
// The gate field plate sits on top of the passivation, running from the
// gate's drain-side edge toward the drain; its stem fills the passivation
// column above the gate and is part of the gate equipotential.
struct DeviceSpec {
  double gate_length_um = 0;        // L_g
  double gate_workfun_eV = 0;       // metal work function, gate and field plate
  double fieldplate_length_um = 0;  // L_fp, 0 disables the plate
  double gate_drain_um = 0;         // L_gd
  double gate_source_um = 1.0;      // L_gs
  double contact_length_um = 0.5;   // ohmic window length
  double pass_thickness_um = 0;     // t_pass
  std::string pass_dielectric;      // HfO2 | Al2O3 | Si3N4
  double barrier_thickness_um = 0;  // t_bar
  double al_fraction = 0;           // x in Al_xGa_{1-x}N
  double channel_thickness_um = 0;  // t_ch
  double implant_peak_cm3 = 0;      // source/drain Gaussian peak
  double implant_decay_um = 0.1;    // characteristic length of the implant
  double barrier_doping_cm3 = 0;    // uniform donor background
  double channel_doping_cm3 = 0;    // uniform donor background
  double width_mm = 1.0;            // W, current normalization
  double relaxation = 0;            // barrier strain relaxation, 0 = fully strained

  double total_length_um() const {
    return 2 * contact_length_um + gate_source_um + gate_length_um + gate_drain_um;
  }
  double gate_x0_um() const { return contact_length_um + gate_source_um; }
  double gate_x1_um() const { return gate_x0_um() + gate_length_um; }
  double drain_x0_um() const { return total_length_um() - contact_length_um; }
  double semiconductor_depth_um() const { return barrier_thickness_um + channel_thickness_um; }
};

// All violated invariants at once; empty result means the spec is usable.
std::vector<std::string> validate_spec(const DeviceSpec& spec);
void validate_spec_or_throw(const DeviceSpec& spec);

// Net donor concentration N_D - N_A [cm^-3] at (x, y) in um. Throws
// std::domain_error outside the semiconductor.
double net_doping(const DeviceSpec& spec, double x_um, double y_um);

enum class Region : unsigned char { Passivation, Barrier, Channel, Contact };
enum class Terminal : unsigned char { None, Source, Drain, Gate };
enum class Refinement { Coarse, Normal, Fine };

Refinement refinement_from_string(const std::string& s);
const char* to_string(Refinement r);
const char* to_string(Region r);
const char* to_string(Terminal t);

// Nonuniform tensor-product mesh. Node m = ix * ny + iy; cell c indexes the
// lower-left node of each (ix, iy) cell as ix * (ny - 1) + iy.
struct Mesh2D {
  DeviceSpec spec;
  Refinement refinement = Refinement::Normal;
  std::vector<double> x_um, y_um;  // strictly increasing
  std::vector<Region> cell_region;
  std::vector<Terminal> node_terminal;
  std::vector<signed char> node_material;   // index into `materials`, -1 in dielectric/metal
  std::vector<double> node_doping_cm3;      // 0 outside the semiconductor
  std::vector<double> node_sheet_C_cm2;     // fixed interface charge assigned to the node
  std::vector<MaterialParams> materials;    // [0] channel GaN, [1] barrier alloy
  double pass_eps_r = 0;
  int iy_surface = -1;    // index of the y = 0 line
  int iy_interface = -1;  // index of the y = t_bar line

  int nx() const { return static_cast<int>(x_um.size()); }
  int ny() const { return static_cast<int>(y_um.size()); }
  int node(int ix, int iy) const { return ix * ny() + iy; }
  int cell(int ix, int iy) const { return ix * (ny() - 1) + iy; }
  bool node_is_semiconductor(int ix, int iy) const;
};

Mesh2D build_mesh(const DeviceSpec& spec, const MaterialDb& db, Refinement refinement);

}  // namespace heterosim
