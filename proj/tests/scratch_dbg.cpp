#include <cstdio>
#include "heterosim/dd_solver.hpp"
#include "heterosim/errors.hpp"
#include "heterosim/materials.hpp"
using namespace heterosim;
int main() {
  MaterialDb db = MaterialDb::load_file(std::string(HETEROSIM_SOURCE_DIR) + "/data/materials.params");
  DeviceSpec d;
  d.gate_length_um = 0.7; d.gate_workfun_eV = 5.23; d.fieldplate_length_um = 2.0;
  d.gate_drain_um = 5.0;  d.gate_source_um = 1.0;   d.contact_length_um = 0.5;
  d.pass_thickness_um = 0.4; d.pass_dielectric = "HfO2"; d.barrier_thickness_um = 0.030;
  d.al_fraction = 0.295; d.channel_thickness_um = 0.180; d.implant_peak_cm3 = 1e18;
  d.implant_decay_um = 0.1; d.barrier_doping_cm3 = 1e16; d.channel_doping_cm3 = 1e15;
  d.width_mm = 1.0; d.relaxation = 0.5;
  Mesh2D mesh = build_mesh(d, db, Refinement::Coarse);
  PhysicsConfig phys;
  phys.impact_ionization = true;
  DDSolver solver(mesh, phys);
  SolutionState eq = solver.solve_equilibrium();
  std::printf("eq: Is=%.4e Id=%.4e Ig=%.4e sum=%.4e\n", eq.I_s_mA, eq.I_d_mA, eq.I_g_mA, eq.kirchhoff_mA());
  try {
    SolutionState s = solver.solve_bias({0, 0, -0.002}, eq, true);
    std::printf("step: Is=%.4e Id=%.4e Ig=%.4e sum=%.4e n=%d\n", s.I_s_mA, s.I_d_mA, s.I_g_mA, s.kirchhoff_mA(), s.conv.newton_iterations);
  } catch (const SolverError& e) { std::printf("FAILED: %s\n", e.what()); }
  return 0;
}
