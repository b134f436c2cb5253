// Temporary timing probe for the continuation hot paths.
#include <chrono>
#include <cstdio>

#include "heterosim/analysis_dc.hpp"
#include "heterosim/dd_solver.hpp"
#include "heterosim/errors.hpp"
#include "heterosim/materials.hpp"

using namespace heterosim;
using clk = std::chrono::steady_clock;

static double secs(clk::time_point a, clk::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main() {
  MaterialDb db =
      MaterialDb::load_file(std::string(HETEROSIM_SOURCE_DIR) + "/data/materials.params");
  DeviceSpec d;
  d.gate_length_um = 0.7;
  d.gate_workfun_eV = 5.23;
  d.fieldplate_length_um = 2.0;
  d.gate_drain_um = 5.0;
  d.gate_source_um = 1.0;
  d.contact_length_um = 0.5;
  d.pass_thickness_um = 0.4;
  d.pass_dielectric = "HfO2";
  d.barrier_thickness_um = 0.030;
  d.al_fraction = 0.295;
  d.channel_thickness_um = 0.180;
  d.implant_peak_cm3 = 1e18;
  d.implant_decay_um = 0.1;
  d.barrier_doping_cm3 = 1e16;
  d.channel_doping_cm3 = 1e15;
  d.width_mm = 1.0;
  d.relaxation = 0.5;
  Mesh2D mesh = build_mesh(d, db, Refinement::Coarse);
  PhysicsConfig phys;
  phys.impact_ionization = false;  // probe
  DDSolver solver(mesh, phys);
  std::printf("mesh %dx%d\n", mesh.nx(), mesh.ny());

  auto t0 = clk::now();
  SolutionState eq = solver.solve_equilibrium();
  auto t1 = clk::now();
  std::printf("equilibrium: %.3f s (%d iters)\n", secs(t0, t1), eq.conv.gummel_iterations);

  Ladder lad(solver, eq);
  t0 = clk::now();
  lad.go({0, 0, -8});
  t1 = clk::now();
  std::printf("gate ramp to -8: %.3f s\n", secs(t0, t1));

  // off-state drain ramp, 0.5 V inner steps
  int newtons = 0, gummels = 0;
  t0 = clk::now();
  for (int k = 1; k <= 100; ++k) {
    lad.go({0, 0.5 * k, -8});
    newtons += lad.state().conv.newton_iterations;
    gummels += lad.state().conv.gummel_iterations;
  }
  t1 = clk::now();
  std::printf("off-state ramp to 50 V (100 steps): %.3f s (%.1f ms/step, n=%d g=%d) Id=%.3g mA\n",
              secs(t0, t1), secs(t0, t1) * 10.0, newtons, gummels, lad.state().I_d_mA);

  t0 = clk::now();
  for (int k = 1; k <= 100; ++k) lad.go({0, 50 + 0.5 * k, -8});
  t1 = clk::now();
  std::printf("off-state 50->100 V: %.3f s  Id=%.3g mA  peakE=%.3g gateE=%.3g\n", secs(t0, t1),
              lad.state().I_d_mA, peak_channel_field_MV_cm(solver, lad.state()),
              gate_edge_field_MV_cm(solver, lad.state()));
  DDSolver::print_profile();
  return 0;
}
