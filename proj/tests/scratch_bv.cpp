#include <chrono>
#include <cstdio>
#include "heterosim/analysis_dc.hpp"
#include "heterosim/materials.hpp"
using namespace heterosim;
int main(int argc, char** argv) {
  MaterialDb db = MaterialDb::load_file(std::string(HETEROSIM_SOURCE_DIR) + "/data/materials.params");
  DeviceSpec d;
  d.gate_length_um = 0.7; d.gate_workfun_eV = 5.23; d.fieldplate_length_um = 2.0;
  d.gate_drain_um = 5.0;  d.gate_source_um = 1.0;   d.contact_length_um = 0.5;
  d.pass_thickness_um = 0.4; d.pass_dielectric = "HfO2"; d.barrier_thickness_um = 0.030;
  d.al_fraction = 0.295; d.channel_thickness_um = 0.180; d.implant_peak_cm3 = 1e18;
  d.implant_decay_um = 0.1; d.barrier_doping_cm3 = 1e16; d.channel_doping_cm3 = 1e15;
  d.width_mm = 1.0; d.relaxation = 0.5;
  if (argc > 1) d.fieldplate_length_um = std::atof(argv[1]);
  if (argc > 2) d.pass_dielectric = argv[2];
  Mesh2D mesh = build_mesh(d, db, Refinement::Coarse);
  PhysicsConfig phys;
  phys.impact_ionization = true;
  DDSolver solver(mesh, phys);
  auto t0 = std::chrono::steady_clock::now();
  BreakdownResult r = breakdown_voltage(solver);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("L_fp=%.2f diel=%s: V_BR=%.1f V (reached=%d lower_bound=%d) peakE@100V=%.3f gateE=%.3f wall=%.1f s\n",
              d.fieldplate_length_um, d.pass_dielectric.c_str(), r.V_BR, int(r.breakdown),
              int(r.lower_bound_only), r.peak_E_100V_MV_cm, r.gate_edge_E_100V_MV_cm, wall);
  int k = 0;
  for (const auto& p : r.trace.points) {
    if (++k % 10 == 0 || p.V > r.V_BR - 60)
      std::printf("  V=%.0f Id=%.4e\n", p.V, p.I_d_mA);
  }
  return 0;
}
