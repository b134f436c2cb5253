// Temporary bring-up probe; not part of the shipped test suite.
#include <cstdio>

#include "heterosim/analysis_dc.hpp"
#include "heterosim/errors.hpp"
#include "heterosim/dd_solver.hpp"
#include "heterosim/materials.hpp"
#include "heterosim/sp1d.hpp"

using namespace heterosim;

static DeviceSpec paper_device() {
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
  return d;
}

int main() {
  MaterialDb db = MaterialDb::load_file(std::string(HETEROSIM_SOURCE_DIR) + "/data/materials.params");
  std::printf("sigma(0.295, 0)   = %.6g C/cm^2 (/q = %.5g cm^-2)\n",
              db.polarization_sheet_charge(0.295, 0.0),
              db.polarization_sheet_charge(0.295, 0.0) / 1.602176634e-19);
  std::printf("sigma(0.295, 0.5) = %.6g (/q = %.5g)\n",
              db.polarization_sheet_charge(0.295, 0.5),
              db.polarization_sheet_charge(0.295, 0.5) / 1.602176634e-19);
  std::printf("Eg(0.295) = %.9g eV, aligned chi = %.9g\n", db.alloy_params(0.295).Eg,
              db.aligned_chi(db.alloy_params(0.295)));

  DeviceSpec dev = paper_device();

  // 1D SP
  sp1d::LayerStack1D st = sp1d::make_gate_stack(dev, db);
  sp1d::BandDiagram1D bd = sp1d::solve_sp(st, 0.0);
  std::printf("SP: iters=%d ns=%.4g peakF=%.4g MV/cm peak_n=%.4g at %.4g nm\n", bd.iterations,
              sp1d::sheet_density(bd), bd.peak_field_MV_cm(), bd.peak_n_cm3(),
              bd.peak_n_depth_nm());

  // 2D mesh + equilibrium
  Mesh2D mesh = build_mesh(dev, db, Refinement::Coarse);
  std::printf("mesh coarse: %d x %d = %d nodes\n", mesh.nx(), mesh.ny(), mesh.nx() * mesh.ny());
  PhysicsConfig phys;
  DDSolver solver(mesh, phys);
  SolutionState eq = solver.solve_equilibrium();
  std::printf("equilibrium: poisson iters=%d Id=%.3g mA\n", eq.conv.gummel_iterations,
              eq.I_d_mA);

  std::fflush(stdout);
  // Newton-only microstep
  try {
    SolutionState t1 = solver.solve_bias({0, 1e-3, 0}, eq, false);
    std::printf("newton-only 1mV: Id=%.6g mA iters=%d\n", t1.I_d_mA, t1.conv.newton_iterations);
  } catch (const SolverError& e) {
    std::printf("newton-only 1mV FAILED: %s\n", e.what());
  }
  std::fflush(stdout);
  try {
    SolutionState t2 = solver.solve_bias({0, 1e-3, 0}, eq, true);
    std::printf("gummel+newton 1mV: Id=%.6g mA g=%d n=%d\n", t2.I_d_mA, t2.conv.gummel_iterations, t2.conv.newton_iterations);
  } catch (const SolverError& e) {
    std::printf("gummel+newton 1mV FAILED: %s\n", e.what());
  }
  std::fflush(stdout);
  // first bias steps
  Ladder lad(solver, eq);
  const SolutionState& s1 = lad.go({0, 0.5, 0});
  std::printf("Vds=0.5: Id=%.5g mA (g=%d n=%d) kirchhoff=%.3g\n", s1.I_d_mA,
              s1.conv.gummel_iterations, s1.conv.newton_iterations, s1.kirchhoff_mA());
  const SolutionState& s2 = lad.go({0, 1.0, 0});
  std::printf("Vds=1.0: Id=%.5g mA (g=%d n=%d) kirchhoff=%.3g\n", s2.I_d_mA,
              s2.conv.gummel_iterations, s2.conv.newton_iterations, s2.kirchhoff_mA());
  const SolutionState& s3 = lad.go({0, 1.0, -7.0});
  std::printf("Vgs=-7: Id=%.5g mA\n", s3.I_d_mA);
  const SolutionState& s4 = lad.go({0, 1.0, -4.0});
  std::printf("Vgs=-4: Id=%.5g mA\n", s4.I_d_mA);

  // channel diagnostics at Vds=1, Vgs=0
  const SolutionState& s5 = lad.go({0, 1.0, 0.0});
  NodeFields f = solver.fields(s5);
  std::printf("x_um  ns_cm2  psi_int  phin_int  n_peak\n");
  for (int ix = 0; ix < mesh.nx(); ix += 4) {
    double ns = 0, npk = 0;
    for (int iy = 0; iy < mesh.ny(); ++iy) {
      if (mesh.y_um[iy] < 0) continue;
      double wy = 0;
      if (iy > 0 && mesh.y_um[iy-1] >= 0) wy += 0.5*(mesh.y_um[iy]-mesh.y_um[iy-1]);
      if (iy+1 < mesh.ny()) wy += 0.5*(mesh.y_um[iy+1]-mesh.y_um[iy]);
      ns += double(s5.n[mesh.node(ix,iy)]) * wy * 1e-4;
      npk = std::max(npk, double(s5.n[mesh.node(ix,iy)]));
    }
    const int ni = mesh.node(ix, mesh.iy_interface);
    std::printf("%7.3f  %.3e  %8.4f  %8.4f  %.3e\n", mesh.x_um[ix], ns,
                double(s5.psi[ni]), f.phi_n_V[ni], npk);
  }
  // vertical cut under the drain contact
  int ixd = 0;
  for (int ix = 0; ix < mesh.nx(); ++ix)
    if (mesh.x_um[ix] <= 7.45) ixd = ix;
  std::printf("vertical cut x=%.3f um\n  y_um    psi      phin     n_cm3   doping\n", mesh.x_um[ixd]);
  for (int iy = 0; iy < mesh.ny(); ++iy) {
    if (mesh.y_um[iy] < -1e-12) continue;
    const int m = mesh.node(ixd, iy);
    std::printf("%8.4f %8.4f %8.4f %.3e %.3e\n", mesh.y_um[iy], double(s5.psi[m]), f.phi_n_V[m],
                double(s5.n[m]), mesh.node_doping_cm3[m]);
  }
  return 0;
}
