#pragma once

#include <optional>
#include <string>
#include <vector>

#include "heterosim/dd_solver.hpp"
#include "heterosim/materials.hpp"

namespace heterosim {

struct IVPoint {
  double V = 0;
  double I_d_mA = 0;
  bool converged = false;
  int newton_iters = 0;
  std::string note;
};

struct IVCurve {
  std::string swept;           // "Vgs" or "Vds"
  double fixed_V = 0;          // the other terminal's bias
  double v_gs_label = 0;       // for output families
  std::vector<IVPoint> points;
};

struct DcMetrics {
  std::optional<double> V_th_V;
  std::optional<double> SS_mV_dec;
  std::optional<double> g_m_peak_mS;
  double I_peak_mA = 0;
};

// Transfer characteristic at constant V_ds.
IVCurve transfer_sweep(DDSolver& solver, double v_ds = 1.0, double v_gs_start = -8.0,
                       double v_gs_stop = 0.0, double step = 0.25);

// Drain characteristics, one curve per gate bias.
std::vector<IVCurve> output_sweep(DDSolver& solver, const std::vector<double>& v_gs_list,
                                  double v_ds_stop = 40.0, double v_ds_step = 0.5);

// V_th by max-gm extrapolation, SS as the steepest decade in the
// [1e-6, 1e-2] * I_peak window, gm by central differences.
DcMetrics extract_dc_metrics(const IVCurve& curve);

struct BreakdownResult {
  std::string dielectric;
  double L_fp_um = 0;
  double V_BR = 0;            // meaningful when breakdown == true
  bool breakdown = false;     // false: exceeded sweep limit
  bool lower_bound_only = false;  // solver stopped converging; V_BR = last stable V
  std::string criterion = "off-state I_d >= I_crit";
  IVCurve trace;              // I_d(V_ds) up to the last solved point
  double peak_E_100V_MV_cm = 0;   // peak channel field probe at V_ds = 100 V
  double gate_edge_E_100V_MV_cm = 0;
};

// Off-state drain ramp with a coarse step and bisection refinement to 1 V.
BreakdownResult breakdown_voltage(DDSolver& solver, double v_gs_off = -8.0,
                                  double i_crit_mA_mm = 1.0, double v_cap = 1500.0,
                                  double coarse_step = 10.0);

struct FieldPlateStudy {
  std::vector<std::string> dielectrics;
  std::vector<double> lengths_um;
  std::vector<BreakdownResult> cells;  // dielectric-major order
  const BreakdownResult& at(size_t d, size_t l) const {
    return cells[d * lengths_um.size() + l];
  }
};

FieldPlateStudy fieldplate_study(const DeviceSpec& base, const MaterialDb& db,
                                 const PhysicsConfig& physics, Refinement refinement,
                                 int workers,
                                 std::vector<double> lengths_um = {1.0, 1.2, 1.4, 1.6, 1.8, 2.0},
                                 std::vector<std::string> dielectrics = {"HfO2", "Al2O3",
                                                                         "Si3N4"});

// Probe helpers shared with the acceptance suite.
double peak_channel_field_MV_cm(const DDSolver& solver, const SolutionState& state);
double gate_edge_field_MV_cm(const DDSolver& solver, const SolutionState& state);

}  // namespace heterosim
