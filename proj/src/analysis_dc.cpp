#include <cstdio>
#include <cstdlib>
#include "heterosim/analysis_dc.hpp"

#include <algorithm>
#include <cmath>

#include "heterosim/errors.hpp"
#include "heterosim/thread_pool.hpp"

namespace heterosim {

IVCurve transfer_sweep(DDSolver& solver, double v_ds, double v_gs_start, double v_gs_stop,
                       double step) {
  if (step > 0.25 + 1e-12) throw std::domain_error("transfer_sweep: step must be <= 0.25 V");
  IVCurve c;
  c.swept = "Vgs";
  c.fixed_V = v_ds;
  Ladder lad(solver, solver.solve_equilibrium());
  lad.go({0, v_ds, v_gs_start});
  const int n = static_cast<int>(std::round((v_gs_stop - v_gs_start) / step));
  for (int k = 0; k <= n; ++k) {
    const double vg = v_gs_start + k * step;
    IVPoint pt;
    pt.V = vg;
    try {
      const SolutionState& st = lad.go({0, v_ds, vg});
      pt.I_d_mA = st.I_d_mA;
      pt.newton_iters = st.conv.newton_iterations;
      pt.converged = true;
    } catch (const SolverError& e) {
      pt.note = e.what();
    }
    c.points.push_back(pt);
  }
  return c;
}

std::vector<IVCurve> output_sweep(DDSolver& solver, const std::vector<double>& v_gs_list,
                                  double v_ds_stop, double v_ds_step) {
  if (v_ds_step > 0.5 + 1e-12) throw std::domain_error("output_sweep: step must be <= 0.5 V");
  std::vector<IVCurve> out;
  const SolutionState eq = solver.solve_equilibrium();
  for (double vg : v_gs_list) {
    IVCurve c;
    c.swept = "Vds";
    c.fixed_V = vg;
    c.v_gs_label = vg;
    Ladder lad(solver, eq);
    lad.go({0, 0, vg});
    const int n = static_cast<int>(std::round(v_ds_stop / v_ds_step));
    for (int k = 0; k <= n; ++k) {
      const double vd = k * v_ds_step;
      IVPoint pt;
      pt.V = vd;
      try {
        const SolutionState& st = lad.go({0, vd, vg});
        pt.I_d_mA = st.I_d_mA;
        pt.newton_iters = st.conv.newton_iterations;
        pt.converged = true;
      } catch (const SolverError& e) {
        pt.note = e.what();
        c.points.push_back(pt);
        break;  // ladder lost its footing; later points are unreachable
      }
      c.points.push_back(pt);
    }
    out.push_back(std::move(c));
  }
  return out;
}

DcMetrics extract_dc_metrics(const IVCurve& curve) {
  DcMetrics m;
  std::vector<const IVPoint*> pts;
  for (const auto& p : curve.points)
    if (p.converged) pts.push_back(&p);
  if (pts.size() < 3) return m;
  for (const auto* p : pts) m.I_peak_mA = std::max(m.I_peak_mA, p->I_d_mA);

  // gm by central differences; V_th from the max-gm point
  double gm_best = -1;
  size_t k_best = 0;
  std::vector<double> gm(pts.size(), 0.0);
  for (size_t k = 1; k + 1 < pts.size(); ++k) {
    gm[k] = (pts[k + 1]->I_d_mA - pts[k - 1]->I_d_mA) / (pts[k + 1]->V - pts[k - 1]->V);
    if (gm[k] > gm_best) {
      gm_best = gm[k];
      k_best = k;
    }
  }
  if (gm_best > 0) {
    m.g_m_peak_mS = gm_best;
    m.V_th_V = pts[k_best]->V - pts[k_best]->I_d_mA / gm_best;
  }

  // SS: steepest V-per-decade over windows one decade wide inside
  // [1e-6, 1e-2] * I_peak
  const double lo = 1e-6 * m.I_peak_mA, hi = 1e-2 * m.I_peak_mA;
  double ss = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i]->I_d_mA > 0) || pts[i]->I_d_mA < lo || pts[i]->I_d_mA > hi) continue;
    for (size_t j = i + 1; j < pts.size(); ++j) {
      if (!(pts[j]->I_d_mA > 0) || pts[j]->I_d_mA > hi) break;
      const double dec = std::log10(pts[j]->I_d_mA) - std::log10(pts[i]->I_d_mA);
      if (dec < 1.0) continue;
      ss = std::min(ss, (pts[j]->V - pts[i]->V) / dec);
      break;  // first window spanning a decade from i
    }
  }
  if (std::isfinite(ss)) m.SS_mV_dec = ss * 1e3;
  return m;
}

double peak_channel_field_MV_cm(const DDSolver& solver, const SolutionState& state) {
  const Mesh2D& mesh = solver.mesh();
  NodeFields f = solver.fields(state);
  double peak = 0;
  const int iy = mesh.iy_interface;
  for (int ix = 0; ix < mesh.nx(); ++ix)
    peak = std::max(peak, f.Emag_MV_cm[mesh.node(ix, iy)]);
  return peak;
}

double gate_edge_field_MV_cm(const DDSolver& solver, const SolutionState& state) {
  const Mesh2D& mesh = solver.mesh();
  NodeFields f = solver.fields(state);
  const double xg1 = mesh.spec.gate_x1_um();
  double peak = 0;
  const int iy = mesh.iy_interface;
  for (int ix = 0; ix < mesh.nx(); ++ix) {
    if (std::abs(mesh.x_um[ix] - xg1) > 0.1) continue;
    peak = std::max(peak, f.Emag_MV_cm[mesh.node(ix, iy)]);
  }
  return peak;
}

BreakdownResult breakdown_voltage(DDSolver& solver, double v_gs_off, double i_crit_mA_mm,
                                  double v_cap, double coarse_step) {
  BreakdownResult res;
  res.dielectric = solver.mesh().spec.pass_dielectric;
  res.L_fp_um = solver.mesh().spec.fieldplate_length_um;
  res.trace.swept = "Vds";
  res.trace.fixed_V = v_gs_off;
  const double i_crit_mA = i_crit_mA_mm * solver.mesh().spec.width_mm;

  Ladder lad(solver, solver.solve_equilibrium());
  lad.go({0, 0, v_gs_off});

  double v_below = 0, v_above = -1;
  double last_ok = 0;
  bool diverged = false;
  auto sample = [&](double vd) -> std::optional<double> {
    try {
      const SolutionState& st = lad.go({0, vd, v_gs_off});
      if (std::getenv("HS_DBG_BV"))
        std::printf("    bv sample V=%.1f Id=%.4e (g=%d n=%d)\n", vd, st.I_d_mA,
                    st.conv.gummel_iterations, st.conv.newton_iterations);
      last_ok = vd;
      IVPoint pt;
      pt.V = vd;
      pt.I_d_mA = st.I_d_mA;
      pt.converged = true;
      res.trace.points.push_back(pt);
      if (std::abs(vd - 100.0) < 1e-9) {
        res.peak_E_100V_MV_cm = peak_channel_field_MV_cm(solver, st);
        res.gate_edge_E_100V_MV_cm = gate_edge_field_MV_cm(solver, st);
      }
      return st.I_d_mA;
    } catch (const SolverError&) {
      diverged = true;
      return std::nullopt;
    }
  };

  std::vector<double> ramp;
  for (double vd = coarse_step; vd <= v_cap + 1e-9; vd += coarse_step) ramp.push_back(vd);
  if (v_cap >= 100.0 &&
      std::none_of(ramp.begin(), ramp.end(), [](double v) { return std::abs(v - 100.0) < 1e-9; }))
    ramp.insert(std::lower_bound(ramp.begin(), ramp.end(), 100.0), 100.0);  // field probe point
  for (double vd : ramp) {
    auto i = sample(vd);
    if (!i) break;
    if (std::abs(*i) >= i_crit_mA) {
      v_above = vd;
      break;
    }
    v_below = vd;
  }
  auto finish = [&res]() {
    std::sort(res.trace.points.begin(), res.trace.points.end(),
              [](const IVPoint& a, const IVPoint& b) { return a.V < b.V; });
  };
  if (diverged) {
    res.breakdown = true;
    res.lower_bound_only = true;
    res.V_BR = last_ok;
    finish();
    return res;
  }
  if (v_above < 0) {
    res.breakdown = false;  // exceeded sweep limit
    res.V_BR = v_cap;
    finish();
    return res;
  }
  // bisection to 1 V; ladder re-ramps between endpoints as needed
  while (v_above - v_below > 1.0) {
    const double mid = 0.5 * (v_above + v_below);
    auto i = sample(mid);
    if (!i) {
      res.breakdown = true;
      res.lower_bound_only = true;
      res.V_BR = last_ok;
      finish();
      return res;
    }
    if (std::abs(*i) >= i_crit_mA) v_above = mid;
    else v_below = mid;
  }
  res.breakdown = true;
  res.V_BR = v_above;
  finish();
  return res;
}

FieldPlateStudy fieldplate_study(const DeviceSpec& base, const MaterialDb& db,
                                 const PhysicsConfig& physics, Refinement refinement,
                                 int workers, std::vector<double> lengths_um,
                                 std::vector<std::string> dielectrics) {
  FieldPlateStudy study;
  study.lengths_um = lengths_um;
  study.dielectrics = dielectrics;
  study.cells.resize(lengths_um.size() * dielectrics.size());
  std::vector<std::function<void()>> jobs;
  std::vector<std::string> failures(study.cells.size());
  for (size_t d = 0; d < dielectrics.size(); ++d) {
    for (size_t l = 0; l < lengths_um.size(); ++l) {
      const size_t slot = d * lengths_um.size() + l;
      jobs.push_back([&, d, l, slot]() {
        try {
          DeviceSpec spec = base;
          spec.pass_dielectric = dielectrics[d];
          spec.fieldplate_length_um = lengths_um[l];
          Mesh2D mesh = build_mesh(spec, db, refinement);
          DDSolver solver(mesh, physics);
          study.cells[slot] = breakdown_voltage(solver);
        } catch (const std::exception& e) {
          failures[slot] = e.what();
        }
      });
    }
  }
  parallel_run(std::move(jobs), workers);
  for (size_t k = 0; k < failures.size(); ++k)
    if (!failures[k].empty())
      throw SolverError("fieldplate_study cell " + std::to_string(k) + ": " + failures[k]);
  return study;
}

}  // namespace heterosim
