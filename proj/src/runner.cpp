#include "heterosim/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "heterosim/analysis_ac.hpp"
#include "heterosim/analysis_dc.hpp"
#include "heterosim/csv.hpp"
#include "heterosim/errors.hpp"
#include "heterosim/sp1d.hpp"

namespace heterosim {

namespace fs = std::filesystem;
using nlohmann::json;
using io::format_g9;

namespace {

struct Ctx {
  RunConfig cfg;
  MaterialDb db;
  fs::path out;
  json metrics;
  long long points_solved = 0;
  long long newton_total = 0;
};

std::string gp_prelude(const std::string& title) {
  return "set datafile separator ','\nset grid\nset title '" + title + "'\n";
}

void write_gp(const Ctx& c, const std::string& name, const std::string& body) {
  io::write_text_atomic((c.out / name).string(), body);
}

void tally(Ctx& c, const IVCurve& curve) {
  for (const auto& p : curve.points) {
    if (p.converged) ++c.points_solved;
    c.newton_total += p.newton_iters;
  }
}

void cmd_band(Ctx& c) {
  sp1d::LayerStack1D stack = sp1d::make_gate_stack(c.cfg.device, c.db, c.cfg.physics.T_L);
  sp1d::BandDiagram1D bd = sp1d::solve_sp(stack, 0.0);
  io::Table t;
  t.unit_header = "z_nm,Ec_eV,Ev_eV,n_cm-3,F_MV_cm";
  for (size_t i = 0; i < bd.z_nm.size(); ++i)
    t.rows.push_back({bd.z_nm[i], bd.Ec_eV[i], bd.Ev_eV[i], bd.n_cm3[i], bd.F_MV_cm[i]});
  io::write_csv((c.out / "band.csv").string(), t);

  const double ns = sp1d::sheet_density(bd);
  std::ostringstream sum;
  sum << "n_s_cm-2 = " << format_g9(ns) << "\n";
  for (size_t s = 0; s < bd.subband_E_eV.size(); ++s)
    sum << "E_" << s + 1 << "_eV = " << format_g9(bd.subband_E_eV[s]) << "\n";
  sum << "peak_field_MV_cm = " << format_g9(bd.peak_field_MV_cm()) << "\n";
  sum << "peak_n_cm-3 = " << format_g9(bd.peak_n_cm3()) << "\n";
  sum << "peak_n_depth_nm = " << format_g9(bd.peak_n_depth_nm()) << "\n";
  sum << "iterations = " << bd.iterations << "\n";
  io::write_text_atomic((c.out / "band_summary.txt").string(), sum.str());

  c.metrics["n_s_cm2"] = ns;
  c.metrics["peak_field_MV_cm"] = bd.peak_field_MV_cm();
  c.metrics["peak_n_cm3"] = bd.peak_n_cm3();
  c.metrics["peak_n_depth_nm"] = bd.peak_n_depth_nm();
  c.metrics["subbands_eV"] = bd.subband_E_eV;

  write_gp(c, "band.gp",
           gp_prelude("Band diagram and carrier profile") +
               "set xlabel 'depth (nm)'\nset ylabel 'energy (eV)'\nset y2label 'n (cm^-3)'\n"
               "set y2tics\nset logscale y2\n"
               "plot 'band.csv' using 1:2 with lines title 'Ec', \\\n"
               "     'band.csv' using 1:3 with lines title 'Ev', \\\n"
               "     'band.csv' using 1:4 axes x1y2 with lines title 'n'\n");
}

Mesh2D make_mesh(const Ctx& c) {
  return build_mesh(c.cfg.device, c.db, refinement_from_string(c.cfg.refinement));
}

void write_curve_csv(const Ctx& c, const std::string& name, const IVCurve& curve,
                     const char* header) {
  io::Table t;
  t.unit_header = header;
  for (const auto& p : curve.points)
    if (p.converged) t.rows.push_back({p.V, p.I_d_mA});
  io::write_csv((c.out / name).string(), t);
}

void cmd_dc(Ctx& c) {
  Mesh2D mesh = make_mesh(c);
  DDSolver solver(mesh, c.cfg.physics);
  IVCurve curve = transfer_sweep(solver, c.cfg.tr_v_ds, c.cfg.tr_v_start, c.cfg.tr_v_stop,
                                 c.cfg.tr_step);
  tally(c, curve);
  write_curve_csv(c, "transfer.csv", curve, "Vgs_V,Id_mA");
  DcMetrics m = extract_dc_metrics(curve);
  if (m.V_th_V) c.metrics["V_th_V"] = *m.V_th_V;
  if (m.SS_mV_dec) c.metrics["SS_mV_dec"] = *m.SS_mV_dec;
  if (m.g_m_peak_mS) c.metrics["g_m_peak_mS"] = *m.g_m_peak_mS;
  c.metrics["I_peak_mA"] = m.I_peak_mA;
  write_gp(c, "transfer.gp",
           gp_prelude("Transfer characteristic") +
               "set xlabel 'Vgs (V)'\nset ylabel 'Id (mA)'\n"
               "plot 'transfer.csv' using 1:2 with linespoints title 'Id'\n");
  write_gp(c, "subthreshold.gp",
           gp_prelude("Subthreshold characteristic") +
               "set xlabel 'Vgs (V)'\nset ylabel 'Id (mA)'\nset logscale y\n"
               "plot 'transfer.csv' using 1:2 with linespoints title 'Id'\n");
}

void cmd_output(Ctx& c) {
  Mesh2D mesh = make_mesh(c);
  DDSolver solver(mesh, c.cfg.physics);
  auto family = output_sweep(solver, c.cfg.out_v_gs, c.cfg.out_v_ds_stop, c.cfg.out_step);
  io::Table t;
  t.unit_header = "Vgs_V,Vds_V,Id_mA";
  for (const auto& curve : family) {
    tally(c, curve);
    for (const auto& p : curve.points)
      if (p.converged) t.rows.push_back({curve.v_gs_label, p.V, p.I_d_mA});
  }
  io::write_csv((c.out / "output.csv").string(), t);
  double peak = 0;
  for (const auto& curve : family)
    for (const auto& p : curve.points)
      if (p.converged) peak = std::max(peak, p.I_d_mA);
  c.metrics["I_peak_mA"] = peak;
  write_gp(c, "output.gp",
           gp_prelude("Drain characteristics") +
               "set xlabel 'Vds (V)'\nset ylabel 'Id (mA)'\n"
               "plot for [vg in system(\"awk -F, 'NR>1 {print $1}' output.csv | sort -u\")] \\\n"
               "  'output.csv' using (strcol(1) eq vg ? $2 : NaN):3 with lines title 'Vgs='.vg\n");
}

void cmd_breakdown(Ctx& c) {
  RunConfig cfg = c.cfg;
  cfg.physics.impact_ionization = true;
  Mesh2D mesh = build_mesh(cfg.device, c.db, refinement_from_string(cfg.refinement));
  DDSolver solver(mesh, cfg.physics);
  BreakdownResult r = breakdown_voltage(solver, cfg.br_v_gs_off, cfg.br_i_crit_mA_mm,
                                        cfg.br_v_cap, cfg.br_coarse_step);
  tally(c, r.trace);
  write_curve_csv(c, "breakdown.csv", r.trace, "Vds_V,Id_mA");
  c.metrics["V_BR_V"] = r.V_BR;
  c.metrics["breakdown_reached"] = r.breakdown;
  c.metrics["lower_bound_only"] = r.lower_bound_only;
  c.metrics["criterion"] = r.criterion;
  c.metrics["peak_E_100V_MV_cm"] = r.peak_E_100V_MV_cm;
  write_gp(c, "breakdown.gp",
           gp_prelude("Off-state breakdown") +
               "set xlabel 'Vds (V)'\nset ylabel 'Id (mA)'\nset logscale y\n"
               "plot 'breakdown.csv' using 1:($2>0?$2:NaN) with linespoints title 'Id'\n");
}

void cmd_fp_study(Ctx& c) {
  RunConfig cfg = c.cfg;
  cfg.physics.impact_ionization = true;
  FieldPlateStudy st = fieldplate_study(cfg.device, c.db, cfg.physics,
                                        refinement_from_string(cfg.refinement), cfg.workers,
                                        cfg.fp_lengths_um, cfg.fp_dielectrics);
  json grid = json::array();
  std::ostringstream table;
  table << "dielectric  L_fp_um  V_BR_V  peak_E_100V_MV_cm  gate_edge_E_100V_MV_cm\n";
  for (size_t d = 0; d < st.dielectrics.size(); ++d) {
    for (size_t l = 0; l < st.lengths_um.size(); ++l) {
      const BreakdownResult& r = st.at(d, l);
      tally(c, r.trace);
      char name[128];
      std::snprintf(name, sizeof name, "fp_%s_L%.1f.csv", st.dielectrics[d].c_str(),
                    st.lengths_um[l]);
      write_curve_csv(c, name, r.trace, "Vds_V,Id_mA");
      grid.push_back({{"dielectric", st.dielectrics[d]},
                      {"L_fp_um", st.lengths_um[l]},
                      {"V_BR_V", r.V_BR},
                      {"breakdown_reached", r.breakdown},
                      {"peak_E_100V_MV_cm", r.peak_E_100V_MV_cm},
                      {"gate_edge_E_100V_MV_cm", r.gate_edge_E_100V_MV_cm}});
      table << st.dielectrics[d] << "  " << format_g9(st.lengths_um[l]) << "  "
            << format_g9(r.V_BR) << "  " << format_g9(r.peak_E_100V_MV_cm) << "  "
            << format_g9(r.gate_edge_E_100V_MV_cm) << "\n";
    }
    std::string gp = gp_prelude("Breakdown, " + st.dielectrics[d] + " passivation") +
                     "set xlabel 'Vds (V)'\nset ylabel 'Id (mA)'\nset logscale y\nplot \\\n";
    for (size_t l = 0; l < st.lengths_um.size(); ++l) {
      char name[128];
      std::snprintf(name, sizeof name, "fp_%s_L%.1f.csv", st.dielectrics[d].c_str(),
                    st.lengths_um[l]);
      gp += std::string("  '") + name + "' using 1:($2>0?$2:NaN) with lines title 'L=" +
            format_g9(st.lengths_um[l]) + "'" +
            (l + 1 < st.lengths_um.size() ? ", \\\n" : "\n");
    }
    write_gp(c, "breakdown_" + st.dielectrics[d] + ".gp", gp);
  }
  c.metrics["grid"] = grid;
  io::write_text_atomic((c.out / "fp_summary.txt").string(), table.str());
}

void cmd_ac(Ctx& c) {
  Mesh2D mesh = make_mesh(c);
  DDSolver solver(mesh, c.cfg.physics);
  Ladder lad(solver, solver.solve_equilibrium());
  const SolutionState& op = lad.go({0, c.cfg.ac_v_ds, c.cfg.ac_v_gs});
  c.points_solved += 1;
  auto freqs = log_frequency_grid(c.cfg.ac_f_min, c.cfg.ac_f_max, c.cfg.ac_points_per_decade);
  TwoPortSpectrum sp = solve_spectrum(solver, op, freqs, c.cfg.ac_r_gate_ohm_mm,
                                      c.cfg.workers);
  io::Table t;
  t.unit_header =
      "f_Hz,ReY11_S,ImY11_S,ReY12_S,ImY12_S,ReY21_S,ImY21_S,ReY22_S,ImY22_S,"
      "ReS11,ImS11,ReS12,ImS12,ReS21,ImS21,ReS22,ImS22,h21_dB,U_dB,K,Gma_dB,Gms_dB";
  for (size_t k = 0; k < sp.f_Hz.size(); ++k) {
    const auto& Y = sp.Y[k];
    const auto& S = sp.S[k];
    t.rows.push_back({sp.f_Hz[k], Y(0, 0).real(), Y(0, 0).imag(), Y(0, 1).real(),
                      Y(0, 1).imag(), Y(1, 0).real(), Y(1, 0).imag(), Y(1, 1).real(),
                      Y(1, 1).imag(), S(0, 0).real(), S(0, 0).imag(), S(0, 1).real(),
                      S(0, 1).imag(), S(1, 0).real(), S(1, 0).imag(), S(1, 1).real(),
                      S(1, 1).imag(), sp.h21_dB[k], sp.U_dB[k], sp.K[k], sp.Gma_dB[k],
                      sp.Gms_dB[k]});
  }
  io::write_csv((c.out / "ac.csv").string(), t);
  if (c.cfg.ac_s2p) io::write_text_atomic((c.out / "ac.s2p").string(), to_touchstone(sp));

  QuasiStaticFoms q = quasi_static_foms(sp, c.cfg.ac_r_gate_ohm_mm / c.cfg.device.width_mm);
  std::ostringstream sum;
  sum << "operating_point = Vgs " << format_g9(c.cfg.ac_v_gs) << " V, Vds "
      << format_g9(c.cfg.ac_v_ds) << " V\n";
  sum << "width_mm = " << format_g9(c.cfg.device.width_mm) << "\n";
  sum << "r_gate_ohm_mm = " << format_g9(c.cfg.ac_r_gate_ohm_mm) << "\n";
  auto fom_line = [&](const char* name, const FomResult& f) {
    sum << name << " = " << (f.f_Hz ? format_g9(*f.f_Hz) : std::string("not-determinable"))
        << (f.extrapolated ? " (extrapolated)" : "") << "\n";
  };
  fom_line("f_t_Hz", sp.f_t);
  fom_line("f_max_Hz", sp.f_max);
  sum << "quasi_static_f_t_Hz = " << format_g9(q.f_t_Hz) << "\n";
  sum << "quasi_static_f_max_Hz = " << format_g9(q.f_max_Hz) << "\n";
  sum << "g_m_S = " << format_g9(q.g_m_S) << "\nC_gs_F = " << format_g9(q.C_gs_F)
      << "\nC_gd_F = " << format_g9(q.C_gd_F) << "\nR_out_ohm = " << format_g9(q.R_out_ohm)
      << "\n";
  io::write_text_atomic((c.out / "ac_summary.txt").string(), sum.str());

  if (sp.f_t.f_Hz) {
    c.metrics["f_t_Hz"] = *sp.f_t.f_Hz;
    c.metrics["f_t_extrapolated"] = sp.f_t.extrapolated;
  }
  if (sp.f_max.f_Hz) {
    c.metrics["f_max_Hz"] = *sp.f_max.f_Hz;
    c.metrics["f_max_extrapolated"] = sp.f_max.extrapolated;
  }
  c.metrics["quasi_static_f_t_Hz"] = q.f_t_Hz;
  c.metrics["quasi_static_f_max_Hz"] = q.f_max_Hz;
  c.metrics["g_m_S"] = q.g_m_S;
  c.metrics["C_gs_F"] = q.C_gs_F;
  c.metrics["C_gd_F"] = q.C_gd_F;

  write_gp(c, "gains.gp",
           gp_prelude("Current gain and unilateral gain") +
               "set xlabel 'f (Hz)'\nset ylabel 'gain (dB)'\nset logscale x\n"
               "plot 'ac.csv' using 1:18 with lines title '|h21|', \\\n"
               "     'ac.csv' using 1:19 with lines title 'U', 0 with lines title '0 dB'\n");
  write_gp(c, "stability.gp",
           gp_prelude("Maximum available/stable gain") +
               "set xlabel 'f (Hz)'\nset ylabel 'gain (dB)'\nset logscale x\n"
               "plot 'ac.csv' using 1:21 with lines title 'Gma', \\\n"
               "     'ac.csv' using 1:22 with lines title 'Gms'\n");
}

}  // namespace

int run_command(RunConfig cfg, const std::string& command, const RunOverrides& ov) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.refinement.empty()) cfg.refinement = ov.refinement;
    if (ov.workers > 0) cfg.workers = ov.workers;
    std::string materials = cfg.materials_file;
    if (!ov.materials.empty()) materials = ov.materials;
    if (const char* env = std::getenv("HETEROSIM_MATERIALS")) materials = env;

    Ctx c{std::move(cfg), MaterialDb::load_file(materials), {}, {}, 0, 0};
    refinement_from_string(c.cfg.refinement);  // validates the name

    auto device_problems = validate_spec(c.cfg.device);
    auto phys_problems = c.cfg.physics.validate();
    device_problems.insert(device_problems.end(), phys_problems.begin(), phys_problems.end());
    if (!device_problems.empty()) throw InputError("run configuration", device_problems);

    c.out = c.cfg.out_dir;
    fs::create_directories(c.out);
    io::write_text_atomic((c.out / "resolved.cfg").string(), config_to_text(c.cfg));

    if (command == "band") cmd_band(c);
    else if (command == "dc") cmd_dc(c);
    else if (command == "output") cmd_output(c);
    else if (command == "breakdown") cmd_breakdown(c);
    else if (command == "fp-study") cmd_fp_study(c);
    else if (command == "ac") cmd_ac(c);
    else throw std::domain_error("unknown command '" + command + "'");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json rep;
    rep["artifact_version"] = kArtifactVersion;
    rep["command"] = command;
    rep["width_mm_note"] = "currents are absolute mA for the configured device width";
    rep["metrics"] = c.metrics;
    rep["bias_points_solved"] = c.points_solved;
    rep["newton_iterations_total"] = c.newton_total;
    rep["wall_seconds"] = wall;
    io::write_text_atomic((c.out / "report.json").string(), rep.dump(2) + "\n");

    std::ostringstream txt;
    std::time_t now = std::time(nullptr);
    char ts[64];
    std::strftime(ts, sizeof ts, "%Y-%m-%d %H:%M:%S", std::gmtime(&now));
    txt << "# generated: " << ts << " UTC\n";
    txt << "command: " << command << "\n";
    txt << "artifact_version: " << kArtifactVersion << "\n";
    txt << "metrics:\n";
    for (auto it = c.metrics.begin(); it != c.metrics.end(); ++it)
      txt << "  " << it.key() << " = " << it.value().dump() << "\n";
    txt << "bias_points_solved: " << c.points_solved << "\n";
    txt << "newton_iterations_total: " << c.newton_total << "\n";
    txt << "wall_seconds: " << format_g9(wall) << "\n";
    io::write_text_atomic((c.out / "report.txt").string(), txt.str());
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace heterosim
