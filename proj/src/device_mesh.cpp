#include "heterosim/device_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "heterosim/errors.hpp"

namespace heterosim {

std::vector<std::string> validate_spec(const DeviceSpec& s) {
  std::vector<std::string> v;
  auto need_pos = [&](double val, const char* what) {
    if (!(val > 0)) v.push_back(std::string(what) + " must be > 0");
  };
  need_pos(s.gate_length_um, "gate_length");
  need_pos(s.gate_drain_um, "gate_drain spacing");
  need_pos(s.gate_source_um, "gate_source spacing");
  need_pos(s.contact_length_um, "contact_length");
  need_pos(s.pass_thickness_um, "pass_thickness");
  need_pos(s.barrier_thickness_um, "barrier_thickness");
  need_pos(s.channel_thickness_um, "channel_thickness");
  need_pos(s.implant_peak_cm3, "implant_peak");
  need_pos(s.implant_decay_um, "implant_decay");
  need_pos(s.barrier_doping_cm3, "barrier_doping");
  need_pos(s.channel_doping_cm3, "channel_doping");
  need_pos(s.width_mm, "width");
  need_pos(s.gate_workfun_eV, "gate_workfun");
  if (s.fieldplate_length_um < 0) v.push_back("fieldplate_length must be >= 0");
  if (s.fieldplate_length_um > s.gate_drain_um)
    v.push_back("field plate exceeds gate-drain gap");
  if (!(s.al_fraction >= 0 && s.al_fraction <= 1))
    v.push_back("al_fraction must lie in [0,1]");
  if (!(s.relaxation >= 0 && s.relaxation <= 1)) v.push_back("relaxation must lie in [0,1]");
  if (s.pass_dielectric.empty()) v.push_back("pass_dielectric must be named");
  return v;
}

void validate_spec_or_throw(const DeviceSpec& spec) {
  auto problems = validate_spec(spec);
  if (!problems.empty()) throw InputError("device spec", problems);
}

double net_doping(const DeviceSpec& s, double x_um, double y_um) {
  const double depth = s.semiconductor_depth_um();
  if (y_um < 0 || y_um > depth || x_um < 0 || x_um > s.total_length_um())
    throw std::domain_error("net_doping: point outside the semiconductor");
  double bg = (y_um < s.barrier_thickness_um) ? s.barrier_doping_cm3 : s.channel_doping_cm3;
  auto implant = [&](double w0, double w1) {
    double dx = 0;
    if (x_um < w0) dx = w0 - x_um;
    else if (x_um > w1) dx = x_um - w1;
    const double r2 = (dx * dx + y_um * y_um) / (s.implant_decay_um * s.implant_decay_um);
    return s.implant_peak_cm3 * std::exp(-r2);
  };
  bg += implant(0.0, s.contact_length_um);
  bg += implant(s.drain_x0_um(), s.total_length_um());
  return bg;
}

Refinement refinement_from_string(const std::string& s) {
  if (s == "coarse") return Refinement::Coarse;
  if (s == "normal") return Refinement::Normal;
  if (s == "fine") return Refinement::Fine;
  throw std::domain_error("unknown refinement '" + s + "' (coarse|normal|fine)");
}

const char* to_string(Refinement r) {
  switch (r) {
    case Refinement::Coarse: return "coarse";
    case Refinement::Normal: return "normal";
    case Refinement::Fine: return "fine";
  }
  return "?";
}

const char* to_string(Region r) {
  switch (r) {
    case Region::Passivation: return "passivation";
    case Region::Barrier: return "barrier";
    case Region::Channel: return "channel";
    case Region::Contact: return "contact";
  }
  return "?";
}

const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::Source: return "source";
    case Terminal::Drain: return "drain";
    case Terminal::Gate: return "gate";
  }
  return "?";
}

namespace {

// Mesh-line builder: mandatory anchor lines plus per-interval spacing caps,
// graded geometrically away from anchors.
class AxisBuilder {
 public:
  void anchor(double v) { anchors_.insert(round12(v)); }

  // Cap the spacing to h for lines within [lo, hi].
  void zone(double lo, double hi, double h) { zones_.push_back({lo, hi, h}); }

  std::vector<double> build(double h_max, double grow) const {
    std::vector<double> pts(anchors_.begin(), anchors_.end());
    std::vector<double> out;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      out.push_back(pts[i]);
      fill_gap(pts[i], pts[i + 1], h_max, grow, out);
    }
    out.push_back(pts.back());
    std::sort(out.begin(), out.end());
    // Merge near-coincident lines, never dropping an anchor.
    std::vector<double> clean;
    for (double v : out) {
      if (!clean.empty() && v - clean.back() < 1e-7) {
        if (anchors_.count(v)) clean.back() = v;
        continue;
      }
      clean.push_back(v);
    }
    return clean;
  }

 private:
  struct Zone {
    double lo, hi, h;
  };

  static double round12(double v) { return std::round(v * 1e12) / 1e12; }

  double cap_at(double x, double h_max) const {
    double h = h_max;
    for (const auto& z : zones_)
      if (x >= z.lo - 1e-12 && x <= z.hi + 1e-12) h = std::min(h, z.h);
    return h;
  }

  void fill_gap(double a, double b, double h_max, double grow, std::vector<double>& out) const {
    // March from both ends with the local cap, growing by `grow` per step,
    // then distribute the leftover middle uniformly.
    std::vector<double> left{a}, right{b};
    double hl = cap_at(a, h_max), hr = cap_at(b, h_max);
    while (true) {
      const double la = left.back(), rb = right.back();
      if (rb - la <= std::max(hl, hr) * 1.5) break;
      if (hl <= hr) {
        double h = std::min({hl, cap_at(la + hl, h_max), rb - la});
        left.push_back(round12(la + h));
        hl = std::min(h * grow, h_max);
      } else {
        double h = std::min({hr, cap_at(rb - hr, h_max), rb - la});
        right.push_back(round12(rb - h));
        hr = std::min(h * grow, h_max);
      }
    }
    // Split the remaining middle interval evenly if it is oversized.
    const double la = left.back(), rb = right.back();
    const double mid = rb - la;
    const double h_mid = std::min(cap_at(0.5 * (la + rb), h_max), std::max(hl, hr));
    const int nmid = std::max(1, static_cast<int>(std::ceil(mid / h_mid)));
    for (size_t i = 1; i < left.size(); ++i) out.push_back(left[i]);
    for (int k = 1; k < nmid; ++k) out.push_back(round12(la + mid * k / nmid));
    for (size_t i = right.size() - 1; i >= 1; --i) out.push_back(right[i]);
  }

  std::set<double> anchors_;
  std::vector<Zone> zones_;
};

std::vector<double> refine_by_halving(const std::vector<double>& base) {
  std::vector<double> out;
  out.reserve(base.size() * 2);
  for (size_t i = 0; i + 1 < base.size(); ++i) {
    out.push_back(base[i]);
    out.push_back(0.5 * (base[i] + base[i + 1]));
  }
  out.push_back(base.back());
  return out;
}

struct AxisParams {
  double h_edge;   // spacing cap at the gate and actual plate edges
  double h_cand;   // spacing cap at the other study plate positions
  double h_iface;  // spacing cap across the heterointerface
  double h_max_x;
  double h_max_y;
  double grow;
};

AxisParams axis_params(Refinement r) {
  switch (r) {
    case Refinement::Coarse: return {0.010, 0.025, 0.001, 0.45, 0.035, 2.2};
    default: return {0.010, 0.010, 0.001, 0.25, 0.022, 1.9};
  }
}

std::vector<double> build_x_lines(const DeviceSpec& s, const AxisParams& ap) {
  AxisBuilder bx;
  bx.anchor(0.0);
  bx.anchor(s.contact_length_um);
  bx.anchor(s.gate_x0_um());
  bx.anchor(s.gate_x1_um());
  bx.anchor(s.drain_x0_um());
  bx.anchor(s.total_length_um());
  auto edge_zone = [&](double x, double h) {
    bx.anchor(x);
    bx.zone(x - 0.05, x + 0.05, h);
  };
  edge_zone(s.gate_x0_um(), ap.h_edge);
  edge_zone(s.gate_x1_um(), ap.h_edge);
  // Refine every plate edge used by the field-plate study so that all study
  // cells share one x grid; breakdown trends then compare like with like.
  for (double lfp = 1.0; lfp <= 2.0 + 1e-9; lfp += 0.2) {
    const double xe = s.gate_x1_um() + lfp;
    if (xe < s.drain_x0_um()) edge_zone(xe, ap.h_cand);
  }
  if (s.fieldplate_length_um > 0)
    edge_zone(s.gate_x1_um() + s.fieldplate_length_um, ap.h_edge);
  return bx.build(ap.h_max_x, ap.grow);
}

std::vector<double> build_y_lines(const DeviceSpec& s, const AxisParams& ap) {
  AxisBuilder by;
  const double t_bar = s.barrier_thickness_um;
  const double bottom = s.semiconductor_depth_um();
  by.anchor(-s.pass_thickness_um);
  by.anchor(0.0);
  by.anchor(t_bar);
  by.anchor(bottom);
  by.zone(t_bar - 0.010, t_bar + 0.010, ap.h_iface);   // heterointerface band
  by.zone(-0.004, 0.006, 0.002);                        // surface band
  by.zone(t_bar + 0.010, t_bar + 0.030, 0.004);         // 2DEG tail
  return by.build(ap.h_max_y, ap.grow);
}

}  // namespace

bool Mesh2D::node_is_semiconductor(int ix, int iy) const {
  if (node_terminal[node(ix, iy)] != Terminal::None) return false;
  return node_material[node(ix, iy)] >= 0;
}

Mesh2D build_mesh(const DeviceSpec& spec, const MaterialDb& db, Refinement refinement) {
  validate_spec_or_throw(spec);
  Mesh2D m;
  m.spec = spec;
  m.refinement = refinement;
  m.materials = {db.gan(), db.alloy_params(spec.al_fraction)};
  m.materials[1].chi = db.aligned_chi(m.materials[1]);  // dEc_ratio band lineup
  m.pass_eps_r = db.dielectric_params(spec.pass_dielectric).k;

  const AxisParams ap = axis_params(refinement == Refinement::Fine ? Refinement::Normal : refinement);
  m.x_um = build_x_lines(spec, ap);
  m.y_um = build_y_lines(spec, ap);
  if (refinement == Refinement::Fine) {
    m.x_um = refine_by_halving(m.x_um);
    m.y_um = refine_by_halving(m.y_um);
  }

  const int nx = m.nx(), ny = m.ny();
  auto find_line = [](const std::vector<double>& v, double val) {
    for (size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i] - val) < 1e-9) return static_cast<int>(i);
    return -1;
  };
  m.iy_surface = find_line(m.y_um, 0.0);
  m.iy_interface = find_line(m.y_um, spec.barrier_thickness_um);

  // Cells.
  m.cell_region.assign(static_cast<size_t>(nx - 1) * (ny - 1), Region::Channel);
  const double g0 = spec.gate_x0_um(), g1 = spec.gate_x1_um();
  for (int ix = 0; ix + 1 < nx; ++ix) {
    for (int iy = 0; iy + 1 < ny; ++iy) {
      const double xc = 0.5 * (m.x_um[ix] + m.x_um[ix + 1]);
      const double yc = 0.5 * (m.y_um[iy] + m.y_um[iy + 1]);
      Region r;
      if (yc < 0)
        r = (xc > g0 && xc < g1) ? Region::Contact : Region::Passivation;  // gate stem
      else if (yc < spec.barrier_thickness_um)
        r = Region::Barrier;
      else
        r = Region::Channel;
      m.cell_region[m.cell(ix, iy)] = r;
    }
  }

  // Nodes.
  const int n_nodes = nx * ny;
  m.node_terminal.assign(n_nodes, Terminal::None);
  m.node_material.assign(n_nodes, -1);
  m.node_doping_cm3.assign(n_nodes, 0.0);
  m.node_sheet_C_cm2.assign(n_nodes, 0.0);

  const double sigma_pol = db.polarization_sheet_charge(spec.al_fraction, spec.relaxation);
  const double fp_x1 = g1 + spec.fieldplate_length_um;
  const double eps_pos = 1e-9;

  for (int ix = 0; ix < nx; ++ix) {
    const double x = m.x_um[ix];
    for (int iy = 0; iy < ny; ++iy) {
      const double y = m.y_um[iy];
      const int nd = m.node(ix, iy);
      if (y >= -eps_pos) {
        m.node_material[nd] = (y < spec.barrier_thickness_um - eps_pos) ? 1 : 0;
        if (iy == m.iy_interface) m.node_sheet_C_cm2[nd] = sigma_pol;
        m.node_doping_cm3[nd] = net_doping(spec, x, std::max(0.0, y));
      }
      // Terminal assignment; metal overrides semiconductor tagging. Ohmic
      // contacts are alloyed slots reaching through the barrier to the 2DEG.
      if (y >= -eps_pos && y <= spec.barrier_thickness_um + eps_pos) {
        if (x <= spec.contact_length_um + eps_pos) m.node_terminal[nd] = Terminal::Source;
        else if (x >= spec.drain_x0_um() - eps_pos) m.node_terminal[nd] = Terminal::Drain;
        else if (iy == m.iy_surface && x >= g0 - eps_pos && x <= g1 + eps_pos)
          m.node_terminal[nd] = Terminal::Gate;
      } else if (y < 0) {
        const bool in_stem = x >= g0 - eps_pos && x <= g1 + eps_pos;
        const bool on_top = iy == 0;
        const bool under_plate =
            spec.fieldplate_length_um > 0 && x >= g1 - eps_pos && x <= fp_x1 + eps_pos;
        if (in_stem || (on_top && under_plate)) m.node_terminal[nd] = Terminal::Gate;
      }
    }
  }
  return m;
}

}  // namespace heterosim
