#include "heterosim/dd_solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>

#include "heterosim/constants.hpp"
#include "heterosim/errors.hpp"
#include "heterosim/numerics.hpp"

namespace heterosim {

using consts::q_C;
using num::bernoulli;
using num::bernoulli_dx;

namespace {
constexpr double kExpLo = -690.0;  // natural underflow shortly below this anyway
constexpr double kExpHi = 45.0;    // no physical density exceeds Nc * e^45
constexpr double kCm = 1e-4;       // um -> cm
}  // namespace

struct DDSolver::Impl {
  enum class Kind : unsigned char { Dielectric, Semi, Ohmic, Metal };

  struct Node {
    Kind kind = Kind::Dielectric;
    Terminal term = Terminal::None;
    int mat = -1;
    double a_semi = 0;    // semiconductor box cross-section [cm^2]
    double dop = 0;       // [cm^-3]
    double sheetQ = 0;    // fixed charge [C/cm], sheet density times x-width
    double Vn_off = 0, Vp_off = 0;
    double ni = 0, tau_n = 0, tau_p = 0, cn_aug = 0, cp_aug = 0;
    double an = 0, bn = 0, ap = 0, bp = 0;
    double psi_off = 0;              // Dirichlet: psi = V_terminal + psi_off
    long double n_bc = 0, p_bc = 0;  // contact carrier densities
    int ipsi = -1, ifn = -1, ifp = -1;
    int e_left = -1, e_right = -1, e_up = -1, e_down = -1;
  };

  struct Edge {
    int m1 = 0, m2 = 0;
    double L = 0;        // [cm]
    double kappa = 0;    // eps * w / L summed over flanks [F/cm]
    double w_semi = 0;   // carrier-conducting width [cm]
    int nhalf = 0;
    double g[2] = {0, 0};  // q * vT * w_half / L
    double mu0n[2] = {0, 0}, mu0p[2] = {0, 0}, vsat[2] = {0, 0};
    bool carriers = false;
    bool horizontal = false;
  };

  // Linearized carrier fluxes on one edge, direction m1 -> m2, per cm width.
  // Derivative order: psi1, psi2, carrier1, carrier2.
  struct EdgeLin {
    double Fn = 0, Fp = 0;
    double dFn[4] = {0, 0, 0, 0};
    double dFp[4] = {0, 0, 0, 0};
  };

  const Mesh2D& mesh;
  const PhysicsConfig& phys;
  double vT, Nc0, Nv0, width_cm;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  int n_dofs = 0;

  std::vector<double> Gii_;
  std::vector<EdgeLin> elin_;

  Eigen::SparseMatrix<double> J_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
  Eigen::SparseMatrix<double> Jpsi_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> psi_lu_;
  bool psi_analyzed_ = false;
  std::vector<int> psi_dof_;  // node -> psi-block dof (free psi nodes), -1 fixed
  int n_psi_dofs = 0;
  std::vector<int> car_dof_;  // node -> carrier-block dof (Semi nodes), -1 otherwise
  int n_car_dofs = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> car_lu_;
  bool car_analyzed_ = false;
  Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> ac_lu_;
  bool ac_analyzed_ = false;

  Impl(const Mesh2D& m, const PhysicsConfig& ph) : mesh(m), phys(ph) {
    vT = consts::thermal_voltage(phys.T_L);
    Nc0 = mesh.materials[0].Nc(phys.T_L);
    Nv0 = mesh.materials[0].Nv(phys.T_L);
    width_cm = mesh.spec.width_mm * 0.1;
    build_nodes();
    build_edges();
  }

  // ---- construction -------------------------------------------------------

  double neutral_psi(const Node& nd) const {
    double psi = vT * std::log(std::max(nd.dop, nd.ni) / Nc0) - nd.Vn_off;
    for (int it = 0; it < 80; ++it) {
      const double n = Nc0 * num::exp_box((psi + nd.Vn_off) / vT, kExpLo, kExpHi);
      const double p = Nv0 * num::exp_box(-(psi + nd.Vp_off) / vT, kExpLo, kExpHi);
      const double f = n - p - nd.dop;
      const double df = (n + p) / vT;
      const double step = f / df;
      psi -= std::clamp(step, -1.0, 1.0);
      if (std::abs(step) < 1e-14) break;
    }
    return psi;
  }

  void build_nodes() {
    const int nx = mesh.nx(), ny = mesh.ny();
    nodes.assign(static_cast<size_t>(nx) * ny, Node{});
    const MaterialParams& gan = mesh.materials[0];
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        const int m = mesh.node(ix, iy);
        Node& nd = nodes[m];
        nd.term = mesh.node_terminal[m];
        nd.mat = mesh.node_material[m];
        nd.dop = mesh.node_doping_cm3[m];
        const double wx = half_width(mesh.x_um, ix);
        double a = 0;
        for (int cx = ix - 1; cx <= ix; ++cx) {
          for (int cy = iy - 1; cy <= iy; ++cy) {
            if (cx < 0 || cy < 0 || cx + 1 >= nx || cy + 1 >= ny) continue;
            const Region r = mesh.cell_region[mesh.cell(cx, cy)];
            if (r != Region::Barrier && r != Region::Channel) continue;
            a += 0.25 * (mesh.x_um[cx + 1] - mesh.x_um[cx]) *
                 (mesh.y_um[cy + 1] - mesh.y_um[cy]);
          }
        }
        nd.a_semi = a * kCm * kCm;
        nd.sheetQ = mesh.node_sheet_C_cm2[m] * wx;
        if (iy == mesh.iy_surface && nd.term == Terminal::None &&
            phys.interface_trap_cm2 > 0)
          nd.sheetQ -= q_C * phys.interface_trap_cm2 * wx;

        const MaterialParams& mp = nd.mat >= 0 ? mesh.materials[nd.mat] : gan;
        nd.Vn_off = mp.chi + vT * std::log(mp.Nc(phys.T_L) / Nc0);
        nd.Vp_off = mp.chi + mp.Eg - vT * std::log(mp.Nv(phys.T_L) / Nv0);
        nd.ni = mp.ni(phys.T_L);
        nd.tau_n = mp.tau_n;
        nd.tau_p = mp.tau_p;
        nd.cn_aug = mp.auger_cn;
        nd.cp_aug = mp.auger_cp;
        nd.an = mp.impact_an;
        nd.bn = mp.impact_bn;
        nd.ap = mp.impact_ap;
        nd.bp = mp.impact_bp;

        bool touches_semi = false;
        for (int cx = ix - 1; cx <= ix && !touches_semi; ++cx)
          for (int cy = iy - 1; cy <= iy && !touches_semi; ++cy) {
            if (cx < 0 || cy < 0 || cx + 1 >= nx || cy + 1 >= ny) continue;
            const Region r = mesh.cell_region[mesh.cell(cx, cy)];
            touches_semi = r == Region::Barrier || r == Region::Channel;
          }
        if (nd.term == Terminal::Gate) {
          // Schottky: Dirichlet potential plus metal-equilibrium carrier
          // densities where the contact touches the semiconductor (the metal
          // absorbs whatever arrives; leakage stays negligible)
          nd.psi_off = -mesh.spec.gate_workfun_eV;
          nd.kind = touches_semi ? Kind::Ohmic : Kind::Metal;
          if (nd.kind == Kind::Ohmic) {
            nd.n_bc = Nc0 * num::exp_box_l((nd.psi_off + nd.Vn_off) / vT, kExpLo, kExpHi);
            nd.p_bc = Nv0 * num::exp_box_l(-(nd.psi_off + nd.Vp_off) / vT, kExpLo, kExpHi);
          }
        } else if (nd.term != Terminal::None) {
          nd.kind = Kind::Ohmic;
          nd.psi_off = neutral_psi(nd);
          nd.n_bc = Nc0 * num::exp_box_l((nd.psi_off + nd.Vn_off) / vT, kExpLo, kExpHi);
          nd.p_bc = Nv0 * num::exp_box_l(-(nd.psi_off + nd.Vp_off) / vT, kExpLo, kExpHi);
        } else if (nd.mat >= 0) {
          nd.kind = Kind::Semi;
        } else {
          nd.kind = Kind::Dielectric;
        }
      }
    }
    n_dofs = 0;
    psi_dof_.assign(nodes.size(), -1);
    car_dof_.assign(nodes.size(), -1);
    n_psi_dofs = n_car_dofs = 0;
    for (auto& nd : nodes) {
      nd.ipsi = n_dofs++;
      if (nd.kind == Kind::Semi || nd.kind == Kind::Ohmic) {
        nd.ifn = n_dofs++;
        nd.ifp = n_dofs++;
      }
    }
    for (size_t m = 0; m < nodes.size(); ++m) {
      if (nodes[m].kind == Kind::Semi || nodes[m].kind == Kind::Dielectric)
        psi_dof_[m] = n_psi_dofs++;
      if (nodes[m].kind == Kind::Semi) car_dof_[m] = n_car_dofs++;
    }
  }

  static double half_width(const std::vector<double>& v, int i) {
    double w = 0;
    if (i > 0) w += 0.5 * (v[i] - v[i - 1]);
    if (i + 1 < static_cast<int>(v.size())) w += 0.5 * (v[i + 1] - v[i]);
    return w * kCm;
  }

  double cell_eps(Region r) const {
    switch (r) {
      case Region::Barrier: return mesh.materials[1].eps();
      case Region::Channel: return mesh.materials[0].eps();
      default: return mesh.pass_eps_r * consts::eps0_F_cm;
    }
  }

  void build_edges() {
    const int nx = mesh.nx(), ny = mesh.ny();
    auto cell_of = [&](int cx, int cy) -> int {
      if (cx < 0 || cy < 0 || cx + 1 >= nx || cy + 1 >= ny) return -1;
      return mesh.cell(cx, cy);
    };
    auto add_edge = [&](int m1, int m2, double L_um, bool horizontal, int cellA, int cellB,
                        double whalfA_um, double whalfB_um) {
      Edge e;
      e.m1 = m1;
      e.m2 = m2;
      e.L = L_um * kCm;
      e.horizontal = horizontal;
      for (int k = 0; k < 2; ++k) {
        const int c = k == 0 ? cellA : cellB;
        const double wh = (k == 0 ? whalfA_um : whalfB_um) * kCm;
        if (c < 0) continue;
        const Region r = mesh.cell_region[c];
        e.kappa += cell_eps(r) * wh / e.L;
        if (r == Region::Barrier || r == Region::Channel) {
          const MaterialParams& mp = mesh.materials[r == Region::Barrier ? 1 : 0];
          e.g[e.nhalf] = q_C * vT * wh / e.L;
          e.mu0n[e.nhalf] = mp.mu0_n;
          e.mu0p[e.nhalf] = mp.mu0_p;
          e.vsat[e.nhalf] = mp.v_sat;
          e.w_semi += wh;
          ++e.nhalf;
        }
      }
      const Node& n1 = nodes[m1];
      const Node& n2 = nodes[m2];
      const bool c1 = n1.kind == Kind::Semi || n1.kind == Kind::Ohmic;
      const bool c2 = n2.kind == Kind::Semi || n2.kind == Kind::Ohmic;
      e.carriers = e.nhalf > 0 && c1 && c2;
      const int ie = static_cast<int>(edges.size());
      if (horizontal) {
        nodes[m1].e_right = ie;
        nodes[m2].e_left = ie;
      } else {
        nodes[m1].e_down = ie;
        nodes[m2].e_up = ie;
      }
      edges.push_back(e);
    };

    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix + 1 < nx; ++ix) {
        const double wa = iy > 0 ? 0.5 * (mesh.y_um[iy] - mesh.y_um[iy - 1]) : 0.0;
        const double wb = iy + 1 < ny ? 0.5 * (mesh.y_um[iy + 1] - mesh.y_um[iy]) : 0.0;
        add_edge(mesh.node(ix, iy), mesh.node(ix + 1, iy), mesh.x_um[ix + 1] - mesh.x_um[ix],
                 true, cell_of(ix, iy - 1), cell_of(ix, iy), wa, wb);
      }
    }
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy + 1 < ny; ++iy) {
        const double wa = ix > 0 ? 0.5 * (mesh.x_um[ix] - mesh.x_um[ix - 1]) : 0.0;
        const double wb = ix + 1 < nx ? 0.5 * (mesh.x_um[ix + 1] - mesh.x_um[ix]) : 0.0;
        add_edge(mesh.node(ix, iy), mesh.node(ix, iy + 1), mesh.y_um[iy + 1] - mesh.y_um[iy],
                 false, cell_of(ix - 1, iy), cell_of(ix, iy), wa, wb);
      }
    }
  }

  // ---- state helpers ------------------------------------------------------

  void apply_bias(SolutionState& st, const Bias& b) const {
    st.bias = b;
    for (size_t m = 0; m < nodes.size(); ++m) {
      const Node& nd = nodes[m];
      if (nd.kind == Kind::Metal) {
        st.psi[m] = b.of(nd.term) + nd.psi_off;
      } else if (nd.kind == Kind::Ohmic) {
        st.psi[m] = b.of(nd.term) + nd.psi_off;
        st.n[m] = nd.n_bc;
        st.p[m] = nd.p_bc;
      }
    }
  }

  EdgeLin edge_lin(const Edge& e, const SolutionState& st) const {
    EdgeLin r;
    if (!e.carriers) return r;
    const Node& a = nodes[e.m1];
    const Node& b = nodes[e.m2];
    const double dpsi = static_cast<double>(st.psi[e.m2] - st.psi[e.m1]);
    const double Epar = phys.highfield_mobility ? std::abs(dpsi) / e.L : 0.0;
    double cn = 0, cp = 0;
    double dcn_dpsi2 = 0, dcp_dpsi2 = 0;  // field dependence of the conductances
    for (int k = 0; k < e.nhalf; ++k) {
      if (!phys.highfield_mobility) {
        cn += e.g[k] * e.mu0n[k];
        cp += e.g[k] * e.mu0p[k];
        continue;
      }
      auto ct = [&](double mu0, double& c_acc, double& dc_acc) {
        const double rr = mu0 * Epar / e.vsat[k];
        const double den = 1.0 + std::pow(rr, phys.beta);
        const double mu = mu0 * std::pow(den, -1.0 / phys.beta);
        c_acc += e.g[k] * mu;
        if (Epar > 0) {
          const double dmu_dE =
              -mu * std::pow(rr, phys.beta - 1.0) / den * (mu0 / e.vsat[k]);
          dc_acc += e.g[k] * dmu_dE * ((dpsi >= 0 ? 1.0 : -1.0) / e.L);
        }
      };
      ct(e.mu0n[k], cn, dcn_dpsi2);
      ct(e.mu0p[k], cp, dcp_dpsi2);
    }
    const long double n1 = st.n[e.m1], n2 = st.n[e.m2];
    const long double p1 = st.p[e.m1], p2 = st.p[e.m2];
    const long double dpsi_l = st.psi[e.m2] - st.psi[e.m1];
    const long double Dl = (dpsi_l + b.Vn_off - a.Vn_off) / vT;
    const long double Dpl = (dpsi_l + b.Vp_off - a.Vp_off) / vT;
    const double Dn = static_cast<double>(Dl);
    const double Dp = static_cast<double>(Dpl);
    const double Bn = bernoulli(Dn), Bnm = bernoulli(-Dn);
    const double Bp = bernoulli(Dp), Bpm = bernoulli(-Dp);

    const double shape_n =
        static_cast<double>(n2 * num::bernoulli_l(Dl) - n1 * num::bernoulli_l(-Dl));
    r.Fn = cn * shape_n;
    const double dFn_dD =
        cn * (double(n2) * bernoulli_dx(Dn) + double(n1) * bernoulli_dx(-Dn));
    r.dFn[0] = -dFn_dD / vT - dcn_dpsi2 * shape_n;
    r.dFn[1] = dFn_dD / vT + dcn_dpsi2 * shape_n;
    r.dFn[2] = -cn * Bnm;
    r.dFn[3] = cn * Bn;

    const double shape_p =
        static_cast<double>(p1 * num::bernoulli_l(Dpl) - p2 * num::bernoulli_l(-Dpl));
    r.Fp = cp * shape_p;
    const double dFp_dD =
        cp * (double(p1) * bernoulli_dx(Dp) + double(p2) * bernoulli_dx(-Dp));
    r.dFp[0] = -dFp_dD / vT - dcp_dpsi2 * shape_p;
    r.dFp[1] = dFp_dD / vT + dcp_dpsi2 * shape_p;
    r.dFp[2] = cp * Bp;
    r.dFp[3] = -cp * Bpm;
    return r;
  }

  void compute_edge_lins(const SolutionState& st) {
    elin_.resize(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) elin_[e] = edge_lin(edges[e], st);
  }

  // Chynoweth generation from the current edge fluxes; needs elin_ fresh.
  void compute_impact(const SolutionState& st) {
    Gii_.assign(nodes.size(), 0.0);
    if (!phys.impact_ionization) return;
    for (size_t m = 0; m < nodes.size(); ++m) {
      const Node& nd = nodes[m];
      if (nd.kind != Kind::Semi) continue;
      auto edge_J = [&](int ie, bool electron) -> double {
        if (ie < 0) return 0.0;
        const Edge& e = edges[ie];
        if (!e.carriers || e.w_semi <= 0) return 0.0;
        return (electron ? elin_[ie].Fn : elin_[ie].Fp) / e.w_semi;
      };
      auto avg2 = [](double a, double b) {
        const int k = (a != 0) + (b != 0);
        return k ? (a + b) / k : 0.0;
      };
      const double Jnx = avg2(edge_J(nd.e_left, true), edge_J(nd.e_right, true));
      const double Jny = avg2(edge_J(nd.e_up, true), edge_J(nd.e_down, true));
      const double Jpx = avg2(edge_J(nd.e_left, false), edge_J(nd.e_right, false));
      const double Jpy = avg2(edge_J(nd.e_up, false), edge_J(nd.e_down, false));
      double Ex = 0, Ey = 0;
      node_field(st, static_cast<int>(m), Ex, Ey);
      const double Jn = std::hypot(Jnx, Jny), Jp = std::hypot(Jpx, Jpy);
      double G = 0;
      if (Jn > 1e-300) {
        const double Edr = std::abs(Ex * Jnx + Ey * Jny) / Jn;
        G += chynoweth_alpha(Edr, nd.an, nd.bn) * Jn / q_C;
      }
      if (Jp > 1e-300) {
        const double Edr = std::abs(Ex * Jpx + Ey * Jpy) / Jp;
        G += chynoweth_alpha(Edr, nd.ap, nd.bp) * Jp / q_C;
      }
      Gii_[m] = G;
    }
  }

  void node_field(const SolutionState& st, int m, double& Ex, double& Ey) const {
    const int ny = mesh.ny();
    const int ix = m / ny, iy = m % ny;
    const int nx = mesh.nx();
    const int xl = std::max(0, ix - 1), xr = std::min(nx - 1, ix + 1);
    const int yu = std::max(0, iy - 1), yd = std::min(ny - 1, iy + 1);
    Ex = -static_cast<double>(st.psi[mesh.node(xr, iy)] - st.psi[mesh.node(xl, iy)]) /
         ((mesh.x_um[xr] - mesh.x_um[xl]) * kCm);
    Ey = -static_cast<double>(st.psi[mesh.node(ix, yd)] - st.psi[mesh.node(ix, yu)]) /
         ((mesh.y_um[yd] - mesh.y_um[yu]) * kCm);
  }

  struct RG {
    double R = 0, dRdn = 0, dRdp = 0;
  };
  RG recomb(const Node& nd, double n, double p) const {
    RG r;
    if (phys.srh) {
      const double den = std::max(nd.tau_p * (n + nd.ni) + nd.tau_n * (p + nd.ni), 1e-30);
      const double num_ = n * p - nd.ni * nd.ni;
      r.R += num_ / den;
      r.dRdn += (p * den - num_ * nd.tau_p) / (den * den);
      r.dRdp += (n * den - num_ * nd.tau_n) / (den * den);
    }
    if (phys.auger) {
      const double ex = n * p - nd.ni * nd.ni;
      r.R += (nd.cn_aug * n + nd.cp_aug * p) * ex;
      r.dRdn += nd.cn_aug * ex + (nd.cn_aug * n + nd.cp_aug * p) * p;
      r.dRdp += nd.cp_aug * ex + (nd.cn_aug * n + nd.cp_aug * p) * n;
    }
    return r;
  }

  // ---- full-system assembly on (psi, n, p) ---------------------------------

  // elin_/Gii_ must be current for `st`; Dirichlet rows are identities.
  void assemble(const SolutionState& st, Eigen::VectorXd& F,
                std::vector<Eigen::Triplet<double>>* T) const {
    F.setZero(n_dofs);
    auto add = [&](int r, int c, double v) {
      if (T) T->emplace_back(r, c, v);
    };
    auto row_free = [&](const Node& nd) {
      return nd.kind == Kind::Semi || nd.kind == Kind::Dielectric;
    };
    for (size_t ie = 0; ie < edges.size(); ++ie) {
      const Edge& e = edges[ie];
      const Node& a = nodes[e.m1];
      const Node& b = nodes[e.m2];
      const bool free1 = row_free(a);
      const bool free2 = row_free(b);
      if (free1 || free2) {
        const double flux = e.kappa * (st.psi[e.m2] - st.psi[e.m1]);
        if (free1) {
          F[a.ipsi] += flux;
          add(a.ipsi, a.ipsi, -e.kappa);
          add(a.ipsi, b.ipsi, e.kappa);
        }
        if (free2) {
          F[b.ipsi] -= flux;
          add(b.ipsi, b.ipsi, -e.kappa);
          add(b.ipsi, a.ipsi, e.kappa);
        }
      }
      if (!e.carriers) continue;
      const EdgeLin& el = elin_[ie];
      const int dofs_n[4] = {a.ipsi, b.ipsi, a.ifn, b.ifn};
      const int dofs_p[4] = {a.ipsi, b.ipsi, a.ifp, b.ifp};
      if (a.kind == Kind::Semi) {
        F[a.ifn] += el.Fn;
        F[a.ifp] += el.Fp;
        for (int k = 0; k < 4; ++k) {
          add(a.ifn, dofs_n[k], el.dFn[k]);
          add(a.ifp, dofs_p[k], el.dFp[k]);
        }
      }
      if (b.kind == Kind::Semi) {
        F[b.ifn] -= el.Fn;
        F[b.ifp] -= el.Fp;
        for (int k = 0; k < 4; ++k) {
          add(b.ifn, dofs_n[k], -el.dFn[k]);
          add(b.ifp, dofs_p[k], -el.dFp[k]);
        }
      }
    }
    for (size_t m = 0; m < nodes.size(); ++m) {
      const Node& nd = nodes[m];
      switch (nd.kind) {
        case Kind::Metal:
        case Kind::Ohmic:
          F[nd.ipsi] = 0;
          add(nd.ipsi, nd.ipsi, 1.0);
          if (nd.kind == Kind::Ohmic) {
            F[nd.ifn] = 0;
            F[nd.ifp] = 0;
            add(nd.ifn, nd.ifn, 1.0);
            add(nd.ifp, nd.ifp, 1.0);
          }
          break;
        case Kind::Dielectric:
          F[nd.ipsi] += nd.sheetQ;
          break;
        case Kind::Semi: {
          const double n = static_cast<double>(st.n[m]), p = static_cast<double>(st.p[m]);
          F[nd.ipsi] += static_cast<double>(
                            q_C * (st.p[m] - st.n[m] + static_cast<long double>(nd.dop)) *
                            nd.a_semi) +
                        nd.sheetQ;
          add(nd.ipsi, nd.ifn, -q_C * nd.a_semi);
          add(nd.ipsi, nd.ifp, q_C * nd.a_semi);
          const RG rg = recomb(nd, n, p);
          const double net = rg.R - Gii_[m];
          F[nd.ifn] += -q_C * net * nd.a_semi;
          add(nd.ifn, nd.ifn, -q_C * nd.a_semi * rg.dRdn);
          add(nd.ifn, nd.ifp, -q_C * nd.a_semi * rg.dRdp);
          F[nd.ifp] += q_C * net * nd.a_semi;
          add(nd.ifp, nd.ifn, q_C * nd.a_semi * rg.dRdn);
          add(nd.ifp, nd.ifp, q_C * nd.a_semi * rg.dRdp);
          break;
        }
      }
    }
  }

  // ---- Newton on (psi, n, p) -------------------------------------------------

  struct NewtonResult {
    bool ok = false;
    int iterations = 0;
    double last_update = 0;
    double residual = 0;
    std::vector<double> history;
  };

  // Applies a damped update: psi moves by t*dpsi, densities move at most a
  // few e-folds per iteration (the linear model is exponentially wrong for
  // carriers, so bound the moves in log space). Returns the convergence
  // measure of the applied change: volts for psi, thermal-voltage-scaled
  // log-density change for carriers that are above the noise floor.
  double apply_update(SolutionState& st, const Eigen::VectorXd& dx, double t) const {
    const long double K = expl(4.0L);
    double u = 0;
    for (size_t m = 0; m < nodes.size(); ++m) {
      const Node& nd = nodes[m];
      if (nd.kind == Kind::Metal || nd.kind == Kind::Ohmic) continue;
      st.psi[m] += t * dx[nd.ipsi];
      u = std::max(u, std::abs(t * dx[nd.ipsi]));
      if (nd.ifn < 0) continue;
      auto move = [&](long double old_v, double d) -> long double {
        const long double floor_v = 1e-30L;
        long double raw = old_v + static_cast<long double>(t) * d;
        const long double lo = old_v / K;
        const long double hi = std::max(old_v * K, 1e3L);  // empty nodes may repopulate
        raw = std::min(std::max(raw, lo), hi);
        if (!(raw > 0)) raw = std::max(old_v / K, floor_v);
        const double big = static_cast<double>(std::max(old_v, raw));
        const double weight = big / (big + 1e5);
        if (old_v > 0 && raw > 0)
          u = std::max(u, vT * std::abs(double(logl(raw / old_v))) * weight);
        return raw;
      };
      st.n[m] = move(st.n[m], dx[nd.ifn]);
      st.p[m] = move(st.p[m], dx[nd.ifp]);
    }
    return u;
  }

  double scaled_residual(const SolutionState& st, const Eigen::VectorXd& rsc,
                         Eigen::VectorXd& F) {
    compute_edge_lins(st);
    compute_impact(st);
    assemble(st, F, nullptr);
    return F.cwiseProduct(rsc).norm();
  }

  static inline thread_local double t_asm = 0, t_fact = 0, t_solve = 0, t_bt = 0;
  static inline thread_local long n_newton = 0;

  // Jacobian reuse bookkeeping: the LU (with its equilibration vectors) is
  // kept until the contraction rate degrades; off-state continuation then
  // refactors only every few bias points.
  Eigen::VectorXd rsc_, csc_;
  bool have_lu_ = false;

  void factorize_at(const SolutionState& st, Eigen::VectorXd& F,
                    std::vector<Eigen::Triplet<double>>& T) {
    auto tick = std::chrono::steady_clock::now();
    T.clear();
    assemble(st, F, &T);
    J_.resize(n_dofs, n_dofs);
    J_.setFromTriplets(T.begin(), T.end());
    rsc_.setZero(n_dofs);
    for (int k = 0; k < J_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator i(J_, k); i; ++i)
        rsc_[i.row()] = std::max(rsc_[i.row()], std::abs(i.value()));
    for (int r = 0; r < n_dofs; ++r) rsc_[r] = rsc_[r] > 1e-300 ? 1.0 / rsc_[r] : 1.0;
    csc_.setZero(n_dofs);
    for (int k = 0; k < J_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator i(J_, k); i; ++i) {
        i.valueRef() *= rsc_[i.row()];
        csc_[k] = std::max(csc_[k], std::abs(i.value()));
      }
    for (int c = 0; c < n_dofs; ++c) csc_[c] = csc_[c] > 1e-300 ? 1.0 / csc_[c] : 1.0;
    for (int k = 0; k < J_.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator i(J_, k); i; ++i)
        i.valueRef() *= csc_[k];
    if (!analyzed_) {
      lu_.analyzePattern(J_);
      analyzed_ = true;
    }
    lu_.factorize(J_);
    if (lu_.info() != Eigen::Success) throw SolverError("dd newton: singular Jacobian");
    have_lu_ = true;
    t_fact += std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
  }

  NewtonResult newton(SolutionState& st, int max_iter, double tol) {
    NewtonResult res;
    Eigen::VectorXd F(n_dofs), Ft(n_dofs);
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(edges.size() * 18 + nodes.size() * 10);
    double last_measure = 1e30;
    bool want_fresh = !have_lu_;
    for (int it = 0; it < max_iter; ++it) {
      ++n_newton;
      auto ta = std::chrono::steady_clock::now();
      compute_edge_lins(st);
      compute_impact(st);
      bool fresh = false;
      if (want_fresh || !have_lu_) {
        factorize_at(st, F, T);
        fresh = true;
        want_fresh = false;
      } else {
        assemble(st, F, nullptr);
      }
      t_asm += std::chrono::duration<double>(std::chrono::steady_clock::now() - ta).count();

      auto ts = std::chrono::steady_clock::now();
      Eigen::VectorXd rhs_scaled = (-F.array() * rsc_.array()).matrix();
      Eigen::VectorXd dx = lu_.solve(rhs_scaled);
      dx.array() *= csc_.array();
      t_solve += std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();

      double t_step = 1.0;
      for (size_t m = 0; m < nodes.size(); ++m) {
        const Node& nd = nodes[m];
        if (nd.kind == Kind::Metal || nd.kind == Kind::Ohmic) continue;
        const double dpsi = std::abs(dx[nd.ipsi]);
        if (t_step * dpsi > 1.0) t_step = 1.0 / dpsi;
      }
      const double f0 = F.cwiseProduct(rsc_).norm();
      SolutionState trial = st;
      double measure = 0;
      auto tb = std::chrono::steady_clock::now();
      int backtracks = 0;
      for (int bt = 0;; ++bt) {
        trial.psi = st.psi;
        trial.n = st.n;
        trial.p = st.p;
        measure = apply_update(trial, dx, t_step);
        // a contracting full step needs no residual audit
        if (bt == 0 && t_step == 1.0 &&
            (measure < 0.5 * last_measure || last_measure < 3e-2))
          break;
        if (scaled_residual(trial, rsc_, Ft) <= 2.0 * f0 || bt >= 6 || t_step < 1e-3) break;
        t_step *= 0.5;
        ++backtracks;
      }
      t_bt += std::chrono::duration<double>(std::chrono::steady_clock::now() - tb).count();
      st.psi.swap(trial.psi);
      st.n.swap(trial.n);
      st.p.swap(trial.p);
      res.iterations = it + 1;
      res.last_update = measure;
      res.history.push_back(measure);
      if (measure < tol) {
        compute_edge_lins(st);
        compute_impact(st);
        assemble(st, F, nullptr);
        res.residual = F.norm();
        res.ok = true;
        return res;
      }
      // demand decent contraction from a stale Jacobian
      if (!fresh && (backtracks > 0 || measure > 0.55 * last_measure)) want_fresh = true;
      else if (fresh && backtracks > 2) have_lu_ = false;  // hard point; refresh next time
      last_measure = measure;
    }
    compute_edge_lins(st);
    compute_impact(st);
    assemble(st, F, nullptr);
    res.residual = F.norm();
    have_lu_ = false;
    return res;
  }

  // ---- nonlinear Poisson with Gummel-frozen quasi-Fermi levels ---------------

  int poisson_solve(SolutionState& st, double tol, int max_iter) {
    std::vector<Eigen::Triplet<double>> T;
    Eigen::VectorXd F(n_psi_dofs);
    const StateVec psi0 = st.psi, n0 = st.n, p0 = st.p;
    auto local_np = [&](size_t m, long double& n, long double& p) {
      const long double f = num::exp_box_l((st.psi[m] - psi0[m]) / vT, kExpLo, kExpHi);
      n = n0[m] * f;
      p = (f > 0) ? p0[m] / f : 0.0L;
    };
    int used = -1;
    for (int it = 0; it < max_iter && used < 0; ++it) {
      T.clear();
      F.setZero();
      for (const Edge& e : edges) {
        const int d1 = psi_dof_[e.m1], d2 = psi_dof_[e.m2];
        if (d1 < 0 && d2 < 0) continue;
        const double flux = e.kappa * (st.psi[e.m2] - st.psi[e.m1]);
        if (d1 >= 0) {
          F[d1] += flux;
          T.emplace_back(d1, d1, -e.kappa);
          if (d2 >= 0) T.emplace_back(d1, d2, e.kappa);
        }
        if (d2 >= 0) {
          F[d2] -= flux;
          T.emplace_back(d2, d2, -e.kappa);
          if (d1 >= 0) T.emplace_back(d2, d1, e.kappa);
        }
      }
      for (size_t m = 0; m < nodes.size(); ++m) {
        const Node& nd = nodes[m];
        const int d = psi_dof_[m];
        if (d < 0) continue;
        if (nd.kind == Kind::Semi) {
          long double n, p;
          local_np(m, n, p);
          F[d] += static_cast<double>(q_C * (p - n + (long double)nd.dop) * nd.a_semi) +
                  nd.sheetQ;
          T.emplace_back(d, d, -q_C * double(p + n) / vT * nd.a_semi);
        } else {
          F[d] += nd.sheetQ;
        }
      }
      Jpsi_.resize(n_psi_dofs, n_psi_dofs);
      Jpsi_.setFromTriplets(T.begin(), T.end());
      if (!psi_analyzed_) {
        psi_lu_.analyzePattern(Jpsi_);
        psi_analyzed_ = true;
      }
      psi_lu_.factorize(Jpsi_);
      if (psi_lu_.info() != Eigen::Success) throw SolverError("poisson: singular system");
      Eigen::VectorXd dx = psi_lu_.solve(-F);
      double mx = dx.cwiseAbs().maxCoeff();
      const double damp = mx > 1.0 ? 1.0 / mx : 1.0;
      for (size_t m = 0; m < nodes.size(); ++m)
        if (psi_dof_[m] >= 0) st.psi[m] += damp * dx[psi_dof_[m]];
      if (mx < tol) used = it + 1;
    }
    if (used < 0) throw SolverError("poisson: no convergence");
    for (size_t m = 0; m < nodes.size(); ++m) {
      if (nodes[m].kind != Kind::Semi) continue;
      long double n, p;
      local_np(m, n, p);
      st.n[m] = n;
      st.p[m] = p;
    }
    return used;
  }

  // ---- linear Gummel carrier solves ------------------------------------------

  void carrier_solve(SolutionState& st, bool electron) {
    compute_edge_lins(st);
    compute_impact(st);
    std::vector<Eigen::Triplet<double>> T;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_car_dofs);
    for (size_t ie = 0; ie < edges.size(); ++ie) {
      const Edge& e = edges[ie];
      if (!e.carriers) continue;
      const Node& a = nodes[e.m1];
      const Node& b = nodes[e.m2];
      const double dpsi = st.psi[e.m2] - st.psi[e.m1];
      const double Epar = phys.highfield_mobility ? std::abs(dpsi) / e.L : 0.0;
      double c = 0;
      for (int k = 0; k < e.nhalf; ++k) {
        const double mu0 = electron ? e.mu0n[k] : e.mu0p[k];
        c += e.g[k] * (phys.highfield_mobility
                           ? highfield_mobility(mu0, Epar, e.vsat[k], phys.beta)
                           : mu0);
      }
      const double D = electron ? (dpsi + b.Vn_off - a.Vn_off) / vT
                                : (dpsi + b.Vp_off - a.Vp_off) / vT;
      const double cf2 = electron ? c * bernoulli(D) : -c * bernoulli(-D);
      const double cf1 = electron ? -c * bernoulli(-D) : c * bernoulli(D);
      const int d1 = car_dof_[e.m1], d2 = car_dof_[e.m2];
      const double bc1 = d1 < 0 ? double(electron ? st.n[e.m1] : st.p[e.m1]) : 0.0;
      const double bc2 = d2 < 0 ? double(electron ? st.n[e.m2] : st.p[e.m2]) : 0.0;
      if (d1 >= 0) {
        if (d2 >= 0) T.emplace_back(d1, d2, cf2);
        else rhs[d1] -= cf2 * bc2;
        T.emplace_back(d1, d1, cf1);
      }
      if (d2 >= 0) {
        if (d1 >= 0) T.emplace_back(d2, d1, -cf1);
        else rhs[d2] += cf1 * bc1;
        T.emplace_back(d2, d2, -cf2);
      }
    }
    for (size_t m = 0; m < nodes.size(); ++m) {
      const Node& nd = nodes[m];
      const int d = car_dof_[m];
      if (d < 0) continue;
      const double n = double(st.n[m]), p = double(st.p[m]);
      double coef = 0, constant = 0;  // R ~ coef * x + constant
      if (phys.srh) {
        const double den = std::max(nd.tau_p * (n + nd.ni) + nd.tau_n * (p + nd.ni), 1e-30);
        coef += (electron ? p : n) / den;
        constant += -nd.ni * nd.ni / den;
      }
      if (phys.auger) {
        const double pref = nd.cn_aug * n + nd.cp_aug * p;
        coef += pref * (electron ? p : n);
        constant += -pref * nd.ni * nd.ni;
      }
      const double sgn = electron ? -1.0 : 1.0;  // F_n has -q(R-G)a, F_p +q(R-G)a
      T.emplace_back(d, d, sgn * q_C * nd.a_semi * coef);
      rhs[d] -= sgn * q_C * nd.a_semi * (constant - Gii_[m]);
    }
    Eigen::SparseMatrix<double> A(n_car_dofs, n_car_dofs);
    A.setFromTriplets(T.begin(), T.end());
    if (!car_analyzed_) {
      car_lu_.analyzePattern(A);
      car_analyzed_ = true;
    }
    car_lu_.factorize(A);
    if (car_lu_.info() != Eigen::Success)
      throw SolverError("gummel carrier solve: singular system");
    Eigen::VectorXd x = car_lu_.solve(rhs);
    for (size_t m = 0; m < nodes.size(); ++m) {
      const int d = car_dof_[m];
      if (d < 0) continue;
      const double v = std::max(x[d], 0.0);
      if (electron) st.n[m] = v;
      else st.p[m] = v;
    }
  }

  // ---- currents ---------------------------------------------------------------

  void terminal_currents(SolutionState& st) {
    compute_edge_lins(st);
    long double I[3] = {0, 0, 0};  // source, drain, gate
    for (size_t ie = 0; ie < edges.size(); ++ie) {
      const Edge& e = edges[ie];
      if (!e.carriers) continue;
      const Terminal t1 = nodes[e.m1].term;
      const Terminal t2 = nodes[e.m2].term;
      if (t1 == t2) continue;
      const double f = elin_[ie].Fn + elin_[ie].Fp;
      auto slot = [](Terminal t) {
        switch (t) {
          case Terminal::Source: return 0;
          case Terminal::Drain: return 1;
          case Terminal::Gate: return 2;
          default: return -1;
        }
      };
      if (int s = slot(t1); s >= 0) I[s] += f;
      if (int s = slot(t2); s >= 0) I[s] -= f;
    }
    const double to_mA = width_cm * 1e3;
    st.I_s_mA = static_cast<double>(I[0]) * to_mA;
    st.I_d_mA = static_cast<double>(I[1]) * to_mA;
    st.I_g_mA = static_cast<double>(I[2]) * to_mA;
  }

};

// ---- public API ---------------------------------------------------------------

DDSolver::DDSolver(const Mesh2D& mesh, const PhysicsConfig& physics)
    : mesh_(mesh), phys_(physics) {
  auto problems = phys_.validate();
  if (!problems.empty()) throw InputError("physics config", problems);
  impl_ = std::make_unique<Impl>(mesh_, phys_);
}

DDSolver::~DDSolver() = default;

double DDSolver::thermal_voltage() const { return impl_->vT; }

void DDSolver::print_profile() {
  std::printf("newton profile: n=%ld asm=%.2fs fact=%.2fs solve=%.2fs bt=%.2fs\n",
              Impl::n_newton, Impl::t_asm, Impl::t_fact, Impl::t_solve, Impl::t_bt);
}

SolutionState DDSolver::solve_equilibrium() {
  Impl& im = *impl_;
  SolutionState st;
  const int N = static_cast<int>(im.nodes.size());
  st.psi.setZero(N);
  st.n.setZero(N);
  st.p.setZero(N);
  for (int m = 0; m < N; ++m) {
    const auto& nd = im.nodes[m];
    if (nd.kind == Impl::Kind::Semi || nd.kind == Impl::Kind::Ohmic)
      st.psi[m] = im.neutral_psi(nd);
    else
      st.psi[m] = -mesh_.spec.gate_workfun_eV;
    st.n[m] = im.Nc0 * num::exp_box_l((st.psi[m] + nd.Vn_off) / im.vT, kExpLo, kExpHi);
    st.p[m] = im.Nv0 * num::exp_box_l(-(st.psi[m] + nd.Vp_off) / im.vT, kExpLo, kExpHi);
  }
  im.apply_bias(st, Bias{});
  st.conv.gummel_iterations = im.poisson_solve(st, 1e-9, 400);
  // exact zero-bias Boltzmann densities for the final potential
  for (int m = 0; m < N; ++m) {
    const auto& nd = im.nodes[m];
    if (nd.kind != Impl::Kind::Semi && nd.kind != Impl::Kind::Ohmic) continue;
    st.n[m] = im.Nc0 * num::exp_box_l((st.psi[m] + nd.Vn_off) / im.vT, kExpLo, kExpHi);
    st.p[m] = im.Nv0 * num::exp_box_l(-(st.psi[m] + nd.Vp_off) / im.vT, kExpLo, kExpHi);
  }
  st.conv.converged = true;
  im.terminal_currents(st);
  return st;
}

SolutionState DDSolver::solve_bias(const Bias& bias, const SolutionState& seed,
                                   bool with_gummel) {
  Impl& im = *impl_;
  if (seed.bias.max_step_to(bias) > 0.5 + 1e-12)
    throw std::domain_error("solve_bias: bias step exceeds 0.5 V, chop the ladder");
  SolutionState st = seed;
  st.T_n.resize(0);
  im.apply_bias(st, bias);

  ConvergenceReport rep;
  if (with_gummel) {
    for (int g = 0; g < phys_.max_gummel; ++g) {
      StateVec psi_before = st.psi;
      im.poisson_solve(st, 1e-7, 200);
      im.carrier_solve(st, true);
      im.carrier_solve(st, false);
      ++rep.gummel_iterations;
      const double upd = static_cast<double>((st.psi - psi_before).cwiseAbs().maxCoeff());
      rep.update_history.push_back(upd);
      if (upd < phys_.gummel_tol_V) break;
    }
  }
  Impl::NewtonResult nr;
  double best_imb = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 4; ++round) {
    nr = im.newton(st, phys_.max_newton, phys_.newton_tol_V);
    rep.newton_iterations += nr.iterations;
    rep.final_update_V = nr.last_update;
    rep.residual_norm = nr.residual;
    rep.converged = nr.ok;
    for (double h : nr.history) rep.update_history.push_back(h);
    if (!nr.ok) break;
    im.terminal_currents(st);
    // terminal current conservation is part of the contract; polish with a
    // fresh Jacobian when a stale-factorization finish leaves it short
    const double tol_imb = 1e-6 * std::max(std::abs(st.I_d_mA), 1e-3);
    const double imbalance = std::abs(st.I_s_mA + st.I_d_mA + st.I_g_mA);
    if (std::getenv("HS_DBG_KIRCH"))
      std::printf("  [kirch] round=%d Is=%.3e Id=%.3e Ig=%.3e imb=%.3e tol=%.3e res=%.3e\n",
                  round, st.I_s_mA, st.I_d_mA, st.I_g_mA, imbalance, tol_imb,
                  nr.residual);
    if (imbalance <= 0.5 * tol_imb) break;
    if (imbalance >= 0.9 * best_imb) {  // no longer improving
      rep.converged = imbalance <= tol_imb;
      break;
    }
    best_imb = imbalance;
    im.have_lu_ = false;
  }
  st.conv = rep;
  if (!rep.converged) {
    std::string hist;
    for (double h : nr.history) hist += " " + std::to_string(h);
    throw SolverError("solve_bias: no convergence at (Vs,Vd,Vg)=(" + std::to_string(bias.v_s) +
                      "," + std::to_string(bias.v_d) + "," + std::to_string(bias.v_g) +
                      "), updates:" + hist);
  }
  return st;
}

SolutionState DDSolver::ramp_to(const Bias& target, SolutionState seed, double max_step_V) {
  Ladder lad(*this, std::move(seed));
  lad.go(target, max_step_V);
  return lad.state();
}

const SolutionState& Ladder::go(const Bias& target, double max_step_V) {
  max_step_V = std::min(max_step_V, 0.5);
  while (true) {
    const double dist = cur_.bias.max_step_to(target);
    if (dist < 1e-12) return cur_;
    double frac = std::min(1.0, max_step_V / dist);
    for (;;) {
      const double step_V = frac * dist;
      Bias b{cur_.bias.v_s + (target.v_s - cur_.bias.v_s) * frac,
             cur_.bias.v_d + (target.v_d - cur_.bias.v_d) * frac,
             cur_.bias.v_g + (target.v_g - cur_.bias.v_g) * frac};
      // continuation guess: linear in psi, log-linear in the densities
      SolutionState guess = cur_;
      if (!gummel_next_ && have_prev_ && prev_step_ > 1e-9) {
        const long double f = std::min(step_V / prev_step_, 1.5);
        guess.psi += f * (cur_.psi - prev_.psi);
        for (int i = 0; i < guess.n.size(); ++i) {
          const long double rn = std::min(
              20.0L, std::max(-20.0L, logl((cur_.n[i] + 1e-30L) / (prev_.n[i] + 1e-30L))));
          const long double rp = std::min(
              20.0L, std::max(-20.0L, logl((cur_.p[i] + 1e-30L) / (prev_.p[i] + 1e-30L))));
          guess.n[i] = cur_.n[i] * expl(f * rn);
          guess.p[i] = cur_.p[i] * expl(f * rp);
        }
      }
      const bool with_gummel = gummel_next_;
      try {
        SolutionState next = solver_.solve_bias(b, with_gummel ? cur_ : guess, with_gummel);
        prev_ = std::move(cur_);
        cur_ = std::move(next);
        have_prev_ = true;
        prev_step_ = step_V;
        gummel_next_ = false;
        break;
      } catch (const SolverError&) {
        if (!with_gummel) {
          gummel_next_ = true;  // retry the same step with the full start-up
          continue;
        }
        have_prev_ = false;
        frac *= 0.5;
        if (frac * dist < 1e-3) throw;
      }
    }
  }
}

void DDSolver::electron_temperature_post(SolutionState& state) const {
  Impl& im = *impl_;
  im.compute_edge_lins(state);
  const double kq = consts::kB_eV;  // [V/K]
  const double TL = phys_.T_L;
  std::vector<Eigen::Triplet<double>> T;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(im.n_car_dofs);
  for (size_t ie = 0; ie < im.edges.size(); ++ie) {
    const auto& e = im.edges[ie];
    if (!e.carriers) continue;
    const int d1 = im.car_dof_[e.m1], d2 = im.car_dof_[e.m2];
    if (d1 < 0 && d2 < 0) continue;
    const double dpsi = static_cast<double>(state.psi[e.m2] - state.psi[e.m1]);
    const double Epar = phys_.highfield_mobility ? std::abs(dpsi) / e.L : 0.0;
    double sigma_wl = 0;  // q mu n * w/L
    const double n_avg = 0.5 * static_cast<double>(state.n[e.m1] + state.n[e.m2]);
    for (int k = 0; k < e.nhalf; ++k) {
      const double mu = phys_.highfield_mobility
                            ? highfield_mobility(e.mu0n[k], Epar, e.vsat[k], phys_.beta)
                            : e.mu0n[k];
      sigma_wl += q_C * mu * std::max(n_avg, 1e5) * e.g[k] / (q_C * im.vT);
    }
    const double Dk = 2.5 * kq * kq * sigma_wl * TL;   // [W/K per cm width]
    const double gamma = 2.5 * kq * im.elin_[ie].Fn;   // convection with the current
    const double Pe = gamma / std::max(Dk, 1e-300);
    const double c1 = Dk * bernoulli(-Pe);
    const double c2 = -Dk * bernoulli(Pe);
    if (d1 >= 0) {
      T.emplace_back(d1, d1, c1);
      if (d2 >= 0) T.emplace_back(d1, d2, c2);
      else rhs[d1] -= c2 * TL;
    }
    if (d2 >= 0) {
      T.emplace_back(d2, d2, -c2);
      if (d1 >= 0) T.emplace_back(d2, d1, -c1);
      else rhs[d2] += c1 * TL;
    }
  }
  for (size_t m = 0; m < im.nodes.size(); ++m) {
    const int d = im.car_dof_[m];
    if (d < 0) continue;
    const auto& nd = im.nodes[m];
    double joule = 0;
    for (int ie : {nd.e_left, nd.e_right, nd.e_up, nd.e_down}) {
      if (ie < 0 || !im.edges[ie].carriers) continue;
      const auto& e = im.edges[ie];
      const double dpsi_out = static_cast<double>(
          (e.m1 == static_cast<int>(m)) ? state.psi[m] - state.psi[e.m2]
                                        : state.psi[m] - state.psi[e.m1]);
      const double F_out = (e.m1 == static_cast<int>(m)) ? im.elin_[ie].Fn : -im.elin_[ie].Fn;
      joule += 0.5 * F_out * dpsi_out;
    }
    const double relax =
        1.5 * kq * q_C * std::max(double(state.n[m]), 1e5) * nd.a_semi / phys_.tau_w;
    T.emplace_back(d, d, relax);
    rhs[d] += joule + relax * TL;
  }
  Eigen::SparseMatrix<double> A(im.n_car_dofs, im.n_car_dofs);
  A.setFromTriplets(T.begin(), T.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw SolverError("electron_temperature_post: singular system (bad state?)");
  Eigen::VectorXd x = lu.solve(rhs);
  state.T_n.setConstant(im.nodes.size(), TL);
  for (size_t m = 0; m < im.nodes.size(); ++m)
    if (im.car_dof_[m] >= 0) state.T_n[m] = x[im.car_dof_[m]];
}

Eigen::Matrix2cd DDSolver::ac_y_params(const SolutionState& state, double freq_Hz) {
  Impl& im = *impl_;
  using cplx = std::complex<double>;
  const cplx jw(0.0, 2.0 * M_PI * freq_Hz);
  im.compute_edge_lins(state);
  im.compute_impact(state);
  Eigen::VectorXd F(im.n_dofs);
  std::vector<Eigen::Triplet<double>> TJ;
  im.assemble(state, F, &TJ);
  std::vector<Eigen::Triplet<cplx>> T;
  T.reserve(TJ.size() + im.nodes.size() * 2);
  for (const auto& t : TJ) T.emplace_back(t.row(), t.col(), cplx(t.value(), 0));
  for (size_t m = 0; m < im.nodes.size(); ++m) {
    const auto& nd = im.nodes[m];
    if (nd.kind != Impl::Kind::Semi) continue;
    // F_n -= q a dn/dt ; F_p += q a dp/dt
    T.emplace_back(nd.ifn, nd.ifn, -jw * q_C * nd.a_semi);
    T.emplace_back(nd.ifp, nd.ifp, jw * q_C * nd.a_semi);
  }
  Eigen::SparseMatrix<cplx> A(im.n_dofs, im.n_dofs);
  A.setFromTriplets(T.begin(), T.end());
  Eigen::VectorXd rsc = Eigen::VectorXd::Zero(im.n_dofs);
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator i(A, k); i; ++i)
      rsc[i.row()] = std::max(rsc[i.row()], std::abs(i.value()));
  for (int r = 0; r < im.n_dofs; ++r) rsc[r] = rsc[r] > 1e-300 ? 1.0 / rsc[r] : 1.0;
  Eigen::VectorXd csc = Eigen::VectorXd::Zero(im.n_dofs);
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator i(A, k); i; ++i) {
      i.valueRef() *= rsc[i.row()];
      csc[k] = std::max(csc[k], std::abs(i.value()));
    }
  for (int c = 0; c < im.n_dofs; ++c) csc[c] = csc[c] > 1e-300 ? 1.0 / csc[c] : 1.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator i(A, k); i; ++i)
      i.valueRef() *= csc[k];

  if (!im.ac_analyzed_) {
    im.ac_lu_.analyzePattern(A);
    im.ac_analyzed_ = true;
  }
  im.ac_lu_.factorize(A);
  if (im.ac_lu_.info() != Eigen::Success)
    throw SolverError("ac_y_params: singular linearized system at f=" +
                      std::to_string(freq_Hz));

  const double dV = 1e-3;  // excitation amplitude [V]
  Eigen::Matrix2cd Y;
  for (int port = 0; port < 2; ++port) {
    const Terminal excited = port == 0 ? Terminal::Gate : Terminal::Drain;
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(im.n_dofs);
    for (const auto& nd : im.nodes) {
      if (nd.term != excited) continue;
      b[nd.ipsi] = dV * rsc[nd.ipsi];  // carrier BCs do not move with bias
    }
    Eigen::VectorXcd dx = im.ac_lu_.solve(b);
    for (int i = 0; i < im.n_dofs; ++i) dx[i] *= csc[i];
    cplx I[3] = {0, 0, 0};
    auto slot = [](Terminal t) {
      switch (t) {
        case Terminal::Source: return 0;
        case Terminal::Drain: return 1;
        case Terminal::Gate: return 2;
        default: return -1;
      }
    };
    for (size_t ie = 0; ie < im.edges.size(); ++ie) {
      const auto& e = im.edges[ie];
      const Terminal t1 = im.nodes[e.m1].term;
      const Terminal t2 = im.nodes[e.m2].term;
      if (t1 == t2) continue;
      const int s1 = slot(t1), s2 = slot(t2);
      if (s1 < 0 && s2 < 0) continue;
      const auto& a = im.nodes[e.m1];
      const auto& bb = im.nodes[e.m2];
      cplx dF = jw * e.kappa * (dx[a.ipsi] - dx[bb.ipsi]);  // displacement m1->m2
      if (e.carriers) {
        const auto& el = im.elin_[ie];
        dF += el.dFn[0] * dx[a.ipsi] + el.dFn[1] * dx[bb.ipsi] + el.dFn[2] * dx[a.ifn] +
              el.dFn[3] * dx[bb.ifn];
        dF += el.dFp[0] * dx[a.ipsi] + el.dFp[1] * dx[bb.ipsi] + el.dFp[2] * dx[a.ifp] +
              el.dFp[3] * dx[bb.ifp];
      }
      if (s1 >= 0) I[s1] += dF;
      if (s2 >= 0) I[s2] -= dF;
    }
    Y(0, port) = I[2] * im.width_cm / dV;  // gate current
    Y(1, port) = I[1] * im.width_cm / dV;  // drain current
  }
  return Y;
}

NodeFields DDSolver::fields(const SolutionState& state) const {
  Impl& im = *impl_;
  NodeFields f;
  const int N = static_cast<int>(im.nodes.size());
  f.phi_n_V.resize(N);
  f.phi_p_V.resize(N);
  f.Ex_V_cm.resize(N);
  f.Ey_V_cm.resize(N);
  f.Emag_MV_cm.resize(N);
  for (int m = 0; m < N; ++m) {
    const auto& nd = im.nodes[m];
    if (nd.ifn >= 0) {
      f.phi_n_V[m] = double(state.psi[m]) + nd.Vn_off -
                     im.vT * std::log(std::max(double(state.n[m]), 1e-30) / im.Nc0);
      f.phi_p_V[m] = double(state.psi[m]) + nd.Vp_off +
                     im.vT * std::log(std::max(double(state.p[m]), 1e-30) / im.Nv0);
    } else {
      f.phi_n_V[m] = f.phi_p_V[m] = 0;
    }
    double Ex, Ey;
    im.node_field(state, m, Ex, Ey);
    f.Ex_V_cm[m] = Ex;
    f.Ey_V_cm[m] = Ey;
    f.Emag_MV_cm[m] = std::hypot(Ex, Ey) * 1e-6;
  }
  return f;
}

}  // namespace heterosim
