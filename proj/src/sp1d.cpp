#include "heterosim/sp1d.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "heterosim/constants.hpp"
#include "heterosim/errors.hpp"
#include "heterosim/numerics.hpp"

namespace heterosim::sp1d {

using consts::q_C;

double BandDiagram1D::peak_field_MV_cm() const {
  double m = 0;
  for (double f : F_MV_cm) m = std::max(m, std::abs(f));
  return m;
}

double BandDiagram1D::peak_n_cm3() const {
  double m = 0;
  for (double v : n_cm3) m = std::max(m, v);
  return m;
}

double BandDiagram1D::peak_n_depth_nm() const {
  size_t k = 0;
  for (size_t i = 1; i < n_cm3.size(); ++i)
    if (n_cm3[i] > n_cm3[k]) k = i;
  return z_nm[k];
}

Eigenpairs solve_schrodinger(const std::vector<double>& z, const std::vector<double>& Ec,
                             const std::vector<double>& me, int n_states) {
  const int N = static_cast<int>(z.size());
  if (N < 50) throw std::domain_error("solve_schrodinger: need at least 50 grid nodes");
  if (n_states < 1) throw std::domain_error("solve_schrodinger: n_states must be >= 1");
  const int M = N - 2;  // interior nodes, zero envelope at both ends
  Eigen::VectorXd diag(M), sub(std::max(0, M - 1)), w(M);
  const double c = consts::hbar2_over_2m0_eVnm2;
  // Mass-aware three-point kinetic operator, symmetrized for the weighted
  // inner product sum(psi_i^2 w_i).
  for (int i = 1; i <= M; ++i) {
    const double hm = z[i] - z[i - 1];
    const double hp = z[i + 1] - z[i];
    const double mim = 2.0 / (1.0 / me[i] + 1.0 / me[i - 1]);
    const double mip = 2.0 / (1.0 / me[i] + 1.0 / me[i + 1]);
    w(i - 1) = 0.5 * (hm + hp);
    const double am = c / (mim * hm);
    const double ap = c / (mip * hp);
    diag(i - 1) = (am + ap) / w(i - 1) + Ec[i];
    if (i < M) sub(i - 1) = -ap;  // scaled below
  }
  for (int i = 0; i + 1 < M; ++i) sub(i) /= std::sqrt(w(i) * w(i + 1));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub);
  if (es.info() != Eigen::Success)
    throw SolverError("solve_schrodinger: tridiagonal eigensolve failed to converge");

  Eigenpairs out;
  const int k = std::min(n_states, M);
  for (int s = 0; s < k; ++s) {
    out.E_eV.push_back(es.eigenvalues()(s));
    std::vector<double> psi(N, 0.0);
    double norm2 = 0;
    for (int i = 0; i < M; ++i) {
      psi[i + 1] = es.eigenvectors()(i, s) / std::sqrt(w(i));
      norm2 += psi[i + 1] * psi[i + 1] * w(i);
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : psi) v *= inv;
    out.psi.push_back(std::move(psi));
  }
  return out;
}

namespace {

struct Grid1D {
  std::vector<double> z_nm;
  std::vector<int> layer;          // per node
  std::vector<double> sheet;       // per node [C/cm^2]
  std::vector<double> iface_z;     // internal junction depths
};

Grid1D build_grid(const LayerStack1D& st, double dz_scale) {
  Grid1D g;
  std::vector<double> bounds{0.0};
  for (const auto& l : st.layers) bounds.push_back(bounds.back() + l.thickness_nm);
  for (size_t i = 1; i + 1 < bounds.size(); ++i) g.iface_z.push_back(bounds[i]);

  auto near_feature = [&](double zz) {
    double d = zz;  // distance to surface
    for (double f : g.iface_z) d = std::min(d, std::abs(zz - f));
    return d;
  };
  for (size_t li = 0; li < st.layers.size(); ++li) {
    const double a = bounds[li], b = bounds[li + 1];
    double zz = a;
    while (zz < b - 1e-9) {
      g.z_nm.push_back(zz);
      g.layer.push_back(static_cast<int>(li));
      const double d = near_feature(zz + 1e-9);
      double h = d < 25.0 ? 0.25 : (d < 60.0 ? 1.0 : 4.0);
      h *= dz_scale;
      zz = std::min(b, zz + h);
    }
  }
  g.z_nm.push_back(bounds.back());
  g.layer.push_back(static_cast<int>(st.layers.size()) - 1);
  g.sheet.assign(g.z_nm.size(), 0.0);
  for (size_t j = 0; j < g.iface_z.size(); ++j) {
    size_t best = 0;
    for (size_t i = 1; i < g.z_nm.size(); ++i)
      if (std::abs(g.z_nm[i] - g.iface_z[j]) < std::abs(g.z_nm[best] - g.iface_z[j])) best = i;
    if (j < st.sheet_C_cm2.size()) g.sheet[best] += st.sheet_C_cm2[j];
  }
  return g;
}

}  // namespace

BandDiagram1D solve_sp(const LayerStack1D& st, double gate_bias_V, const SpOptions& opt) {
  if (st.layers.size() < 1) throw std::domain_error("solve_sp: stack needs layers");
  const double T = st.T_K, vT = consts::thermal_voltage(T);
  Grid1D g = build_grid(st, opt.dz_scale);
  const int N = static_cast<int>(g.z_nm.size());

  // Per-node material quantities.
  std::vector<double> chi(N), Eg(N), Nc(N), Nv(N), eps(N), me(N);
  for (int i = 0; i < N; ++i) {
    const MaterialParams& m = st.layers[g.layer[i]].mat;
    chi[i] = m.chi;
    Eg[i] = m.Eg;
    Nc[i] = m.Nc(T);
    Nv[i] = m.Nv(T);
    eps[i] = m.eps();
    me[i] = m.me;
  }
  std::vector<double> dop(N);
  for (int i = 0; i < N; ++i) dop[i] = st.layers[g.layer[i]].doping_cm3;

  // Box weights in cm; z in nm -> cm.
  const double nm = 1e-7;
  std::vector<double> w(N);
  for (int i = 0; i < N; ++i) {
    const double hm = i > 0 ? g.z_nm[i] - g.z_nm[i - 1] : 0.0;
    const double hp = i + 1 < N ? g.z_nm[i + 1] - g.z_nm[i] : 0.0;
    w[i] = 0.5 * (hm + hp) * nm;
  }

  // Top boundary value of psi (Ec = -chi - psi, E_F = 0).
  const double Ec_top = (st.top == TopBC::Schottky)
                            ? (st.workfun_eV - chi[0]) - gate_bias_V
                            : st.pin_Ec_eV;
  const double psi_top = -chi[0] - Ec_top;

  // Quantum window around the first heterojunction.
  int qw_lo = -1, qw_hi = -1;
  if (!g.iface_z.empty()) {
    const double z_int = g.iface_z[0];
    for (int i = 0; i < N; ++i) {
      const double z = g.z_nm[i];
      if (z >= z_int - opt.qw_barrier_nm && qw_lo < 0) qw_lo = i;
      if (z <= z_int + opt.qw_channel_nm) qw_hi = i;
    }
    if (qw_hi - qw_lo < 52) qw_lo = -1;  // window too small to quantize
  }
  const bool quantum = qw_lo >= 0;

  // State: psi plus the quantum density and its reference potential.
  std::vector<double> psi(N), nq(N, 0.0), psi_ref(N, 0.0);
  const double psi_neutral_bottom =
      vT * std::log(std::max(dop[N - 1], 1.0) / Nc[N - 1]) - chi[N - 1];
  for (int i = 0; i < N; ++i) {
    const double f = g.z_nm[i] / std::max(g.z_nm[N - 1], 1.0);
    psi[i] = psi_top + (psi_neutral_bottom - psi_top) * std::min(1.0, 2.0 * f);
  }
  psi[0] = psi_top;

  bool use_quantum_density = false;
  auto carrier_n = [&](int i, double psi_i) {
    if (use_quantum_density && i >= qw_lo && i <= qw_hi)
      return nq[i] * num::exp_clamped((psi_i - psi_ref[i]) / vT);
    return Nc[i] * num::exp_clamped((psi_i + chi[i]) / vT);
  };
  auto carrier_p = [&](int i, double psi_i) {
    return Nv[i] * num::exp_clamped((-psi_i - chi[i] - Eg[i]) / vT);
  };

  // Damped Newton on the nonlinear Poisson equation with the current quantum
  // density predictor.
  auto poisson_solve = [&]() {
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd rhs(N - 1), dl(N - 1), d(N - 1), du(N - 1);
      double max_res = 0;
      for (int i = 1; i < N; ++i) {
        const int k = i - 1;
        const double hm = (g.z_nm[i] - g.z_nm[i - 1]) * nm;
        const double em = 0.5 * (eps[i] + eps[i - 1]);
        double res = em * (psi[i - 1] - psi[i]) / hm;
        double dii = -em / hm;
        double dlo = em / hm;
        double dhi = 0;
        if (i + 1 < N) {
          const double hp = (g.z_nm[i + 1] - g.z_nm[i]) * nm;
          const double ep = 0.5 * (eps[i] + eps[i + 1]);
          res += ep * (psi[i + 1] - psi[i]) / hp;
          dii += -ep / hp;
          dhi = ep / hp;
        }
        const double n_i = carrier_n(i, psi[i]);
        const double p_i = carrier_p(i, psi[i]);
        res += q_C * (p_i - n_i + dop[i]) * w[i] + g.sheet[i];
        dii += q_C * (-p_i - n_i) / vT * w[i];
        rhs(k) = -res;
        dl(k) = dlo;
        d(k) = dii;
        du(k) = dhi;
        max_res = std::max(max_res, std::abs(res));
      }
      // Thomas solve (node 0 is Dirichlet).
      for (int k = 1; k < N - 1; ++k) {
        const double m = dl(k) / d(k - 1);
        d(k) -= m * du(k - 1);
        rhs(k) -= m * rhs(k - 1);
      }
      Eigen::VectorXd dpsi(N - 1);
      dpsi(N - 2) = rhs(N - 2) / d(N - 2);
      for (int k = N - 3; k >= 0; --k) dpsi(k) = (rhs(k) - du(k) * dpsi(k + 1)) / d(k);
      double mx = dpsi.cwiseAbs().maxCoeff();
      const double damp = mx > 1.0 ? 1.0 / mx : 1.0;
      for (int i = 1; i < N; ++i) psi[i] += damp * dpsi(i - 1);
      if (mx < 1e-9) return;
    }
    throw SolverError("solve_sp: inner Poisson iteration stalled");
  };

  std::vector<double> Ec(N);
  Eigenpairs eig;
  double update = 0;
  int outer = 0;
  std::vector<double> psi_last(psi);
  bool converged = false;
  for (outer = 1; outer <= opt.max_outer; ++outer) {
    poisson_solve();
    update = 0;
    for (int i = 0; i < N; ++i) update = std::max(update, std::abs(psi[i] - psi_last[i]));
    psi_last = psi;
    if (update < opt.update_tol_V && outer > 1) {
      converged = true;
      break;
    }
    if (!quantum) {
      // No subbands to refresh; a second Poisson pass confirms the fixed point.
      continue;
    }
    for (int i = 0; i < N; ++i) Ec[i] = -chi[i] - psi[i];
    std::vector<double> zq(g.z_nm.begin() + qw_lo, g.z_nm.begin() + qw_hi + 1);
    std::vector<double> Eq(Ec.begin() + qw_lo, Ec.begin() + qw_hi + 1);
    std::vector<double> mq(me.begin() + qw_lo, me.begin() + qw_hi + 1);
    eig = solve_schrodinger(zq, Eq, mq, opt.n_states);
    std::vector<double> nq_new(N, 0.0);
    for (size_t s = 0; s < eig.E_eV.size(); ++s) {
      // |psi|^2-weighted effective mass for the subband density of states.
      double m_eff = 0, wsum = 0;
      for (int i = qw_lo; i <= qw_hi; ++i) {
        const double a2 = eig.psi[s][i - qw_lo] * eig.psi[s][i - qw_lo];
        m_eff += me[i] * a2 * (w[i] / nm);
        wsum += a2 * (w[i] / nm);
      }
      m_eff /= std::max(wsum, 1e-300);
      const double dos = consts::DOS2D300 * m_eff * (T / 300.0);
      const double x = -eig.E_eV[s] / vT;
      const double ns_s = dos * (x > 30 ? x : std::log1p(std::exp(std::min(x, 30.0))));
      for (int i = qw_lo; i <= qw_hi; ++i) {
        const double a = eig.psi[s][i - qw_lo] / std::sqrt(nm);  // nm^-1/2 -> cm^-1/2
        nq_new[i] += ns_s * a * a;
      }
    }
    nq = nq_new;
    psi_ref = psi;
    use_quantum_density = true;
  }
  if (!converged)
    throw SolverError("solve_sp: no convergence after " + std::to_string(opt.max_outer) +
                      " iterations, last update " + std::to_string(update) + " V");

  BandDiagram1D bd;
  bd.z_nm = g.z_nm;
  bd.iterations = outer;
  bd.final_update_V = update;
  bd.Ec_eV.resize(N);
  bd.Ev_eV.resize(N);
  bd.n_cm3.resize(N);
  bd.F_MV_cm.resize(N);
  for (int i = 0; i < N; ++i) {
    bd.Ec_eV[i] = -chi[i] - psi[i];
    bd.Ev_eV[i] = bd.Ec_eV[i] - Eg[i];
    bd.n_cm3[i] = carrier_n(i, psi[i]);
  }
  for (int i = 0; i < N; ++i) {
    const int a = std::max(0, i - 1), b = std::min(N - 1, i + 1);
    const double dz = (g.z_nm[b] - g.z_nm[a]) * nm;
    bd.F_MV_cm[i] = -(psi[b] - psi[a]) / dz * 1e-6;
  }
  bd.subband_E_eV = eig.E_eV;
  for (const auto& p : eig.psi) {
    std::vector<double> full(N, 0.0);
    for (int i = qw_lo; i <= qw_hi; ++i) full[i] = p[i - qw_lo] / std::sqrt(nm);
    bd.subband_psi.push_back(std::move(full));
  }
  // Channel = everything below the first junction (whole stack if unlayered).
  bd.channel_z0_nm = g.iface_z.empty() ? 0.0 : g.iface_z[0];
  bd.channel_z1_nm = g.z_nm.back();
  // Neutrality bookkeeping: integrated charge vs displacement into the top contact.
  double Q = 0;
  for (int i = 1; i < N; ++i)
    Q += q_C * (carrier_p(i, psi[i]) - bd.n_cm3[i] + dop[i]) * w[i] + g.sheet[i];
  Q += q_C * (carrier_p(0, psi[0]) - carrier_n(0, psi[0]) + dop[0]) * w[0] + g.sheet[0];
  bd.volume_Q_C_cm2 = Q;
  const double h0 = (g.z_nm[1] - g.z_nm[0]) * nm;
  bd.surface_D_C_cm2 = -0.5 * (eps[0] + eps[1]) * (psi[0] - psi[1]) / h0;
  return bd;
}

double sheet_density(const BandDiagram1D& bd) {
  double ns = 0;
  const int N = static_cast<int>(bd.z_nm.size());
  for (int i = 0; i < N; ++i) {
    if (bd.z_nm[i] < bd.channel_z0_nm - 1e-9) continue;
    const double hm = i > 0 ? bd.z_nm[i] - std::max(bd.z_nm[i - 1], bd.channel_z0_nm) : 0.0;
    const double hp = i + 1 < N ? bd.z_nm[i + 1] - bd.z_nm[i] : 0.0;
    const double w = 0.5 * (std::max(hm, 0.0) + (bd.z_nm[i] >= bd.channel_z0_nm ? hp : 0.0));
    ns += bd.n_cm3[i] * w * 1e-7;
  }
  return ns;
}

LayerStack1D make_gate_stack(const DeviceSpec& spec, const MaterialDb& db, double T_K) {
  LayerStack1D st;
  MaterialParams barrier = db.alloy_params(spec.al_fraction);
  barrier.chi = db.aligned_chi(barrier);
  st.layers.push_back({barrier, spec.barrier_thickness_um * 1e3, spec.barrier_doping_cm3});
  st.layers.push_back({db.gan(), spec.channel_thickness_um * 1e3, spec.channel_doping_cm3});
  st.top = TopBC::Schottky;
  st.workfun_eV = spec.gate_workfun_eV;
  st.sheet_C_cm2 = {db.polarization_sheet_charge(spec.al_fraction, spec.relaxation)};
  st.T_K = T_K;
  return st;
}

}  // namespace heterosim::sp1d
