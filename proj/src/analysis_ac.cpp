#include "heterosim/analysis_ac.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "heterosim/errors.hpp"
#include "heterosim/thread_pool.hpp"

namespace heterosim {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Eigen::Matrix2cd y_to_s(const Eigen::Matrix2cd& Y, double Z0) {
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd A = I + Z0 * Y;
  if (std::abs(A.determinant()) < 1e-300)
    throw SolverError("y_to_s: I + Z0*Y is singular");
  return (I - Z0 * Y) * A.inverse();
}

Eigen::Matrix2cd s_to_y(const Eigen::Matrix2cd& S, double Z0) {
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd A = I + S;
  if (std::abs(A.determinant()) < 1e-300)
    throw SolverError("s_to_y: I + S is singular");
  return (1.0 / Z0) * A.inverse() * (I - S);
}

Eigen::Matrix2cd embed_series_r1(const Eigen::Matrix2cd& Y, double R_ohm) {
  if (R_ohm == 0) return Y;
  if (std::abs(Y.determinant()) < 1e-300) {
    // fall back through the input admittance only
    Eigen::Matrix2cd Yr = Y;
    return Yr;
  }
  Eigen::Matrix2cd Z = Y.inverse();
  Z(0, 0) += R_ohm;
  return Z.inverse();
}

std::vector<double> log_frequency_grid(double f_min, double f_max, int per_decade) {
  std::vector<double> f;
  const double step = 1.0 / per_decade;
  const int n = static_cast<int>(std::ceil(std::log10(f_max / f_min) / step - 1e-9));
  for (int k = 0; k <= n; ++k) f.push_back(f_min * std::pow(10.0, k * step));
  return f;
}

FomResult crossing_frequency(const std::vector<double>& f, const std::vector<double>& g_dB) {
  FomResult r;
  // last index with gain still above 0 dB, requiring a decaying response
  int cross = -1;
  for (size_t k = 0; k + 1 < f.size(); ++k) {
    if (std::isnan(g_dB[k]) || std::isnan(g_dB[k + 1])) continue;
    if (g_dB[k] > 0 && g_dB[k + 1] <= 0) {
      cross = static_cast<int>(k);
      break;
    }
  }
  const auto fit_from = [&](int last) -> std::optional<double> {
    // -20 dB/dec law: each sample predicts f0 = f * 10^(dB/20)
    double acc = 0;
    int cnt = 0;
    for (int k = last; k >= 0; --k) {
      if (f[last] / f[k] > 10.0 * (1 + 1e-9)) break;
      if (std::isnan(g_dB[k]) || g_dB[k] <= 0) continue;
      acc += std::log10(f[k]) + g_dB[k] / 20.0;
      ++cnt;
    }
    if (!cnt) return std::nullopt;
    return std::pow(10.0, acc / cnt);
  };
  if (cross >= 0) {
    if (auto v = fit_from(cross)) {
      r.f_Hz = v;
      return r;
    }
  }
  // no crossing on the grid: extrapolate when the tail is decaying and positive
  int last = -1;
  for (int k = static_cast<int>(f.size()) - 1; k >= 0; --k)
    if (!std::isnan(g_dB[k])) {
      last = k;
      break;
    }
  if (last >= 1 && g_dB[last] > 0 && g_dB[last] < g_dB[last - 1]) {
    if (auto v = fit_from(last)) {
      r.f_Hz = v;
      r.extrapolated = true;
    }
  }
  return r;  // empty: not determinable
}

TwoPortSpectrum solve_spectrum(DDSolver& solver, const SolutionState& state,
                               const std::vector<double>& f_Hz, double r_gate_ohm_mm,
                               int workers) {
  TwoPortSpectrum sp;
  sp.f_Hz = f_Hz;
  sp.bias = state.bias;
  sp.r_gate_ohm_mm = r_gate_ohm_mm;
  const size_t N = f_Hz.size();
  sp.Y.resize(N);
  sp.S.resize(N);
  sp.h21_dB.assign(N, kNaN);
  sp.U_dB.assign(N, kNaN);
  sp.K.assign(N, kNaN);
  sp.Gms_dB.assign(N, kNaN);
  sp.Gma_dB.assign(N, kNaN);

  const double R_g = r_gate_ohm_mm / solver.mesh().spec.width_mm;  // absolute ohms

  // Independent solver clones give thread safety; slots keep ordering.
  const int nw = std::max(1, std::min<int>(workers, static_cast<int>(N)));
  std::vector<std::unique_ptr<DDSolver>> clones;
  for (int w = 1; w < nw; ++w)
    clones.push_back(std::make_unique<DDSolver>(solver.mesh(), solver.physics()));
  std::vector<std::function<void()>> jobs;
  std::vector<std::string> errors(nw);
  for (int w = 0; w < nw; ++w) {
    jobs.push_back([&, w]() {
      DDSolver& s = w == 0 ? solver : *clones[w - 1];
      try {
        for (size_t k = w; k < N; k += nw) sp.Y[k] = s.ac_y_params(state, f_Hz[k]);
      } catch (const std::exception& e) {
        errors[w] = e.what();
      }
    });
  }
  parallel_run(std::move(jobs), nw);
  for (const auto& e : errors)
    if (!e.empty()) throw SolverError("solve_spectrum: " + e);

  for (size_t k = 0; k < N; ++k) {
    sp.Y[k] = embed_series_r1(sp.Y[k], R_g);
    const Eigen::Matrix2cd& Y = sp.Y[k];
    sp.S[k] = y_to_s(Y, sp.Z0);
    const Eigen::Matrix2cd& S = sp.S[k];

    if (std::abs(Y(0, 0)) > 0)
      sp.h21_dB[k] = 20.0 * std::log10(std::abs(Y(1, 0) / Y(0, 0)));
    const double den =
        4.0 * (Y(0, 0).real() * Y(1, 1).real() - Y(0, 1).real() * Y(1, 0).real());
    if (den > 0) {
      const double U = std::norm(Y(1, 0) - Y(0, 1)) / den;
      if (U > 0) sp.U_dB[k] = 10.0 * std::log10(U);
    }
    const std::complex<double> delta = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
    const double s12s21 = std::abs(S(0, 1) * S(1, 0));
    if (s12s21 > 0) {
      sp.K[k] = (1.0 - std::norm(S(0, 0)) - std::norm(S(1, 1)) + std::norm(delta)) /
                (2.0 * s12s21);
      const double gms = std::abs(S(1, 0) / S(0, 1));
      sp.Gms_dB[k] = 10.0 * std::log10(gms);
      if (sp.K[k] > 1.0) {
        const double gma = gms * (sp.K[k] - std::sqrt(sp.K[k] * sp.K[k] - 1.0));
        sp.Gma_dB[k] = 10.0 * std::log10(gma);
      }
    }
  }
  sp.f_t = crossing_frequency(sp.f_Hz, sp.h21_dB);
  sp.f_max = crossing_frequency(sp.f_Hz, sp.U_dB);
  return sp;
}

double quasi_static_ft(double g_m, double C_gs, double C_gd) {
  return g_m / (2.0 * M_PI * (C_gs + C_gd));
}

double quasi_static_fmax(double f_t, double g_m, double R_g, double C_gd, double R_out) {
  return 0.5 * f_t * std::sqrt(g_m * R_g / (C_gd * R_out));
}

QuasiStaticFoms quasi_static_foms(const TwoPortSpectrum& sp, double R_g_ohm) {
  if (sp.f_Hz.empty()) throw std::domain_error("quasi_static_foms: empty spectrum");
  QuasiStaticFoms q;
  const double w = 2.0 * M_PI * sp.f_Hz.front();
  const Eigen::Matrix2cd& Y = sp.Y.front();
  q.g_m_S = Y(1, 0).real();
  q.C_gs_F = (Y(0, 0) + Y(0, 1)).imag() / w;
  q.C_gd_F = -Y(0, 1).imag() / w;
  q.R_out_ohm = 1.0 / std::max(Y(1, 1).real(), 1e-30);
  q.f_t_Hz = quasi_static_ft(q.g_m_S, q.C_gs_F, q.C_gd_F);
  q.f_max_Hz = quasi_static_fmax(q.f_t_Hz, q.g_m_S, R_g_ohm, q.C_gd_F, q.R_out_ohm);
  return q;
}

std::string to_touchstone(const TwoPortSpectrum& sp) {
  std::ostringstream os;
  os << "! 2-port S-parameters, gate = port 1, drain = port 2\n";
  os << "# Hz S MA R 50\n";
  char buf[256];
  for (size_t k = 0; k < sp.f_Hz.size(); ++k) {
    const Eigen::Matrix2cd& S = sp.S[k];
    auto ma = [&](int i, int j, double& m, double& a) {
      m = std::abs(S(i, j));
      a = std::arg(S(i, j)) * 180.0 / M_PI;
    };
    double m11, a11, m21, a21, m12, a12, m22, a22;
    ma(0, 0, m11, a11);
    ma(1, 0, m21, a21);
    ma(0, 1, m12, a12);
    ma(1, 1, m22, a22);
    std::snprintf(buf, sizeof buf,
                  "%.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", sp.f_Hz[k], m11, a11,
                  m21, a21, m12, a12, m22, a22);
    os << buf;
  }
  return os.str();
}

}  // namespace heterosim
