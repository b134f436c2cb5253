#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "heterosim/dd_solver.hpp"

namespace heterosim {

// Bilinear Y <-> S transforms at a real reference impedance.
Eigen::Matrix2cd y_to_s(const Eigen::Matrix2cd& Y, double Z0 = 50.0);
Eigen::Matrix2cd s_to_y(const Eigen::Matrix2cd& S, double Z0 = 50.0);

// Series resistance added at port 1 (the simulated gate metal is ideal).
Eigen::Matrix2cd embed_series_r1(const Eigen::Matrix2cd& Y, double R_ohm);

struct FomResult {
  std::optional<double> f_Hz;
  bool extrapolated = false;
};

// 0 dB crossing located by a -20 dB/dec fit over the last decade below the
// crossing; extrapolates past the grid when the response is still above 0 dB.
FomResult crossing_frequency(const std::vector<double>& f_Hz, const std::vector<double>& gain_dB);

struct TwoPortSpectrum {
  std::vector<double> f_Hz;
  std::vector<Eigen::Matrix2cd> Y;  // gate parasitic embedded, absolute siemens
  std::vector<Eigen::Matrix2cd> S;  // Z0 = 50 ohm
  std::vector<double> h21_dB;
  std::vector<double> U_dB;         // NaN where Mason's denominator <= 0
  std::vector<double> K;
  std::vector<double> Gms_dB;       // NaN where S12 = 0
  std::vector<double> Gma_dB;       // NaN where K <= 1
  Bias bias;
  double r_gate_ohm_mm = 0;
  double Z0 = 50.0;

  FomResult f_t, f_max;

  // MAG where defined, else MSG; the usual combined curve.
  double gain_curve_dB(size_t k) const {
    return std::isnan(Gma_dB[k]) ? Gms_dB[k] : Gma_dB[k];
  }
};

std::vector<double> log_frequency_grid(double f_min_Hz, double f_max_Hz, int per_decade);

// Linearizes the DC state over the grid and derives every figure of merit.
TwoPortSpectrum solve_spectrum(DDSolver& solver, const SolutionState& state,
                               const std::vector<double>& f_Hz, double r_gate_ohm_mm = 1.0,
                               int workers = 1);

struct QuasiStaticFoms {
  double g_m_S = 0, C_gs_F = 0, C_gd_F = 0, R_out_ohm = 0;
  double f_t_Hz = 0, f_max_Hz = 0;
};

// Low-frequency estimates from the first grid point of the spectrum.
QuasiStaticFoms quasi_static_foms(const TwoPortSpectrum& sp, double R_g_ohm);
double quasi_static_ft(double g_m_S, double C_gs_F, double C_gd_F);
double quasi_static_fmax(double f_t_Hz, double g_m_S, double R_g_ohm, double C_gd_F,
                         double R_out_ohm);

// Touchstone v1, magnitude-angle, Z0 = 50 ohm.
std::string to_touchstone(const TwoPortSpectrum& sp);

}  // namespace heterosim
