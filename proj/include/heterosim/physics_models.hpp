#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace heterosim {

// Transport/recombination model set and solver controls for the 2D solver.
struct PhysicsConfig {
  bool highfield_mobility = true;
  double beta = 1.7;              // Caughey-Thomas exponent, [1, 2]
  bool srh = true;
  bool auger = true;
  bool impact_ionization = false;
  double T_L = 300.0;             // lattice temperature [K]
  double tau_w = 0.3e-12;         // energy relaxation time [s]
  double interface_trap_cm2 = 0;  // acceptor sheet at the passivation/barrier interface
  double gummel_tol_V = 10e-3;    // Gummel -> Newton handoff
  double newton_tol_V = 1e-6;
  int max_gummel = 40;
  int max_newton = 25;

  std::vector<std::string> validate() const {
    std::vector<std::string> v;
    if (!(beta >= 1.0 && beta <= 2.0)) v.push_back("beta must lie in [1,2]");
    if (!(tau_w > 0)) v.push_back("tau_w must be > 0");
    if (!(T_L > 0)) v.push_back("T_L must be > 0");
    if (!(newton_tol_V > 0 && gummel_tol_V > 0)) v.push_back("tolerances must be > 0");
    return v;
  }
};

// Shockley-Read-Hall recombination, midgap trap level. [cm^-3 s^-1]
inline double srh_rate(double n, double p, double n_i, double tau_n, double tau_p) {
  const double den = std::max(tau_p * (n + n_i) + tau_n * (p + n_i), 1e-30);
  return (n * p - n_i * n_i) / den;
}

// Band-to-band Auger recombination. [cm^-3 s^-1]
inline double auger_rate(double n, double p, double n_i, double Cn, double Cp) {
  return (Cn * n + Cp * p) * (n * p - n_i * n_i);
}

// Field-dependent mobility, mu0 / (1 + (mu0 E / v_sat)^beta)^(1/beta).
inline double highfield_mobility(double mu0, double E_parallel, double v_sat, double beta) {
  if (E_parallel <= 0) return mu0;
  const double r = mu0 * E_parallel / v_sat;
  return mu0 / std::pow(1.0 + std::pow(r, beta), 1.0 / beta);
}

// Chynoweth impact-ionization coefficient a * exp(-b / E). [1/cm]
inline double chynoweth_alpha(double E, double a, double b) {
  if (E <= 0) return 0.0;
  const double x = b / E;
  if (x > 700.0) return 0.0;
  return a * std::exp(-x);
}

}  // namespace heterosim
