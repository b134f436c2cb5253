#pragma once

// Physical constants in the internal unit system: cm, V, eV, s, A, K.

namespace heterosim::consts {

inline constexpr double q_C        = 1.602176634e-19;   // elementary charge [C]
inline constexpr double kB_eV      = 8.617333262e-5;    // Boltzmann [eV/K]
inline constexpr double eps0_F_cm  = 8.8541878128e-14;  // vacuum permittivity [F/cm]
inline constexpr double hbar_eVs   = 6.582119569e-16;   // reduced Planck [eV s]
inline constexpr double m0_kg      = 9.1093837015e-31;  // electron rest mass [kg]

// hbar^2 / (2 m0) in eV nm^2; kinetic prefactor for effective-mass problems.
inline constexpr double hbar2_over_2m0_eVnm2 = 3.80998212e-2;

// Effective density of states prefactor: Nc = NC300 * me^{3/2} * (T/300)^{3/2} [cm^-3].
inline constexpr double NC300 = 2.50947e19;

// 2D density-of-states prefactor m0*kB*300K/(pi*hbar^2) [cm^-2]; scale by me*(T/300).
inline constexpr double DOS2D300 = 1.07981e13;

inline double thermal_voltage(double T_K) { return kB_eV * T_K; }

}  // namespace heterosim::consts
