#pragma once

#include <vector>

#include "heterosim/device_mesh.hpp"
#include "heterosim/materials.hpp"

namespace heterosim::sp1d {

struct Layer1D {
  MaterialParams mat;
  double thickness_nm = 0;
  double doping_cm3 = 0;  // net donors
};

enum class TopBC { Schottky, PinnedSurface };

// Vertical cut through the gate stack, top first.
struct LayerStack1D {
  std::vector<Layer1D> layers;
  TopBC top = TopBC::Schottky;
  double workfun_eV = 0;              // Schottky gate metal
  double pin_Ec_eV = 0;               // Ec - E_F at a bare surface
  std::vector<double> sheet_C_cm2;    // one per internal heterojunction
  double T_K = 300.0;
};

struct BandDiagram1D {
  std::vector<double> z_nm;      // depth from the surface
  std::vector<double> Ec_eV, Ev_eV;
  std::vector<double> n_cm3;
  std::vector<double> F_MV_cm;   // signed electric field -dpsi/dz
  std::vector<double> subband_E_eV;             // ascending
  std::vector<std::vector<double>> subband_psi; // on z grid, zero outside the window; int |psi|^2 dz_cm = 1
  double fermi_eV = 0;
  int iterations = 0;
  double final_update_V = 0;
  double channel_z0_nm = 0, channel_z1_nm = 0;  // integration range for sheet_density
  double surface_D_C_cm2 = 0;                   // displacement into the top boundary
  double volume_Q_C_cm2 = 0;                    // integrated space + sheet charge

  double peak_field_MV_cm() const;
  double peak_n_cm3() const;
  double peak_n_depth_nm() const;
};

struct Eigenpairs {
  std::vector<double> E_eV;                   // ascending
  std::vector<std::vector<double>> psi;       // int |psi|^2 dz_nm = 1
};

// Lowest n_states eigenpairs of the 1D effective-mass Hamiltonian with
// zero-envelope boundaries on the given (possibly nonuniform) grid.
Eigenpairs solve_schrodinger(const std::vector<double>& z_nm, const std::vector<double>& Ec_eV,
                             const std::vector<double>& me, int n_states);

struct SpOptions {
  int n_states = 3;
  double qw_barrier_nm = 5.0;    // quantum window reach into the barrier
  double qw_channel_nm = 20.0;   // and into the channel
  double update_tol_V = 1e-6;
  int max_outer = 200;
  double dz_scale = 1.0;         // < 1 refines the grid uniformly
};

BandDiagram1D solve_sp(const LayerStack1D& stack, double gate_bias_V, const SpOptions& opt = {});

// n_s [cm^-2] integrated over the channel layer.
double sheet_density(const BandDiagram1D& bd);

// The stack under the gate of a HEMT device spec.
LayerStack1D make_gate_stack(const DeviceSpec& spec, const MaterialDb& db, double T_K = 300.0);

}  // namespace heterosim::sp1d
