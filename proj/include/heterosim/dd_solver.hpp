#pragma once

#include <Eigen/Sparse>
#include <complex>
#include <memory>
#include <vector>

#include "heterosim/device_mesh.hpp"
#include "heterosim/physics_models.hpp"

namespace heterosim {

struct Bias {
  double v_s = 0, v_d = 0, v_g = 0;
  double of(Terminal t) const {
    switch (t) {
      case Terminal::Source: return v_s;
      case Terminal::Drain: return v_d;
      case Terminal::Gate: return v_g;
      default: return 0;
    }
  }
  double max_step_to(const Bias& o) const {
    return std::max({std::abs(o.v_s - v_s), std::abs(o.v_d - v_d), std::abs(o.v_g - v_g)});
  }
};

struct ConvergenceReport {
  int gummel_iterations = 0;
  int newton_iterations = 0;
  double final_update_V = 0;
  double residual_norm = 0;
  bool converged = false;
  std::vector<double> update_history;
};

// State vectors carry extra mantissa so that terminal-current sums resolve
// well below the conservation tolerance; factorizations stay in double.
using StateVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// One converged operating point; densities stay strictly positive. Terminal
// currents are width-scaled.
struct SolutionState {
  Bias bias;
  StateVec psi;            // [V]
  StateVec n, p;           // [cm^-3]
  Eigen::VectorXd T_n;     // electron temperature [K], empty until requested
  double I_s_mA = 0, I_d_mA = 0, I_g_mA = 0;
  ConvergenceReport conv;

  double kirchhoff_mA() const { return I_s_mA + I_d_mA + I_g_mA; }
};

struct NodeFields {
  std::vector<double> phi_n_V, phi_p_V, Emag_MV_cm, Ex_V_cm, Ey_V_cm;
};

// Poisson + electron/hole continuity on the tensor mesh, exponential-fitted
// fluxes, Gummel start-up and damped Newton finish. Newton works on
// (psi, n, p); carrier updates are clipped multiplicatively so densities
// stay positive.
class DDSolver {
 public:
  DDSolver(const Mesh2D& mesh, const PhysicsConfig& physics);
  ~DDSolver();

  const Mesh2D& mesh() const { return mesh_; }
  const PhysicsConfig& physics() const { return phys_; }

  SolutionState solve_equilibrium();

  // Seed must be converged at a bias no farther than 0.5 V on any terminal.
  SolutionState solve_bias(const Bias& bias, const SolutionState& seed, bool with_gummel = true);

  // Chops into <= max_step_V moves, halving on non-convergence.
  SolutionState ramp_to(const Bias& target, SolutionState seed, double max_step_V = 0.5);

  // One-way energy-balance post-process on a frozen state; fills state.T_n.
  void electron_temperature_post(SolutionState& state) const;

  NodeFields fields(const SolutionState& state) const;

  // Small-signal admittance at one frequency about a converged state.
  // Ports: 1 = gate, 2 = drain, source grounded. Result in siemens,
  // scaled to the device width.
  Eigen::Matrix2cd ac_y_params(const SolutionState& state, double freq_Hz);

  double thermal_voltage() const;
  static void print_profile();

 private:
  struct Impl;
  Mesh2D mesh_;
  PhysicsConfig phys_;
  std::unique_ptr<Impl> impl_;
};

// Sequential continuation helper: remembers the last two states, extrapolates
// the next seed and retries with the Gummel start-up on failure.
class Ladder {
 public:
  Ladder(DDSolver& solver, SolutionState start) : solver_(solver), cur_(std::move(start)) {}
  const SolutionState& state() const { return cur_; }
  const SolutionState& go(const Bias& target, double max_step_V = 0.5);

 private:
  DDSolver& solver_;
  SolutionState cur_, prev_;
  bool have_prev_ = false;
  double prev_step_ = 0;
  bool gummel_next_ = true;  // full start-up on the first step, Newton-first after
};

}  // namespace heterosim
