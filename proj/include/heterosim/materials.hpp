#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "heterosim/constants.hpp"

namespace heterosim {

// Position-independent semiconductor parameters. Alloy records are produced
// by MaterialDb::alloy_params; endpoint records come from the parameter file.
struct MaterialParams {
  std::string name;
  double Eg = 0;        // bandgap [eV]
  double chi = 0;       // electron affinity [eV]
  double eps_r = 0;     // relative permittivity
  double me = 0;        // electron effective mass [m0]
  double mh = 0;        // hole effective mass [m0]
  double mu0_n = 0;     // low-field electron mobility [cm^2/Vs]
  double mu0_p = 0;     // low-field hole mobility [cm^2/Vs]
  double v_sat = 0;     // saturation velocity [cm/s]
  double tau_n = 0;     // SRH electron lifetime [s]
  double tau_p = 0;     // SRH hole lifetime [s]
  double auger_cn = 0;  // Auger coefficient [cm^6/s]
  double auger_cp = 0;  // Auger coefficient [cm^6/s]
  double psp = 0;       // spontaneous polarization [C/m^2]
  double e31 = 0;       // piezoelectric constant [C/m^2]
  double e33 = 0;       // piezoelectric constant [C/m^2]
  double c13 = 0;       // elastic constant [GPa]
  double c33 = 0;       // elastic constant [GPa]
  double a_lattice = 0; // lattice constant [Angstrom]
  double impact_an = 0; // Chynoweth electron prefactor [1/cm]
  double impact_bn = 0; // Chynoweth electron critical field [V/cm]
  double impact_ap = 0; // Chynoweth hole prefactor [1/cm]
  double impact_bp = 0; // Chynoweth hole critical field [V/cm]

  double Nc(double T) const {
    return consts::NC300 * me * std::sqrt(me) * std::pow(T / 300.0, 1.5);
  }
  double Nv(double T) const {
    return consts::NC300 * mh * std::sqrt(mh) * std::pow(T / 300.0, 1.5);
  }
  double ni(double T) const {
    return std::sqrt(Nc(T) * Nv(T)) * std::exp(-0.5 * Eg / consts::thermal_voltage(T));
  }
  double eps() const { return eps_r * consts::eps0_F_cm; }
};

struct DielectricParams {
  std::string name;
  double k = 0;       // relative permittivity
  double e_crit = 0;  // nominal breakdown field [MV/cm], informational
  double eps() const { return k * consts::eps0_F_cm; }
};

// GaN/AlN endpoint database plus the Al_xGa_{1-x}N interpolation rules and
// the passivation dielectric table. Immutable after load.
class MaterialDb {
 public:
  static MaterialDb load_file(const std::string& path);
  static MaterialDb load_text(const std::string& text, const std::string& origin = "<text>");
  void save_file(const std::string& path) const;
  std::string to_text() const;

  // Vegard interpolation GaN -> AlN for every field; Eg carries the bowing
  // correction Eg(x) = x Eg_AlN + (1-x) Eg_GaN - b x (1-x).
  MaterialParams alloy_params(double x) const;

  // Bound polarization sheet density at the AlGaN-on-GaN interface, returned
  // positive, in C/cm^2. `relaxation` = 0 is a fully strained barrier;
  // 1 suppresses the piezoelectric part entirely.
  double polarization_sheet_charge(double x, double relaxation) const;

  const DielectricParams& dielectric_params(const std::string& name) const;

  const MaterialParams& gan() const { return gan_; }
  const MaterialParams& aln() const { return aln_; }
  double eg_bowing() const { return eg_bowing_; }
  double dEc_ratio() const { return dEc_ratio_; }
  int version() const { return version_; }

  // Conduction-band offset from GaN for an alloy record.
  double dEc_from_gan(const MaterialParams& m) const { return dEc_ratio_ * (m.Eg - gan_.Eg); }

  // Affinity that realizes the dEc_ratio band lineup against GaN. Band
  // diagrams and the device solvers use this alignment rule; the stored
  // endpoint affinities otherwise only set the GaN reference.
  double aligned_chi(const MaterialParams& m) const { return gan_.chi - dEc_from_gan(m); }

 private:
  MaterialParams gan_, aln_;
  std::vector<DielectricParams> dielectrics_;
  double eg_bowing_ = 1.0;   // [eV]
  double dEc_ratio_ = 0.7;
  int version_ = 0;
  void validate(const std::string& origin) const;
};

}  // namespace heterosim
