#include "heterosim/materials.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "heterosim/errors.hpp"
#include "heterosim/kv_text.hpp"

namespace heterosim {

namespace {

struct FieldDef {
  const char* key;
  const char* unit;  // required unit token, "" = dimensionless
  double MaterialParams::* member;
};

constexpr FieldDef kFields[] = {
    {"Eg", "eV", &MaterialParams::Eg},
    {"chi", "eV", &MaterialParams::chi},
    {"eps_r", "", &MaterialParams::eps_r},
    {"me", "", &MaterialParams::me},
    {"mh", "", &MaterialParams::mh},
    {"mu0_n", "cm2/Vs", &MaterialParams::mu0_n},
    {"mu0_p", "cm2/Vs", &MaterialParams::mu0_p},
    {"v_sat", "cm/s", &MaterialParams::v_sat},
    {"tau_n", "s", &MaterialParams::tau_n},
    {"tau_p", "s", &MaterialParams::tau_p},
    {"auger_cn", "cm6/s", &MaterialParams::auger_cn},
    {"auger_cp", "cm6/s", &MaterialParams::auger_cp},
    {"psp", "C/m2", &MaterialParams::psp},
    {"e31", "C/m2", &MaterialParams::e31},
    {"e33", "C/m2", &MaterialParams::e33},
    {"c13", "GPa", &MaterialParams::c13},
    {"c33", "GPa", &MaterialParams::c33},
    {"a_lattice", "A", &MaterialParams::a_lattice},
    {"impact_an", "1/cm", &MaterialParams::impact_an},
    {"impact_bn", "V/cm", &MaterialParams::impact_bn},
    {"impact_ap", "1/cm", &MaterialParams::impact_ap},
    {"impact_bp", "V/cm", &MaterialParams::impact_bp},
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double lerp(double a, double b, double x) { return a + (b - a) * x; }

}  // namespace

MaterialDb MaterialDb::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("materials file '" + path + "'", {"cannot open file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return load_text(ss.str(), path);
}

MaterialDb MaterialDb::load_text(const std::string& text, const std::string& origin) {
  kv::Document doc = kv::parse(text);
  std::vector<std::string> errors = doc.errors;
  MaterialDb db;
  bool have_gan = false, have_aln = false;

  auto apply_field = [&](MaterialParams& m, const kv::Entry& e) {
    for (const auto& f : kFields) {
      if (e.key != f.key) continue;
      if (e.unit != f.unit) {
        errors.push_back("line " + std::to_string(e.line) + ": '" + e.key + "' requires unit '" +
                         std::string(f.unit).append(f.unit[0] ? "" : "<none>") + "', got '" +
                         e.unit + "'");
      }
      if (auto v = kv::to_number(e, errors)) m.*(f.member) = *v;
      return true;
    }
    return false;
  };

  std::map<std::string, DielectricParams> diel;
  for (const auto& e : doc.entries) {
    if (e.section.empty()) {
      if (e.key == "version") {
        if (auto v = kv::to_number(e, errors)) db.version_ = static_cast<int>(*v);
      } else {
        errors.push_back("line " + std::to_string(e.line) + ": unknown top-level key '" + e.key + "'");
      }
    } else if (e.section == "GaN" || e.section == "AlN") {
      MaterialParams& m = (e.section == "GaN") ? db.gan_ : db.aln_;
      (e.section == "GaN" ? have_gan : have_aln) = true;
      m.name = e.section;
      if (!apply_field(m, e))
        errors.push_back("line " + std::to_string(e.line) + ": unknown key '" + e.key +
                         "' in [" + e.section + "]");
    } else if (e.section == "alloy") {
      if (e.key == "eg_bowing") {
        if (e.unit != "eV")
          errors.push_back("line " + std::to_string(e.line) + ": eg_bowing requires unit 'eV'");
        if (auto v = kv::to_number(e, errors)) db.eg_bowing_ = *v;
      } else if (e.key == "dEc_ratio") {
        if (!e.unit.empty())
          errors.push_back("line " + std::to_string(e.line) + ": dEc_ratio is dimensionless");
        if (auto v = kv::to_number(e, errors)) db.dEc_ratio_ = *v;
      } else {
        errors.push_back("line " + std::to_string(e.line) + ": unknown key '" + e.key + "' in [alloy]");
      }
    } else if (e.section.rfind("dielectric ", 0) == 0) {
      std::string name = kv::trim(e.section.substr(11));
      DielectricParams& d = diel[name];
      d.name = name;
      if (e.key == "k") {
        if (!e.unit.empty())
          errors.push_back("line " + std::to_string(e.line) + ": k is dimensionless");
        if (auto v = kv::to_number(e, errors)) d.k = *v;
      } else if (e.key == "e_crit") {
        if (e.unit != "MV/cm")
          errors.push_back("line " + std::to_string(e.line) + ": e_crit requires unit 'MV/cm'");
        if (auto v = kv::to_number(e, errors)) d.e_crit = *v;
      } else {
        errors.push_back("line " + std::to_string(e.line) + ": unknown key '" + e.key +
                         "' in [" + e.section + "]");
      }
    } else {
      errors.push_back("line " + std::to_string(e.line) + ": unknown section [" + e.section + "]");
    }
  }
  if (!have_gan) errors.push_back("missing [GaN] section");
  if (!have_aln) errors.push_back("missing [AlN] section");
  for (auto& [name, d] : diel) db.dielectrics_.push_back(d);
  if (!errors.empty()) throw InputError("materials file '" + origin + "'", errors);
  db.validate(origin);
  return db;
}

void MaterialDb::validate(const std::string& origin) const {
  std::vector<std::string> errors;
  for (const MaterialParams* m : {&gan_, &aln_}) {
    auto bad = [&](const std::string& what) { errors.push_back("[" + m->name + "] " + what); };
    if (!(m->Eg > 0)) bad("Eg must be > 0");
    if (!(m->eps_r >= 1)) bad("eps_r must be >= 1");
    if (!(m->me > 0 && m->mh > 0)) bad("effective masses must be > 0");
    if (!(m->mu0_n > 0 && m->mu0_p > 0)) bad("mobilities must be > 0");
    if (!(m->v_sat > 0)) bad("v_sat must be > 0");
    if (!(m->tau_n > 0 && m->tau_p > 0)) bad("SRH lifetimes must be > 0");
  }
  for (const auto& d : dielectrics_)
    if (!(d.k > 1)) errors.push_back("[dielectric " + d.name + "] k must be > 1");
  if (!errors.empty()) throw InputError("materials file '" + origin + "'", errors);
}

std::string MaterialDb::to_text() const {
  std::ostringstream os;
  os << "# heterosim material parameters\n";
  os << "version = " << version_ << "\n";
  for (const MaterialParams* m : {&gan_, &aln_}) {
    os << "\n[" << m->name << "]\n";
    for (const auto& f : kFields) {
      os << f.key << " = " << fmt17(m->*(f.member));
      if (f.unit[0]) os << " " << f.unit;
      os << "\n";
    }
  }
  os << "\n[alloy]\n";
  os << "eg_bowing = " << fmt17(eg_bowing_) << " eV\n";
  os << "dEc_ratio = " << fmt17(dEc_ratio_) << "\n";
  for (const auto& d : dielectrics_) {
    os << "\n[dielectric " << d.name << "]\n";
    os << "k = " << fmt17(d.k) << "\n";
    os << "e_crit = " << fmt17(d.e_crit) << " MV/cm\n";
  }
  return os.str();
}

void MaterialDb::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("materials file '" + path + "'", {"cannot open for writing"});
  out << to_text();
}

MaterialParams MaterialDb::alloy_params(double x) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("alloy_params: mole fraction must lie in [0,1]");
  if (x == 0.0) return gan_;
  if (x == 1.0) return aln_;
  MaterialParams m;
  for (const auto& f : kFields) m.*(f.member) = lerp(gan_.*(f.member), aln_.*(f.member), x);
  m.Eg = x * aln_.Eg + (1.0 - x) * gan_.Eg - eg_bowing_ * x * (1.0 - x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "Al%.3gGaN", x);
  m.name = buf;
  return m;
}

double MaterialDb::polarization_sheet_charge(double x, double relaxation) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("polarization_sheet_charge: mole fraction must lie in [0,1]");
  if (!(relaxation >= 0.0 && relaxation <= 1.0))
    throw std::domain_error("polarization_sheet_charge: relaxation must lie in [0,1]");
  const MaterialParams m = alloy_params(x);
  const double strain = (gan_.a_lattice - m.a_lattice) / m.a_lattice;
  const double ppz = 2.0 * strain * (m.e31 - m.e33 * m.c13 / m.c33);  // [C/m^2]
  const double sigma = (m.psp - gan_.psp) + (1.0 - relaxation) * ppz; // [C/m^2]
  // Ga-face convention: both terms are negative; the bound interface charge
  // that attracts the 2DEG is their magnitude.
  return -sigma * 1e-4;  // [C/cm^2]
}

const DielectricParams& MaterialDb::dielectric_params(const std::string& name) const {
  for (const auto& d : dielectrics_)
    if (d.name == name) return d;
  std::string known;
  for (const auto& d : dielectrics_) known += (known.empty() ? "" : ", ") + d.name;
  throw std::out_of_range("unknown dielectric '" + name + "' (supported: " + known + ")");
}

}  // namespace heterosim
