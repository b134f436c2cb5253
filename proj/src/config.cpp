#include "heterosim/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "heterosim/errors.hpp"
#include "heterosim/kv_text.hpp"

namespace heterosim {

namespace {

struct UnitTable {
  const char* canonical;  // unit written by config_to_text
  std::map<std::string, double> to_internal;
};

const UnitTable kLenUm{"um", {{"um", 1.0}, {"nm", 1e-3}, {"mm", 1e3}}};
const UnitTable kLenMm{"mm", {{"mm", 1.0}, {"um", 1e-3}}};
const UnitTable kVolt{"V", {{"V", 1.0}, {"mV", 1e-3}, {"kV", 1e3}}};
const UnitTable kEv{"eV", {{"eV", 1.0}}};
const UnitTable kKelvin{"K", {{"K", 1.0}}};
const UnitTable kSec{"s", {{"s", 1.0}, {"ps", 1e-12}, {"ns", 1e-9}}};
const UnitTable kPerCm3{"cm-3", {{"cm-3", 1.0}}};
const UnitTable kPerCm2{"cm-2", {{"cm-2", 1.0}}};
const UnitTable kHz{"Hz", {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}};
const UnitTable kOhmMm{"ohm-mm", {{"ohm-mm", 1.0}}};
const UnitTable kmAmm{"mA/mm", {{"mA/mm", 1.0}}};

struct KeyDef {
  std::string section, key;
  enum Type { Number, Bool, String, Int, NumberList, StringList } type = Number;
  const UnitTable* unit = nullptr;  // nullptr = dimensionless
  std::function<void(RunConfig&, double)> set_num;
  std::function<double(const RunConfig&)> get_num;
  std::function<void(RunConfig&, bool)> set_bool;
  std::function<bool(const RunConfig&)> get_bool;
  std::function<void(RunConfig&, const std::string&)> set_str;
  std::function<std::string(const RunConfig&)> get_str;
  std::function<void(RunConfig&, std::vector<double>)> set_list;
  std::function<std::vector<double>(const RunConfig&)> get_list;
  std::function<void(RunConfig&, std::vector<std::string>)> set_slist;
  std::function<std::vector<std::string>(const RunConfig&)> get_slist;
};

std::vector<KeyDef> make_schema() {
  std::vector<KeyDef> s;
  auto num = [&s](const char* sec, const char* key, const UnitTable* u,
                  double RunConfig::* not_used, std::function<void(RunConfig&, double)> set,
                  std::function<double(const RunConfig&)> get) {
    (void)not_used;
    KeyDef d;
    d.section = sec;
    d.key = key;
    d.type = KeyDef::Number;
    d.unit = u;
    d.set_num = std::move(set);
    d.get_num = std::move(get);
    s.push_back(std::move(d));
  };
  auto numf = [&s](const char* sec, const char* key, const UnitTable* u, auto member_ptr) {
    KeyDef d;
    d.section = sec;
    d.key = key;
    d.type = KeyDef::Number;
    d.unit = u;
    d.set_num = [member_ptr](RunConfig& c, double v) { c.*member_ptr = v; };
    d.get_num = [member_ptr](const RunConfig& c) { return c.*member_ptr; };
    s.push_back(std::move(d));
  };
  auto devf = [&s](const char* key, const UnitTable* u, auto member_ptr) {
    KeyDef d;
    d.section = "device";
    d.key = key;
    d.type = KeyDef::Number;
    d.unit = u;
    d.set_num = [member_ptr](RunConfig& c, double v) { c.device.*member_ptr = v; };
    d.get_num = [member_ptr](const RunConfig& c) { return c.device.*member_ptr; };
    s.push_back(std::move(d));
  };
  auto physf = [&s](const char* key, const UnitTable* u, auto member_ptr) {
    KeyDef d;
    d.section = "physics";
    d.key = key;
    d.type = KeyDef::Number;
    d.unit = u;
    d.set_num = [member_ptr](RunConfig& c, double v) { c.physics.*member_ptr = v; };
    d.get_num = [member_ptr](const RunConfig& c) { return c.physics.*member_ptr; };
    s.push_back(std::move(d));
  };
  auto physb = [&s](const char* key, auto member_ptr) {
    KeyDef d;
    d.section = "physics";
    d.key = key;
    d.type = KeyDef::Bool;
    d.set_bool = [member_ptr](RunConfig& c, bool v) { c.physics.*member_ptr = v; };
    d.get_bool = [member_ptr](const RunConfig& c) { return c.physics.*member_ptr; };
    s.push_back(std::move(d));
  };
  auto physi = [&s](const char* key, auto member_ptr) {
    KeyDef d;
    d.section = "physics";
    d.key = key;
    d.type = KeyDef::Int;
    d.set_num = [member_ptr](RunConfig& c, double v) {
      c.physics.*member_ptr = static_cast<int>(v);
    };
    d.get_num = [member_ptr](const RunConfig& c) { return double(c.physics.*member_ptr); };
    s.push_back(std::move(d));
  };
  (void)num;

  devf("gate_length", &kLenUm, &DeviceSpec::gate_length_um);
  devf("gate_workfun", &kEv, &DeviceSpec::gate_workfun_eV);
  devf("fieldplate_length", &kLenUm, &DeviceSpec::fieldplate_length_um);
  devf("gate_drain", &kLenUm, &DeviceSpec::gate_drain_um);
  devf("gate_source", &kLenUm, &DeviceSpec::gate_source_um);
  devf("contact_length", &kLenUm, &DeviceSpec::contact_length_um);
  devf("pass_thickness", &kLenUm, &DeviceSpec::pass_thickness_um);
  devf("barrier_thickness", &kLenUm, &DeviceSpec::barrier_thickness_um);
  devf("channel_thickness", &kLenUm, &DeviceSpec::channel_thickness_um);
  devf("al_fraction", nullptr, &DeviceSpec::al_fraction);
  devf("implant_peak", &kPerCm3, &DeviceSpec::implant_peak_cm3);
  devf("implant_decay", &kLenUm, &DeviceSpec::implant_decay_um);
  devf("barrier_doping", &kPerCm3, &DeviceSpec::barrier_doping_cm3);
  devf("channel_doping", &kPerCm3, &DeviceSpec::channel_doping_cm3);
  devf("width", &kLenMm, &DeviceSpec::width_mm);
  devf("relaxation", nullptr, &DeviceSpec::relaxation);
  {
    KeyDef d;
    d.section = "device";
    d.key = "pass_dielectric";
    d.type = KeyDef::String;
    d.set_str = [](RunConfig& c, const std::string& v) { c.device.pass_dielectric = v; };
    d.get_str = [](const RunConfig& c) { return c.device.pass_dielectric; };
    s.push_back(std::move(d));
  }

  physb("highfield_mobility", &PhysicsConfig::highfield_mobility);
  physf("beta", nullptr, &PhysicsConfig::beta);
  physb("srh", &PhysicsConfig::srh);
  physb("auger", &PhysicsConfig::auger);
  physb("impact_ionization", &PhysicsConfig::impact_ionization);
  physf("temperature", &kKelvin, &PhysicsConfig::T_L);
  physf("tau_w", &kSec, &PhysicsConfig::tau_w);
  physf("interface_traps", &kPerCm2, &PhysicsConfig::interface_trap_cm2);
  physf("gummel_tol", &kVolt, &PhysicsConfig::gummel_tol_V);
  physf("newton_tol", &kVolt, &PhysicsConfig::newton_tol_V);
  physi("max_gummel", &PhysicsConfig::max_gummel);
  physi("max_newton", &PhysicsConfig::max_newton);

  {
    KeyDef d;
    d.section = "materials";
    d.key = "file";
    d.type = KeyDef::String;
    d.set_str = [](RunConfig& c, const std::string& v) { c.materials_file = v; };
    d.get_str = [](const RunConfig& c) { return c.materials_file; };
    s.push_back(std::move(d));
  }

  numf("transfer", "v_ds", &kVolt, &RunConfig::tr_v_ds);
  numf("transfer", "v_start", &kVolt, &RunConfig::tr_v_start);
  numf("transfer", "v_stop", &kVolt, &RunConfig::tr_v_stop);
  numf("transfer", "step", &kVolt, &RunConfig::tr_step);

  {
    KeyDef d;
    d.section = "output";
    d.key = "v_gs";
    d.type = KeyDef::NumberList;
    d.unit = &kVolt;
    d.set_list = [](RunConfig& c, std::vector<double> v) { c.out_v_gs = std::move(v); };
    d.get_list = [](const RunConfig& c) { return c.out_v_gs; };
    s.push_back(std::move(d));
  }
  numf("output", "v_ds_stop", &kVolt, &RunConfig::out_v_ds_stop);
  numf("output", "step", &kVolt, &RunConfig::out_step);

  numf("breakdown", "v_gs_off", &kVolt, &RunConfig::br_v_gs_off);
  numf("breakdown", "i_crit", &kmAmm, &RunConfig::br_i_crit_mA_mm);
  numf("breakdown", "v_cap", &kVolt, &RunConfig::br_v_cap);
  numf("breakdown", "coarse_step", &kVolt, &RunConfig::br_coarse_step);

  {
    KeyDef d;
    d.section = "fp_study";
    d.key = "lengths";
    d.type = KeyDef::NumberList;
    d.unit = &kLenUm;
    d.set_list = [](RunConfig& c, std::vector<double> v) { c.fp_lengths_um = std::move(v); };
    d.get_list = [](const RunConfig& c) { return c.fp_lengths_um; };
    s.push_back(std::move(d));
  }
  {
    KeyDef d;
    d.section = "fp_study";
    d.key = "dielectrics";
    d.type = KeyDef::StringList;
    d.set_slist = [](RunConfig& c, std::vector<std::string> v) {
      c.fp_dielectrics = std::move(v);
    };
    d.get_slist = [](const RunConfig& c) { return c.fp_dielectrics; };
    s.push_back(std::move(d));
  }

  numf("ac", "v_gs", &kVolt, &RunConfig::ac_v_gs);
  numf("ac", "v_ds", &kVolt, &RunConfig::ac_v_ds);
  numf("ac", "f_min", &kHz, &RunConfig::ac_f_min);
  numf("ac", "f_max", &kHz, &RunConfig::ac_f_max);
  {
    KeyDef d;
    d.section = "ac";
    d.key = "points_per_decade";
    d.type = KeyDef::Int;
    d.set_num = [](RunConfig& c, double v) { c.ac_points_per_decade = static_cast<int>(v); };
    d.get_num = [](const RunConfig& c) { return double(c.ac_points_per_decade); };
    s.push_back(std::move(d));
  }
  numf("ac", "r_gate", &kOhmMm, &RunConfig::ac_r_gate_ohm_mm);
  {
    KeyDef d;
    d.section = "ac";
    d.key = "s2p";
    d.type = KeyDef::Bool;
    d.set_bool = [](RunConfig& c, bool v) { c.ac_s2p = v; };
    d.get_bool = [](const RunConfig& c) { return c.ac_s2p; };
    s.push_back(std::move(d));
  }

  {
    KeyDef d;
    d.section = "run";
    d.key = "out_dir";
    d.type = KeyDef::String;
    d.set_str = [](RunConfig& c, const std::string& v) { c.out_dir = v; };
    d.get_str = [](const RunConfig& c) { return c.out_dir; };
    s.push_back(std::move(d));
  }
  {
    KeyDef d;
    d.section = "run";
    d.key = "workers";
    d.type = KeyDef::Int;
    d.set_num = [](RunConfig& c, double v) { c.workers = static_cast<int>(v); };
    d.get_num = [](const RunConfig& c) { return double(c.workers); };
    s.push_back(std::move(d));
  }
  {
    KeyDef d;
    d.section = "run";
    d.key = "refinement";
    d.type = KeyDef::String;
    d.set_str = [](RunConfig& c, const std::string& v) { c.refinement = v; };
    d.get_str = [](const RunConfig& c) { return c.refinement; };
    s.push_back(std::move(d));
  }
  return s;
}

const std::vector<KeyDef>& schema() {
  static const std::vector<KeyDef> s = make_schema();
  return s;
}

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number_checked(const std::string& text, bool& ok) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  ok = !text.empty() && end == text.c_str() + text.size();
  return v;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  kv::Document doc = kv::parse(text);
  std::vector<std::string> errors = doc.errors;
  RunConfig cfg;

  for (const auto& e : doc.entries) {
    const KeyDef* def = nullptr;
    bool section_known = false;
    for (const auto& d : schema()) {
      if (d.section == e.section) section_known = true;
      if (d.section == e.section && d.key == e.key) {
        def = &d;
        break;
      }
    }
    auto err = [&](const std::string& what) {
      errors.push_back("line " + std::to_string(e.line) + ": " + what);
    };
    if (!def) {
      err(section_known ? "unknown key '" + e.key + "' in [" + e.section + "]"
                        : "unknown section [" + e.section + "]");
      continue;
    }
    auto convert = [&](const std::string& value, const std::string& unit,
                       bool& ok) -> double {
      double v = parse_number_checked(value, ok);
      if (!ok) {
        err("'" + e.key + "' expects a number, got '" + value + "'");
        return 0;
      }
      if (def->unit) {
        auto it = def->unit->to_internal.find(unit);
        if (unit.empty()) {
          err("'" + e.key + "' is missing a unit (expected " +
              std::string(def->unit->canonical) + ")");
          ok = false;
        } else if (it == def->unit->to_internal.end()) {
          err("'" + e.key + "' has unsupported unit '" + unit + "'");
          ok = false;
        } else {
          v *= it->second;
        }
      } else if (!unit.empty()) {
        err("'" + e.key + "' is dimensionless, got unit '" + unit + "'");
        ok = false;
      }
      return v;
    };
    switch (def->type) {
      case KeyDef::Number:
      case KeyDef::Int: {
        bool ok = true;
        const double v = convert(e.value, e.unit, ok);
        if (ok) {
          if (def->type == KeyDef::Int && v != std::floor(v))
            err("'" + e.key + "' expects an integer");
          else
            def->set_num(cfg, v);
        }
        break;
      }
      case KeyDef::Bool: {
        if (e.value == "on" || e.value == "true") def->set_bool(cfg, true);
        else if (e.value == "off" || e.value == "false") def->set_bool(cfg, false);
        else err("'" + e.key + "' expects on/off");
        break;
      }
      case KeyDef::String:
        def->set_str(cfg, e.value);
        break;
      case KeyDef::NumberList: {
        std::vector<double> vals;
        std::stringstream ss(e.value);
        std::string tok;
        bool all_ok = true;
        while (std::getline(ss, tok, ',')) {
          bool ok = true;
          const double v = convert(kv::trim(tok), e.unit, ok);
          all_ok = all_ok && ok;
          if (ok) vals.push_back(v);
        }
        if (all_ok && !vals.empty()) def->set_list(cfg, std::move(vals));
        else if (vals.empty()) err("'" + e.key + "' expects a comma list of numbers");
        break;
      }
      case KeyDef::StringList: {
        std::vector<std::string> vals;
        std::stringstream ss(e.value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          tok = kv::trim(tok);
          if (!tok.empty()) vals.push_back(tok);
        }
        if (vals.empty()) err("'" + e.key + "' expects a comma list");
        else def->set_slist(cfg, std::move(vals));
        break;
      }
    }
  }
  if (!errors.empty()) throw InputError("config '" + origin + "'", errors);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config '" + path + "'", {"cannot open file"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "# heterosim run configuration (resolved)\n";
  std::string cur;
  for (const auto& d : schema()) {
    if (d.section != cur) {
      cur = d.section;
      os << "\n[" << cur << "]\n";
    }
    os << d.key << " = ";
    switch (d.type) {
      case KeyDef::Number:
        os << fmt_num(d.get_num(c));
        if (d.unit) os << " " << d.unit->canonical;
        break;
      case KeyDef::Int:
        os << static_cast<long long>(d.get_num(c));
        break;
      case KeyDef::Bool:
        os << (d.get_bool(c) ? "on" : "off");
        break;
      case KeyDef::String:
        os << d.get_str(c);
        break;
      case KeyDef::NumberList: {
        const auto v = d.get_list(c);
        for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt_num(v[i]);
        if (d.unit) os << " " << d.unit->canonical;
        break;
      }
      case KeyDef::StringList: {
        const auto v = d.get_slist(c);
        for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        break;
      }
    }
    os << "\n";
  }
  return os.str();
}

bool config_equal(const RunConfig& a, const RunConfig& b) {
  return config_to_text(a) == config_to_text(b);
}

}  // namespace heterosim
