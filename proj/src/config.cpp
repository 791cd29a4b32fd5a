#include "buckloop/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace buckloop {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value '" + v + "' for key '" + key + "'", line);
  }
}

std::vector<double> parse_double_list(const std::string& v, const std::string& key, int line) {
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, key, line));
  if (out.empty()) throw ConfigError("empty list for key '" + key + "'", line);
  return out;
}

int parse_int(const std::string& v, const std::string& key, int line) {
  const double d = parse_double(v, key, line);
  const int i = int(d);
  if (double(i) != d) throw ConfigError("key '" + key + "' expects an integer", line);
  return i;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);

  RunConfig rc;
  ConverterConfig& cv = rc.converter;

  std::map<std::string, int> seen;  // key -> first line
  std::string line;
  int lineno = 0;
  std::vector<double> override_num, override_den;

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", lineno);
    if (val.empty()) throw ConfigError("empty value for key '" + key + "'", lineno);
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError("duplicate key '" + key + "' (first on line " +
                            std::to_string(it->second) + ")",
                        lineno);
    seen[key] = lineno;

    if (key == "V_IN_V") cv.V_IN = parse_double(val, key, lineno);
    else if (key == "T_S_s") cv.T_S = parse_double(val, key, lineno);
    else if (key == "L_f_H") cv.L_f = parse_double(val, key, lineno);
    else if (key == "R_L_ohm") cv.R_L = parse_double(val, key, lineno);
    else if (key == "C_f_F") cv.C_f = parse_double(val, key, lineno);
    else if (key == "R_C_ohm") cv.R_C = parse_double(val, key, lineno);
    else if (key == "R_LD_ohm") cv.R_LD = parse_double(val, key, lineno);
    else if (key == "cntr_max") cv.cntr_max = parse_double(val, key, lineno);
    else if (key == "K_p") cv.K_p = parse_double(val, key, lineno);
    else if (key == "K_i_per_s") cv.K_i = parse_double(val, key, lineno);
    else if (key == "H_i") cv.H_i = parse_double(val, key, lineno);
    else if (key == "i_ref") cv.i_ref = parse_double(val, key, lineno);
    else if (key == "modulation") {
      if (val == "tem") cv.modulation = Modulation::TEM;
      else if (val == "lem") cv.modulation = Modulation::LEM;
      else if (val == "sym") cv.modulation = Modulation::SYM;
      else throw ConfigError("modulation must be tem, lem or sym", lineno);
    } else if (key == "sampling") {
      if (val == "on_center") cv.sampling = Sampling::OnCenter;
      else if (val == "off_center") cv.sampling = Sampling::OffCenter;
      else throw ConfigError("sampling must be on_center or off_center", lineno);
    } else if (key == "plant_override_num") {
      override_num = parse_double_list(val, key, lineno);
    } else if (key == "plant_override_den") {
      override_den = parse_double_list(val, key, lineno);
    } else if (key == "sweep_f_min_hz") {
      rc.sweep_f_min_hz = parse_double(val, key, lineno);
    } else if (key == "sweep_f_max_hz") {
      rc.sweep_f_max_hz = parse_double(val, key, lineno);
    } else if (key == "sweep_points_per_decade") {
      rc.sweep_points_per_decade = parse_int(val, key, lineno);
    } else if (key == "sweep_freqs_hz") {
      rc.sweep_freqs_hz = parse_double_list(val, key, lineno);
    } else if (key == "sfra_amplitude") {
      rc.injection.amplitude = parse_double(val, key, lineno);
    } else if (key == "sfra_measure_periods") {
      rc.injection.measure_periods = parse_int(val, key, lineno);
    } else if (key == "sfra_settle_cycles") {
      rc.injection.settle_cycles = parse_int(val, key, lineno);
    } else if (key == "sfra_probes_per_cycle") {
      rc.injection.probes_per_cycle = parse_int(val, key, lineno);
    } else if (key == "sfra_q_max") {
      rc.injection.q_max = parse_int(val, key, lineno);
    } else if (key == "waveform_rows_per_cycle") {
      rc.waveform_rows_per_cycle = parse_int(val, key, lineno);
    } else {
      throw ConfigError("unknown key '" + key + "'", lineno);
    }
  }

  static const char* required[] = {"V_IN_V", "T_S_s", "L_f_H", "R_L_ohm", "C_f_F",
                                   "R_C_ohm", "R_LD_ohm", "cntr_max", "K_p", "K_i_per_s",
                                   "H_i", "i_ref", "modulation", "sampling"};
  for (const char* k : required)
    if (!seen.count(k)) throw ConfigError(std::string("missing required key '") + k + "'", 0);

  if (override_num.empty() != override_den.empty())
    throw ConfigError("plant_override_num and plant_override_den must appear together", 0);
  if (!override_num.empty()) {
    RationalTF tf;
    tf.domain = Domain::S;
    tf.num.coeffs = override_num;
    tf.den.coeffs = override_den;
    if (tf.num.degree() >= tf.den.degree())
      throw ConfigError("plant override must be strictly proper", seen["plant_override_num"]);
    cv.plant_override = tf;
  }
  return rc;
}

}  // namespace buckloop
