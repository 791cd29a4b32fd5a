#include "buckloop/csv.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace buckloop {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_bode_csv(const std::string& path, const BodeCurve& curve) {
  std::ostringstream out;
  out << "f_hz,mag_db,phase_deg,re,im,quantity_name\n";
  double prev_deg = 0.0;
  bool first = true;
  for (const auto& p : curve.points) {
    const double mag_db = 20.0 * std::log10(std::abs(p.value));
    double deg = std::arg(p.value) * (180.0 / M_PI);  // principal value in (-180, 180]
    if (!first) deg += 360.0 * std::round((prev_deg - deg) / 360.0);
    prev_deg = deg;
    first = false;
    out << format_g17(p.f_hz) << ',' << format_g17(mag_db) << ',' << format_g17(deg) << ','
        << format_g17(p.value.real()) << ',' << format_g17(p.value.imag()) << ','
        << curve.quantity << '\n';
  }
  write_text_atomic(path, out.str());
}

BodeCurve read_bode_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  if (line.rfind("f_hz,mag_db,phase_deg,re,im,quantity_name", 0) != 0)
    throw Error(path + ": unexpected header '" + line + "'");
  BodeCurve curve;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw Error(path + ":" + std::to_string(lineno) + ": expected 6 fields");
    auto num = [&](int i) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(fields[std::size_t(i)], &pos);
        if (pos != fields[std::size_t(i)].size()) throw std::invalid_argument("trailing junk");
        return v;
      } catch (const std::exception&) {
        throw Error(path + ":" + std::to_string(lineno) + ": bad number '" +
                    fields[std::size_t(i)] + "'");
      }
    };
    curve.points.push_back({num(0), cplx(num(3), num(4))});
    curve.quantity = fields[5];
  }
  return curve;
}

void write_waveform_csv(const std::string& path, const Waveform& wf) {
  std::ostringstream out;
  out << "t_s,i_L_A,v_o_V,q,cmp_active,sample_flag,sample_value\n";
  for (std::size_t i = 0; i < wf.t.size(); ++i) {
    out << format_g17(wf.t[i]) << ',' << format_g17(wf.i_L[i]) << ',' << format_g17(wf.v_o[i])
        << ',' << wf.q[i] << ',' << format_g17(wf.cmp_active[i]) << ',' << wf.sample_flag[i]
        << ',' << format_g17(wf.sample_value[i]) << '\n';
  }
  write_text_atomic(path, out.str());
}

}  // namespace buckloop
