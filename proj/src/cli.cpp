#include "buckloop/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>

#include "buckloop/config.hpp"
#include "buckloop/csv.hpp"
#include "buckloop/model.hpp"
#include "buckloop/sfra.hpp"
#include "buckloop/sim.hpp"

namespace buckloop {

namespace {

namespace fs = std::filesystem;

constexpr double kDegPerRad = 57.295779513082320877;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int map_errors(const std::string& cfg_path, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s:%d: error: %s\n", cfg_path.c_str(), e.line, e.what());
    return 2;
  } catch (const OverrideNotSimulable& e) {
    std::fprintf(stderr, "%s: error: %s\n", cfg_path.c_str(), e.what());
    return 2;
  } catch (const DutyOutOfRange& e) {
    std::fprintf(stderr, "%s: error: %s\n", cfg_path.c_str(), e.what());
    return 2;
  } catch (const PoleHit& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Singular& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const SymNotApplicable& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NoConvergence& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const NoSteadyState& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

std::vector<double> model_grid(const RunConfig& rc, bool& explicit_list) {
  explicit_list = !rc.sweep_freqs_hz.empty();
  if (explicit_list) return rc.sweep_freqs_hz;
  const double f_S = 1.0 / rc.converter.T_S;
  const double lo = rc.sweep_f_min_hz > 0.0 ? rc.sweep_f_min_hz : 10.0;
  const double hi = rc.sweep_f_max_hz > 0.0 ? rc.sweep_f_max_hz : 2.0 * f_S;
  const int ppd = rc.sweep_points_per_decade > 0 ? rc.sweep_points_per_decade : 200;
  return default_grid(lo, hi, ppd);
}

struct ModelOpts {
  std::string config;
  std::string out = ".";
  bool no_sync = false;
  int series_check = 0;
  bool op_from_sim = false;
};

int run_model(const ModelOpts& o) {
  const RunConfig rc = load_config(o.config);
  const OperatingPoint op =
      o.op_from_sim ? find_steady_state(rc.converter).measured : operating_point(rc.converter);
  const LoopModel model(rc.converter, op);
  bool explicit_list = false;
  const std::vector<double> grid = model_grid(rc, explicit_list);
  const bool sync = !o.no_sync;
  const std::string sfx = o.no_sync ? "_nosync" : "";

  struct Quantity {
    const char* name;
    std::function<cplx(double)> eval;
  };
  const Quantity quantities[] = {
      {"G_Plant", [&](double f) { return model.g_plant(model.z_of(cplx(0.0, 2.0 * M_PI * f)), sync); }},
      {"T_pul", [&](double f) { return model.t_pul(cplx(0.0, 2.0 * M_PI * f), sync); }},
      {"T_i", [&](double f) { return model.t_i(cplx(0.0, 2.0 * M_PI * f), sync); }},
      {"T_c", [&](double f) { return model.t_c(cplx(0.0, 2.0 * M_PI * f), sync); }},
  };

  fs::create_directories(o.out);
  // A frequency that is singular for any curve is dropped from all four so the
  // files keep a shared frequency column.
  BodeCurve curves[4];
  for (int i = 0; i < 4; ++i) curves[i].quantity = std::string(quantities[i].name) + sfx;
  std::vector<double> skipped;
  for (double f : grid) {
    cplx vals[4];
    try {
      for (int i = 0; i < 4; ++i) vals[i] = quantities[i].eval(f);
    } catch (const PoleHit&) {
      if (explicit_list) throw;
      skipped.push_back(f);
      continue;
    } catch (const Singular&) {
      if (explicit_list) throw;
      skipped.push_back(f);
      continue;
    }
    for (int i = 0; i < 4; ++i) curves[i].points.push_back({f, vals[i]});
  }
  if (!skipped.empty()) {
    std::fprintf(stderr, "note: grid skipped %zu singular point(s):", skipped.size());
    for (double f : skipped) std::fprintf(stderr, " %g", f);
    std::fprintf(stderr, " Hz\n");
  }
  for (int i = 0; i < 4; ++i) {
    std::string lower(quantities[i].name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    const std::string path = join_path(o.out, "model_" + lower + sfx + ".csv");
    write_bode_csv(path, curves[i]);
    std::printf("wrote %s (%zu points)\n", path.c_str(), curves[i].points.size());
  }

  if (o.series_check > 0) {
    std::ostringstream out;
    out << "f_hz,closed_mag_db,closed_phase_deg,series_mag_db,series_phase_deg,delta_db,delta_deg\n";
    std::size_t rows = 0;
    for (double f : grid) {
      const cplx s(0.0, 2.0 * M_PI * f);
      try {
        const cplx closed = model.t_i(s, sync);
        const cplx series = model.t_i_series(s, o.series_check, sync);
        const double cdb = 20.0 * std::log10(std::abs(closed));
        const double sdb = 20.0 * std::log10(std::abs(series));
        double ddeg = (std::arg(closed) - std::arg(series)) * kDegPerRad;
        ddeg -= 360.0 * std::round(ddeg / 360.0);
        out << format_g17(f) << ',' << format_g17(cdb) << ','
            << format_g17(std::arg(closed) * kDegPerRad) << ',' << format_g17(sdb) << ','
            << format_g17(std::arg(series) * kDegPerRad) << ',' << format_g17(cdb - sdb) << ','
            << format_g17(ddeg) << '\n';
        ++rows;
      } catch (const PoleHit&) {
        if (explicit_list) throw;
      } catch (const Singular&) {
        if (explicit_list) throw;
      }
    }
    const std::string path = join_path(o.out, "model_series_check" + sfx + ".csv");
    write_text_atomic(path, out.str());
    std::printf("wrote %s (%zu points, |n| <= %d)\n", path.c_str(), rows, o.series_check);
  }
  return 0;
}

struct SimulateOpts {
  std::string config;
  std::string out = ".";
  std::int64_t cycles = 10;
};

int run_simulate(const SimulateOpts& o) {
  const RunConfig rc = load_config(o.config);
  const SteadyStateResult ssr = find_steady_state(rc.converter);

  Simulator sim(rc.converter);
  sim.state() = ssr.state;
  const Waveform wf = sim.record_cycles(o.cycles, rc.waveform_rows_per_cycle);

  fs::create_directories(o.out);
  const std::string wf_path = join_path(o.out, "waveform.csv");
  write_waveform_csv(wf_path, wf);

  const double sampled_vs_avg =
      std::abs(ssr.sampled_current_A - ssr.averages.i_L) / std::abs(ssr.averages.i_L);
  std::ostringstream sum;
  sum << "cycles_to_steady_state = " << ssr.cycles << '\n'
      << "residual = " << format_g17(ssr.residual) << '\n'
      << "D = " << format_g17(ssr.measured.D) << '\n'
      << "i_L_avg_A = " << format_g17(ssr.averages.i_L) << '\n'
      << "v_out_avg_V = " << format_g17(ssr.averages.v_o) << '\n'
      << "p_in_avg_W = " << format_g17(ssr.averages.p_in) << '\n'
      << "p_out_avg_W = " << format_g17(ssr.averages.p_out) << '\n'
      << "slope_at_sample_per_s = " << format_g17(ssr.measured.slope_at_sample) << '\n'
      << "i_L_sampled_A = " << format_g17(ssr.sampled_current_A) << '\n'
      << "sampled_vs_avg_rel_error = " << format_g17(sampled_vs_avg) << '\n';
  const std::string sum_path = join_path(o.out, "sim_summary.txt");
  write_text_atomic(sum_path, sum.str());

  std::printf("wrote %s (%zu rows) and %s\n", wf_path.c_str(), wf.t.size(), sum_path.c_str());
  std::printf("steady state after %lld cycles: D = %.6f, i_L_avg = %.6f A\n",
              (long long)ssr.cycles, ssr.measured.D, ssr.averages.i_L);
  return 0;
}

struct SfraOpts {
  std::string config;
  std::string which;
  std::string out = ".";
};

int run_sfra(const SfraOpts& o) {
  const RunConfig rc = load_config(o.config);
  const double f_S = 1.0 / rc.converter.T_S;

  InjectionSpec spec = rc.injection;
  if (o.which == "digital") spec.point = InjectionPoint::Digital;
  else if (o.which == "analog") spec.point = InjectionPoint::Analog;
  else if (o.which == "closedloop") spec.point = InjectionPoint::Reference;
  else throw Error("sfra: --which must be digital, analog or closedloop");

  std::vector<double> freqs = rc.sweep_freqs_hz;
  if (freqs.empty()) {
    const double lo = rc.sweep_f_min_hz > 0.0 ? rc.sweep_f_min_hz : 100.0;
    const double hi_default = spec.point == InjectionPoint::Analog ? 1.96 * f_S : 0.49 * f_S;
    const double hi = rc.sweep_f_max_hz > 0.0 ? rc.sweep_f_max_hz : hi_default;
    const int ppd = rc.sweep_points_per_decade > 0 ? rc.sweep_points_per_decade : 10;
    freqs = default_grid(lo, hi, ppd);
  }

  const SweepOutcome res = sweep(rc.converter, freqs, spec);

  fs::create_directories(o.out);
  const std::string csv_path = join_path(o.out, "sfra_" + o.which + ".csv");
  write_bode_csv(csv_path, res.curve);
  std::string log;
  for (const auto& f : res.failures) log += f + "\n";
  const std::string log_path = join_path(o.out, "sfra_" + o.which + "_errors.log");
  write_text_atomic(log_path, log);

  const std::size_t ok = res.curve.points.size();
  const std::size_t attempted = ok + res.failures.size();
  std::printf("wrote %s (%zu/%zu points) and %s\n", csv_path.c_str(), ok, attempted,
              log_path.c_str());
  if (attempted == 0 || 10 * ok < 9 * attempted) {
    std::fprintf(stderr, "error: only %zu of %zu points succeeded\n", ok, attempted);
    return 1;
  }
  return 0;
}

struct CompareOpts {
  std::string file_a, file_b;
  double tol_db = 1.0;
  double tol_deg = 5.0;
  std::string out;
};

struct UnwrappedCurve {
  std::vector<double> f, mag_db, phase_deg;
};

UnwrappedCurve unwrap(const BodeCurve& c) {
  UnwrappedCurve u;
  double prev = 0.0;
  bool first = true;
  for (const auto& p : c.points) {
    const double db = 20.0 * std::log10(std::abs(p.value));
    double deg = std::arg(p.value) * kDegPerRad;
    if (!first) deg += 360.0 * std::round((prev - deg) / 360.0);
    prev = deg;
    first = false;
    u.f.push_back(p.f_hz);
    u.mag_db.push_back(db);
    u.phase_deg.push_back(deg);
  }
  return u;
}

int run_compare(const CompareOpts& o) {
  const BodeCurve ca = read_bode_csv(o.file_a);
  const BodeCurve cb = read_bode_csv(o.file_b);
  if (ca.points.empty() || cb.points.empty()) throw Error("compare: empty curve");
  const UnwrappedCurve a = unwrap(ca);
  const UnwrappedCurve b = unwrap(cb);

  struct Row {
    double f, a_db, b_db, d_db, a_deg, b_deg, d_deg;
  };
  std::vector<Row> rows;
  std::size_t out_of_range = 0;
  for (std::size_t i = 0; i < a.f.size(); ++i) {
    const double f = a.f[i];
    if (f < b.f.front() * (1.0 - 1e-9) || f > b.f.back() * (1.0 + 1e-9)) {
      ++out_of_range;
      continue;
    }
    // locate bracketing points in b (b is sorted by construction of the writers)
    std::size_t j = 0;
    while (j + 1 < b.f.size() && b.f[j + 1] < f * (1.0 - 1e-12)) ++j;
    double b_db, b_deg;
    if (std::abs(b.f[j] - f) <= 1e-9 * f) {
      b_db = b.mag_db[j];
      b_deg = b.phase_deg[j];
    } else if (j + 1 < b.f.size() && std::abs(b.f[j + 1] - f) <= 1e-9 * f) {
      b_db = b.mag_db[j + 1];
      b_deg = b.phase_deg[j + 1];
    } else if (j + 1 < b.f.size()) {
      const double w = std::log(f / b.f[j]) / std::log(b.f[j + 1] / b.f[j]);
      b_db = b.mag_db[j] + w * (b.mag_db[j + 1] - b.mag_db[j]);
      b_deg = b.phase_deg[j] + w * (b.phase_deg[j + 1] - b.phase_deg[j]);
    } else {
      ++out_of_range;
      continue;
    }
    double d_deg = a.phase_deg[i] - b_deg;
    d_deg -= 360.0 * std::round(d_deg / 360.0);
    rows.push_back({f, a.mag_db[i], b_db, a.mag_db[i] - b_db, a.phase_deg[i], b_deg, d_deg});
  }
  if (rows.empty()) throw Error("compare: no overlapping frequency points");
  if (out_of_range > 0)
    std::fprintf(stderr, "note: %zu point(s) outside the reference range were skipped\n",
                 out_of_range);

  std::vector<double> abs_db, abs_deg;
  for (const auto& r : rows) {
    abs_db.push_back(std::abs(r.d_db));
    abs_deg.push_back(std::abs(r.d_deg));
  }
  auto max_of = [](std::vector<double> v) { return *std::max_element(v.begin(), v.end()); };
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double max_db = max_of(abs_db), med_db = median_of(abs_db);
  const double max_deg = max_of(abs_deg), med_deg = median_of(abs_deg);

  std::printf("%12s %10s %10s %9s %10s %10s %9s\n", "f_hz", "a_db", "b_db", "d_db", "a_deg",
              "b_deg", "d_deg");
  for (const auto& r : rows)
    std::printf("%12.6g %10.4f %10.4f %9.4f %10.4f %10.4f %9.4f\n", r.f, r.a_db, r.b_db, r.d_db,
                r.a_deg, r.b_deg, r.d_deg);
  std::printf("max |delta|: %.4f dB, %.4f deg; median: %.4f dB, %.4f deg (tolerance %.3f dB, %.3f deg)\n",
              max_db, max_deg, med_db, med_deg, o.tol_db, o.tol_deg);

  if (!o.out.empty()) {
    std::ostringstream out;
    out << "f_hz,a_mag_db,b_mag_db,delta_db,a_phase_deg,b_phase_deg,delta_deg\n";
    for (const auto& r : rows)
      out << format_g17(r.f) << ',' << format_g17(r.a_db) << ',' << format_g17(r.b_db) << ','
          << format_g17(r.d_db) << ',' << format_g17(r.a_deg) << ',' << format_g17(r.b_deg) << ','
          << format_g17(r.d_deg) << '\n';
    write_text_atomic(o.out, out.str());
    std::printf("wrote %s\n", o.out.c_str());
  }

  const bool pass = max_db <= o.tol_db && max_deg <= o.tol_deg;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 5;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Analytic and measured small-signal loop gains of a digitally controlled buck converter"};
  app.require_subcommand(1);

  ModelOpts mo;
  auto* cmd_model = app.add_subcommand("model", "Evaluate the analytic loop-gain curves");
  cmd_model->add_option("--config", mo.config, "converter config file")->required();
  cmd_model->add_option("--out", mo.out, "output directory");
  cmd_model->add_flag("--no-sync", mo.no_sync, "drop the sampling-displacement feedthrough");
  cmd_model->add_option("--series-check", mo.series_check,
                        "also write the sideband-series cross-check with this truncation order");
  cmd_model->add_flag("--op-from-sim", mo.op_from_sim,
                      "take the operating point from the simulator instead of the DC balance");

  SimulateOpts so;
  auto* cmd_sim = app.add_subcommand("simulate", "Run the switching simulator to steady state");
  cmd_sim->add_option("--config", so.config, "converter config file")->required();
  cmd_sim->add_option("--out", so.out, "output directory");
  cmd_sim->add_option("--cycles", so.cycles, "carrier periods to record after settling");

  SfraOpts fo;
  auto* cmd_sfra = app.add_subcommand("sfra", "Measure the loop with the frequency-response analyzer");
  cmd_sfra->add_option("--config", fo.config, "converter config file")->required();
  cmd_sfra->add_option("--which", fo.which, "digital | analog | closedloop")->required();
  cmd_sfra->add_option("--out", fo.out, "output directory");

  CompareOpts co;
  auto* cmd_cmp = app.add_subcommand("compare", "Compare two response CSVs");
  cmd_cmp->add_option("a", co.file_a, "curve under test")->required();
  cmd_cmp->add_option("b", co.file_b, "reference curve")->required();
  cmd_cmp->add_option("--tol-db", co.tol_db, "magnitude tolerance, dB");
  cmd_cmp->add_option("--tol-deg", co.tol_deg, "phase tolerance, degrees");
  cmd_cmp->add_option("--out", co.out, "write the per-point table to this CSV");

  CLI11_PARSE(app, argc, argv);

  if (cmd_model->parsed()) return map_errors(mo.config, [&] { return run_model(mo); });
  if (cmd_sim->parsed()) return map_errors(so.config, [&] { return run_simulate(so); });
  if (cmd_sfra->parsed()) return map_errors(fo.config, [&] { return run_sfra(fo); });
  if (cmd_cmp->parsed()) return map_errors(co.file_a, [&] { return run_compare(co); });
  return 1;
}

}  // namespace buckloop
