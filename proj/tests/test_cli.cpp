#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Drives the installed binary end to end through popen: exit codes, file
// outputs, and determinism are checked exactly as a shell user would see them.

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr merged
};

std::string bin_path() {
  const char* p = std::getenv("BUCKLOOP_BIN");
  REQUIRE_MESSAGE(p != nullptr, "BUCKLOOP_BIN must point at the CLI binary");
  return p;
}

std::string configs_dir() {
  const char* p = std::getenv("BUCKLOOP_CONFIGS");
  REQUIRE_MESSAGE(p != nullptr, "BUCKLOOP_CONFIGS must point at the shipped configs");
  return p;
}

RunResult run_cli(const std::string& args) {
  const std::string cmd = "\"" + bin_path() + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "buckloop_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("missing file: " + p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

const std::string kTable3 =
    "V_IN_V = 12.0\n"
    "T_S_s = 10e-6\n"
    "L_f_H = 6e-6\n"
    "R_L_ohm = 1e-3\n"
    "C_f_F = 100e-6\n"
    "R_C_ohm = 10e-3\n"
    "R_LD_ohm = 0.33\n"
    "cntr_max = 1.2\n"
    "K_p = 0.2\n"
    "K_i_per_s = 31420.0\n"
    "H_i = 0.085\n"
    "i_ref = 0.85\n"
    "modulation = tem\n"
    "sampling = off_center\n";

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

// Columns of a bode CSV written by the tool, header skipped.
std::vector<std::vector<double>> csv_columns(const fs::path& p, std::size_t ncols) {
  std::ifstream in(p);
  REQUIRE_MESSAGE(in.good(), ("missing file: " + p.string()));
  std::string line;
  REQUIRE(std::getline(in, line));  // header
  std::vector<std::vector<double>> cols(ncols);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    for (std::size_t c = 0; c < ncols; ++c) {
      REQUIRE(std::getline(ss, field, ','));
      cols[c].push_back(std::strtod(field.c_str(), nullptr));
    }
  }
  return cols;
}

double summary_value(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + " = ");
  REQUIRE_MESSAGE(pos != std::string::npos, ("summary key not found: " + key));
  return std::strtod(text.c_str() + pos + key.size() + 3, nullptr);
}

}  // namespace

TEST_CASE("model writes four aligned curve files and reruns byte-identically") {
  const fs::path d1 = fresh_dir("model_a");
  const fs::path d2 = fresh_dir("model_b");
  const std::string cfg = configs_dir() + "/table3_tem_offcenter.cfg";

  const RunResult r1 = run_cli("model --config \"" + cfg + "\" --out \"" + d1.string() + "\"");
  CHECK(r1.code == 0);
  // The default grid's upper endpoint sits on a discrete pole and must be
  // skipped with a note rather than aborting the run.
  CHECK(r1.output.find("skipped") != std::string::npos);

  const RunResult r2 = run_cli("model --config \"" + cfg + "\" --out \"" + d2.string() + "\"");
  CHECK(r2.code == 0);

  const char* names[] = {"model_g_plant.csv", "model_t_pul.csv", "model_t_i.csv",
                         "model_t_c.csv"};
  std::vector<double> f_ref;
  for (const char* n : names) {
    const std::string a = slurp(d1 / n);
    CHECK(a == slurp(d2 / n));
    const auto cols = csv_columns(d1 / n, 1);
    CHECK(cols[0].size() > 100);
    if (f_ref.empty())
      f_ref = cols[0];
    else
      CHECK(cols[0] == f_ref);
  }
}

TEST_CASE("dropping the sampling feedthrough changes the analog loop gain by tens of dB") {
  const fs::path d = fresh_dir("nosync");
  const fs::path cfg = d / "cfg.cfg";
  write_file(cfg, kTable3 + "sweep_freqs_hz = 100 1000\n");

  CHECK(run_cli("model --config \"" + cfg.string() + "\" --out \"" + d.string() + "\"").code == 0);
  CHECK(run_cli("model --config \"" + cfg.string() + "\" --out \"" + d.string() +
                "\" --no-sync").code == 0);

  const auto with = csv_columns(d / "model_t_i.csv", 2);
  const auto without = csv_columns(d / "model_t_i_nosync.csv", 2);
  REQUIRE(with[0].size() == 2);
  REQUIRE(without[0].size() == 2);
  CHECK(with[0][0] == doctest::Approx(100.0));
  CHECK(std::abs(with[1][0] - without[1][0]) > 10.0);  // sync feedthrough dominates at 100 Hz
}

TEST_CASE("series cross-check file stays inside the closed-form tolerance") {
  const fs::path d = fresh_dir("series");
  const fs::path cfg = d / "cfg.cfg";
  write_file(cfg, kTable3 + "sweep_freqs_hz = 100 3000 50000\n");

  const RunResult r = run_cli("model --config \"" + cfg.string() + "\" --out \"" + d.string() +
                              "\" --series-check 2000");
  CHECK(r.code == 0);

  const auto cols = csv_columns(d / "model_series_check.csv", 7);
  REQUIRE(cols[0].size() == 3);
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    CHECK(std::abs(cols[5][i]) < 0.1);  // delta_db
    CHECK(std::abs(cols[6][i]) < 1.0);  // delta_deg
  }
}

TEST_CASE("config errors exit 2 and carry the offending line number") {
  const fs::path d = fresh_dir("badcfg");

  const fs::path bad_value = d / "bad_value.cfg";
  write_file(bad_value, "V_IN_V = 12.0\nT_S_s = 10e-6\nL_f_H = banana\n");
  RunResult r = run_cli("model --config \"" + bad_value.string() + "\" --out \"" + d.string() +
                        "\"");
  CHECK(r.code == 2);
  CHECK(r.output.find(":3: error:") != std::string::npos);
  CHECK(r.output.find("banana") != std::string::npos);

  const fs::path unknown = d / "unknown.cfg";
  write_file(unknown, "frobnicate = 1\n" + kTable3);
  r = run_cli("model --config \"" + unknown.string() + "\" --out \"" + d.string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.output.find(":1: error:") != std::string::npos);
  CHECK(r.output.find("unknown key") != std::string::npos);

  r = run_cli("model --config \"" + (d / "absent.cfg").string() + "\" --out \"" + d.string() +
              "\"");
  CHECK(r.code == 2);
}

TEST_CASE("an explicitly requested pole frequency exits 3") {
  const fs::path d = fresh_dir("pole");
  const fs::path cfg = d / "cfg.cfg";
  // 100 kHz is the sampling rate: z = 1 there and the digital loop gain has a
  // true pole. On a user-supplied list that is an error, not a silent skip.
  write_file(cfg, kTable3 + "sweep_freqs_hz = 1000 100000\n");
  const RunResult r = run_cli("model --config \"" + cfg.string() + "\" --out \"" + d.string() +
                              "\"");
  CHECK(r.code == 3);

  const fs::path ok = d / "ok.cfg";
  write_file(ok, kTable3 + "sweep_freqs_hz = 1000 99000\n");
  CHECK(run_cli("model --config \"" + ok.string() + "\" --out \"" + d.string() + "\"").code == 0);
}

TEST_CASE("simulate reports the converged operating point") {
  const fs::path d = fresh_dir("simulate");
  const std::string cfg = configs_dir() + "/table3_tem_offcenter.cfg";
  const RunResult r = run_cli("simulate --config \"" + cfg + "\" --cycles 5 --out \"" +
                              d.string() + "\"");
  CHECK(r.code == 0);

  const std::string sum = slurp(d / "sim_summary.txt");
  const double D = summary_value(sum, "D");
  CHECK(std::abs(D - 0.27596) / 0.27596 < 0.005);
  CHECK(summary_value(sum, "sampled_vs_avg_rel_error") < 1e-3);
  CHECK(summary_value(sum, "i_L_avg_A") == doctest::Approx(10.0).epsilon(0.01));

  const std::string wf = slurp(d / "waveform.csv");
  CHECK(wf.find("sample_flag") != std::string::npos);
  CHECK(std::count(wf.begin(), wf.end(), '\n') > 5 * 100);
}

TEST_CASE("a sampling mode that limit-cycles at these gains exits 4") {
  const fs::path d = fresh_dir("unstable");
  const fs::path cfg = d / "cfg.cfg";
  write_file(cfg, replaced(kTable3, "sampling = off_center", "sampling = on_center"));
  const RunResult r = run_cli("simulate --config \"" + cfg.string() + "\" --out \"" + d.string() +
                              "\"");
  CHECK(r.code == 4);
}

TEST_CASE("compare passes a curve against itself and fails across the feedthrough gap") {
  const fs::path d = fresh_dir("compare");
  const fs::path cfg = d / "cfg.cfg";
  write_file(cfg, kTable3 + "sweep_freqs_hz = 100 300 1000 3000 10000\n");
  REQUIRE(run_cli("model --config \"" + cfg.string() + "\" --out \"" + d.string() + "\"").code ==
          0);
  REQUIRE(run_cli("model --config \"" + cfg.string() + "\" --out \"" + d.string() +
                  "\" --no-sync").code == 0);

  const std::string t_i = (d / "model_t_i.csv").string();
  RunResult r = run_cli("compare \"" + t_i + "\" \"" + t_i + "\"");
  CHECK(r.code == 0);
  CHECK(r.output.find("PASS") != std::string::npos);
  CHECK(r.output.find("max |delta|: 0.0000 dB, 0.0000 deg") != std::string::npos);

  const fs::path table = d / "cmp.csv";
  r = run_cli("compare \"" + t_i + "\" \"" + (d / "model_t_i_nosync.csv").string() +
              "\" --tol-db 1 --tol-deg 5 --out \"" + table.string() + "\"");
  CHECK(r.code == 5);
  CHECK(r.output.find("FAIL") != std::string::npos);
  CHECK(fs::exists(table));
}

TEST_CASE("the measured-plant override drives the model but refuses to simulate") {
  const fs::path d = fresh_dir("override");
  const std::string cfg = configs_dir() + "/eq27_measured_plant.cfg";

  RunResult r = run_cli("model --config \"" + cfg + "\" --out \"" + d.string() + "\"");
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "model_t_i.csv"));

  r = run_cli("simulate --config \"" + cfg + "\" --out \"" + d.string() + "\"");
  CHECK(r.code == 2);

  r = run_cli("sfra --config \"" + cfg + "\" --which digital --out \"" + d.string() + "\"");
  CHECK(r.code == 2);
}

TEST_CASE("sfra writes a snapped deterministic curve with an empty failure log") {
  const fs::path d1 = fresh_dir("sfra_a");
  const fs::path d2 = fresh_dir("sfra_b");
  const fs::path cfg = d1 / "cfg.cfg";
  const std::string body = kTable3 + "sweep_freqs_hz = 1000 5000 20000\n";
  write_file(cfg, body);
  write_file(d2 / "cfg.cfg", body);

  const RunResult r1 = run_cli("sfra --config \"" + cfg.string() + "\" --which digital --out \"" +
                               d1.string() + "\"");
  CHECK(r1.code == 0);
  const auto cols = csv_columns(d1 / "sfra_digital.csv", 1);
  CHECK(cols[0].size() == 3);
  CHECK(slurp(d1 / "sfra_digital_errors.log").empty());

  const RunResult r2 = run_cli("sfra --config \"" + (d2 / "cfg.cfg").string() +
                               "\" --which digital --out \"" + d2.string() + "\"");
  CHECK(r2.code == 0);
  CHECK(slurp(d1 / "sfra_digital.csv") == slurp(d2 / "sfra_digital.csv"));
}
