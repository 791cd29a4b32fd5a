#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "buckloop/plant.hpp"

namespace buckloop {

struct SimState {
  Vec2 x{0.0, 0.0};  // [i_L (A), v_C (V)]
  std::int64_t cycle_index = 0;
  double integ = 0.0;       // PI integrator, compare units
  double cmp_active = 0.0;  // compare value driving the current carrier period
  double cmp_shadow = 0.0;  // pending compare value, loaded per modulator rules
  double last_sample = 0.0; // most recent ADC reading, sensed units
};

struct SampleRecord {
  std::int64_t k = 0;  // sample index (one per carrier period)
  double t = 0.0;      // global sampling instant, s
  double raw = 0.0;    // ADC input: sensed current plus any analog injection
  double fed = 0.0;    // value consumed by the PI (raw plus digital injection)
  double r = 0.0;      // reference perturbation added this sample
};

struct CycleAverages {
  double i_L = 0.0;   // A
  double v_o = 0.0;   // V
  double p_in = 0.0;  // W, source side
  double p_out = 0.0; // W, load side
};

struct Waveform {
  int rows_per_cycle = 0;
  std::vector<double> t, i_L, v_o, cmp_active, sample_value;
  std::vector<int> q, sample_flag;
};

// Cycle-accurate switching simulator. Per carrier period the trajectory is
// propagated segment-by-segment with exact matrix exponentials; no numerical
// integration error enters the dynamics. Probing and waveform recording march
// a throwaway copy of the state, so enabling them cannot perturb the
// trajectory itself.
class Simulator {
 public:
  explicit Simulator(const ConverterConfig& cfg);  // raises OverrideNotSimulable

  SimState& state() { return st_; }
  const SimState& state() const { return st_; }
  const ConverterConfig& config() const { return cfg_; }

  // Sinusoidal perturbations; amplitude 0 disables. Digital and reference
  // injections are per-sample tones A*sin(2*pi*f*k*T_S); the analog injection
  // is continuous-time and adds between the sensor and the ADC.
  void set_digital_injection(double amplitude, double f_hz);
  void set_analog_injection(double amplitude, double f_hz);
  void set_reference_injection(double amplitude, double f_hz);

  void enable_sample_log(bool on) { sample_log_on_ = on; }
  std::vector<SampleRecord>& sample_log() { return sample_log_; }

  // Exact global times of every switch transition.
  void enable_edge_log(bool on) { edge_log_on_ = on; }
  std::vector<double>& edge_log() { return edge_log_; }

  // hook(t, w, u): w is the sensed current, u the ADC-side signal after analog
  // injection, on a uniform grid of probes_per_cycle points per period.
  void set_probe_hook(int probes_per_cycle, std::function<void(double, double, double)> hook);
  void clear_probe_hook();

  void run_cycles(std::int64_t n);

  bool clamp_seen() const { return clamp_seen_; }
  void reset_clamp_flag() { clamp_seen_ = false; }

  // Exact integrals over the most recently completed period (linear parts);
  // load power uses fixed-order Gauss quadrature on the closed-form trajectory.
  void enable_averaging(bool on) { averaging_on_ = on; }
  const CycleAverages& last_cycle_averages() const { return avg_; }

  double last_sample_slope() const { return slope_last_; }  // sensed 1/s

  Waveform record_cycles(std::int64_t n, int rows_per_cycle);

 private:
  struct PhiGamma {
    Mat2 phi;
    Vec2 gamma;  // forced response column for unit switch input
  };

  void step_cycle();
  void advance(double dt, int q);
  void do_sample(int q);
  void load_shadow();
  void log_edge();
  PhiGamma pg(double dt);
  double vp_at(double t_global) const;
  double t_global() const { return double(st_.cycle_index) * cfg_.T_S + local_t_; }

  ConverterConfig cfg_;
  StateSpace ss_;
  Mat2 a_inv_;
  double local_t_ = 0.0;

  SimState st_;

  double dig_amp_ = 0.0, dig_f_ = 0.0;
  double ana_amp_ = 0.0, ana_f_ = 0.0;
  double ref_amp_ = 0.0, ref_f_ = 0.0;

  bool sample_log_on_ = false;
  std::vector<SampleRecord> sample_log_;
  bool edge_log_on_ = false;
  std::vector<double> edge_log_;

  int probes_per_cycle_ = 0;
  std::function<void(double, double, double)> probe_hook_;
  int next_probe_ = 0;  // index of the next grid point within the cycle

  bool clamp_seen_ = false;
  bool averaging_on_ = false;
  CycleAverages avg_, avg_accum_;
  double slope_last_ = 0.0;

  bool recording_ = false;
  Waveform* rec_ = nullptr;
  bool pending_sample_ = false;
  double pending_sample_value_ = 0.0;

  std::unordered_map<std::uint64_t, PhiGamma> cache_;
};

struct SteadyStateResult {
  SimState state;           // at a carrier-period boundary
  OperatingPoint measured;  // duty, averages and slope observed in the loop
  CycleAverages averages;
  double sampled_current_A = 0.0;  // ADC reading converted to amperes
  std::int64_t cycles = 0;
  double residual = 0.0;
};

// Runs the closed loop until the period-boundary state and the integrator
// settle below 1e-10 relative change, capped at 1e5 periods (NoConvergence
// carries the last residual). The returned operating point is the measured
// one: duty from the converged compare value, averages from exact integrals,
// slope from the state derivative at the sampling instant.
SteadyStateResult find_steady_state(const ConverterConfig& cfg);

}  // namespace buckloop
