#pragma once

#include <optional>

#include "buckloop/numerics.hpp"

namespace buckloop {

enum class Modulation { TEM, LEM, SYM };
enum class Sampling { OnCenter, OffCenter };

struct ConverterConfig {
  double V_IN = 0.0;      // input voltage, V
  double T_S = 0.0;       // switching/sampling period, s
  double L_f = 0.0;       // filter inductance, H
  double R_L = 0.0;       // inductor series resistance, ohm
  double C_f = 0.0;       // filter capacitance, F
  double R_C = 0.0;       // capacitor ESR, ohm
  double R_LD = 0.0;      // load resistance, ohm
  double cntr_max = 0.0;  // compare value producing 100 % duty
  double K_p = 0.0;       // proportional gain, compare units per sensed ampere
  double K_i = 0.0;       // integral gain, 1/s (per-sample gain is K_i*T_S)
  double H_i = 0.0;       // current sensor plus ADC gain
  double i_ref = 0.0;     // current reference in sensed units
  Modulation modulation = Modulation::TEM;
  Sampling sampling = Sampling::OffCenter;

  // Measured control-to-sensed-current response (the H_i product included),
  // replacing the physical element model for analytic work.
  std::optional<RationalTF> plant_override;
};

struct OperatingPoint {
  double D = 0.0;                // duty ratio
  double v_out_avg = 0.0;        // average output voltage, V
  double i_L_avg = 0.0;          // average inductor current, A
  double slope_at_sample = 0.0;  // sensed-current slope at the sampling instant, 1/s
};

struct StateSpace {
  Mat2 A;       // shared by both switch states, x = [i_L, v_C]
  Vec2 B_on;    // input column while the switch conducts (off-state input is zero)
  Vec2 C_vout;  // v_o = C_vout . x
};

// Control-to-inductor-current transfer in amperes (sensor gain excluded).
// With plant_override set, returns the override divided by H_i.
RationalTF g_id(const ConverterConfig& cfg);

// DC operating point from volt-second and load balance. The slope field uses
// the average-voltage construction -H_i*v_out_avg/L_f (off interval), i.e. the
// ripple-free value; the simulator's steady-state probe reports the exact
// in-cycle slope instead.
OperatingPoint operating_point(const ConverterConfig& cfg);

StateSpace state_space(const ConverterConfig& cfg);  // raises OverrideNotSimulable

}  // namespace buckloop
