#include "buckloop/plant.hpp"

#include <cmath>

namespace buckloop {

static void check_positive(const ConverterConfig& cfg) {
  if (cfg.V_IN <= 0.0 || cfg.T_S <= 0.0 || cfg.L_f <= 0.0 || cfg.C_f <= 0.0 ||
      cfg.R_LD <= 0.0 || cfg.cntr_max <= 0.0 || cfg.H_i <= 0.0)
    throw Error("plant: V_IN, T_S, L_f, C_f, R_LD, cntr_max and H_i must be positive");
  if (cfg.R_L < 0.0 || cfg.R_C < 0.0)
    throw Error("plant: parasitic resistances must be non-negative");
}

RationalTF g_id(const ConverterConfig& cfg) {
  check_positive(cfg);
  if (cfg.plant_override) {
    RationalTF tf = *cfg.plant_override;
    for (auto& c : tf.num.coeffs) c /= cfg.H_i;
    return tf;
  }
  // V_IN / (s*L_f + R_L + (1/(s*C_f) + R_C) || R_LD), cleared of the capacitor
  // branch denominator 1 + s*C_f*(R_LD + R_C).
  const double cb = cfg.C_f * (cfg.R_LD + cfg.R_C);
  RationalTF tf;
  tf.domain = Domain::S;
  tf.num.coeffs = {cfg.V_IN, cfg.V_IN * cb};
  tf.den.coeffs = {cfg.R_L + cfg.R_LD,
                   cfg.L_f + cfg.R_L * cb + cfg.C_f * cfg.R_LD * cfg.R_C,
                   cfg.L_f * cb};
  return tf;
}

OperatingPoint operating_point(const ConverterConfig& cfg) {
  check_positive(cfg);
  OperatingPoint op;
  op.i_L_avg = cfg.i_ref / cfg.H_i;
  op.v_out_avg = op.i_L_avg * cfg.R_LD;
  op.D = (op.i_L_avg * cfg.R_L + op.v_out_avg) / cfg.V_IN;
  if (!(op.D > 0.0 && op.D < 1.0))
    throw DutyOutOfRange("operating_point: duty ratio outside (0, 1)");
  const bool sample_in_on = cfg.sampling == Sampling::OnCenter;
  op.slope_at_sample = sample_in_on
                           ? cfg.H_i * (cfg.V_IN - op.v_out_avg) / cfg.L_f
                           : -cfg.H_i * op.v_out_avg / cfg.L_f;
  return op;
}

StateSpace state_space(const ConverterConfig& cfg) {
  check_positive(cfg);
  if (cfg.plant_override)
    throw OverrideNotSimulable(
        "state_space: a measured plant override carries no element values to simulate");
  const double kdiv = cfg.R_LD / (cfg.R_LD + cfg.R_C);
  StateSpace ss;
  ss.A = {-(cfg.R_L + kdiv * cfg.R_C) / cfg.L_f, -kdiv / cfg.L_f,
          kdiv / cfg.C_f, -1.0 / ((cfg.R_LD + cfg.R_C) * cfg.C_f)};
  ss.B_on = {cfg.V_IN / cfg.L_f, 0.0};
  ss.C_vout = {kdiv * cfg.R_C, kdiv};
  return ss;
}

}  // namespace buckloop
