#pragma once

#include <string>
#include <vector>

#include "buckloop/plant.hpp"

namespace buckloop {

// Loop delay split into whole sampling periods plus a fractional remainder,
// T_D = k*T_S + T_p with T_p strictly inside (0, T_S).
struct DelayDecomposition {
  int k = 0;
  double T_p = 0.0;
};

struct SymDelays {
  double T_D1 = 0.0;  // command to the first moved edge
  double T_D2 = 0.0;  // command to the second moved edge
};

// Command-to-edge delay for the single-update modulators. Remainders that land
// on an interval boundary are nudged inward by 1e-12*T_S (with a warning on
// stderr). Symmetric modulation has two moved edges and raises SymNotApplicable.
DelayDecomposition delay_decomposition(Modulation mod, Sampling smp, double D, double T_S);

SymDelays sym_delays(Sampling smp, double D, double T_S);

// Modified z-transform of a simple-pole form, evaluated at z with remainder
// advance T_p in (0, T_S):
//   sum_r residue_r * exp(pole_r*T_p) / (z*exp(pole_r*T_S) - 1).
// z on a pole of the expression raises PoleHit.
cplx modified_z(const PartialFractionForm& pf, double T_p, double T_S, cplx z);

// Precomputed analytic loop for one configuration and operating point. All
// evaluations are per complex frequency; sampled-domain quantities take
// z = exp(s*T_S).
class LoopModel {
 public:
  LoopModel(const ConverterConfig& cfg, const OperatingPoint& op);

  cplx z_of(cplx s) const;

  // Sensed-current-per-on-time pulse response, z^{-k} * Zm{G_id*H_i, T_p}.
  cplx g_mz(cplx z) const;

  // Sampling-instant displacement feedthrough, sigma * z^{-m} * slope/2.
  // Symmetric modulation raises SymNotApplicable.
  cplx h_sync(cplx z) const;

  // Discrete control-to-sensed-current plant. with_sync=false drops the
  // displacement feedthrough (no effect for symmetric modulation).
  cplx g_plant(cplx z, bool with_sync = true) const;

  // PI compensator K_p + K_i*T_S/(1 - z^-1); PoleHit at z = 1.
  cplx g_c(cplx z) const;

  cplx t_pul(cplx s, bool with_sync = true) const;  // g_plant * g_c; PoleHit at z = 1
  cplx t0(cplx s) const;                            // delay-only forward path times g_c

  // Analog-side loop gain. Evaluated in the pole-free arrangement
  //   T_i = e0 / (1/g_c + g_plant - e0),
  // which is algebraically identical to t0/(1 + t_pul - t0) yet finite at
  // z = 1 (s at multiples of j*2*pi/T_S). Raises Singular when the
  // denominator collapses.
  cplx t_i(cplx s, bool with_sync = true) const;

  // Closed-loop reference-to-sensed-current response t_i/(1 + t_i).
  cplx t_c(cplx s, bool with_sync = true) const;

  // Sideband-series construction of the commanded-edge response, truncated
  // plainly at |n| <= n_max. Symmetric modulation raises SymNotApplicable.
  cplx g_cm_series(cplx s, int n_max, bool with_sync = true) const;
  cplx t_i_series(cplx s, int n_max, bool with_sync = true) const;

  const ConverterConfig& config() const { return cfg_; }
  const OperatingPoint& op() const { return op_; }
  double total_delay() const;  // k*T_S + T_p (single-edge modulators)

 private:
  cplx forward_e0(cplx s) const;  // (1/cntr) * delay * G_id*H_i, edge-averaged for SYM
  cplx inv_g_c(cplx z) const;

  ConverterConfig cfg_;
  OperatingPoint op_;
  PartialFractionForm pf_;  // of G_id*H_i
  DelayDecomposition dec_;  // single-edge modulators
  DelayDecomposition sym_dec1_, sym_dec2_;
  double sym_td1_ = 0.0, sym_td2_ = 0.0;
  double sigma_ = 0.0;
  int m_ = 1;
};

// Convenience wrappers constructing the model per call.
cplx g_mz(const ConverterConfig& cfg, const OperatingPoint& op, cplx z);
cplx h_sync(const ConverterConfig& cfg, const OperatingPoint& op, cplx z);
cplx g_plant(const ConverterConfig& cfg, const OperatingPoint& op, cplx z, bool with_sync = true);
cplx g_c(const ConverterConfig& cfg, cplx z);
cplx t_pul(const ConverterConfig& cfg, const OperatingPoint& op, cplx s);
cplx t0(const ConverterConfig& cfg, const OperatingPoint& op, cplx s);
cplx t_i(const ConverterConfig& cfg, const OperatingPoint& op, cplx s, bool with_sync = true);
cplx t_c(const ConverterConfig& cfg, const OperatingPoint& op, cplx s);
cplx g_cm_series(const ConverterConfig& cfg, const OperatingPoint& op, cplx s, int n_max);

struct BodePoint {
  double f_hz = 0.0;
  cplx value;
};

struct BodeCurve {
  std::string quantity;
  std::vector<BodePoint> points;
};

// Log-spaced grid, endpoints included.
std::vector<double> default_grid(double f_lo, double f_hi, int points_per_decade = 200);

}  // namespace buckloop
