#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "buckloop/model.hpp"
#include "buckloop/sim.hpp"

namespace buckloop {

enum class InjectionPoint { Digital, Analog, Reference };

struct InjectionSpec {
  InjectionPoint point = InjectionPoint::Digital;
  double amplitude = 0.004;        // sensed units
  int measure_periods = 2;         // window = q * measure_periods carrier cycles
  std::int64_t settle_cycles = 0;  // 0 selects max(2000, 20*f_S/f_p)
  int probes_per_cycle = 2000;     // continuous-signal grid (analog/reference paths)
  int q_max = 20000;               // coherence snap denominator bound
};

struct SnappedFreq {
  std::int64_t p = 0, q = 1;
  double f_hz = 0.0;  // f_S * p / q
};

// Nearest coherent frequency f_S*p/q with q <= q_max. Rationals reducing to an
// odd multiple of 1/2 are skipped: on the sampled lattice the injection and its
// image collide there and no single-phasor ratio exists.
SnappedFreq snap_coherent(double f_request, double f_S, int q_max);

struct MeasuredPoint {
  double f_hz = 0.0;
  cplx pre;   // Fourier coefficient entering the injection summing node
  cplx post;  // Fourier coefficient leaving it
  cplx gain;  // loop orientation -pre/post; reference path is +pre/post
};

// Single-point measurements starting from a supplied settled state. The
// injection runs through the settle interval so the window sees the stationary
// response; a comparator clamp inside the window raises ClampDuringMeasure.
MeasuredPoint measure_digital_point(const ConverterConfig& cfg, const SimState& steady,
                                    double f_hz, const InjectionSpec& spec);
MeasuredPoint measure_analog_point(const ConverterConfig& cfg, const SimState& steady,
                                   double f_hz, const InjectionSpec& spec);
MeasuredPoint measure_closed_loop_point(const ConverterConfig& cfg, const SimState& steady,
                                        double f_hz, const InjectionSpec& spec);

// Convenience variants that settle the loop first (NoSteadyState on failure).
MeasuredPoint measure_digital(const ConverterConfig& cfg, double f_hz, const InjectionSpec& spec = {});
MeasuredPoint measure_analog(const ConverterConfig& cfg, double f_hz, const InjectionSpec& spec = {});
MeasuredPoint measure_closed_loop(const ConverterConfig& cfg, double f_hz, const InjectionSpec& spec = {});

struct SweepOutcome {
  BodeCurve curve;
  std::vector<std::string> failures;  // "<f_hz>: <reason>", one per failed point
};

// Snaps, deduplicates and measures the requested frequencies concurrently
// (one simulator per point); results are assembled in ascending frequency
// order so the outcome is independent of scheduling. Failed points are
// recorded and skipped.
SweepOutcome sweep(const ConverterConfig& cfg, const std::vector<double>& freqs,
                   const InjectionSpec& spec);

}  // namespace buckloop
