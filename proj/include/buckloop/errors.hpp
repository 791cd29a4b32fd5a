#pragma once

#include <stdexcept>
#include <string>

namespace buckloop {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation requested exactly on (or numerically indistinguishable from) a pole.
struct PoleHit : Error {
  using Error::Error;
};

// Partial fractions require simple poles; near-coincident roots are rejected
// rather than silently perturbed.
struct RepeatedPole : Error {
  using Error::Error;
};

// The DTFT window does not hold an integer number of periods of the probe tone.
struct NonCoherentWindow : Error {
  using Error::Error;
};

struct DutyOutOfRange : Error {
  using Error::Error;
};

// A measured-plant override replaces the physical model; switching waveforms
// cannot be reconstructed from it.
struct OverrideNotSimulable : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  NoConvergence(const std::string& msg, double residual_)
      : Error(msg), residual(residual_) {}
  double residual = 0.0;
};

// Requested a single-edge delay decomposition for symmetric modulation.
struct SymNotApplicable : Error {
  using Error::Error;
};

struct Singular : Error {
  using Error::Error;
};

struct ClampDuringMeasure : Error {
  using Error::Error;
};

struct NoSteadyState : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& msg, int line_) : Error(msg), line(line_) {}
  int line = 0;
};

}  // namespace buckloop
