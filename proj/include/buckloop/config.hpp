#pragma once

#include <string>
#include <vector>

#include "buckloop/plant.hpp"
#include "buckloop/sfra.hpp"

namespace buckloop {

struct RunConfig {
  ConverterConfig converter;

  // Sweep controls, 0 meaning "not set" so each command can apply its own
  // default band and density. An explicit frequency list overrides the grid.
  double sweep_f_min_hz = 0.0;
  double sweep_f_max_hz = 0.0;
  int sweep_points_per_decade = 0;
  std::vector<double> sweep_freqs_hz;

  InjectionSpec injection;
  int waveform_rows_per_cycle = 500;
};

// Flat key=value file, '#' starts a comment. Unknown keys, bad values,
// duplicates and missing required keys raise ConfigError with the offending
// line number (0 for file-level problems).
RunConfig load_config(const std::string& path);

}  // namespace buckloop
