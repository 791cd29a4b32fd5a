#include "buckloop/sfra.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <thread>

namespace buckloop {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::int64_t settle_cycles_for(double f_S, double f_hz, const InjectionSpec& spec) {
  if (spec.settle_cycles > 0) return spec.settle_cycles;
  return std::int64_t(std::max(2000.0, std::ceil(20.0 * f_S / f_hz)));
}

std::int64_t window_cycles_for(std::int64_t q, const InjectionSpec& spec) {
  return q * std::int64_t(std::max(1, spec.measure_periods));
}
}  // namespace

SnappedFreq snap_coherent(double f_request, double f_S, int q_max) {
  if (!(f_request > 0.0) || !(f_S > 0.0)) throw Error("snap_coherent: frequencies must be positive");
  if (q_max < 1) throw Error("snap_coherent: q_max must be >= 1");
  const double x = f_request / f_S;
  SnappedFreq best;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::int64_t q = 1; q <= q_max; ++q) {
    std::int64_t p = std::llround(x * double(q));
    if (p < 1) p = 1;
    const std::int64_t g = std::gcd(p, q);
    const std::int64_t pr = p / g, qr = q / g;
    // qr == 2 means an odd multiple of f_S/2: the tone and its sampled image
    // fall on the same line and no single-phasor ratio exists there.
    if (qr == 2) continue;
    const double err = std::abs(x - double(pr) / double(qr));
    if (err < best_err - 1e-18 * std::abs(x)) {
      best_err = err;
      best.p = pr;
      best.q = qr;
      best.f_hz = f_S * double(pr) / double(qr);
    }
    if (best_err == 0.0) break;
  }
  if (best.p == 0) throw Error("snap_coherent: no admissible rational below q_max");
  return best;
}

MeasuredPoint measure_digital_point(const ConverterConfig& cfg, const SimState& steady,
                                    double f_hz, const InjectionSpec& spec) {
  const double f_S = 1.0 / cfg.T_S;
  const SnappedFreq sf = snap_coherent(f_hz, f_S, spec.q_max);
  if (!(sf.f_hz < 0.5 * f_S))
    throw Error("measure_digital: tone must lie strictly below half the sampling rate");
  const std::int64_t settle = settle_cycles_for(f_S, sf.f_hz, spec);
  const std::int64_t window = window_cycles_for(sf.q, spec);

  Simulator sim(cfg);
  sim.state() = steady;
  sim.set_digital_injection(spec.amplitude, sf.f_hz);
  sim.run_cycles(settle);
  sim.reset_clamp_flag();
  sim.enable_sample_log(true);
  sim.run_cycles(window);
  if (sim.clamp_seen())
    throw ClampDuringMeasure("measure_digital: comparator clamped inside the window");

  const auto& log = sim.sample_log();
  std::vector<double> a(log.size()), b(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    a[i] = log[i].raw;
    b[i] = log[i].fed;
  }
  MeasuredPoint mp;
  mp.f_hz = sf.f_hz;
  mp.pre = fourier_coeff(a, cfg.T_S, sf.f_hz);
  mp.post = fourier_coeff(b, cfg.T_S, sf.f_hz);
  mp.gain = -mp.pre / mp.post;
  return mp;
}

MeasuredPoint measure_analog_point(const ConverterConfig& cfg, const SimState& steady,
                                   double f_hz, const InjectionSpec& spec) {
  const double f_S = 1.0 / cfg.T_S;
  const SnappedFreq sf = snap_coherent(f_hz, f_S, spec.q_max);
  if (sf.f_hz > 2.0 * f_S * (1.0 + 1e-12))
    throw Error("measure_analog: tone must not exceed twice the sampling rate");
  if (spec.probes_per_cycle < 200)
    throw Error("measure_analog: probes_per_cycle must be >= 200");
  const std::int64_t settle = settle_cycles_for(f_S, sf.f_hz, spec);
  const std::int64_t window = window_cycles_for(sf.q, spec);

  Simulator sim(cfg);
  sim.state() = steady;
  sim.set_analog_injection(spec.amplitude, sf.f_hz);
  sim.run_cycles(settle);
  sim.reset_clamp_flag();

  const double om = kTwoPi * sf.f_hz;
  const double t0 = double(sim.state().cycle_index) * cfg.T_S;
  cplx wacc(0.0, 0.0), uacc(0.0, 0.0);
  std::int64_t nprobe = 0;
  sim.set_probe_hook(spec.probes_per_cycle, [&](double t, double w, double u) {
    const cplx ph = std::polar(1.0, -om * (t - t0));
    wacc += w * ph;
    uacc += u * ph;
    ++nprobe;
  });
  sim.run_cycles(window);
  sim.clear_probe_hook();
  if (sim.clamp_seen())
    throw ClampDuringMeasure("measure_analog: comparator clamped inside the window");

  MeasuredPoint mp;
  mp.f_hz = sf.f_hz;
  mp.pre = wacc * (2.0 / double(nprobe));
  mp.post = uacc * (2.0 / double(nprobe));
  mp.gain = -mp.pre / mp.post;
  return mp;
}

MeasuredPoint measure_closed_loop_point(const ConverterConfig& cfg, const SimState& steady,
                                        double f_hz, const InjectionSpec& spec) {
  const double f_S = 1.0 / cfg.T_S;
  const SnappedFreq sf = snap_coherent(f_hz, f_S, spec.q_max);
  if (!(sf.f_hz < 0.5 * f_S))
    throw Error("measure_closed_loop: tone must lie strictly below half the sampling rate");
  if (spec.probes_per_cycle < 200)
    throw Error("measure_closed_loop: probes_per_cycle must be >= 200");
  const std::int64_t settle = settle_cycles_for(f_S, sf.f_hz, spec);
  const std::int64_t window = window_cycles_for(sf.q, spec);

  Simulator sim(cfg);
  sim.state() = steady;
  sim.set_reference_injection(spec.amplitude, sf.f_hz);
  sim.run_cycles(settle);
  sim.reset_clamp_flag();
  sim.enable_sample_log(true);

  const double om = kTwoPi * sf.f_hz;
  const double t0 = double(sim.state().cycle_index) * cfg.T_S;
  cplx wacc(0.0, 0.0);
  std::int64_t nprobe = 0;
  sim.set_probe_hook(spec.probes_per_cycle, [&](double t, double w, double) {
    wacc += w * std::polar(1.0, -om * (t - t0));
    ++nprobe;
  });
  sim.run_cycles(window);
  sim.clear_probe_hook();
  if (sim.clamp_seen())
    throw ClampDuringMeasure("measure_closed_loop: comparator clamped inside the window");

  // The reference acts at the sampling instants, which sit at a duty-dependent
  // offset inside each period. Its phasor must be taken at those instants and
  // referenced to the same origin as the probe phasor, or the ratio picks up a
  // spurious rotation of 2*pi*f times that offset.
  const auto& log = sim.sample_log();
  cplx racc(0.0, 0.0);
  for (const auto& rec : log) racc += rec.r * std::polar(1.0, -om * (rec.t - t0));

  MeasuredPoint mp;
  mp.f_hz = sf.f_hz;
  mp.pre = wacc * (2.0 / double(nprobe));
  mp.post = racc * (2.0 / double(log.size()));
  mp.gain = mp.pre / mp.post;  // closed-loop orientation, no sign flip
  return mp;
}

static SimState settled_state(const ConverterConfig& cfg) {
  try {
    return find_steady_state(cfg).state;
  } catch (const NoConvergence& e) {
    throw NoSteadyState(std::string("measurement aborted: ") + e.what());
  }
}

MeasuredPoint measure_digital(const ConverterConfig& cfg, double f_hz, const InjectionSpec& spec) {
  return measure_digital_point(cfg, settled_state(cfg), f_hz, spec);
}
MeasuredPoint measure_analog(const ConverterConfig& cfg, double f_hz, const InjectionSpec& spec) {
  return measure_analog_point(cfg, settled_state(cfg), f_hz, spec);
}
MeasuredPoint measure_closed_loop(const ConverterConfig& cfg, double f_hz, const InjectionSpec& spec) {
  return measure_closed_loop_point(cfg, settled_state(cfg), f_hz, spec);
}

SweepOutcome sweep(const ConverterConfig& cfg, const std::vector<double>& freqs,
                   const InjectionSpec& spec) {
  const double f_S = 1.0 / cfg.T_S;
  const SimState steady = settled_state(cfg);

  std::vector<SnappedFreq> snapped;
  std::vector<std::string> failures;
  for (double f : freqs) {
    try {
      const SnappedFreq sf = snap_coherent(f, f_S, spec.q_max);
      const bool dup = std::any_of(snapped.begin(), snapped.end(), [&](const SnappedFreq& s) {
        return s.p == sf.p && s.q == sf.q;
      });
      if (!dup) snapped.push_back(sf);
    } catch (const Error& e) {
      failures.push_back(std::to_string(f) + ": " + e.what());
    }
  }
  std::sort(snapped.begin(), snapped.end(),
            [](const SnappedFreq& a, const SnappedFreq& b) { return a.f_hz < b.f_hz; });

  auto measure_one = [&](const SnappedFreq& sf) {
    switch (spec.point) {
      case InjectionPoint::Digital:
        return measure_digital_point(cfg, steady, sf.f_hz, spec);
      case InjectionPoint::Analog:
        return measure_analog_point(cfg, steady, sf.f_hz, spec);
      case InjectionPoint::Reference:
        return measure_closed_loop_point(cfg, steady, sf.f_hz, spec);
    }
    throw Error("sweep: unknown injection point");
  };

  SweepOutcome out;
  switch (spec.point) {
    case InjectionPoint::Digital:
      out.curve.quantity = "T_pul_sfra";
      break;
    case InjectionPoint::Analog:
      out.curve.quantity = "T_i_sfra";
      break;
    case InjectionPoint::Reference:
      out.curve.quantity = "T_c_sfra";
      break;
  }

  const std::size_t batch =
      std::max<std::size_t>(1, std::min<std::size_t>(32, std::thread::hardware_concurrency()));
  for (std::size_t i0 = 0; i0 < snapped.size(); i0 += batch) {
    const std::size_t i1 = std::min(snapped.size(), i0 + batch);
    std::vector<std::future<MeasuredPoint>> futs;
    futs.reserve(i1 - i0);
    for (std::size_t i = i0; i < i1; ++i)
      futs.push_back(std::async(std::launch::async, measure_one, snapped[i]));
    for (std::size_t i = i0; i < i1; ++i) {
      try {
        const MeasuredPoint mp = futs[i - i0].get();
        out.curve.points.push_back({mp.f_hz, mp.gain});
      } catch (const std::exception& e) {
        failures.push_back(std::to_string(snapped[i].f_hz) + ": " + e.what());
      }
    }
  }
  out.failures = std::move(failures);
  return out;
}

}  // namespace buckloop
