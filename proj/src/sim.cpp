#include "buckloop/sim.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>

namespace buckloop {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::size_t kCacheCap = std::size_t(1) << 17;
}  // namespace

Simulator::Simulator(const ConverterConfig& cfg) : cfg_(cfg), ss_(state_space(cfg)) {
  a_inv_ = mat_inv(ss_.A);
  if (cfg.K_p < 0.0 || cfg.K_i < 0.0) throw Error("sim: compensator gains must be non-negative");
}

void Simulator::set_digital_injection(double amplitude, double f_hz) {
  dig_amp_ = amplitude;
  dig_f_ = f_hz;
}
void Simulator::set_analog_injection(double amplitude, double f_hz) {
  ana_amp_ = amplitude;
  ana_f_ = f_hz;
}
void Simulator::set_reference_injection(double amplitude, double f_hz) {
  ref_amp_ = amplitude;
  ref_f_ = f_hz;
}

void Simulator::set_probe_hook(int probes_per_cycle, std::function<void(double, double, double)> hook) {
  if (probes_per_cycle < 1) throw Error("sim: probes_per_cycle must be >= 1");
  probes_per_cycle_ = probes_per_cycle;
  probe_hook_ = std::move(hook);
}

void Simulator::clear_probe_hook() {
  probes_per_cycle_ = 0;
  probe_hook_ = nullptr;
}

double Simulator::vp_at(double t) const {
  return ana_amp_ != 0.0 ? ana_amp_ * std::sin(kTwoPi * ana_f_ * t) : 0.0;
}

Simulator::PhiGamma Simulator::pg(double dt) {
  const std::uint64_t key = std::bit_cast<std::uint64_t>(dt);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  PhiGamma v;
  v.phi = expm2(ss_.A, dt);
  Mat2 phimi = v.phi;
  phimi[0] -= 1.0;
  phimi[3] -= 1.0;
  v.gamma = mat_vec(a_inv_, mat_vec(phimi, ss_.B_on));
  if (cache_.size() < kCacheCap) cache_.emplace(key, v);
  return v;
}

void Simulator::log_edge() {
  if (edge_log_on_) edge_log_.push_back(t_global());
}

void Simulator::advance(double dt, int q) {
  if (dt <= 0.0) {
    if (dt < -1e-12 * cfg_.T_S) throw Error("sim: segment schedule went backwards");
    return;
  }
  const double t1_local = local_t_ + dt;
  const double uq = double(q);

  if (probes_per_cycle_ > 0 && (probe_hook_ || recording_)) {
    // The probed trajectory is a throwaway copy propagated from the exact
    // segment-start state; the dynamics below never see these partial steps.
    const double step = cfg_.T_S / double(probes_per_cycle_);
    Vec2 xp = st_.x;
    double tp = local_t_;
    PhiGamma uniform{};
    bool uniform_valid = false;
    while (next_probe_ < probes_per_cycle_) {
      const double gp = double(next_probe_) * step;
      if (!(gp < t1_local)) break;
      const double d = gp - tp;
      if (d > 0.0) {
        PhiGamma g;
        if (std::abs(d - step) < 1e-18) {
          if (!uniform_valid) {
            uniform = pg(step);
            uniform_valid = true;
          }
          g = uniform;
        } else {
          g = pg(d);
        }
        xp = {g.phi[0] * xp[0] + g.phi[1] * xp[1] + g.gamma[0] * uq,
              g.phi[2] * xp[0] + g.phi[3] * xp[1] + g.gamma[1] * uq};
        tp = gp;
      }
      const double tg = double(st_.cycle_index) * cfg_.T_S + gp;
      const double w = cfg_.H_i * xp[0];
      if (probe_hook_) probe_hook_(tg, w, w + vp_at(tg));
      if (recording_ && rec_) {
        rec_->t.push_back(tg);
        rec_->i_L.push_back(xp[0]);
        rec_->v_o.push_back(ss_.C_vout[0] * xp[0] + ss_.C_vout[1] * xp[1]);
        rec_->q.push_back(q);
        rec_->cmp_active.push_back(st_.cmp_active);
        rec_->sample_flag.push_back(pending_sample_ ? 1 : 0);
        rec_->sample_value.push_back(pending_sample_ ? pending_sample_value_ : 0.0);
        pending_sample_ = false;
      }
      ++next_probe_;
    }
  }

  if (averaging_on_) {
    const PhiGamma g = pg(dt);
    Mat2 jm = g.phi;
    jm[0] -= 1.0;
    jm[3] -= 1.0;
    const Mat2 j = mat_mul(a_inv_, jm);  // integral of expm over the segment
    const Vec2 jx = mat_vec(j, st_.x);
    const Vec2 jb = mat_vec(j, ss_.B_on);
    const Vec2 kf = mat_vec(a_inv_, {jb[0] - dt * ss_.B_on[0], jb[1] - dt * ss_.B_on[1]});
    const Vec2 ix = {jx[0] + uq * kf[0], jx[1] + uq * kf[1]};
    avg_accum_.i_L += ix[0];
    avg_accum_.v_o += ss_.C_vout[0] * ix[0] + ss_.C_vout[1] * ix[1];
    avg_accum_.p_in += cfg_.V_IN * uq * ix[0];
    const Vec2 x0 = st_.x;
    auto vo_sq = [&](double tau) {
      const PhiGamma gt = pg(tau);
      const Vec2 xt = {gt.phi[0] * x0[0] + gt.phi[1] * x0[1] + gt.gamma[0] * uq,
                       gt.phi[2] * x0[0] + gt.phi[3] * x0[1] + gt.gamma[1] * uq};
      const double vo = ss_.C_vout[0] * xt[0] + ss_.C_vout[1] * xt[1];
      return vo * vo / cfg_.R_LD;
    };
    avg_accum_.p_out += boost::math::quadrature::gauss<double, 20>::integrate(vo_sq, 0.0, dt);
  }

  const PhiGamma g = pg(dt);
  st_.x = {g.phi[0] * st_.x[0] + g.phi[1] * st_.x[1] + g.gamma[0] * uq,
           g.phi[2] * st_.x[0] + g.phi[3] * st_.x[1] + g.gamma[1] * uq};
  local_t_ = t1_local;
}

void Simulator::do_sample(int q) {
  const double tg = t_global();
  const double raw = cfg_.H_i * st_.x[0] + vp_at(tg);
  const auto k = st_.cycle_index;
  const double kt = double(k) * cfg_.T_S;
  const double p = dig_amp_ != 0.0 ? dig_amp_ * std::sin(kTwoPi * dig_f_ * kt) : 0.0;
  const double r = ref_amp_ != 0.0 ? ref_amp_ * std::sin(kTwoPi * ref_f_ * kt) : 0.0;
  const double fed = raw + p;
  const double e = (cfg_.i_ref + r) - fed;
  const double cand = st_.integ + cfg_.K_i * cfg_.T_S * e;
  const double out = cfg_.K_p * e + cand;
  if (out >= 0.0 && out <= cfg_.cntr_max) {
    st_.integ = cand;
    st_.cmp_shadow = out;
  } else {
    st_.cmp_shadow = std::clamp(out, 0.0, cfg_.cntr_max);
    clamp_seen_ = true;
  }
  st_.last_sample = raw;
  slope_last_ = cfg_.H_i * (ss_.A[0] * st_.x[0] + ss_.A[1] * st_.x[1] + ss_.B_on[0] * double(q));
  if (sample_log_on_) sample_log_.push_back({k, tg, raw, fed, r});
  if (recording_) {
    pending_sample_ = true;
    pending_sample_value_ = raw;
  }
}

void Simulator::load_shadow() { st_.cmp_active = st_.cmp_shadow; }

void Simulator::step_cycle() {
  local_t_ = 0.0;
  next_probe_ = 0;
  if (averaging_on_) avg_accum_ = CycleAverages{};
  const double Ts = cfg_.T_S;
  const double half = 0.5 * Ts;
  auto duty_time = [this](double cmp) {
    return std::clamp(cmp / cfg_.cntr_max, 0.0, 1.0) * cfg_.T_S;
  };

  switch (cfg_.modulation) {
    case Modulation::TEM: {
      load_shadow();
      const double ton = duty_time(st_.cmp_active);
      const double ts = (cfg_.sampling == Sampling::OnCenter) ? 0.5 * ton : 0.5 * (Ts + ton);
      if (ts <= ton) {  // samples inside (or at the end of) the on run: take it first
        advance(ts, 1);
        do_sample(1);
        advance(ton - ts, 1);
        if (ton > 0.0 && ton < Ts) log_edge();
        advance(Ts - ton, 0);
      } else {
        advance(ton, 1);
        if (ton > 0.0 && ton < Ts) log_edge();
        advance(ts - ton, 0);
        do_sample(0);
        advance(Ts - ts, 0);
      }
      break;
    }
    case Modulation::LEM: {
      load_shadow();
      const double ton = duty_time(st_.cmp_active);
      const double toff = Ts - ton;
      const double ts = (cfg_.sampling == Sampling::OnCenter) ? Ts - 0.5 * ton : 0.5 * toff;
      if (ts <= toff) {
        advance(ts, 0);
        do_sample(0);
        advance(toff - ts, 0);
        if (ton > 0.0 && ton < Ts) log_edge();
        advance(ton, 1);
      } else {
        advance(toff, 0);
        if (ton > 0.0 && ton < Ts) log_edge();
        advance(ts - toff, 1);
        do_sample(1);
        advance(Ts - ts, 1);
      }
      break;
    }
    case Modulation::SYM: {
      if (cfg_.sampling == Sampling::OnCenter) {
        // Trough sample, crest load: the first-half falling edge still obeys
        // the previous command, the second-half rising edge the new one.
        const double ta = 0.5 * duty_time(st_.cmp_active);
        do_sample(ta > 0.0 ? 1 : 0);
        if (ta > 0.0 && ta < half) {
          advance(ta, 1);
          log_edge();
          advance(half - ta, 0);
        } else {
          advance(half, ta > 0.0 ? 1 : 0);
        }
        load_shadow();
        const double tb = Ts - 0.5 * duty_time(st_.cmp_active);
        if (tb > half && tb < Ts) {
          advance(tb - half, 0);
          log_edge();
          advance(Ts - tb, 1);
        } else {
          advance(half, tb < Ts ? 1 : 0);
        }
      } else {
        // Trough load, crest sample.
        load_shadow();
        const double ta = 0.5 * duty_time(st_.cmp_active);
        const double tb = Ts - ta;
        if (ta < half) {
          advance(ta, 1);
          if (ta > 0.0) log_edge();
          advance(half - ta, 0);
          do_sample(0);
          advance(tb - half, 0);
          if (tb < Ts) log_edge();
          advance(Ts - tb, 1);
        } else {
          advance(half, 1);
          do_sample(1);
          advance(half, 1);
        }
      }
      break;
    }
  }

  st_.cycle_index += 1;
  if (averaging_on_) {
    avg_.i_L = avg_accum_.i_L / Ts;
    avg_.v_o = avg_accum_.v_o / Ts;
    avg_.p_in = avg_accum_.p_in / Ts;
    avg_.p_out = avg_accum_.p_out / Ts;
  }
}

void Simulator::run_cycles(std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) step_cycle();
}

Waveform Simulator::record_cycles(std::int64_t n, int rows_per_cycle) {
  if (rows_per_cycle < 1) throw Error("sim: rows_per_cycle must be >= 1");
  Waveform wf;
  wf.rows_per_cycle = rows_per_cycle;
  const int saved_ppc = probes_per_cycle_;
  probes_per_cycle_ = rows_per_cycle;
  recording_ = true;
  rec_ = &wf;
  pending_sample_ = false;
  run_cycles(n);
  recording_ = false;
  rec_ = nullptr;
  probes_per_cycle_ = saved_ppc;
  return wf;
}

SteadyStateResult find_steady_state(const ConverterConfig& cfg) {
  Simulator sim(cfg);
  const OperatingPoint guess = operating_point(cfg);
  SimState& st = sim.state();
  st.x = {guess.i_L_avg, guess.v_out_avg};
  const double cmp0 = guess.D * cfg.cntr_max;
  st.integ = cmp0;
  st.cmp_active = cmp0;
  st.cmp_shadow = cmp0;

  const std::int64_t cap = 100000;
  double resid = std::numeric_limits<double>::infinity();
  Vec2 px = st.x;
  double pinteg = st.integ;
  std::int64_t used = 0;
  bool converged = false;
  while (used < cap) {
    sim.run_cycles(1);
    ++used;
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-9});
    };
    resid = std::max({rel(st.x[0], px[0]), rel(st.x[1], px[1]), rel(st.integ, pinteg)});
    px = st.x;
    pinteg = st.integ;
    if (resid < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergence("find_steady_state: no periodic orbit after " + std::to_string(cap) +
                            " cycles (residual " + std::to_string(resid) + ")",
                        resid);

  sim.enable_averaging(true);
  sim.run_cycles(1);
  ++used;
  sim.enable_averaging(false);

  SteadyStateResult r;
  r.state = sim.state();
  r.cycles = used;
  r.residual = resid;
  r.averages = sim.last_cycle_averages();
  r.sampled_current_A = sim.state().last_sample / cfg.H_i;
  r.measured.D = sim.state().cmp_active / cfg.cntr_max;
  r.measured.i_L_avg = r.averages.i_L;
  r.measured.v_out_avg = r.averages.v_o;
  r.measured.slope_at_sample = sim.last_sample_slope();
  return r;
}

}  // namespace buckloop
