#include "buckloop/model.hpp"

#include <cmath>
#include <cstdio>

namespace buckloop {

static DelayDecomposition decompose_total(double T_D, double T_S) {
  DelayDecomposition d;
  d.k = int(std::floor(T_D / T_S));
  d.T_p = T_D - double(d.k) * T_S;
  const double eps = 1e-12 * T_S;
  if (d.T_p < eps || d.T_p > T_S - eps) {
    std::fprintf(stderr,
                 "warning: delay remainder %.3e s sits on an interval boundary, "
                 "nudged inward by %.1e s\n",
                 d.T_p, eps);
    if (d.T_p < eps) {
      d.T_p = eps;
    } else {
      d.T_p = T_S - eps;
    }
  }
  return d;
}

DelayDecomposition delay_decomposition(Modulation mod, Sampling smp, double D, double T_S) {
  if (!(D > 0.0 && D < 1.0)) throw DutyOutOfRange("delay_decomposition: duty outside (0, 1)");
  if (mod == Modulation::SYM)
    throw SymNotApplicable("delay_decomposition: symmetric modulation moves two edges");
  double T_D = 0.0;
  if (mod == Modulation::TEM) {
    T_D = (smp == Sampling::OnCenter) ? (1.0 + 0.5 * D) * T_S : 0.5 * (1.0 + D) * T_S;
  } else {  // LEM
    T_D = (smp == Sampling::OnCenter) ? (1.0 - 0.5 * D) * T_S : (1.0 + 0.5 * (1.0 - D)) * T_S;
  }
  return decompose_total(T_D, T_S);
}

SymDelays sym_delays(Sampling smp, double D, double T_S) {
  if (!(D > 0.0 && D < 1.0)) throw DutyOutOfRange("sym_delays: duty outside (0, 1)");
  SymDelays sd;
  if (smp == Sampling::OnCenter) {
    sd.T_D1 = (1.0 - 0.5 * D) * T_S;
    sd.T_D2 = sd.T_D1 + D * T_S;
  } else {
    sd.T_D1 = 0.5 * (1.0 + D) * T_S;
    sd.T_D2 = sd.T_D1 + (1.0 - D) * T_S;
  }
  return sd;
}

cplx modified_z(const PartialFractionForm& pf, double T_p, double T_S, cplx z) {
  if (!(T_p > 0.0 && T_p < T_S))
    throw Error("modified_z: remainder advance must lie strictly inside (0, T_S)");
  cplx acc(0.0, 0.0);
  for (const auto& t : pf.terms) {
    const cplx den = z * std::exp(-t.pole * T_S) - 1.0;
    if (std::abs(den) < 1e-12 * (std::abs(z * std::exp(-t.pole * T_S)) + 1.0))
      throw PoleHit("modified_z: z lies on a pole image");
    acc += t.residue * std::exp(-t.pole * T_p) / den;
  }
  return acc;
}

LoopModel::LoopModel(const ConverterConfig& cfg, const OperatingPoint& op)
    : cfg_(cfg), op_(op) {
  RationalTF tf = g_id(cfg);
  for (auto& c : tf.num.coeffs) c *= cfg.H_i;
  pf_ = partial_fractions(tf);
  if (cfg.modulation == Modulation::SYM) {
    const SymDelays sd = sym_delays(cfg.sampling, op.D, cfg.T_S);
    sym_td1_ = sd.T_D1;
    sym_td2_ = sd.T_D2;
    sym_dec1_ = decompose_total(sd.T_D1, cfg.T_S);
    sym_dec2_ = decompose_total(sd.T_D2, cfg.T_S);
  } else {
    dec_ = delay_decomposition(cfg.modulation, cfg.sampling, op.D, cfg.T_S);
    sigma_ = (cfg.modulation == Modulation::TEM) ? 1.0 : -1.0;
    m_ = 1;
  }
}

cplx LoopModel::z_of(cplx s) const { return std::exp(s * cfg_.T_S); }

double LoopModel::total_delay() const {
  if (cfg_.modulation == Modulation::SYM)
    throw SymNotApplicable("total_delay: symmetric modulation has two edge delays");
  return double(dec_.k) * cfg_.T_S + dec_.T_p;
}

cplx LoopModel::g_mz(cplx z) const {
  if (cfg_.modulation == Modulation::SYM)
    throw SymNotApplicable("g_mz: symmetric modulation uses the two-edge average");
  return std::pow(z, -dec_.k) * modified_z(pf_, dec_.T_p, cfg_.T_S, z);
}

cplx LoopModel::h_sync(cplx z) const {
  if (cfg_.modulation == Modulation::SYM)
    throw SymNotApplicable("h_sync: symmetric sampling instants do not ride the command");
  return sigma_ * std::pow(z, -m_) * 0.5 * op_.slope_at_sample;
}

cplx LoopModel::g_plant(cplx z, bool with_sync) const {
  const double scale = cfg_.T_S / cfg_.cntr_max;
  if (cfg_.modulation == Modulation::SYM) {
    const cplx m1 = std::pow(z, -sym_dec1_.k) * modified_z(pf_, sym_dec1_.T_p, cfg_.T_S, z);
    const cplx m2 = std::pow(z, -sym_dec2_.k) * modified_z(pf_, sym_dec2_.T_p, cfg_.T_S, z);
    return 0.5 * scale * (m1 + m2);
  }
  cplx acc = g_mz(z);
  if (with_sync) acc += h_sync(z);
  return scale * acc;
}

cplx LoopModel::g_c(cplx z) const {
  const cplx wm = 1.0 - 1.0 / z;
  if (std::abs(wm) < 1e-12) throw PoleHit("g_c: integrator pole at z = 1");
  return cfg_.K_p + cfg_.K_i * cfg_.T_S / wm;
}

cplx LoopModel::inv_g_c(cplx z) const {
  const cplx wm = 1.0 - 1.0 / z;
  return wm / (cfg_.K_p * wm + cfg_.K_i * cfg_.T_S);
}

cplx LoopModel::t_pul(cplx s, bool with_sync) const {
  const cplx z = z_of(s);
  return g_plant(z, with_sync) * g_c(z);
}

cplx LoopModel::forward_e0(cplx s) const {
  const cplx gid_hi = pf_.eval(s);
  if (cfg_.modulation == Modulation::SYM)
    return 0.5 / cfg_.cntr_max * (std::exp(-s * sym_td1_) + std::exp(-s * sym_td2_)) * gid_hi;
  return std::exp(-s * total_delay()) * gid_hi / cfg_.cntr_max;
}

cplx LoopModel::t0(cplx s) const { return g_c(z_of(s)) * forward_e0(s); }

cplx LoopModel::t_i(cplx s, bool with_sync) const {
  const cplx z = z_of(s);
  const cplx e0 = forward_e0(s);
  const cplx p = g_plant(z, with_sync);
  const cplx ig = inv_g_c(z);
  const cplx den = ig + p - e0;
  const double scale = std::abs(ig) + std::abs(p) + std::abs(e0);
  if (std::abs(den) < 1e-12 * scale || scale == 0.0)
    throw Singular("t_i: loop denominator collapses at this frequency");
  return e0 / den;
}

cplx LoopModel::t_c(cplx s, bool with_sync) const {
  const cplx z = z_of(s);
  const cplx e0 = forward_e0(s);
  const cplx p = g_plant(z, with_sync);
  const cplx ig = inv_g_c(z);
  const cplx den = ig + p;
  const double scale = std::abs(ig) + std::abs(p);
  if (std::abs(den) < 1e-12 * scale || scale == 0.0)
    throw Singular("t_c: closed-loop denominator collapses at this frequency");
  return e0 / den;
}

cplx LoopModel::g_cm_series(cplx s, int n_max, bool with_sync) const {
  if (cfg_.modulation == Modulation::SYM)
    throw SymNotApplicable("g_cm_series: series form covers single-edge modulators only");
  const cplx z = z_of(s);
  const double T_D = total_delay();
  // Commanded-edge gain with the displacement feedthrough absorbed:
  // per-second form of the compensated modulator path, finite at z = 1.
  const cplx sync_term = with_sync ? cfg_.T_S * h_sync(z) : cplx(0.0, 0.0);
  const cplx gdot = -1.0 / (cfg_.cntr_max * inv_g_c(z) + sync_term);
  const double w_s = 2.0 * M_PI / cfg_.T_S;
  cplx alias_sum(0.0, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    const cplx sp = s + cplx(0.0, w_s * double(n));
    const cplx sm = s - cplx(0.0, w_s * double(n));
    alias_sum += std::exp(-sp * T_D) * pf_.eval(sp);
    alias_sum += std::exp(-sm * T_D) * pf_.eval(sm);
  }
  return -std::exp(-s * T_D) * gdot / (1.0 - gdot * alias_sum);
}

cplx LoopModel::t_i_series(cplx s, int n_max, bool with_sync) const {
  return g_cm_series(s, n_max, with_sync) * pf_.eval(s);
}

cplx g_mz(const ConverterConfig& cfg, const OperatingPoint& op, cplx z) {
  return LoopModel(cfg, op).g_mz(z);
}
cplx h_sync(const ConverterConfig& cfg, const OperatingPoint& op, cplx z) {
  return LoopModel(cfg, op).h_sync(z);
}
cplx g_plant(const ConverterConfig& cfg, const OperatingPoint& op, cplx z, bool with_sync) {
  return LoopModel(cfg, op).g_plant(z, with_sync);
}
cplx g_c(const ConverterConfig& cfg, cplx z) {
  const cplx wm = 1.0 - 1.0 / z;
  if (std::abs(wm) < 1e-12) throw PoleHit("g_c: integrator pole at z = 1");
  return cfg.K_p + cfg.K_i * cfg.T_S / wm;
}
cplx t_pul(const ConverterConfig& cfg, const OperatingPoint& op, cplx s) {
  return LoopModel(cfg, op).t_pul(s);
}
cplx t0(const ConverterConfig& cfg, const OperatingPoint& op, cplx s) {
  return LoopModel(cfg, op).t0(s);
}
cplx t_i(const ConverterConfig& cfg, const OperatingPoint& op, cplx s, bool with_sync) {
  return LoopModel(cfg, op).t_i(s, with_sync);
}
cplx t_c(const ConverterConfig& cfg, const OperatingPoint& op, cplx s) {
  return LoopModel(cfg, op).t_c(s);
}
cplx g_cm_series(const ConverterConfig& cfg, const OperatingPoint& op, cplx s, int n_max) {
  return LoopModel(cfg, op).g_cm_series(s, n_max);
}

std::vector<double> default_grid(double f_lo, double f_hi, int points_per_decade) {
  if (!(f_lo > 0.0 && f_hi > f_lo)) throw Error("default_grid: need 0 < f_lo < f_hi");
  if (points_per_decade < 1) throw Error("default_grid: points_per_decade must be >= 1");
  const double decades = std::log10(f_hi / f_lo);
  const int n = int(std::ceil(decades * double(points_per_decade)));
  std::vector<double> grid;
  grid.reserve(std::size_t(n) + 1);
  for (int k = 0; k < n; ++k)
    grid.push_back(f_lo * std::pow(10.0, double(k) / double(points_per_decade)));
  grid.push_back(f_hi);
  return grid;
}

}  // namespace buckloop
