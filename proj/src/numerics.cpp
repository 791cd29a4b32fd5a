#include "buckloop/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

namespace buckloop {

cplx Polynomial::eval(cplx x) const {
  cplx acc(0.0, 0.0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  Polynomial d;
  for (std::size_t i = 1; i < coeffs.size(); ++i) d.coeffs.push_back(coeffs[i] * double(i));
  if (d.coeffs.empty()) d.coeffs.push_back(0.0);
  return d;
}

int Polynomial::degree() const {
  for (int i = int(coeffs.size()) - 1; i >= 0; --i)
    if (coeffs[std::size_t(i)] != 0.0) return i;
  return -1;
}

cplx PartialFractionForm::eval(cplx x) const {
  cplx acc(0.0, 0.0);
  for (const auto& t : terms) acc += t.residue / (x - t.pole);
  return acc;
}

double PartialFractionForm::impulse(double t) const {
  cplx acc(0.0, 0.0);
  for (const auto& tr : terms) acc += tr.residue * std::exp(tr.pole * t);
  return acc.real();
}

static std::vector<cplx> poly_roots(const Polynomial& p) {
  const int n = p.degree();
  if (n < 1) throw Error("poly_roots: constant polynomial has no roots");
  const auto& c = p.coeffs;
  if (n == 1) return {cplx(-c[0] / c[1], 0.0)};
  if (n == 2) {
    const double a = c[2], b = c[1], c0 = c[0];
    const double disc = b * b - 4.0 * a * c0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Form the well-conditioned root first, derive the other from the product.
      const double qq = -0.5 * (b + std::copysign(sq, b));
      cplx r1, r2;
      if (qq == 0.0) {
        r1 = r2 = cplx(0.0, 0.0);
      } else {
        r1 = cplx(qq / a, 0.0);
        r2 = cplx(c0 / qq, 0.0);
      }
      return {r1, r2};
    }
    const double re = -b / (2.0 * a);
    const double im = std::sqrt(-disc) / (2.0 * a);
    return {cplx(re, im), cplx(re, -im)};
  }
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  const double lead = c[std::size_t(n)];
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[std::size_t(i)] / lead;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<cplx> roots;
  roots.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) roots[std::size_t(i)] = es.eigenvalues()[i];
  return roots;
}

PartialFractionForm partial_fractions(const RationalTF& tf) {
  const int dn = tf.num.degree();
  const int dd = tf.den.degree();
  if (dd < 1) throw Error("partial_fractions: denominator must have degree >= 1");
  if (dn >= dd) throw Error("partial_fractions: input must be strictly proper");

  auto roots = poly_roots(tf.den);

  double max_mag = 0.0;
  for (const auto& r : roots) max_mag = std::max(max_mag, std::abs(r));
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      const double sep = std::abs(roots[i] - roots[j]);
      if (sep < 1e-7 * max_mag || sep == 0.0)
        throw RepeatedPole("partial_fractions: poles separated by less than 1e-7 relative");
    }

  std::sort(roots.begin(), roots.end(), [](const cplx& a, const cplx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });

  const Polynomial dden = tf.den.derivative();
  PartialFractionForm pf;
  pf.terms.reserve(roots.size());
  for (const auto& p : roots) pf.terms.push_back({tf.num.eval(p) / dden.eval(p), p});
  return pf;
}

cplx eval_rational(const RationalTF& tf, cplx point) {
  cplx den(0.0, 0.0);
  double den_scale = 0.0;
  const double am = std::abs(point);
  double powm = 1.0;
  cplx powz(1.0, 0.0);
  for (double c : tf.den.coeffs) {
    den += c * powz;
    den_scale += std::abs(c) * powm;
    powz *= point;
    powm *= am;
  }
  if (std::abs(den) < 1e-12 * den_scale || den_scale == 0.0)
    throw PoleHit("eval_rational: evaluation point lies on a pole");
  return tf.num.eval(point) / den;
}

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Vec2 mat_vec(const Mat2& a, const Vec2& v) {
  return {a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]};
}

Mat2 mat_inv(const Mat2& a) {
  const double det = a[0] * a[3] - a[1] * a[2];
  const double scale = std::abs(a[0] * a[3]) + std::abs(a[1] * a[2]);
  if (std::abs(det) < 1e-14 * scale || det == 0.0)
    throw Singular("mat_inv: matrix is singular to working precision");
  const double inv = 1.0 / det;
  return {a[3] * inv, -a[1] * inv, -a[2] * inv, a[0] * inv};
}

Mat2 expm2(const Mat2& a, double t) {
  // Cayley-Hamilton: with mu the mean eigenvalue and M = A - mu*I, M^2 = delta2*I,
  // so expm(A t) = exp(mu t) * (c0*I + c1*M) with (c0, c1) hyperbolic or
  // trigonometric in w = sqrt(|delta2|).
  const double mu = 0.5 * (a[0] + a[3]);
  const double m00 = a[0] - mu;  // = -(a[3] - mu)
  const double delta2 = m00 * m00 + a[1] * a[2];
  const double u = delta2 * t * t;

  double c0, c1;  // cosh(w t) and sinh(w t)/w analogues
  if (std::abs(u) < 1e-6) {
    c0 = 1.0 + u / 2.0 + u * u / 24.0 + u * u * u / 720.0;
    c1 = t * (1.0 + u / 6.0 + u * u / 120.0 + u * u * u / 5040.0);
  } else if (delta2 > 0.0) {
    const double w = std::sqrt(delta2);
    c0 = std::cosh(w * t);
    c1 = std::sinh(w * t) / w;
  } else {
    const double w = std::sqrt(-delta2);
    c0 = std::cos(w * t);
    c1 = std::sin(w * t) / w;
  }
  const double e = std::exp(mu * t);
  return {e * (c0 + c1 * m00), e * (c1 * a[1]),
          e * (c1 * a[2]),     e * (c0 - c1 * m00)};
}

cplx fourier_coeff(const std::vector<double>& samples, double sample_period, double freq) {
  const std::size_t n = samples.size();
  if (n == 0) throw Error("fourier_coeff: empty window");
  const double cycles = freq * sample_period * double(n);
  if (std::abs(cycles - std::round(cycles)) > 1e-9)
    throw NonCoherentWindow("fourier_coeff: window holds a non-integer number of periods");

  const double wstep = -2.0 * M_PI * freq * sample_period;
  cplx acc(0.0, 0.0);
  cplx ph(1.0, 0.0);
  const cplx rot = std::polar(1.0, wstep);
  for (std::size_t i = 0; i < n; ++i) {
    if ((i & 1023u) == 0u) ph = std::polar(1.0, wstep * double(i));  // bound phase drift
    acc += samples[i] * ph;
    ph *= rot;
  }
  return acc * (2.0 / double(n));
}

}  // namespace buckloop
