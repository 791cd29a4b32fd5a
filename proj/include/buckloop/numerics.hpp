#pragma once

#include <array>
#include <complex>
#include <vector>

#include "buckloop/errors.hpp"

namespace buckloop {

using cplx = std::complex<double>;
using Mat2 = std::array<double, 4>;  // row-major: [a00, a01, a10, a11]
using Vec2 = std::array<double, 2>;

// Coefficients in ascending powers: c[0] + c[1]*x + c[2]*x^2 + ...
struct Polynomial {
  std::vector<double> coeffs;

  cplx eval(cplx x) const;
  Polynomial derivative() const;
  int degree() const;  // ignores trailing zero coefficients; -1 for the zero polynomial
};

enum class Domain { S, Z };

struct RationalTF {
  Polynomial num;
  Polynomial den;
  Domain domain = Domain::S;
};

// One term residue / (x - pole) of a simple-pole expansion.
struct PfTerm {
  cplx residue;
  cplx pole;
};

struct PartialFractionForm {
  std::vector<PfTerm> terms;

  cplx eval(cplx x) const;
  // Impulse response sum_r residue_r * exp(pole_r * t), real part.
  double impulse(double t) const;
};

// Expansion of a strictly proper rational function into simple-pole terms.
// Degree-2 denominators use the cancellation-safe quadratic formula; higher
// degrees go through companion-matrix eigenvalues. Roots closer than 1e-7
// relative to the dominant root magnitude raise RepeatedPole.
PartialFractionForm partial_fractions(const RationalTF& tf);

// Horner evaluation with a PoleHit guard: the denominator is compared against
// the sum of its term magnitudes, so catastrophic cancellation near a pole is
// detected independent of coefficient scaling.
cplx eval_rational(const RationalTF& tf, cplx point);

Mat2 mat_mul(const Mat2& a, const Mat2& b);
Vec2 mat_vec(const Mat2& a, const Vec2& v);
Mat2 mat_inv(const Mat2& a);  // raises Singular

// Closed-form matrix exponential expm(A*t) for 2x2 A, t >= 0. Exact up to
// rounding; the degenerate (near-equal eigenvalue) branch switches to a series
// that keeps full precision.
Mat2 expm2(const Mat2& a, double t);

// Single-bin DTFT with the peak convention: (2/N) * sum x[n] exp(-j*2*pi*f*n*T).
// The window must hold an integer number of periods of f (within 1e-9 cycles),
// otherwise NonCoherentWindow is raised.
cplx fourier_coeff(const std::vector<double>& samples, double sample_period, double freq);

}  // namespace buckloop
