#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "buckloop/numerics.hpp"

using namespace buckloop;

TEST_CASE("polynomial evaluation and derivative") {
  Polynomial p{{1.0, -3.0, 2.0}};  // 1 - 3x + 2x^2
  CHECK(p.degree() == 2);
  CHECK(p.eval(cplx(2.0, 0.0)).real() == doctest::Approx(3.0));
  CHECK(p.eval(cplx(0.0, 1.0)).real() == doctest::Approx(-1.0));
  CHECK(p.eval(cplx(0.0, 1.0)).imag() == doctest::Approx(-3.0));
  Polynomial d = p.derivative();
  CHECK(d.degree() == 1);
  CHECK(d.eval(cplx(5.0, 0.0)).real() == doctest::Approx(17.0));
  Polynomial c{{4.0}};
  CHECK(c.derivative().degree() == -1);  // zero polynomial
  CHECK(c.derivative().eval(cplx(1.0, 0.0)).real() == doctest::Approx(0.0));
}

TEST_CASE("partial fractions against hand residues") {
  // 10(s+3) / ((s+1)(s+2)) = 20/(s+1) - 10/(s+2)
  RationalTF tf{Polynomial{{30.0, 10.0}}, Polynomial{{2.0, 3.0, 1.0}}, Domain::S};
  PartialFractionForm pf = partial_fractions(tf);
  REQUIRE(pf.terms.size() == 2);
  // roots sorted by (re, im): -2 before -1
  CHECK(pf.terms[0].pole.real() == doctest::Approx(-2.0));
  CHECK(pf.terms[0].residue.real() == doctest::Approx(-10.0));
  CHECK(pf.terms[1].pole.real() == doctest::Approx(-1.0));
  CHECK(pf.terms[1].residue.real() == doctest::Approx(20.0));
}

TEST_CASE("partial fractions round-trip on random strictly proper TFs") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> pt(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int dd = 2 + int(rng() % 3);  // degree 2..4
    Polynomial den;
    den.coeffs.assign(std::size_t(dd + 1), 0.0);
    for (auto& c : den.coeffs) c = coef(rng);
    if (std::abs(den.coeffs.back()) < 0.5) den.coeffs.back() = 1.0;
    Polynomial num;
    num.coeffs.assign(std::size_t(dd), 0.0);
    for (auto& c : num.coeffs) c = coef(rng);
    RationalTF tf{num, den, Domain::S};
    PartialFractionForm pf;
    try {
      pf = partial_fractions(tf);
    } catch (const RepeatedPole&) {
      continue;  // random den with clustered roots, skip
    }
    for (int i = 0; i < 100; ++i) {
      const cplx x(pt(rng), pt(rng));
      cplx direct;
      try {
        direct = eval_rational(tf, x);
      } catch (const PoleHit&) {
        continue;
      }
      const cplx viapf = pf.eval(x);
      CHECK(std::abs(direct - viapf) <= 1e-9 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("repeated pole is rejected") {
  RationalTF tf{Polynomial{{1.0}}, Polynomial{{1.0, 2.0, 1.0}}, Domain::S};  // (s+1)^2
  CHECK_THROWS_AS(partial_fractions(tf), RepeatedPole);
}

TEST_CASE("pole hit is reported") {
  RationalTF tf{Polynomial{{1.0}}, Polynomial{{-1.0, 1.0}}, Domain::Z};  // 1/(z-1)
  CHECK_THROWS_AS(eval_rational(tf, cplx(1.0, 0.0)), PoleHit);
  CHECK(std::abs(eval_rational(tf, cplx(3.0, 0.0)) - cplx(0.5, 0.0)) < 1e-15);
}

static Mat2 taylor_expm(const Mat2& a, double t) {
  // scaling and squaring with a long Taylor series, independent of expm2
  int s = 0;
  double norm = std::max(std::abs(a[0]) + std::abs(a[1]), std::abs(a[2]) + std::abs(a[3])) *
                std::abs(t);
  while (norm > 0.25) {
    norm *= 0.5;
    ++s;
  }
  const double h = t / std::ldexp(1.0, s);
  Mat2 term{1.0, 0.0, 0.0, 1.0};
  Mat2 sum = term;
  Mat2 ah{a[0] * h, a[1] * h, a[2] * h, a[3] * h};
  for (int k = 1; k <= 30; ++k) {
    term = mat_mul(term, ah);
    for (auto& v : term) v /= double(k);
    for (int i = 0; i < 4; ++i) sum[std::size_t(i)] += term[std::size_t(i)];
  }
  for (int i = 0; i < s; ++i) sum = mat_mul(sum, sum);
  return sum;
}

TEST_CASE("expm2 matches scaling-and-squaring Taylor reference") {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> el(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat2 a{el(rng), el(rng), el(rng), el(rng)};
    const double t = 0.1 + 2.0 * std::abs(el(rng));
    const Mat2 got = expm2(a, t);
    const Mat2 want = taylor_expm(a, t);
    double scale = 0.0;
    for (auto v : want) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(got[std::size_t(i)] - want[std::size_t(i)]) <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("expm2 small-argument series branch") {
  Mat2 a{-1.5e5, -1.6e5, 9.7e3, -2.9e2};  // magnitudes typical of the filter dynamics
  const double t = 1e-9;                  // |Delta^2 t^2| well under the series threshold
  const Mat2 got = expm2(a, t);
  const Mat2 want = taylor_expm(a, t);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(got[std::size_t(i)] - want[std::size_t(i)]) <= 1e-12);
}

TEST_CASE("expm2 semigroup and identity properties") {
  Mat2 a{-2.0, -1.3, 0.7, -0.4};
  const Mat2 at_zero = expm2(a, 0.0);
  CHECK(at_zero[0] == doctest::Approx(1.0));
  CHECK(at_zero[1] == doctest::Approx(0.0));
  CHECK(at_zero[2] == doctest::Approx(0.0));
  CHECK(at_zero[3] == doctest::Approx(1.0));
  const Mat2 lhs = expm2(a, 0.7 + 0.9);
  const Mat2 rhs = mat_mul(expm2(a, 0.7), expm2(a, 0.9));
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(lhs[std::size_t(i)] - rhs[std::size_t(i)]) <= 1e-10);
}

TEST_CASE("mat_inv and Singular") {
  Mat2 a{2.0, 1.0, 1.0, 1.0};
  const Mat2 inv = mat_inv(a);
  const Mat2 prod = mat_mul(a, inv);
  CHECK(prod[0] == doctest::Approx(1.0));
  CHECK(prod[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(prod[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(prod[3] == doctest::Approx(1.0));
  Mat2 sing{1.0, 2.0, 2.0, 4.0};
  CHECK_THROWS_AS(mat_inv(sing), Singular);
}

TEST_CASE("coherent Fourier bin extraction") {
  const double T = 1e-5;
  const double f = 3.0 / (1000 * T);  // 3 cycles over 1000 samples
  const int N = 1000;
  std::vector<double> x;
  x.reserve(std::size_t(N));
  const double amp = 0.7, phase = 0.3;
  for (int n = 0; n < N; ++n)
    x.push_back(amp * std::sin(2.0 * M_PI * f * double(n) * T + phase) + 5.0 +
                0.2 * std::sin(2.0 * M_PI * 7.0 * f * double(n) * T));
  const cplx bin = fourier_coeff(x, T, f);
  // peak convention: |bin| = amplitude of the sine, arg matches sin -> -j e^{j phase}
  CHECK(std::abs(bin) == doctest::Approx(amp).epsilon(1e-9));
  const cplx expect = amp * cplx(std::sin(phase), -std::cos(phase));
  CHECK(std::abs(bin - expect) <= 1e-9);
}

TEST_CASE("non-coherent window is rejected") {
  std::vector<double> x(1000, 0.0);
  CHECK_THROWS_AS(fourier_coeff(x, 1e-5, 123.456), NonCoherentWindow);
}
