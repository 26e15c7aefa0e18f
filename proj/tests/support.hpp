#pragma once

#include "strata/harmonic_basis.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace testing_support {

using strata::Vector;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Vector random_point(std::mt19937_64& rng, int n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = normal(rng);
  x *= radius * std::pow(unif(rng), 1.0 / n) / x.norm();
  return x;
}

inline strata::HarmonicPolynomial random_harmonic(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> normal;
  std::vector<double> c(strata::harmonic_dimension(n, d));
  for (double& x : c) x = normal(rng);
  return strata::HarmonicPolynomial::from_basis(n, d, c);
}

// Monomial-form polynomial from (exponent, coefficient) pairs.
inline strata::HarmonicPolynomial monomials(int n, int d, std::initializer_list<std::pair<strata::Exponent, double>> terms) {
  strata::HomogeneousPolynomial p(n, d);
  for (const auto& [e, c] : terms) p.coeffs()[p.table().index(e)] += c;
  return strata::HarmonicPolynomial::from_monomials(p);
}

// Exact sphere integral of a monomial, written independently of the library.
inline double exact_sphere_monomial(const std::vector<int>& a) {
  double num = 1.0, s = 0.0;
  for (int k : a) {
    if (k % 2) return 0.0;
    num *= std::tgamma(0.5 * (k + 1));
    s += 0.5 * (k + 1);
  }
  return 2.0 * num / std::tgamma(s);
}

inline strata::HarmonicPolynomial coordinate(int n, int i) {
  strata::Exponent e(n, 0);
  e[i] = 1;
  strata::HomogeneousPolynomial p(n, 1);
  p.coeffs()[p.table().index(e)] = 1.0;
  return strata::HarmonicPolynomial::from_monomials(p);
}

// Composite Gauss-Legendre on [a, b] with many points, independent of the library.
inline double gl_integrate(const std::function<double(double)>& f, double a, double b, int panels = 200) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  double s = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double m = a + (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) s += 0.5 * h * w[k] * f(m + 0.5 * h * x[k]);
  }
  return s;
}

inline strata::Matrix random_rotation(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  strata::Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
  Eigen::HouseholderQR<strata::Matrix> qr(A);
  strata::Matrix Q = qr.householderQ();
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

}  // namespace testing_support
