#pragma once

#include "strata/common.hpp"

#include <map>
#include <memory>
#include <vector>

namespace strata {

using Exponent = std::vector<int>;

// All exponents of total degree d in n variables, graded lex order:
// lexicographically descending, so x1^d comes first.
class MonomialTable {
 public:
  MonomialTable(int n, int d);

  int dim() const { return n_; }
  int degree() const { return d_; }
  std::size_t size() const { return exps_.size(); }
  const Exponent& exponent(std::size_t i) const { return exps_[i]; }
  const std::vector<Exponent>& exponents() const { return exps_; }
  // Index of an exponent, or -1.
  long index(const Exponent& e) const;

 private:
  int n_;
  int d_;
  std::vector<Exponent> exps_;
  std::map<Exponent, std::size_t> lookup_;
};

const MonomialTable& monomial_table(int n, int d);

// Integral of x^alpha over the unit sphere S^{n-1}.
double sphere_moment(const Exponent& alpha);

// Homogeneous polynomial stored by coefficients over monomial_table(n, d).
class HomogeneousPolynomial {
 public:
  HomogeneousPolynomial() = default;
  HomogeneousPolynomial(int n, int d);
  HomogeneousPolynomial(int n, int d, std::vector<double> coeffs);

  int dim() const { return n_; }
  int degree() const { return d_; }
  const std::vector<double>& coeffs() const { return c_; }
  std::vector<double>& coeffs() { return c_; }
  const MonomialTable& table() const { return *table_; }

  double eval(Coords x) const;
  void gradient(Coords x, MutCoords g) const;
  // Value and gradient in one pass.
  double eval_with_gradient(Coords x, MutCoords g) const;

  HomogeneousPolynomial laplacian() const;
  HomogeneousPolynomial derivative(int var) const;
  HomogeneousPolynomial operator*(const HomogeneousPolynomial& o) const;
  HomogeneousPolynomial& operator+=(const HomogeneousPolynomial& o);
  HomogeneousPolynomial& operator-=(const HomogeneousPolynomial& o);
  HomogeneousPolynomial& operator*=(double s);

  // q(A y) for an m x n matrix A with m == dim(); result lives in n variables.
  HomogeneousPolynomial compose_linear(const Matrix& A) const;

  double max_abs_coeff() const;

 private:
  int n_ = 0;
  int d_ = 0;
  const MonomialTable* table_ = nullptr;
  std::vector<double> c_;
};

// Exact inner product on the unit sphere.
double sphere_inner(const HomogeneousPolynomial& p, const HomogeneousPolynomial& q);

}  // namespace strata
