#pragma once

#include "strata/polynomial.hpp"

#include <json.hpp>

#include <vector>

namespace strata {

// h(n, d): dimension of the space of degree-d harmonic polynomials in n variables.
std::size_t harmonic_dimension(int n, int d);

// Orthonormal basis of degree-d harmonic polynomials (unit-sphere L2), in monomial form.
// Cached and deterministic. Rejects n < 2.
const std::vector<HomogeneousPolynomial>& harmonic_monomial_basis(int n, int d);

// Uncached construction, for reproducibility checks.
std::vector<HomogeneousPolynomial> build_harmonic_basis(int n, int d);

// Same construction without the n >= 2 guard; used for one-variable profiles.
const std::vector<HomogeneousPolynomial>& harmonic_monomial_basis_any(int n, int d);

class HarmonicPolynomial {
 public:
  HarmonicPolynomial() = default;
  // Coefficients over harmonic_monomial_basis(n, d).
  static HarmonicPolynomial from_basis(int n, int d, std::vector<double> coeffs);
  // Monomial coefficients; rejects non-harmonic input.
  static HarmonicPolynomial from_monomials(const HomogeneousPolynomial& p, double tol = 1e-9);

  int dim() const { return poly_.dim(); }
  int degree() const { return poly_.degree(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const HomogeneousPolynomial& monomial_form() const { return poly_; }

  double eval(Coords x) const { return poly_.eval(x); }
  void gradient(Coords x, MutCoords g) const { poly_.gradient(x, g); }
  double eval_with_gradient(Coords x, MutCoords g) const { return poly_.eval_with_gradient(x, g); }
  double operator()(const Vector& x) const { return eval(coords(x)); }
  Vector grad(const Vector& x) const;

  // Sphere L2 norm squared divided by the sphere area.
  double sphere_mean_square() const;

  HarmonicPolynomial scaled(double s) const;

 private:
  HomogeneousPolynomial poly_;
  std::vector<double> coeffs_;
};

double eval_poly(const HarmonicPolynomial& p, const Vector& x);
Vector grad_poly(const HarmonicPolynomial& p, const Vector& x);

// Basis export: {"schema":1,"n":..,"d":..,"ordering":"graded_lex","monomials":[[..]],"coeffs":[[..]]}
nlohmann::json basis_to_json(int n, int d);
std::vector<HarmonicPolynomial> basis_from_json(const nlohmann::json& j);

}  // namespace strata
