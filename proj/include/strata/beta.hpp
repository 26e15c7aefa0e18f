#pragma once

#include "strata/fields.hpp"
#include "strata/symmetry.hpp"

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace strata {

struct Atom {
  Vector x;
  double tau = 1.0;
};

// mu = sum_i tau_i^k delta_{x_i}.
struct DiscreteMeasure {
  int k = 0;
  std::vector<Atom> atoms;
  bool disjoint = false;  // when set, validate() checks that the balls B_tau(x) are pairwise disjoint

  int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().x.size()); }
  double weight(std::size_t i) const { return std::pow(atoms[i].tau, k); }
  std::vector<Vector> points() const;
  // Closed-ball mass mu(B_r(p)).
  double mass(const Vector& p, double r) const;
  void validate() const;
};

// True iff the open balls B_tau(x) are pairwise disjoint.
bool pairwise_disjoint(const std::vector<Atom>& atoms);

DiscreteMeasure measure_from_json(const nlohmann::json& j);
nlohmann::json measure_to_json(const DiscreteMeasure& mu);

// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations. Eigenvalues descend;
// each eigenvector has its first non-negligible entry positive.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;  // columns
};
SymmetricEigen jacobi_eigen(const Matrix& A, double tol = 1e-15, int max_sweeps = 100);

struct BetaResult {
  double beta_sq = 0.0;
  double mass = 0.0;   // mu(B_r(p))
  std::size_t count = 0;
  bool empty = false;  // no mass in the ball: beta is zero by convention
  Vector X;            // center of mass of mu restricted to B_r(p)
  Vector eigvals;      // of the averaged second moment about X, descending
  Matrix eigvecs;
  Matrix plane;        // n x k orthonormal basis; the best plane is X + span(plane)
};

// Closed-ball beta^2 = inf_L r^{-k} int_{B_r(p)} dist(y, L)^2 / r^2 dmu over affine k-planes.
BetaResult beta_number(const DiscreteMeasure& mu, const Vector& p, double r, int k);
inline BetaResult beta_number(const DiscreteMeasure& mu, const Vector& p, double r) {
  return beta_number(mu, p, r, mu.k);
}

// The defining functional at the plane through c spanned by the columns of U.
double plane_functional(const DiscreteMeasure& mu, const Vector& p, double r, const Vector& c, const Matrix& U);

// Direct minimization over planes: seeded frames (grid_density of them plus coordinate frames),
// then coordinate-rotation descent from the best few.
double beta_bruteforce(const DiscreteMeasure& mu, const Vector& p, double r, int k, int grid_density = 32,
                       unsigned seed = 0);

struct BetaFrequencyOptions {
  double delta = 0.05;  // 0-symmetry threshold for the precondition
  int order = 0;
  SymmetryOptions symmetry;
};

struct BetaFrequencyCheck {
  double lhs_beta_sq = 0.0;
  double drop_integral = 0.0;  // r^{-k} int_{B_r(p)} N(8r, y) - N(r, y) dmu(y)
  double mass_term = 0.0;      // mu(B_r(p)) / r^k
  double rhs_bound = 0.0;      // drop_integral + mass_term r^m, filled by fit_beta_frequency
  bool zero_symmetric = false;
  bool not_next_symmetric = false;
  bool precondition() const { return zero_symmetric && not_next_symmetric; }
  std::string note;
};

BetaFrequencyCheck beta_frequency_inequality_check(const ScalarField& v, const DiscreteMeasure& mu, const Vector& p,
                                                   double r, double eps, const BetaFrequencyOptions& opts = {});

// Smallest C with lhs <= C (drop_integral + mass_term r^m) over the family, for the given m.
struct BetaFrequencyFit {
  double C = 0.0;
  double m = 0.0;
  std::size_t used = 0;
};
BetaFrequencyFit fit_beta_frequency(std::vector<BetaFrequencyCheck>& family, const std::vector<double>& radii, double m);

}  // namespace strata
