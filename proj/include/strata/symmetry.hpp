#pragma once

#include "strata/fields.hpp"
#include "strata/integration.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace strata {

struct SymmetryOptions {
  int d_max = 6;
  int order = 0;  // ball quadrature order for the fit; 0 picks fit_order(n)
  int direction_grid = 64;
  int frame_samples = 24;
  int max_alternations = 50;
  double tolerance = 1e-10;
  double refine_step_min = 1e-3;
  int refine_candidates = 3;
  std::uint64_t seed = 0;
};

int fit_order(int n);

// A k-symmetric model y -> c P^+(y) - P^-(y), with P depending only on W^T y.
struct SymmetryFit {
  int k = 0;
  int degree = 0;
  double c = 1.0;
  double distance = 0.0;  // ball average of |T v - model|^2
  HarmonicPolynomial P;   // scaled so the model has unit sphere mean square
  Matrix V;               // n x k, invariance directions
  Matrix W;               // n x (n-k), complement

  double model(Coords y) const;
};

// Samples of T_{p,r} v on unit-ball nodes; built once and shared by all fits at (p, r).
// Keeps a reference to v, which must outlive the target.
class SymmetryTarget {
 public:
  SymmetryTarget(const ScalarField& v, const Vector& p, double r, int order);

  int dim() const { return n_; }
  std::size_t size() const { return w_.size(); }
  Coords node(std::size_t i) const { return {y_.data() + i * n_, static_cast<std::size_t>(n_)}; }
  const std::vector<double>& weights() const { return w_; }  // sum to 1
  const std::vector<double>& values() const { return g_; }
  const Matrix& gradient_moment() const { return G_; }
  const NodeSet& sphere() const { return sphere_; }  // unit sphere, weights sum to 1
  // Largest pointwise difference of the sampled values; infinity if layouts differ.
  double value_gap(const SymmetryTarget& other) const;
  // Ball average of |T v - model|^2 on nodes split along the kinks of both fields.
  double exact_distance(const ScalarField& model) const;
  // Same rescaled field sampled on nodes split along the kinks of v and of the model.
  SymmetryTarget split_along(const ScalarField& model) const;
  int order() const { return order_; }

 private:
  SymmetryTarget() = default;
  void sample(const NodeSet& ball, const NodeSet& sphere);

  int n_ = 0;
  int order_ = 0;
  FieldPtr rescaled_;
  std::vector<double> y_;
  std::vector<double> w_;
  std::vector<double> g_;
  Matrix G_;
  NodeSet sphere_;
};

// Best model found for one k; distances are monotone non-decreasing in k.
SymmetryFit nearest_k_symmetric(const SymmetryTarget& target, int k, const SymmetryOptions& opts = {});
SymmetryFit nearest_k_symmetric(const ScalarField& v, const Vector& p, double r, int k,
                                const SymmetryOptions& opts = {});
bool is_symmetric(const SymmetryTarget& target, int k, double eps, const SymmetryOptions& opts = {});
bool is_symmetric(const ScalarField& v, const Vector& p, double r, int k, double eps,
                  const SymmetryOptions& opts = {});

// Distances for every k in [k_lo, n], computed top-down with the monotone chain.
// When eps is given the search for a level stops at the first model below eps.
std::vector<double> symmetry_distances(const SymmetryTarget& target, int k_lo, const SymmetryOptions& opts,
                                       std::optional<double> eps = std::nullopt);

struct RigidityReport {
  double drop = 0.0;       // N(1, p) - N(gamma, p)
  double distance0 = 0.0;  // 0-symmetry distance at (p, 1)
};
RigidityReport rigidity_check(const ScalarField& v, const Vector& p, double gamma, const SymmetryOptions& opts = {});

struct WiggleReport {
  double min_frequency = 0.0;  // min of N(rho, p) over rho in [r, 8r]
  double margin = 0.0;         // min_frequency - 1
  bool precondition_ok = false;  // not (k+1, eps, 8r, p)-symmetric
};
WiggleReport wiggle_room_check(const ScalarField& v, const Vector& p, double r, double eps, int k,
                               const SymmetryOptions& opts = {}, int samples = 16);

struct ConeSplittingReport {
  bool precondition_ok = false;
  std::string reason;
  bool invariant = false;  // P invariant along span{x, V}
  double max_derivative = 0.0;
};
ConeSplittingReport cone_splitting_check(const HarmonicPolynomial& P, const Matrix& V, const Vector& x,
                                         int samples = 64, std::uint64_t seed = 0);

}  // namespace strata
