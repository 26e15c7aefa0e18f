#pragma once

#include "strata/common.hpp"

#include <vector>

namespace strata {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre on [-1, 1].
GaussRule gauss_legendre(int count);
// Gauss-Jacobi for the weight (1-t)^alpha (1+t)^beta on [-1, 1].
GaussRule gauss_jacobi(int count, double alpha, double beta);

// One circle of a product sphere rule: the points
// (radius*cos(phi), radius*sin(phi), tail...) for phi on an equispaced grid.
struct SphereRing {
  double radius = 1.0;
  std::vector<double> tail;
  double weight = 0.0;  // total weight of the ring
};

// Product rule on the unit sphere S^{n-1}, exact for polynomials of degree <= order.
class SphereRule {
 public:
  SphereRule(int n, int order);

  int dim() const { return n_; }
  int order() const { return order_; }
  std::size_t size() const { return weights_.size(); }
  Coords node(std::size_t i) const { return {nodes_.data() + i * n_, static_cast<std::size_t>(n_)}; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  const std::vector<SphereRing>& rings() const { return rings_; }
  int circle_points() const { return circle_points_; }
  double phase() const { return phase_; }

 private:
  int n_;
  int order_;
  int circle_points_;
  double phase_;
  std::vector<SphereRing> rings_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

// Radial Gauss-Legendre times a sphere rule on the unit ball.
class BallRule {
 public:
  BallRule(int n, int order);

  int dim() const { return sphere_.dim(); }
  int order() const { return order_; }
  std::size_t size() const { return weights_.size(); }
  Coords node(std::size_t i) const { return {nodes_.data() + i * dim(), static_cast<std::size_t>(dim())}; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  const SphereRule& sphere() const { return sphere_; }
  // Radii in (0, 1) and weights including the s^{n-1} Jacobian.
  const GaussRule& radial() const { return radial_; }

 private:
  int order_;
  SphereRule sphere_;
  GaussRule radial_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

// Rules are cached per (n, order) and shared.
const SphereRule& sphere_rule(int n, int order);
const BallRule& ball_rule(int n, int order);

// Default integration order for ambient dimension n.
int default_order(int n);

}  // namespace strata
