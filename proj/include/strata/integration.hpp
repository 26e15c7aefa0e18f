#pragma once

#include "strata/fields.hpp"
#include "strata/quadrature.hpp"

namespace strata {

// Quadrature nodes in ambient coordinates with their weights.
struct NodeSet {
  int dim = 0;
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  Coords point(std::size_t i) const { return {points.data() + i * dim, static_cast<std::size_t>(dim)}; }
  double total_weight() const;
};

// Nodes on the sphere of the given radius about center; weights sum to the sphere area.
// When v has kinks, every circle of the product rule is split at the kink crossings and
// each arc gets its own Gauss-Legendre rule, so piecewise-smooth integrands stay exact.
NodeSet sphere_nodes(const ScalarField& v, const Vector& center, double radius, int order = 0);
// Nodes in the ball; weights sum to the ball volume.
NodeSet ball_nodes(const ScalarField& v, const Vector& center, double radius, int order = 0);

// Plain (field-agnostic) rules mapped to the given sphere or ball.
NodeSet sphere_nodes(int n, const Vector& center, double radius, int order);
NodeSet ball_nodes(int n, const Vector& center, double radius, int order);

}  // namespace strata
