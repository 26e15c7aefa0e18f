#pragma once

#include "strata/common.hpp"

#include <cstddef>
#include <vector>

namespace strata {

// Static kd-tree over a point cloud. Queries are const and safe to run concurrently.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vector> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  int dim() const { return dim_; }
  const Vector& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vector>& points() const { return points_; }

  // Indices of points with |p - x| <= radius, in ascending index order.
  std::vector<std::size_t> within(const Vector& x, double radius) const;
  bool any_within(const Vector& x, double radius) const;
  // Index and distance of a closest point (lowest index on ties). Requires a non-empty tree.
  std::pair<std::size_t, double> nearest(const Vector& x) const;
  double distance(const Vector& x) const { return nearest(x).second; }

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
  };
  int build(std::size_t begin, std::size_t end, int depth);
  void nearest_rec(int node, const Vector& x, std::size_t& best, double& best_d2) const;

  int dim_ = 0;
  std::vector<Vector> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace strata
