#include "strata/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace strata {

namespace {
constexpr std::size_t kLeafSize = 8;
}

KdTree::KdTree(std::vector<Vector> points) : points_(std::move(points)) {
  if (points_.empty()) return;
  dim_ = static_cast<int>(points_.front().size());
  for (const Vector& p : points_) require(p.size() == dim_, "kd-tree points must share a dimension");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, points_.size(), 0);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;
  // Split on the widest coordinate.
  int axis = 0;
  double widest = -1.0;
  for (int a = 0; a < dim_; ++a) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, points_[order_[i]][a]);
      hi = std::max(hi, points_[order_[i]][a]);
    }
    if (hi - lo > widest) widest = hi - lo, axis = a;
  }
  if (widest <= 0.0) return id;
  const std::size_t mid = begin + (end - begin) / 2;
  auto first = order_.begin() + static_cast<long>(begin);
  std::nth_element(first, order_.begin() + static_cast<long>(mid), order_.begin() + static_cast<long>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  const int l = build(begin, mid, depth + 1);
  const int r = build(mid, end, depth + 1);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

std::vector<std::size_t> KdTree::within(const Vector& x, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty() || radius < 0.0) return out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (nd.axis < 0) {
      for (std::size_t i = nd.begin; i < nd.end; ++i)
        if ((points_[order_[i]] - x).norm() <= radius) out.push_back(order_[i]);
      continue;
    }
    const double diff = x[nd.axis] - nd.split;
    if (diff - radius <= 0.0) stack.push_back(nd.left);
    if (diff + radius >= 0.0) stack.push_back(nd.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool KdTree::any_within(const Vector& x, double radius) const {
  if (points_.empty() || radius < 0.0) return false;
  return nearest(x).second <= radius;
}

void KdTree::nearest_rec(int node, const Vector& x, std::size_t& best, double& best_d2) const {
  const Node& nd = nodes_[node];
  if (nd.axis < 0) {
    for (std::size_t i = nd.begin; i < nd.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (points_[idx] - x).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) best_d2 = d2, best = idx;
    }
    return;
  }
  const double diff = x[nd.axis] - nd.split;
  const int near = diff <= 0.0 ? nd.left : nd.right;
  const int far = diff <= 0.0 ? nd.right : nd.left;
  nearest_rec(near, x, best, best_d2);
  if (diff * diff <= best_d2) nearest_rec(far, x, best, best_d2);
}

std::pair<std::size_t, double> KdTree::nearest(const Vector& x) const {
  require(!points_.empty(), "nearest-point query on an empty set");
  std::size_t best = points_.size();
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(0, x, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

}  // namespace strata
