#include "strata/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace strata {

GaussRule gauss_legendre(int count) {
  require(count >= 1, "gauss_legendre: count must be positive");
  GaussRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = count * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[count - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[count - 1 - i] = w;
  }
  if (count % 2 == 1) rule.nodes[count / 2] = 0.0;
  return rule;
}

GaussRule gauss_jacobi(int count, double alpha, double beta) {
  require(count >= 1, "gauss_jacobi: count must be positive");
  require(alpha > -1.0 && beta > -1.0, "gauss_jacobi: exponents must exceed -1");
  if (alpha == 0.0 && beta == 0.0) return gauss_legendre(count);
  const double ab = alpha + beta;
  Eigen::VectorXd diag(count);
  Eigen::VectorXd sub(std::max(count - 1, 0));
  for (int k = 0; k < count; ++k) {
    const double s = 2.0 * k + ab;
    diag[k] = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (k >= 1) {
      const double num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
      const double den = s * s * (s + 1.0) * (s - 1.0);
      sub[k - 1] = std::sqrt(num / den);
    }
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
                              std::lgamma(ab + 2.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  GaussRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  for (int i = 0; i < count; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  if (alpha == beta) {
    // Enforce exact symmetry of the rule.
    for (int i = 0; i < count / 2; ++i) {
      const int j = count - 1 - i;
      const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
      const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
      rule.nodes[i] = -x;
      rule.nodes[j] = x;
      rule.weights[i] = rule.weights[j] = w;
    }
    if (count % 2 == 1) rule.nodes[count / 2] = 0.0;
  }
  return rule;
}

namespace {

std::vector<SphereRing> build_rings(int n, int order) {
  if (n == 2) return {SphereRing{1.0, {}, 1.0}};
  const std::vector<SphereRing> inner = build_rings(n - 1, order);
  const double a = 0.5 * (n - 3);
  const GaussRule t = gauss_jacobi(order / 2 + 1, a, a);
  std::vector<SphereRing> rings;
  rings.reserve(t.nodes.size() * inner.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const double s = std::sqrt(1.0 - t.nodes[i] * t.nodes[i]);
    for (const auto& ring : inner) {
      SphereRing r;
      r.radius = s * ring.radius;
      r.tail.reserve(ring.tail.size() + 1);
      for (double c : ring.tail) r.tail.push_back(s * c);
      r.tail.push_back(t.nodes[i]);
      r.weight = t.weights[i] * ring.weight;
      rings.push_back(std::move(r));
    }
  }
  return rings;
}

}  // namespace

SphereRule::SphereRule(int n, int order) : n_(n), order_(order) {
  require(n >= 2, "sphere_rule: dimension must be at least 2");
  require(order >= 2, "sphere_rule: order must be at least 2");
  circle_points_ = order + 1;
  const double step = 2.0 * std::numbers::pi / circle_points_;
  phase_ = step * std::numbers::inv_pi;
  rings_ = build_rings(n, order);
  for (auto& ring : rings_) ring.weight *= 2.0 * std::numbers::pi;
  nodes_.reserve(rings_.size() * circle_points_ * n);
  weights_.reserve(rings_.size() * circle_points_);
  for (const auto& ring : rings_) {
    for (int j = 0; j < circle_points_; ++j) {
      const double phi = phase_ + step * j;
      nodes_.push_back(ring.radius * std::cos(phi));
      nodes_.push_back(ring.radius * std::sin(phi));
      nodes_.insert(nodes_.end(), ring.tail.begin(), ring.tail.end());
      weights_.push_back(ring.weight / circle_points_);
    }
  }
}

BallRule::BallRule(int n, int order) : order_(order), sphere_(n, order) {
  const GaussRule gl = gauss_legendre((order + n) / 2 + 1);
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double s = 0.5 * (gl.nodes[i] + 1.0);
    radial_.nodes.push_back(s);
    radial_.weights.push_back(0.5 * gl.weights[i] * std::pow(s, n - 1));
  }
  nodes_.reserve(radial_.nodes.size() * sphere_.size() * n);
  weights_.reserve(radial_.nodes.size() * sphere_.size());
  for (std::size_t i = 0; i < radial_.nodes.size(); ++i) {
    for (std::size_t j = 0; j < sphere_.size(); ++j) {
      for (double c : sphere_.node(j)) nodes_.push_back(radial_.nodes[i] * c);
      weights_.push_back(radial_.weights[i] * sphere_.weight(j));
    }
  }
}

const SphereRule& sphere_rule(int n, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<SphereRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{n, order}];
  if (!slot) slot = std::make_unique<SphereRule>(n, order);
  return *slot;
}

const BallRule& ball_rule(int n, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<BallRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{n, order}];
  if (!slot) slot = std::make_unique<BallRule>(n, order);
  return *slot;
}

int default_order(int n) { return n <= 3 ? 24 : 12; }

}  // namespace strata
