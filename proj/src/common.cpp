#include "strata/common.hpp"

#include <cmath>
#include <numbers>

namespace strata {

double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double ball_volume(int n) { return sphere_area(n) / n; }

bool lex_less(const Vector& a, const Vector& b) {
  const Eigen::Index m = std::min(a.size(), b.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

}  // namespace strata
