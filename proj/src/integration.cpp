#include "strata/integration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>

namespace strata {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Matrix adapted_frame(const ScalarField& v) {
  const int n = v.dim();
  const auto plane = v.split_plane();
  if (!plane) return Matrix::Identity(n, n);
  Matrix aug(n, n + 2);
  aug << *plane, Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(aug);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q;
}

// Maps the angle on one ring to ambient coordinates: x = base + cos(phi) u + sin(phi) w.
struct RingMapper {
  int n;
  const SphereRing& ring;
  std::array<double, 16> base{}, u{}, w{};

  RingMapper(int dim, const Vector& center, double radius, const Matrix& Q, const SphereRing& r) : n(dim), ring(r) {
    for (int i = 0; i < n; ++i) {
      double b = 0.0;
      for (int k = 2; k < n; ++k) b += Q(i, k) * ring.tail[k - 2];
      base[i] = center[i] + radius * b;
      u[i] = radius * ring.radius * Q(i, 0);
      w[i] = radius * ring.radius * Q(i, 1);
    }
  }

  void map(double phi, double* out) const {
    const double c = std::cos(phi), s = std::sin(phi);
    for (int i = 0; i < n; ++i) out[i] = base[i] + c * u[i] + s * w[i];
  }
};

double kink_value(const ScalarField& v, std::size_t i, const RingMapper& m, double phi) {
  double x[16];
  m.map(phi, x);
  return v.kink(i, {x, static_cast<std::size_t>(m.n)});
}

double bisect_root(const std::function<double(double)>& f, double a, double b, double fa) {
  for (int it = 0; it < 60 && b - a > 1e-15; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

// Zeros of a 2pi-periodic f. Sampled local extrema that come close to zero are refined by
// golden-section search, so pairs of roots closer than the sample step are still found.
void periodic_roots(const std::function<double(double)>& f, int samples, std::vector<double>& roots) {
  const double step = kTwoPi / samples;
  std::vector<std::pair<double, double>> pts;
  pts.reserve(samples + 8);
  std::vector<double> vals(samples);
  for (int s = 0; s < samples; ++s) vals[s] = f(step * s);
  for (int s = 0; s < samples; ++s) {
    pts.emplace_back(step * s, vals[s]);
    const double prev = vals[(s + samples - 1) % samples], next = vals[(s + 1) % samples], cur = vals[s];
    if (cur == 0.0 || (cur - prev) * (next - cur) > 0.0) continue;
    const bool toward_zero = cur > 0.0 ? (prev >= cur && next >= cur) : (prev <= cur && next <= cur);
    if (!toward_zero || std::abs(cur) > 2.0 * std::max(std::abs(cur - prev), std::abs(next - cur))) continue;
    const double sgn = cur > 0.0 ? 1.0 : -1.0;
    constexpr double g = 0.6180339887498949;
    double a = step * (s - 1), b = step * (s + 1);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = sgn * f(x1), f2 = sgn * f(x2);
    for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
      if (f1 < f2) {
        b = x2, x2 = x1, f2 = f1;
        x1 = b - g * (b - a);
        f1 = sgn * f(x1);
      } else {
        a = x1, x1 = x2, f1 = f2;
        x2 = a + g * (b - a);
        f2 = sgn * f(x2);
      }
      if (f1 <= 0.0 || f2 <= 0.0) break;
    }
    const double xm = f1 < f2 ? x1 : x2;
    const double fm = sgn * std::min(f1, f2);
    if ((fm > 0.0) != (cur > 0.0) || fm == 0.0) {
      double x = xm;
      if (x < 0.0) x += kTwoPi;
      if (x >= kTwoPi) x -= kTwoPi;
      pts.emplace_back(x, fm);
    }
  }
  std::sort(pts.begin(), pts.end());
  const std::size_t P = pts.size();
  for (std::size_t i = 0; i < P; ++i) {
    const auto [a, fa] = pts[i];
    auto [b, fb] = pts[(i + 1) % P];
    if (i + 1 == P) b += kTwoPi;
    if (fa == 0.0) {
      roots.push_back(a);
      continue;
    }
    if (fb == 0.0 || (fa < 0.0) == (fb < 0.0)) continue;
    double r = bisect_root(f, a, b, fa);
    if (r >= kTwoPi) r -= kTwoPi;
    roots.push_back(r);
  }
}

std::vector<double> ring_crossings(const ScalarField& v, const RingMapper& m, int samples) {
  std::vector<double> roots;
  for (std::size_t k = 0; k < v.kink_count(); ++k)
    periodic_roots([&](double phi) { return kink_value(v, k, m, phi); }, samples, roots);
  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double r : roots)
    if (unique.empty() || r - unique.back() > 1e-12) unique.push_back(r);
  if (unique.size() > 1 && unique.front() + kTwoPi - unique.back() <= 1e-12) unique.pop_back();
  return unique;
}

// Appends the nodes of one ring, scaled by extra_weight.
void append_ring(const ScalarField& v, const RingMapper& m, const SphereRule& rule, const GaussRule& arc_rule,
                 double extra_weight, NodeSet& out) {
  const int n = m.n;
  std::vector<double> roots;
  if (v.kink_count() > 0) roots = ring_crossings(v, m, std::max(64, 2 * rule.circle_points()));
  const double density = m.ring.weight / kTwoPi * extra_weight;
  const std::size_t base = out.points.size();
  if (roots.empty()) {
    const int M = rule.circle_points();
    const double step = kTwoPi / M;
    out.points.resize(base + static_cast<std::size_t>(M) * n);
    for (int j = 0; j < M; ++j) {
      m.map(rule.phase() + step * j, out.points.data() + base + static_cast<std::size_t>(j) * n);
      out.weights.push_back(density * step);
    }
    return;
  }
  const std::size_t arcs = roots.size();
  const std::size_t per = arc_rule.nodes.size();
  out.points.resize(base + arcs * per * n);
  std::size_t slot = 0;
  for (std::size_t a = 0; a < arcs; ++a) {
    const double lo = roots[a];
    const double hi = (a + 1 < arcs) ? roots[a + 1] : roots[0] + kTwoPi;
    const double half = 0.5 * (hi - lo);
    for (std::size_t j = 0; j < per; ++j, ++slot) {
      const double phi = lo + half * (arc_rule.nodes[j] + 1.0);
      m.map(phi, out.points.data() + base + slot * n);
      out.weights.push_back(density * half * arc_rule.weights[j]);
    }
  }
}

// Rings parametrized by polar angles, with Gauss-Legendre in each angle. Unlike the
// latitude rule, ring radii are analytic in the angles, which keeps arc-split integrals
// spectrally accurate.
std::vector<SphereRing> build_angular_rings(int n, int count) {
  if (n == 2) return {SphereRing{1.0, {}, kTwoPi}};
  const std::vector<SphereRing> inner = build_angular_rings(n - 1, count);
  const GaussRule gl = gauss_legendre(count);
  std::vector<SphereRing> rings;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double theta = 0.5 * std::numbers::pi * (gl.nodes[i] + 1.0);
    const double s = std::sin(theta), t = std::cos(theta);
    const double w = 0.5 * std::numbers::pi * gl.weights[i] * std::pow(s, n - 2);
    for (const auto& ring : inner) {
      SphereRing r;
      r.radius = s * ring.radius;
      for (double c : ring.tail) r.tail.push_back(s * c);
      r.tail.push_back(t);
      r.weight = w * ring.weight;
      rings.push_back(std::move(r));
    }
  }
  return rings;
}

const std::vector<SphereRing>& angular_rings(int n, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<SphereRing>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({n, order});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n, order), build_angular_rings(n, order + 2)).first;
  return it->second;
}

std::size_t crossing_count(const ScalarField& v, const Vector& center, double radius, const Matrix& Q, double theta,
                           int samples) {
  const SphereRing ring{std::sin(theta), {std::cos(theta)}, 0.0};
  const RingMapper m(3, center, radius, Q, ring);
  return ring_crossings(v, m, samples).size();
}

// In three dimensions each ring is a latitude circle; the arc-integrated integrand is only
// piecewise smooth in the latitude, with breaks where rings touch the kink set tangentially.
// Those latitudes are located and each latitude band gets its own Gauss-Legendre rule.
std::vector<SphereRing> split_rings3(const ScalarField& v, const Vector& center, double radius, const Matrix& Q,
                                     int order, int samples) {
  const int count = order + 2;
  const int probes = 2 * count;
  samples = std::max(32, samples / 2);
  std::vector<double> theta(probes);
  std::vector<std::size_t> counts(probes);
  for (int j = 0; j < probes; ++j) {
    theta[j] = std::numbers::pi * (j + 0.5) / probes;
    counts[j] = crossing_count(v, center, radius, Q, theta[j], samples);
  }
  std::vector<double> breaks{0.0};
  for (int j = 0; j + 1 < probes; ++j) {
    if (counts[j] == counts[j + 1]) continue;
    double a = theta[j], b = theta[j + 1];
    for (int it = 0; it < 22; ++it) {
      const double mid = 0.5 * (a + b);
      if (crossing_count(v, center, radius, Q, mid, samples) == counts[j])
        a = mid;
      else
        b = mid;
    }
    breaks.push_back(0.5 * (a + b));
  }
  breaks.push_back(std::numbers::pi);
  const GaussRule gl = gauss_legendre(count);
  std::vector<SphereRing> rings;
  // Arc integrals behave like sqrt(theta - theta*) at a break; quadratic clustering of the
  // latitude nodes at break ends restores smoothness.
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double lo = breaks[s], L = breaks[s + 1] - breaks[s];
    const bool at_lo = s > 0, at_hi = s + 2 < breaks.size();
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = gl.nodes[i];
      double th, jac;
      if (at_lo && at_hi) {
        th = lo + L * (2.0 + 3.0 * t - t * t * t) / 4.0;
        jac = L * 3.0 * (1.0 - t * t) / 4.0;
      } else if (at_lo) {
        const double u = 0.5 * (1.0 + t);
        th = lo + L * u * u;
        jac = L * u;
      } else if (at_hi) {
        const double u = 0.5 * (1.0 - t);
        th = lo + L - L * u * u;
        jac = L * u;
      } else {
        th = lo + 0.5 * L * (1.0 + t);
        jac = 0.5 * L;
      }
      rings.push_back(SphereRing{std::sin(th), {std::cos(th)}, jac * gl.weights[i] * std::sin(th) * kTwoPi});
    }
  }
  return rings;
}

void append_sphere(const ScalarField& v, const Matrix& Q, const Vector& center, double radius, int order,
                   double extra_weight, NodeSet& out) {
  const SphereRule& rule = sphere_rule(v.dim(), order);
  static thread_local std::map<int, GaussRule> arc_rules;
  auto it = arc_rules.find(order);
  if (it == arc_rules.end()) it = arc_rules.emplace(order, gauss_legendre(order + 1)).first;
  const int samples = std::max(64, 2 * rule.circle_points());
  if (v.dim() == 3) {
    for (const auto& ring : split_rings3(v, center, radius, Q, order, samples)) {
      RingMapper m(3, center, radius, Q, ring);
      append_ring(v, m, rule, it->second, extra_weight, out);
    }
    return;
  }
  for (const auto& ring : angular_rings(v.dim(), order)) {
    RingMapper m(v.dim(), center, radius, Q, ring);
    append_ring(v, m, rule, it->second, extra_weight, out);
  }
}

}  // namespace

double NodeSet::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

NodeSet sphere_nodes(int n, const Vector& center, double radius, int order) {
  if (order <= 0) order = default_order(n);
  const SphereRule& rule = sphere_rule(n, order);
  NodeSet out;
  out.dim = n;
  out.points.resize(rule.size() * n);
  out.weights.resize(rule.size());
  const double scale = std::pow(radius, n - 1);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    for (int d = 0; d < n; ++d) out.points[i * n + d] = center[d] + radius * rule.node(i)[d];
    out.weights[i] = rule.weight(i) * scale;
  }
  return out;
}

NodeSet ball_nodes(int n, const Vector& center, double radius, int order) {
  if (order <= 0) order = default_order(n);
  const BallRule& rule = ball_rule(n, order);
  NodeSet out;
  out.dim = n;
  out.points.resize(rule.size() * n);
  out.weights.resize(rule.size());
  const double scale = std::pow(radius, n);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    for (int d = 0; d < n; ++d) out.points[i * n + d] = center[d] + radius * rule.node(i)[d];
    out.weights[i] = rule.weight(i) * scale;
  }
  return out;
}

NodeSet sphere_nodes(const ScalarField& v, const Vector& center, double radius, int order) {
  const int n = v.dim();
  if (order <= 0) order = default_order(n);
  if (v.kink_count() == 0) return sphere_nodes(n, center, radius, order);
  const Matrix Q = adapted_frame(v);
  NodeSet out;
  out.dim = n;
  append_sphere(v, Q, center, radius, order, std::pow(radius, n - 1), out);
  return out;
}

NodeSet ball_nodes(const ScalarField& v, const Vector& center, double radius, int order) {
  const int n = v.dim();
  if (order <= 0) order = default_order(n);
  if (v.kink_count() == 0) return ball_nodes(n, center, radius, order);
  const Matrix Q = adapted_frame(v);
  const BallRule& rule = ball_rule(n, order);
  NodeSet out;
  out.dim = n;
  for (std::size_t i = 0; i < rule.radial().nodes.size(); ++i) {
    const double s = rule.radial().nodes[i];
    // radial weight already carries s^{n-1}; the sphere at radius r*s is parametrized on the unit sphere
    append_sphere(v, Q, center, radius * s, order, rule.radial().weights[i] * std::pow(radius, n), out);
  }
  return out;
}

}  // namespace strata
