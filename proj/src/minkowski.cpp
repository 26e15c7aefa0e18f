#include "strata/minkowski.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace strata {

namespace {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// Distance from y to the complement of the box; negative outside.
double inside_depth(const Box& b, const Vector& y) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < b.dim(); ++i) d = std::min({d, y[i] - b.lo[i], b.hi[i] - y[i]});
  return d;
}

double box_distance(const Box& b, const Vector& y) {
  double s = 0.0;
  for (int i = 0; i < b.dim(); ++i) {
    const double e = std::max({b.lo[i] - y[i], 0.0, y[i] - b.hi[i]});
    s += e * e;
  }
  return std::sqrt(s);
}

TubeVolume grid_volume(const std::vector<Vector>& points, double r, const Box& region, const std::vector<long>& m,
                       const Vector& h) {
  const int n = region.dim();
  std::vector<std::size_t> stride(n, 1);
  for (int d = n - 2; d >= 0; --d) stride[d] = stride[d + 1] * static_cast<std::size_t>(m[d + 1]);
  std::vector<bool> bits(stride[0] * static_cast<std::size_t>(m[0]), false);
  auto center = [&](int d, long i) { return region.lo[d] + (i + 0.5) * h[d]; };
  auto range = [&](int d, double c, double rad, long& lo, long& hi) {
    lo = std::max(0L, static_cast<long>(std::ceil((c - rad - region.lo[d]) / h[d] - 0.5)));
    hi = std::min(m[d] - 1, static_cast<long>(std::floor((c + rad - region.lo[d]) / h[d] - 0.5)));
  };

  const int last = n - 1;
  std::vector<long> lo(n), hi(n), idx(n);
  for (const Vector& p : points) {
    bool empty = false;
    for (int d = 0; d < last; ++d) {
      range(d, p[d], r, lo[d], hi[d]);
      empty = empty || lo[d] > hi[d];
      idx[d] = lo[d];
    }
    if (empty) continue;
    // Odometer over all coordinates but the last; the last one gets an interval.
    for (;;) {
      double used = 0.0;
      std::size_t base = 0;
      for (int d = 0; d < last; ++d) {
        const double e = center(d, idx[d]) - p[d];
        used += e * e;
        base += static_cast<std::size_t>(idx[d]) * stride[d];
      }
      if (used <= r * r) {
        long a, b;
        range(last, p[last], std::sqrt(r * r - used), a, b);
        for (long i = a; i <= b; ++i) bits[base + static_cast<std::size_t>(i)] = true;
      }
      int d = last - 1;
      while (d >= 0 && ++idx[d] > hi[d]) idx[d] = lo[d], --d;
      if (d < 0) break;
    }
  }
  TubeVolume out;
  out.cells = static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
  double cell = 1.0;
  for (int d = 0; d < n; ++d) cell *= h[d];
  out.volume = static_cast<double>(out.cells) * cell;
  out.pitch = h.maxCoeff();
  return out;
}

TubeVolume query_grid_volume(const KdTree& tree, double r, const Box& region, const std::vector<long>& m,
                             const Vector& h) {
  const int n = region.dim();
  std::vector<long> idx(n, 0);
  TubeVolume out;
  Vector c(n);
  for (;;) {
    for (int d = 0; d < n; ++d) c[d] = region.lo[d] + (idx[d] + 0.5) * h[d];
    if (tree.nearest(c).second <= r) ++out.cells;
    int d = 0;
    while (d < n && ++idx[d] >= m[d]) idx[d] = 0, ++d;
    if (d == n) break;
  }
  double cell = 1.0;
  for (int d = 0; d < n; ++d) cell *= h[d];
  out.volume = static_cast<double>(out.cells) * cell;
  out.pitch = h.maxCoeff();
  return out;
}

TubeVolume hit_or_miss_volume(const KdTree& tree, double r, const Box& region, const TubeVolumeOptions& opts) {
  const int n = region.dim();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t hits = 0;
  Vector x(n);
  for (std::size_t s = 0; s < opts.mc_samples; ++s) {
    for (int d = 0; d < n; ++d) x[d] = region.lo[d] + unif(rng) * (region.hi[d] - region.lo[d]);
    if (tree.nearest(x).second <= r) ++hits;
  }
  TubeVolume out;
  out.monte_carlo = true;
  out.cells = opts.mc_samples;
  const double vol = (region.hi - region.lo).prod();
  const double f = static_cast<double>(hits) / static_cast<double>(opts.mc_samples);
  out.volume = vol * f;
  out.std_error = vol * std::sqrt(f * (1.0 - f) / static_cast<double>(opts.mc_samples));
  return out;
}

TubeVolume monte_carlo_volume(const std::vector<Vector>& points, double r, const std::optional<Box>& window,
                              const TubeVolumeOptions& opts) {
  const int n = static_cast<int>(points.front().size());
  std::vector<Vector> centers;
  for (const Vector& p : points)
    if (!window || box_distance(*window, p) <= r) centers.push_back(p);
  TubeVolume out;
  out.monte_carlo = true;
  out.cells = opts.mc_samples;
  if (centers.empty() || opts.mc_samples == 0) return out;
  const KdTree tree(centers);
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double sum = 0.0, sum2 = 0.0;
  Vector g(n);
  for (std::size_t s = 0; s < opts.mc_samples; ++s) {
    const Vector& c = centers[pick(rng)];
    for (int d = 0; d < n; ++d) g[d] = normal(rng);
    const Vector x = c + g * (r * std::pow(unif(rng), 1.0 / n) / g.norm());
    if (window && !window->contains({x.data(), static_cast<std::size_t>(n)})) continue;
    const double w = 1.0 / static_cast<double>(std::max<std::size_t>(1, tree.within(x, r).size()));
    sum += w;
    sum2 += w * w;
  }
  const double M = static_cast<double>(opts.mc_samples);
  const double scale = static_cast<double>(centers.size()) * unit_ball_volume(n) * std::pow(r, n);
  const double mean = sum / M;
  out.volume = scale * mean;
  out.std_error = scale * std::sqrt(std::max(0.0, sum2 / M - mean * mean) / M);
  return out;
}

}  // namespace

TubeVolume tube_volume(const std::vector<Vector>& points, double r, const std::optional<Box>& window,
                       const TubeVolumeOptions& opts) {
  require(r > 0.0 && opts.pitch_ratio > 0.0, "tube volume: radius and pitch must be positive");
  if (points.empty()) return {};
  const int n = static_cast<int>(points.front().size());
  for (const Vector& p : points) require(p.size() == n, "tube volume: points must share a dimension");
  require(!window || window->dim() == n, "tube volume: window dimension mismatch");

  Box region{points.front(), points.front()};
  for (const Vector& p : points) region.lo = region.lo.cwiseMin(p), region.hi = region.hi.cwiseMax(p);
  region.lo.array() -= r;
  region.hi.array() += r;
  if (window) {
    region.lo = region.lo.cwiseMax(window->lo);
    region.hi = region.hi.cwiseMin(window->hi);
    for (int d = 0; d < n; ++d)
      if (region.hi[d] <= region.lo[d]) return {};
  }
  // Cells sit on a fixed lattice anchored at the window corner, or at the origin without a
  // window, so a fixed pitch gives nested cell sets for growing r.
  const double pitch = opts.pitch > 0.0 ? opts.pitch : r * opts.pitch_ratio;
  std::vector<long> m(n);
  Vector h(n);
  Box cellbox{Vector(n), Vector(n)};
  double cells = 1.0;
  for (int d = 0; d < n; ++d) {
    double origin = 0.0;
    long total = std::numeric_limits<long>::max();
    h[d] = pitch;
    if (window) {
      origin = window->lo[d];
      const double len = window->hi[d] - window->lo[d];
      total = std::max(1L, static_cast<long>(std::ceil(len / pitch - 1e-9)));
      h[d] = len / static_cast<double>(total);
    }
    long lo = static_cast<long>(std::floor((region.lo[d] - origin) / h[d]));
    long hi = static_cast<long>(std::ceil((region.hi[d] - origin) / h[d]));
    if (window) lo = std::max(lo, 0L), hi = std::min(hi, total);
    m[d] = std::max(1L, hi - lo);
    cellbox.lo[d] = origin + static_cast<double>(lo) * h[d];
    cellbox.hi[d] = cellbox.lo[d] + static_cast<double>(m[d]) * h[d];
    cells *= static_cast<double>(m[d]);
  }
  double row = 1.0;
  for (int d = 0; d + 1 < n; ++d) row *= 2.0 * r / h[d] + 1.0;
  const double marking = static_cast<double>(points.size()) * row * (1.0 + 2.0 * r / h[n - 1] / 8.0);
  const double querying = cells * 4.0 * std::log2(static_cast<double>(points.size()) + 2.0);
  const bool grid_ok = cells <= static_cast<double>(opts.max_cells) && std::min(marking, querying) <= opts.max_work;
  if (!opts.force_monte_carlo && grid_ok) {
    if (marking <= querying) return grid_volume(points, r, cellbox, m, h);
    return query_grid_volume(KdTree(points), r, cellbox, m, h);
  }
  if (opts.mc_samples == 0) {
    TubeVolume out;
    out.monte_carlo = true;
    return out;
  }
  const double ball = unit_ball_volume(n) * std::pow(r, n);
  if (static_cast<double>(points.size()) * ball >= (region.hi - region.lo).prod())
    return hit_or_miss_volume(KdTree(points), r, region, opts);
  return monte_carlo_volume(points, r, window, opts);
}

double porosity(const KdTree& E, const Vector& x, double r, const std::optional<Box>& window, int grid) {
  require(r > 0.0 && grid >= 2, "porosity: radius must be positive");
  const int n = static_cast<int>(x.size());
  auto score = [&](const Vector& y) {
    double h = r - (y - x).norm();
    if (E.size() > 0) h = std::min(h, E.nearest(y).second);
    if (window) h = std::min(h, inside_depth(*window, y));
    return h;
  };

  std::vector<std::pair<double, Vector>> seeds;
  std::vector<int> idx(n, 0);
  for (;;) {
    Vector y(n);
    for (int d = 0; d < n; ++d) y[d] = x[d] + r * (-1.0 + (2.0 * idx[d] + 1.0) / grid);
    if ((y - x).norm() < r) seeds.emplace_back(score(y), y);
    int d = 0;
    while (d < n && ++idx[d] >= grid) idx[d] = 0, ++d;
    if (d == n) break;
  }
  seeds.emplace_back(score(x), x);
  std::stable_sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  double best = 0.0;
  const std::size_t starts = std::min<std::size_t>(4, seeds.size());
  for (std::size_t s = 0; s < starts; ++s) {
    Vector y = seeds[s].second;
    double f = seeds[s].first;
    for (double step = r / grid; step > r * 1e-4; step *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int d = 0; d < n; ++d)
          for (double sign : {1.0, -1.0}) {
            Vector z = y;
            z[d] += sign * step;
            const double g = score(z);
            if (g > f) y = z, f = g, moved = true;
          }
      }
    }
    best = std::max(best, f);
  }
  return best / r;
}

PorosityScan porosity_scan(const std::vector<Vector>& E, double r_min, double r_max, const std::optional<Box>& window,
                           std::size_t max_centers) {
  require(r_min > 0.0 && r_max >= r_min && max_centers > 0, "porosity scan: invalid radius range");
  PorosityScan out;
  if (E.empty()) return out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  const KdTree tree(E);
  const std::size_t stride = (E.size() + max_centers - 1) / max_centers;
  for (std::size_t i = 0; i < E.size(); i += stride)
    for (double r = r_max; r >= r_min * (1.0 - 1e-12); r *= 0.5) {
      out.min_ratio = std::min(out.min_ratio, porosity(tree, E[i], r, window));
      ++out.evaluated;
    }
  return out;
}

PorousBound porous_volume_bound_check(const std::vector<Vector>& E, int n, double alpha, double r0) {
  require(alpha > 0.0 && alpha < 1.0 && r0 > 0.0 && r0 < 1.0 && n >= 1, "porous bound: invalid parameters");
  PorousBound out;
  out.k = static_cast<int>(std::ceil(-std::log2(alpha) - 1e-12));
  out.k_prime = static_cast<int>(std::ceil(2.0 + 0.5 * std::log2(static_cast<double>(n)) - 1e-12));
  out.N = static_cast<int>(std::floor(-std::log2(r0) / (out.k + out.k_prime) + 1e-12));
  out.bound = std::pow(1.0 - std::ldexp(1.0, -(out.k + out.k_prime)), out.N);
  if (E.empty()) {
    out.porous = true;
    out.measured_alpha = std::numeric_limits<double>::infinity();
    return out;
  }
  out.measured = tube_volume(E, r0).volume;
  out.measured_alpha = porosity_scan(E, r0, 1.0).min_ratio;
  out.porous = out.measured_alpha > alpha;
  return out;
}

std::vector<MinkowskiRow> minkowski_estimate(const std::vector<Vector>& E, int n, double s,
                                             const std::vector<double>& radii, const std::optional<Box>& window,
                                             const TubeVolumeOptions& opts) {
  std::vector<MinkowskiRow> out;
  for (double r : radii) {
    MinkowskiRow row;
    row.r = r;
    row.volume = tube_volume(E, r, window, opts).volume;
    row.content = row.volume / std::pow(2.0 * r, n - s);
    out.push_back(row);
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "log-log fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "log-log fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]) - mx;
    sxy += a * (std::log(y[i]) - my);
    sxx += a * a;
  }
  if (sxx == 0.0) throw NumericDegeneracy("log-log fit: all abscissae coincide");
  return sxy / sxx;
}

DimensionFit dimension_fit(const std::vector<Vector>& E, int n, const std::vector<double>& radii_in,
                           const std::optional<Box>& window, const TubeVolumeOptions& opts, double curvature_limit) {
  require(radii_in.size() >= 4, "dimension fit needs at least four radii");
  if (E.empty()) throw NumericDegeneracy("dimension fit: empty set");
  std::vector<double> radii = radii_in;
  std::sort(radii.begin(), radii.end());
  DimensionFit out;
  out.rows = minkowski_estimate(E, n, 0.0, radii, window, opts);
  std::vector<double> r, v;
  for (const MinkowskiRow& row : out.rows) r.push_back(row.r), v.push_back(row.volume);
  for (std::size_t i = 1; i < v.size(); ++i) out.monotone = out.monotone && v[i] >= v[i - 1];
  std::vector<double> local;
  for (std::size_t i = 1; i < v.size(); ++i)
    local.push_back(std::log(v[i] / v[i - 1]) / std::log(r[i] / r[i - 1]));
  for (std::size_t i = 1; i < local.size(); ++i)
    out.curvature = std::max(out.curvature, std::abs(local[i] - local[i - 1]));
  if (out.curvature > curvature_limit) {
    r.resize(r.size() - 2);
    v.resize(v.size() - 2);
    out.dropped_largest = true;
  }
  out.slope = loglog_slope(r, v);
  out.dimension = n - out.slope;
  return out;
}

DyadicCubeSet::DyadicCubeSet(const std::vector<Vector>& points, const Vector& origin, double side, int level)
    : origin_(origin), side_(side), level_(level) {
  require(side > 0.0 && level >= 0 && level < 62, "dyadic cubes: invalid side or level");
  const long cells = 1L << level;
  const double h = side / static_cast<double>(cells);
  for (const Vector& p : points) {
    require(p.size() == origin.size(), "dyadic cubes: dimension mismatch");
    std::vector<long> idx(p.size());
    bool inside = true;
    for (Eigen::Index d = 0; d < p.size(); ++d) {
      const double t = (p[d] - origin[d]) / h;
      inside = inside && t >= 0.0 && t <= static_cast<double>(cells);
      idx[d] = std::min(cells - 1, static_cast<long>(std::floor(t)));
    }
    if (inside) cells_.insert(idx);
  }
}

DyadicCubeSet DyadicCubeSet::parent() const {
  require(level_ > 0, "dyadic cubes: level 0 has no parent");
  DyadicCubeSet out;
  out.origin_ = origin_;
  out.side_ = side_;
  out.level_ = level_ - 1;
  for (std::vector<long> idx : cells_) {
    for (long& i : idx) i /= 2;
    out.cells_.insert(idx);
  }
  return out;
}

}  // namespace strata
