#include "strata/stratify.hpp"

#include "strata/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace strata {

std::vector<double> scan_scales(double r, double q) {
  require(r > 0.0 && r <= 1.0, "stratify: r must lie in (0, 1]");
  require(q > 1.0, "stratify: scale ratio must exceed 1");
  std::vector<double> out;
  for (double s = r; s <= 1.0 * (1.0 + 1e-12); s *= q) out.push_back(s);
  return out;
}

StratumSample classify_point(const ScalarField& v, const Vector& x, const StratifyOptions& opts) {
  require(opts.eps > 0.0, "stratify: eps must be positive");
  const int n = v.dim();
  StratumSample out;
  out.point = x;
  out.min_distance.assign(n + 1, std::numeric_limits<double>::infinity());
  out.best_scale.assign(n + 1, std::numeric_limits<double>::quiet_NaN());
  out.in_stratum.assign(n + 1, 0);
  // Highest level certified symmetric at some scale; -1 if none yet.
  int certified = -1;
  std::optional<SymmetryTarget> previous;
  std::vector<double> previous_dist;
  for (double s : scan_scales(opts.r, opts.q)) {
    if (!opts.exhaustive && certified == n) break;
    std::optional<SymmetryTarget> target;
    try {
      target.emplace(v, x, s, opts.symmetry.order);
    } catch (const NumericDegeneracy&) {
      out.degenerate = true;
      continue;
    }
    const int k_lo = opts.exhaustive ? 0 : certified + 1;
    std::vector<double> dist;
    if (previous && previous->value_gap(*target) < 1e-12 && !previous_dist.empty() &&
        !std::isnan(previous_dist[k_lo])) {
      dist = previous_dist;
    } else {
      dist = symmetry_distances(*target, k_lo, opts.symmetry,
                                opts.exhaustive ? std::nullopt : std::optional<double>(opts.eps));
    }
    for (int j = std::max(k_lo, 1); j <= n; ++j) {
      if (dist[j] < out.min_distance[j - 1]) {
        out.min_distance[j - 1] = dist[j];
        out.best_scale[j - 1] = s;
      }
    }
    for (int j = n; j >= k_lo; --j)
      if (dist[j] < opts.eps) {
        certified = std::max(certified, j);
        break;
      }
    previous = std::move(target);
    previous_dist = std::move(dist);
  }
  for (int k = 0; k <= n; ++k) out.in_stratum[k] = k >= certified;
  return out;
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  return h ^ x;
}

std::uint64_t node_hash(const SymmetryTarget& t) {
  std::uint64_t h = mix(static_cast<std::uint64_t>(t.dim()), t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    for (double c : t.node(i)) h = mix(h, std::bit_cast<std::uint64_t>(c));
  return h;
}

std::uint64_t value_key(const SymmetryTarget& t, std::uint64_t nodes, int level, double eps) {
  std::uint64_t h = mix(nodes, static_cast<std::uint64_t>(level));
  h = mix(h, std::bit_cast<std::uint64_t>(eps));
  for (double g : t.values()) h = mix(h, static_cast<std::uint64_t>(std::llround(g * 1e9)));
  return h;
}

}  // namespace

const SymmetryCache::Entry* SymmetryCache::match(std::uint64_t key, std::uint64_t nodes, const SymmetryTarget& t,
                                                 int level, double eps) const {
  auto [lo, hi] = map_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    const Entry& e = it->second;
    if (e.nodes != nodes || e.level != level || e.eps != eps || e.values.size() != t.values().size()) continue;
    double gap = 0.0;
    for (std::size_t i = 0; i < e.values.size() && gap < 1e-12; ++i)
      gap = std::max(gap, std::abs(e.values[i] - t.values()[i]));
    if (gap < 1e-12) return &e;
  }
  return nullptr;
}

std::optional<bool> SymmetryCache::find(const SymmetryTarget& t, int level, double eps) const {
  const std::uint64_t nodes = node_hash(t);
  const std::uint64_t key = value_key(t, nodes, level, eps);
  std::lock_guard lock(mu_);
  if (const Entry* e = match(key, nodes, t, level, eps)) {
    ++hits_;
    return e->verdict;
  }
  return std::nullopt;
}

void SymmetryCache::store(const SymmetryTarget& t, int level, double eps, bool verdict) {
  const std::uint64_t nodes = node_hash(t);
  const std::uint64_t key = value_key(t, nodes, level, eps);
  std::lock_guard lock(mu_);
  if (stored_ >= capacity_ || match(key, nodes, t, level, eps)) return;
  map_.emplace(key, Entry{nodes, level, eps, t.values(), verdict});
  ++stored_;
}

std::size_t SymmetryCache::size() const {
  std::lock_guard lock(mu_);
  return stored_;
}

std::size_t SymmetryCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

bool in_stratum(const ScalarField& v, const Vector& x, int k, const StratifyOptions& opts, SymmetryCache* cache) {
  require(opts.eps > 0.0, "stratify: eps must be positive");
  require(k >= 0 && k <= v.dim(), "stratify: k must lie in [0, n]");
  if (k == v.dim()) return true;
  std::optional<SymmetryTarget> previous;
  bool previous_symmetric = false;
  // Small scales first: points off the stratum usually look symmetric there.
  for (double s : scan_scales(opts.r, opts.q)) {
    std::optional<SymmetryTarget> target;
    try {
      target.emplace(v, x, s, opts.symmetry.order);
    } catch (const NumericDegeneracy&) {
      continue;
    }
    bool symmetric;
    if (previous && previous->value_gap(*target) < 1e-12) {
      symmetric = previous_symmetric;
    } else if (auto hit = cache ? cache->find(*target, k + 1, opts.eps) : std::nullopt) {
      symmetric = *hit;
    } else {
      symmetric = is_symmetric(*target, k + 1, opts.eps, opts.symmetry);
      if (cache) cache->store(*target, k + 1, opts.eps, symmetric);
    }
    if (symmetric) return false;
    previous = std::move(target);
    previous_symmetric = symmetric;
  }
  return true;
}

std::vector<StratumSample> stratify(const ScalarField& v, const std::vector<Vector>& points,
                                    const StratifyOptions& opts) {
  std::vector<StratumSample> out(points.size());
  parallel_for(points.size(), [&](std::size_t i) { out[i] = classify_point(v, points[i], opts); }, opts.threads);
  return out;
}

std::vector<Vector> lattice_in_ball(const Vector& center, double radius, double spacing) {
  require(radius >= 0.0 && spacing > 0.0, "lattice_in_ball: invalid radius or spacing");
  const int n = static_cast<int>(center.size());
  std::vector<long> lo(n), hi(n), idx(n);
  for (int d = 0; d < n; ++d) {
    lo[d] = static_cast<long>(std::ceil((center[d] - radius) / spacing - 1e-9));
    hi[d] = static_cast<long>(std::floor((center[d] + radius) / spacing + 1e-9));
    idx[d] = lo[d];
  }
  std::vector<Vector> out;
  if (n == 0) return out;
  for (;;) {
    Vector p(n);
    for (int d = 0; d < n; ++d) p[d] = idx[d] * spacing;
    if ((p - center).norm() <= radius * (1.0 + 1e-12)) out.push_back(p);
    int d = 0;
    while (d < n && ++idx[d] > hi[d]) idx[d] = lo[d], ++d;
    if (d == n) break;
  }
  return out;
}

std::vector<Vector> sample_stratum(const ScalarField& v, int k, const Vector& center, double radius,
                                   const StratifyOptions& opts, const StratumSamplerOptions& sampler,
                                   SymmetryCache* cache) {
  require(sampler.spacing > 0.0 && radius >= 0.0, "stratum sampler: invalid spacing or radius");
  require(center.size() == v.dim(), "stratum sampler: center dimension mismatch");
  const int n = v.dim();
  const double coarse = std::max(sampler.spacing, sampler.coarse_spacing > 0.0 ? sampler.coarse_spacing : radius / 4);
  const int passes = static_cast<int>(std::ceil(std::log2(coarse / sampler.spacing) - 1e-9));

  std::vector<Vector> candidates, kept;
  for (int j = 0; j <= std::max(passes, 0); ++j) {
    const double h = std::ldexp(sampler.spacing, std::max(passes, 0) - j);
    if (j == 0) {
      candidates = lattice_in_ball(center, radius, h);
    } else {
      // Lattice points of spacing h within a margin of the previous pass.
      const double margin = (std::sqrt(static_cast<double>(n)) + 1.0) * 2.0 * h;
      std::map<std::vector<long>, Vector> fresh;
      for (const Vector& p : kept) {
        std::vector<long> lo(n), hi(n), idx(n);
        for (int d = 0; d < n; ++d) {
          lo[d] = static_cast<long>(std::ceil((p[d] - margin) / h - 1e-9));
          hi[d] = static_cast<long>(std::floor((p[d] + margin) / h + 1e-9));
          idx[d] = lo[d];
        }
        for (;;) {
          Vector q(n);
          for (int d = 0; d < n; ++d) q[d] = idx[d] * h;
          if ((q - p).norm() <= margin && (q - center).norm() <= radius * (1.0 + 1e-12)) fresh.emplace(idx, q);
          int d = 0;
          while (d < n && ++idx[d] > hi[d]) idx[d] = lo[d], ++d;
          if (d == n) break;
        }
      }
      candidates.clear();
      for (auto& [key, q] : fresh) candidates.push_back(std::move(q));
    }
    StratifyOptions pass = opts;
    if (j < passes) pass.r = std::min(1.0, std::max(opts.r, h));
    std::vector<char> keep(candidates.size(), 0);
    parallel_for(
        candidates.size(), [&](std::size_t i) { keep[i] = in_stratum(v, candidates[i], k, pass, cache); },
        opts.threads);
    kept.clear();
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (keep[i]) kept.push_back(candidates[i]);
  }
  return kept;
}

void write_stratify_csv(std::ostream& out, const std::vector<StratumSample>& samples) {
  if (samples.empty()) return;
  const int n = static_cast<int>(samples.front().point.size());
  for (int d = 0; d < n; ++d) out << 'x' << d << ',';
  out << "k,min_distance,scale,in_stratum\n";
  out.precision(17);
  for (const auto& s : samples)
    for (int k = 0; k < n; ++k) {
      for (int d = 0; d < n; ++d) out << s.point[d] << ',';
      out << k << ',' << s.min_distance[k] << ',' << s.best_scale[k] << ',' << int(s.in_stratum[k]) << '\n';
    }
}

}  // namespace strata
