#pragma once

#include "strata/symmetry.hpp"

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

namespace strata {

struct StratifyOptions {
  double eps = 0.05;
  double r = 0.125;
  double q = 2.0;
  // Scan every scale and every level instead of stopping once a level is certified.
  bool exhaustive = false;
  SymmetryOptions symmetry;
  int threads = 0;
};

struct StratumSample {
  Vector point;
  // Index k refers to (k+1)-symmetry: the smallest distance seen over the scanned scales
  // and the scale where it occurred. Entries for k = n stay infinite.
  std::vector<double> min_distance;
  std::vector<double> best_scale;
  std::vector<char> in_stratum;  // in S^k_{eps,r}; nested: in_stratum[k] implies in_stratum[k+1]
  bool degenerate = false;
};

// Geometric scale set {r q^i} intersected with [r, 1].
std::vector<double> scan_scales(double r, double q);

// Symmetry verdicts keyed by the sampled rescaled field. A hit requires identical nodes and
// values within 1e-12, so fields invariant along some directions reuse verdicts across
// translates. Thread-safe.
class SymmetryCache {
 public:
  explicit SymmetryCache(std::size_t capacity = 1 << 14) : capacity_(capacity) {}
  std::optional<bool> find(const SymmetryTarget& t, int level, double eps) const;
  void store(const SymmetryTarget& t, int level, double eps, bool verdict);
  std::size_t size() const;
  std::size_t hits() const;

 private:
  struct Entry {
    std::uint64_t nodes;
    int level;
    double eps;
    std::vector<double> values;
    bool verdict;
  };
  const Entry* match(std::uint64_t key, std::uint64_t nodes, const SymmetryTarget& t, int level, double eps) const;

  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::size_t hits_ = 0;
  std::size_t stored_ = 0;
  std::unordered_multimap<std::uint64_t, Entry> map_;
};

StratumSample classify_point(const ScalarField& v, const Vector& x, const StratifyOptions& opts);
// Membership in S^k_{eps,r} alone: x is in the stratum unless it is (k+1)-symmetric at some scale.
bool in_stratum(const ScalarField& v, const Vector& x, int k, const StratifyOptions& opts,
                SymmetryCache* cache = nullptr);

struct StratumSamplerOptions {
  double spacing = 0.0625;         // lattice spacing of the returned points
  double coarse_spacing = 0.0;     // first pass; 0 means radius / 4
};

// Lattice points of spacing * Z^n in B_radius(center) lying in S^k_{eps,r}, found coarse to
// fine. A pass at spacing h keeps lattice points in S^k_{eps,max(r,h)}, a superset of the
// target stratum, and the next pass only examines lattice points near the kept ones.
std::vector<Vector> sample_stratum(const ScalarField& v, int k, const Vector& center, double radius,
                                   const StratifyOptions& opts, const StratumSamplerOptions& sampler,
                                   SymmetryCache* cache = nullptr);
std::vector<StratumSample> stratify(const ScalarField& v, const std::vector<Vector>& points,
                                    const StratifyOptions& opts);

// Points of the lattice spacing * Z^n inside the closed ball B_radius(center).
std::vector<Vector> lattice_in_ball(const Vector& center, double radius, double spacing);

// One row per (point, k): point coordinates, k, min distance, scale, in-stratum flag.
void write_stratify_csv(std::ostream& out, const std::vector<StratumSample>& samples);

}  // namespace strata
