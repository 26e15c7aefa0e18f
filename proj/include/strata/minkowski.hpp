#pragma once

#include "strata/common.hpp"
#include "strata/spatial_index.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace strata {

struct TubeVolumeOptions {
  double pitch_ratio = 0.125;          // grid pitch as a fraction of the tube radius
  double pitch = 0.0;                  // absolute grid pitch; overrides the ratio when positive
  std::size_t max_cells = 1ull << 28;  // larger grids switch to Monte Carlo
  double max_work = 3e7;               // grid work estimate beyond which Monte Carlo is used
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 0;
  bool force_monte_carlo = false;
};

struct TubeVolume {
  double volume = 0.0;
  bool monte_carlo = false;
  double pitch = 0.0;        // grid pitch; 0 for Monte Carlo
  double std_error = 0.0;    // Monte Carlo standard error; 0 on the grid
  std::size_t cells = 0;     // occupied grid cells or Monte Carlo samples
};

// Vol(B_r(E) ∩ window). On the grid a cell counts when its center lies within r of E. Monte
// Carlo either hits or misses uniform points of the bounding region, when the balls overlap
// heavily, or draws points from uniformly chosen balls weighted by one over the number of
// balls containing them. Without a window the whole tube is measured.
TubeVolume tube_volume(const std::vector<Vector>& points, double r, const std::optional<Box>& window = std::nullopt,
                       const TubeVolumeOptions& opts = {});

// P(E, x, r) / r: radius of the largest ball inside B_r(x) (and inside the window, if given)
// that avoids every point of E, found by a grid search followed by pattern descent.
double porosity(const KdTree& E, const Vector& x, double r, const std::optional<Box>& window = std::nullopt,
                int grid = 12);

struct PorosityScan {
  double min_ratio = 0.0;  // smallest P/r seen
  std::size_t evaluated = 0;
};

// Porosity over a deterministic subsample of E and dyadic radii from r_min up to r_max.
PorosityScan porosity_scan(const std::vector<Vector>& E, double r_min, double r_max,
                           const std::optional<Box>& window = std::nullopt, std::size_t max_centers = 48);

struct PorousBound {
  int k = 0;             // smallest integer with 2^-k <= alpha
  int k_prime = 0;       // smallest integer >= 2 + log2(n)/2
  int N = 0;             // floor(-log2(r0) / (k + k'))
  double bound = 1.0;    // (1 - 2^-(k+k'))^N
  double measured = 0.0; // Vol(B_r0(E))
  double measured_alpha = 0.0;
  bool porous = false;   // measured_alpha > alpha
  bool holds() const { return porous && measured <= bound; }
};

// E is taken inside the unit cube [0,1]^n; porosity is scanned for r in [r0, 1].
PorousBound porous_volume_bound_check(const std::vector<Vector>& E, int n, double alpha, double r0);

struct MinkowskiRow {
  double r = 0.0;
  double volume = 0.0;
  double content = 0.0;  // volume / (2r)^(n-s)
};

std::vector<MinkowskiRow> minkowski_estimate(const std::vector<Vector>& E, int n, double s,
                                             const std::vector<double>& radii,
                                             const std::optional<Box>& window = std::nullopt,
                                             const TubeVolumeOptions& opts = {});

struct DimensionFit {
  double dimension = 0.0;   // n - slope
  double slope = 0.0;       // of log volume against log r
  double curvature = 0.0;   // largest change of consecutive log-log slopes
  bool dropped_largest = false;
  bool monotone = true;     // volumes non-decreasing in r
  std::vector<MinkowskiRow> rows;
};

// Radii must form a geometric list of at least four values.
DimensionFit dimension_fit(const std::vector<Vector>& E, int n, const std::vector<double>& radii,
                           const std::optional<Box>& window = std::nullopt, const TubeVolumeOptions& opts = {},
                           double curvature_limit = 0.15);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Occupied dyadic cubes of side 2^-level inside the cube [origin, origin + side].
class DyadicCubeSet {
 public:
  DyadicCubeSet(const std::vector<Vector>& points, const Vector& origin, double side, int level);
  int level() const { return level_; }
  std::size_t count() const { return cells_.size(); }
  bool occupied(const std::vector<long>& index) const { return cells_.count(index) > 0; }
  DyadicCubeSet parent() const;
  const std::set<std::vector<long>>& cells() const { return cells_; }

 private:
  DyadicCubeSet() = default;
  Vector origin_;
  double side_ = 1.0;
  int level_ = 0;
  std::set<std::vector<long>> cells_;
};

}  // namespace strata
