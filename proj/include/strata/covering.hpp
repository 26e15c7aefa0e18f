#pragma once

#include "strata/minkowski.hpp"
#include "strata/stratify.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <vector>

namespace strata {

struct CoveringParams {
  double eps = 0.05;
  int k = 1;
  double E = std::numeric_limits<double>::quiet_NaN();  // NaN: measured as max N(2, p, v) over B_1(0)
  double rho = 1.0 / 16;
  double gamma = 0.25;
  double eta_prime = 1e-2;
  double eta0 = 1e-2;
  double eta = 1e-3;
  double R = 0.125;
  int max_depth = 64;          // tree alternations and levels per tree
  double sample_spacing = 0.0; // stratum lattice spacing; 0 means R / 2
  int order = 0;               // frequency quadrature order
  StratifyOptions stratify;    // eps and r are overwritten from the fields above
  void validate() const;
};

// r_0 = 1 and r_i = R rho^(i - N) for i >= 1, where N is the smallest integer with
// R rho^-N >= 1. The ladder passes through R exactly, at level N.
class ScaleLadder {
 public:
  ScaleLadder(double R, double rho);
  double operator()(int i) const;
  int last() const { return last_; }

 private:
  double R_, rho_;
  int last_;
};

// Affine plane through offset spanned by the orthonormal columns of basis; a plane of
// dimension -1 is empty and infinitely far from every point.
struct AffinePlane {
  Vector offset;
  Matrix basis;
  bool empty = true;
  double distance(const Vector& x) const;
};

// Total-least-squares fit of a plane of the given dimension; empty if dim < 0 or no points.
AffinePlane fit_plane(const std::vector<Vector>& points, int dim);

struct BallClassification {
  bool good = true;                     // vacuously good without stratum points
  std::optional<std::size_t> witness;   // stratum point violating the frequency bound
  double min_frequency = std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  AffinePlane plane;                    // bad balls only: fit to the high-frequency points
};

// Greedy first-fit net in lexicographic order of the points: pairwise distances >= spacing
// and every point within distance < spacing of the net. Returns indices into points.
std::vector<std::size_t> maximal_net(const std::vector<Vector>& points, double spacing);

enum class BallClass { good, bad, stop };
const char* to_string(BallClass c);

struct CoverBall {
  Vector x;
  double r = 0.0;
  BallClass cls = BallClass::good;
  int parent = -1;
  int depth = 0;   // alternation round of the tree that produced it
  int tree = -1;
  int level = 0;   // scale index; stop balls of bad trees carry the level they were made at
  double r_x = 0.0;          // stop balls: max(R, r)
  bool energy_drop = false;  // stop balls with r_x > R: measured sup N(2r, p) <= E - eta/2
  AffinePlane plane;
};

struct TreeAudit {
  int root = -1;
  bool good_tree = true;
  double r_A = 0.0;
  double leaf_sum = 0.0;  // sum of r^k over leaves
  double stop_sum = 0.0;
  bool disjoint = true;   // shrunken leaf and stop balls pairwise disjoint
  std::size_t uncovered = 0;  // sampled stratum points of the root ball left uncovered
};

struct CoverReport {
  CoveringParams params;
  double E = 0.0;
  std::vector<CoverBall> balls;
  std::vector<TreeAudit> trees;
  double sum_good = 0.0, sum_bad = 0.0, sum_stop = 0.0;  // sum of r^k per class
  double sum_rx = 0.0;                                   // sum of r_x^k over stop balls
  std::size_t stratum_size = 0;
  std::size_t uncovered = 0;  // stratum sample points outside every B_{r_x}(x)
  int depth = 0;
  bool size_control = true;   // every stop ball has r_x = R or a measured energy drop
  std::vector<std::size_t> stops() const;
};

// Stratum sample used by the covering: lattice points of S^k_{eps, eta R} in B_1(0).
std::vector<Vector> cover_stratum_sample(const ScalarField& v, const CoveringParams& params,
                                         SymmetryCache* cache = nullptr, double spacing = 0.0);

// Max of N(2, p, v) over a lattice of B_1(0) and the given extra points.
double measure_energy(const ScalarField& v, const std::vector<Vector>& extra = {}, int order = 0);

// params.E must be set.
BallClassification classify_ball(const ScalarField& v, const Vector& center, double radius,
                                 const CoveringParams& params, const std::vector<Vector>& stratum);

CoverReport good_tree(const ScalarField& v, const Vector& center, int level, const CoveringParams& params,
                      const std::vector<Vector>& stratum);
CoverReport bad_tree(const ScalarField& v, const Vector& center, int level, const CoveringParams& params,
                     const std::vector<Vector>& stratum);
CoverReport build_cover(const ScalarField& v, const CoveringParams& params, const std::vector<Vector>& stratum);
CoverReport build_cover(const ScalarField& v, const CoveringParams& params);

// Number of points outside every stop ball B_{r_x}(x).
std::size_t uncovered_points(const CoverReport& report, const std::vector<Vector>& points);

nlohmann::json cover_report_json(const CoverReport& report);

double tubular_volume(const std::vector<Vector>& points, double R, const std::optional<Box>& window = std::nullopt,
                      const TubeVolumeOptions& opts = {});

struct ScalingOptions {
  double ball = 0.25;             // stratum restricted to B_ball(0)
  double stratum_scale = 1.0;     // stratum S^k_{eps, stratum_scale * R}
  double spacing_factor = 0.5;    // lattice spacing as a fraction of R
  StratifyOptions stratify;       // eps and r are overwritten
  TubeVolumeOptions volume;
};

struct ScalingRow {
  double R = 0.0;
  double volume = 0.0;
  std::size_t points = 0;
  bool monte_carlo = false;
};

struct ScalingFit {
  std::vector<ScalingRow> rows;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // some volume vanished or fewer than two radii
};

// Vol(B_R(S^k_{eps,r} ∩ B_ball)) for each R and the log-log slope against R.
ScalingFit scaling_fit(const ScalarField& v, int k, double eps, const std::vector<double>& radii,
                       const ScalingOptions& opts = {});

}  // namespace strata
