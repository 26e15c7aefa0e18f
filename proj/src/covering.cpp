#include "strata/covering.hpp"

#include "strata/beta.hpp"
#include "strata/frequency.hpp"
#include "strata/spatial_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <unordered_map>

namespace strata {

void CoveringParams::validate() const {
  require(eps > 0.0, "covering: eps must be positive");
  require(k >= 0, "covering: k must be non-negative");
  require(rho > 0.0 && rho < 0.1, "covering: rho must lie in (0, 1/10)");
  require(gamma > 0.0 && gamma <= 1.0, "covering: gamma must lie in (0, 1]");
  require(eta_prime > 0.0 && eta0 > 0.0, "covering: eta' and eta0 must be positive");
  require(eta > 0.0 && eta <= eta0 && eta0 < rho, "covering: need 0 < eta <= eta0 < rho");
  require(R > 0.0 && R <= 1.0, "covering: R must lie in (0, 1]");
  require(max_depth > 0, "covering: depth cap must be positive");
  require(sample_spacing >= 0.0, "covering: sample spacing must be non-negative");
  require(std::isnan(E) || std::isfinite(E), "covering: E must be finite");
}

ScaleLadder::ScaleLadder(double R, double rho) : R_(R), rho_(rho) {
  require(R > 0.0 && R <= 1.0 && rho > 0.0 && rho < 1.0, "scale ladder: invalid R or rho");
  last_ = std::max(0, static_cast<int>(std::ceil(std::log(R) / std::log(rho) - 1e-9)));
}

double ScaleLadder::operator()(int i) const {
  if (i <= 0) return 1.0;
  return R_ * std::pow(rho_, i - last_);
}

double AffinePlane::distance(const Vector& x) const {
  if (empty) return std::numeric_limits<double>::infinity();
  const Vector d = x - offset;
  if (basis.cols() == 0) return d.norm();
  return (d - basis * (basis.transpose() * d)).norm();
}

AffinePlane fit_plane(const std::vector<Vector>& points, int dim) {
  AffinePlane out;
  if (dim < 0 || points.empty()) return out;
  const Eigen::Index n = points.front().size();
  out.empty = false;
  out.offset = Vector::Zero(n);
  for (const Vector& p : points) out.offset += p;
  out.offset /= static_cast<double>(points.size());
  Matrix S = Matrix::Zero(n, n);
  for (const Vector& p : points) S += (p - out.offset) * (p - out.offset).transpose();
  const SymmetricEigen es = jacobi_eigen(S);
  const int d = std::min<int>(dim, static_cast<int>(n));
  out.basis = Matrix(n, d);
  for (int j = 0; j < d; ++j) out.basis.col(j) = es.vectors.col(j);
  return out;
}

std::vector<std::size_t> maximal_net(const std::vector<Vector>& points, double spacing) {
  require(spacing > 0.0, "maximal net: spacing must be positive");
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(points[a].data(), points[a].data() + points[a].size(), points[b].data(),
                                        points[b].data() + points[b].size());
  });
  std::map<std::vector<long>, std::vector<std::size_t>> cells;
  std::vector<std::size_t> net;
  for (std::size_t i : order) {
    const Vector& p = points[i];
    const int n = static_cast<int>(p.size());
    std::vector<long> key(n);
    for (int d = 0; d < n; ++d) key[d] = static_cast<long>(std::floor(p[d] / spacing));
    bool near = false;
    std::vector<int> off(n, -1);
    while (!near) {
      std::vector<long> probe(key);
      for (int d = 0; d < n; ++d) probe[d] += off[d];
      if (auto it = cells.find(probe); it != cells.end())
        for (std::size_t j : it->second) near = near || (points[j] - p).norm() < spacing;
      int d = 0;
      while (d < n && ++off[d] > 1) off[d] = -1, ++d;
      if (d == n) break;
    }
    if (near) continue;
    net.push_back(i);
    cells[key].push_back(i);
  }
  return net;
}

const char* to_string(BallClass c) {
  switch (c) {
    case BallClass::good: return "good";
    case BallClass::bad: return "bad";
    case BallClass::stop: return "stop";
  }
  return "?";
}

std::vector<std::size_t> CoverReport::stops() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < balls.size(); ++i)
    if (balls[i].cls == BallClass::stop) out.push_back(i);
  return out;
}

namespace {

bool at_most(double a, double b) { return a <= b * (1.0 + 1e-12); }

class Builder {
 public:
  Builder(const ScalarField& v, const CoveringParams& params, const std::vector<Vector>& stratum, double E)
      : v_(v), p_(params), ladder_(params.R, params.rho), stratum_(stratum), tree_(stratum), E_(E) {
    params.validate();
    for (const Vector& x : stratum) require(x.size() == v.dim(), "covering: stratum dimension mismatch");
    report_.params = params;
    report_.E = E;
    report_.stratum_size = stratum.size();
  }

  BallClassification classify(const Vector& center, double radius) {
    BallClassification out;
    const double s = p_.gamma * p_.rho * radius;
    std::vector<Vector> high;
    for (std::size_t i : within(center, radius)) {
      const double N = frequency_at(i, s);
      if (std::isnan(N)) continue;
      ++out.checked;
      out.min_frequency = std::min(out.min_frequency, N);
      if (N < E_ - p_.eta_prime && !out.witness) out.witness = i;
      if (N >= E_ - p_.eta0 / 2) high.push_back(stratum_[i]);
    }
    out.good = !out.witness.has_value();
    if (!out.good) out.plane = fit_plane(high, p_.k - 1);
    return out;
  }

  int add_ball(const Vector& x, double r, BallClass cls, int parent, int depth, int tree, int level,
               const AffinePlane& plane = {}) {
    CoverBall b;
    b.x = x;
    b.r = r;
    b.cls = cls;
    b.parent = parent;
    b.depth = depth;
    b.tree = tree;
    b.level = level;
    b.plane = plane;
    if (cls == BallClass::stop) {
      b.r_x = std::max(p_.R, r);
      if (!at_most(r, p_.R)) b.energy_drop = energy_drop(x, r);
    }
    report_.balls.push_back(std::move(b));
    return static_cast<int>(report_.balls.size()) - 1;
  }

  int add_root(const Vector& x, int level) {
    const BallClassification c = classify(x, ladder_(level));
    return add_ball(x, ladder_(level), c.good ? BallClass::good : BallClass::bad, -1, 0, -1, level, c.plane);
  }

  // Returns the indices of the leaves.
  std::vector<int> good_tree(int root, int depth) {
    const int tree = static_cast<int>(report_.trees.size());
    report_.trees.push_back({});
    const Vector x = report_.balls[root].x;
    const int A = report_.balls[root].level;
    const double rA = ladder_(A);
    const std::vector<std::size_t> region = within(x, rA);
    std::vector<int> leaves, stops, goods{root};
    std::vector<std::pair<double, KdTree>> excluded;
    for (int j = A + 1;; ++j) {
      check_depth(j - A);
      const double rj = ladder_(j), rprev = ladder_(j - 1);
      std::vector<Vector> centers;
      for (int g : goods) centers.push_back(report_.balls[g].x);
      const KdTree near(centers);
      std::vector<std::size_t> cand;
      std::vector<int> parent;
      for (std::size_t i : region) {
        const Vector& p = stratum_[i];
        const auto hit = near.nearest(p);
        if (hit.second > rprev) continue;
        bool out = false;
        for (const auto& [rb, bt] : excluded) out = out || bt.any_within(p, rb);
        if (out) continue;
        cand.push_back(i);
        parent.push_back(goods[hit.first]);
      }
      const bool stop = at_most(rj, p_.R);
      std::vector<int> next;
      for (std::size_t c : net_of(cand, 0.4 * rj)) {
        const Vector& z = stratum_[cand[c]];
        const BallClassification cls = classify(z, rj);
        if (stop) {
          stops.push_back(add_ball(z, rj, BallClass::stop, parent[c], depth, tree, j));
        } else if (cls.good) {
          next.push_back(add_ball(z, rj, BallClass::good, parent[c], depth, tree, j));
        } else {
          leaves.push_back(add_ball(z, rj, BallClass::bad, parent[c], depth, tree, j, cls.plane));
        }
      }
      if (stop) break;
      std::vector<Vector> bad_centers;
      for (int b : leaves)
        if (report_.balls[b].level == j) bad_centers.push_back(report_.balls[b].x);
      if (!bad_centers.empty()) excluded.emplace_back(rj, KdTree(bad_centers));
      goods = std::move(next);
      if (goods.empty()) break;
    }
    finish_tree(tree, root, true, leaves, stops, region);
    return leaves;
  }

  std::vector<int> bad_tree(int root, int depth) {
    const int tree = static_cast<int>(report_.trees.size());
    report_.trees.push_back({});
    const Vector x = report_.balls[root].x;
    const int A = report_.balls[root].level;
    const double rA = ladder_(A);
    const std::vector<std::size_t> region = within(x, rA);
    std::vector<int> leaves, stops, bads{root};
    for (int i = A + 1;; ++i) {
      check_depth(i - A);
      const double ri = ladder_(i), rprev = ladder_(i - 1);
      const double tube = 2.0 * p_.rho * rprev;
      const bool last = at_most(ri, p_.R);
      std::vector<Vector> centers;
      for (int b : bads) centers.push_back(report_.balls[b].x);
      const KdTree near(centers);
      std::vector<std::size_t> off_plane, on_plane;
      std::vector<int> off_parent, on_parent;
      for (std::size_t s : region) {
        const Vector& p = stratum_[s];
        int in_off = -1, in_on = -1;
        for (std::size_t b : near.within(p, rprev)) {
          const int ball = bads[b];
          if (last || report_.balls[ball].plane.distance(p) > tube) {
            if (in_off < 0) in_off = ball;
          } else if (in_on < 0) {
            in_on = ball;
          }
        }
        if (in_off >= 0) off_plane.push_back(s), off_parent.push_back(in_off);
        if (in_on >= 0) on_plane.push_back(s), on_parent.push_back(in_on);
      }
      const double rs = p_.eta * rprev;
      for (std::size_t c : net_of(off_plane, 0.4 * rs))
        stops.push_back(add_ball(stratum_[off_plane[c]], rs, BallClass::stop, off_parent[c], depth, tree, i));
      if (last) break;
      std::vector<int> next;
      for (std::size_t c : net_of(on_plane, 0.4 * ri)) {
        const Vector& z = stratum_[on_plane[c]];
        const BallClassification cls = classify(z, ri);
        if (cls.good) {
          leaves.push_back(add_ball(z, ri, BallClass::good, on_parent[c], depth, tree, i));
        } else {
          next.push_back(add_ball(z, ri, BallClass::bad, on_parent[c], depth, tree, i, cls.plane));
        }
      }
      bads = std::move(next);
      if (bads.empty()) break;
    }
    finish_tree(tree, root, false, leaves, stops, region);
    return leaves;
  }

  // Root ball that is already at or below the stop scale.
  void root_as_stop(int root) {
    CoverBall& b = report_.balls[root];
    b.cls = BallClass::stop;
    b.r_x = std::max(p_.R, b.r);
    if (!at_most(b.r, p_.R)) b.energy_drop = energy_drop(b.x, b.r);
  }

  CoverReport finish() {
    CoverReport& r = report_;
    const int k = p_.k;
    for (const CoverBall& b : r.balls) {
      const double w = std::pow(b.r, k);
      if (b.cls == BallClass::good) r.sum_good += w;
      if (b.cls == BallClass::bad) r.sum_bad += w;
      if (b.cls == BallClass::stop) {
        r.sum_stop += w;
        r.sum_rx += std::pow(b.r_x, k);
        r.size_control = r.size_control && (at_most(b.r_x, p_.R) || b.energy_drop);
      }
    }
    r.uncovered = uncovered_points(r, stratum_);
    return std::move(r);
  }

  int depth_cap() const { return p_.max_depth; }
  double scale(int i) const { return ladder_(i); }
  CoverReport& report() { return report_; }

 private:
  std::vector<std::size_t> within(const Vector& x, double r) const { return tree_.within(x, r); }

  std::vector<std::size_t> net_of(const std::vector<std::size_t>& idx, double spacing) const {
    std::vector<Vector> pts;
    pts.reserve(idx.size());
    for (std::size_t i : idx) pts.push_back(stratum_[i]);
    return maximal_net(pts, spacing);
  }

  double frequency_at(std::size_t i, double s) {
    const auto key = std::make_pair(i, std::bit_cast<std::uint64_t>(s));
    if (auto it = freq_.find(key); it != freq_.end()) return it->second;
    double N;
    try {
      N = frequency(v_, stratum_[i], s, p_.order);
    } catch (const NumericDegeneracy&) {
      N = std::numeric_limits<double>::quiet_NaN();
    }
    freq_.emplace(key, N);
    return N;
  }

  // sup N(2r, p, v) over p in B_{2r}(s), probed on a lattice of spacing r/2, is <= E - eta/2.
  bool energy_drop(const Vector& s, double r) const {
    std::vector<Vector> probes = lattice_in_ball(Vector::Zero(s.size()), 2.0 * r, 0.5 * r);
    for (const Vector& q : probes) {
      double N;
      try {
        N = frequency(v_, s + q, 2.0 * r, p_.order);
      } catch (const NumericDegeneracy&) {
        continue;
      }
      if (N > E_ - p_.eta / 2) return false;
    }
    return true;
  }

  void check_depth(int levels) const {
    if (levels > p_.max_depth)
      throw DepthExceeded("covering: tree exceeded " + std::to_string(p_.max_depth) + " levels");
  }

  void finish_tree(int tree, int root, bool good, const std::vector<int>& leaves, const std::vector<int>& stops,
                   const std::vector<std::size_t>& region) {
    TreeAudit& a = report_.trees[tree];
    a.root = root;
    a.good_tree = good;
    a.r_A = report_.balls[root].r;
    std::vector<int> all;
    for (int b : leaves) a.leaf_sum += std::pow(report_.balls[b].r, p_.k), all.push_back(b);
    for (int b : stops) a.stop_sum += std::pow(report_.balls[b].r, p_.k), all.push_back(b);
    std::vector<Vector> centers;
    double rmax = 0.0;
    for (int b : all) centers.push_back(report_.balls[b].x), rmax = std::max(rmax, report_.balls[b].r);
    if (all.empty()) {
      a.uncovered = region.size();
      return;
    }
    const KdTree ct(centers);
    for (std::size_t i = 0; i < all.size() && a.disjoint; ++i) {
      const CoverBall& bi = report_.balls[all[i]];
      for (std::size_t j : ct.within(bi.x, (bi.r + rmax) / 5.0)) {
        if (j == i) continue;
        const CoverBall& bj = report_.balls[all[j]];
        if ((bi.x - bj.x).norm() < (bi.r + bj.r) / 5.0) a.disjoint = false;
      }
    }
    for (std::size_t s : region) {
      bool covered = false;
      for (std::size_t j : ct.within(stratum_[s], rmax))
        covered = covered || (stratum_[s] - centers[j]).norm() <= report_.balls[all[j]].r;
      a.uncovered += !covered;
    }
  }

  const ScalarField& v_;
  CoveringParams p_;
  ScaleLadder ladder_;
  const std::vector<Vector>& stratum_;
  KdTree tree_;
  double E_;
  CoverReport report_;
  std::map<std::pair<std::size_t, std::uint64_t>, double> freq_;
};

double resolve_energy(const ScalarField& v, const CoveringParams& params, const std::vector<Vector>& stratum) {
  return std::isnan(params.E) ? measure_energy(v, stratum, params.order) : params.E;
}

CoverReport single_tree(const ScalarField& v, const Vector& center, int level, const CoveringParams& params,
                        const std::vector<Vector>& stratum, bool good) {
  require(level >= 0, "covering: root level must be non-negative");
  Builder b(v, params, stratum, resolve_energy(v, params, stratum));
  const int root = b.add_root(center, level);
  const bool is_good = b.report().balls[root].cls == BallClass::good;
  require(is_good == good, good ? "good tree: root ball is bad" : "bad tree: root ball is good");
  if (at_most(b.scale(level), params.R)) {
    b.root_as_stop(root);
  } else if (good) {
    b.good_tree(root, 1);
  } else {
    b.bad_tree(root, 1);
  }
  CoverReport r = b.finish();
  r.depth = 1;
  return r;
}

}  // namespace

std::vector<Vector> cover_stratum_sample(const ScalarField& v, const CoveringParams& params, SymmetryCache* cache,
                                         double spacing) {
  params.validate();
  StratifyOptions opts = params.stratify;
  opts.eps = params.eps;
  opts.r = params.eta * params.R;
  StratumSamplerOptions s;
  s.spacing = spacing > 0.0 ? spacing : (params.sample_spacing > 0.0 ? params.sample_spacing : params.R / 2);
  return sample_stratum(v, params.k, Vector::Zero(v.dim()), 1.0, opts, s, cache);
}

double measure_energy(const ScalarField& v, const std::vector<Vector>& extra, int order) {
  std::vector<Vector> probes = lattice_in_ball(Vector::Zero(v.dim()), 1.0, 0.25);
  probes.insert(probes.end(), extra.begin(), extra.end());
  double E = -std::numeric_limits<double>::infinity();
  for (const Vector& p : probes) {
    try {
      E = std::max(E, frequency(v, p, 2.0, order));
    } catch (const NumericDegeneracy&) {
    }
  }
  if (!std::isfinite(E)) throw NumericDegeneracy("covering: frequency undefined on all of B_1(0)");
  return E;
}

BallClassification classify_ball(const ScalarField& v, const Vector& center, double radius,
                                 const CoveringParams& params, const std::vector<Vector>& stratum) {
  require(std::isfinite(params.E), "classify_ball: E must be set");
  require(radius > 0.0, "classify_ball: radius must be positive");
  Builder b(v, params, stratum, params.E);
  return b.classify(center, radius);
}

CoverReport good_tree(const ScalarField& v, const Vector& center, int level, const CoveringParams& params,
                      const std::vector<Vector>& stratum) {
  return single_tree(v, center, level, params, stratum, true);
}

CoverReport bad_tree(const ScalarField& v, const Vector& center, int level, const CoveringParams& params,
                     const std::vector<Vector>& stratum) {
  return single_tree(v, center, level, params, stratum, false);
}

CoverReport build_cover(const ScalarField& v, const CoveringParams& params, const std::vector<Vector>& stratum) {
  Builder b(v, params, stratum, resolve_energy(v, params, stratum));
  const int root = b.add_root(Vector::Zero(v.dim()), 0);
  int depth = 0;
  if (at_most(1.0, params.R)) {
    b.root_as_stop(root);
  } else {
    std::vector<int> frontier{root};
    while (!frontier.empty()) {
      if (++depth > b.depth_cap())
        throw DepthExceeded("covering: alternation exceeded " + std::to_string(b.depth_cap()) + " rounds");
      std::vector<int> next;
      for (int f : frontier) {
        const std::vector<int> leaves =
            b.report().balls[f].cls == BallClass::good ? b.good_tree(f, depth) : b.bad_tree(f, depth);
        next.insert(next.end(), leaves.begin(), leaves.end());
      }
      frontier = std::move(next);
    }
  }
  CoverReport r = b.finish();
  r.depth = depth;
  return r;
}

CoverReport build_cover(const ScalarField& v, const CoveringParams& params) {
  SymmetryCache cache;
  return build_cover(v, params, cover_stratum_sample(v, params, &cache));
}

std::size_t uncovered_points(const CoverReport& report, const std::vector<Vector>& points) {
  std::vector<Vector> centers;
  std::vector<double> radii;
  double rmax = 0.0;
  for (const CoverBall& b : report.balls)
    if (b.cls == BallClass::stop) centers.push_back(b.x), radii.push_back(b.r_x), rmax = std::max(rmax, b.r_x);
  if (centers.empty()) return points.size();
  const KdTree tree(centers);
  std::size_t missed = 0;
  for (const Vector& p : points) {
    bool covered = false;
    for (std::size_t j : tree.within(p, rmax)) covered = covered || (p - centers[j]).norm() <= radii[j];
    missed += !covered;
  }
  return missed;
}

nlohmann::json cover_report_json(const CoverReport& r) {
  using nlohmann::json;
  const CoveringParams& p = r.params;
  json balls = json::array();
  for (const CoverBall& b : r.balls) {
    json j = {{"x", std::vector<double>(b.x.data(), b.x.data() + b.x.size())},
              {"r", b.r},
              {"class", to_string(b.cls)},
              {"depth", b.depth},
              {"level", b.level},
              {"parent", b.parent},
              {"tree", b.tree}};
    if (b.cls == BallClass::stop) j["r_x"] = b.r_x, j["energy_drop"] = b.energy_drop;
    balls.push_back(std::move(j));
  }
  json trees = json::array();
  for (const TreeAudit& t : r.trees)
    trees.push_back({{"root", t.root},
                     {"type", t.good_tree ? "good" : "bad"},
                     {"r_A", t.r_A},
                     {"leaf_sum", t.leaf_sum},
                     {"stop_sum", t.stop_sum},
                     {"disjoint", t.disjoint},
                     {"uncovered", t.uncovered}});
  return {{"schema", 1},
          {"params",
           {{"eps", p.eps},
            {"k", p.k},
            {"E", r.E},
            {"rho", p.rho},
            {"gamma", p.gamma},
            {"eta_prime", p.eta_prime},
            {"eta0", p.eta0},
            {"eta", p.eta},
            {"R", p.R},
            {"max_depth", p.max_depth}}},
          {"balls", std::move(balls)},
          {"sums", {{"good", r.sum_good}, {"bad", r.sum_bad}, {"stop", r.sum_stop}, {"stop_rx", r.sum_rx}}},
          {"audits",
           {{"stratum_size", r.stratum_size},
            {"uncovered", r.uncovered},
            {"size_control", r.size_control},
            {"depth", r.depth},
            {"trees", std::move(trees)}}}};
}

double tubular_volume(const std::vector<Vector>& points, double R, const std::optional<Box>& window,
                      const TubeVolumeOptions& opts) {
  return tube_volume(points, R, window, opts).volume;
}

ScalingFit scaling_fit(const ScalarField& v, int k, double eps, const std::vector<double>& radii,
                       const ScalingOptions& opts) {
  require(eps > 0.0 && k >= 0 && k <= v.dim(), "scaling fit: invalid eps or k");
  require(opts.ball > 0.0 && opts.stratum_scale > 0.0 && opts.spacing_factor > 0.0, "scaling fit: invalid options");
  ScalingFit out;
  SymmetryCache cache;
  std::vector<double> xs, ys;
  for (double R : radii) {
    require(R > 0.0 && R <= 1.0, "scaling fit: radii must lie in (0, 1]");
    StratifyOptions s = opts.stratify;
    s.eps = eps;
    s.r = std::min(1.0, opts.stratum_scale * R);
    StratumSamplerOptions sampler;
    sampler.spacing = opts.spacing_factor * R;
    const std::vector<Vector> pts = sample_stratum(v, k, Vector::Zero(v.dim()), opts.ball, s, sampler, &cache);
    ScalingRow row;
    row.R = R;
    row.points = pts.size();
    const TubeVolume t = tube_volume(pts, R, std::nullopt, opts.volume);
    row.volume = t.volume;
    row.monte_carlo = t.monte_carlo;
    out.rows.push_back(row);
    if (row.volume > 0.0) xs.push_back(R), ys.push_back(row.volume);
  }
  out.degenerate = xs.size() < 2 || xs.size() < radii.size();
  if (xs.size() >= 2) out.exponent = loglog_slope(xs, ys);
  return out;
}

}  // namespace strata
