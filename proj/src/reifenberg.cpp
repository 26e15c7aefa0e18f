#include "strata/reifenberg.hpp"

#include "strata/parallel.hpp"
#include "strata/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace strata {

DiscreteMeasure truncate(const DiscreteMeasure& mu, double r) {
  DiscreteMeasure out;
  out.k = mu.k;
  out.disjoint = mu.disjoint;
  for (const Atom& a : mu.atoms)
    if (a.tau <= r) out.atoms.push_back(a);
  return out;
}

int truncation_level(const DiscreteMeasure& mu) {
  if (mu.atoms.empty()) return 0;
  double tau_min = std::numeric_limits<double>::infinity();
  for (const Atom& a : mu.atoms) tau_min = std::min(tau_min, a.tau);
  int i = 0;
  while (16.0 * dyadic(i) >= tau_min) ++i;
  return i;
}

namespace {

// beta^2_mu(z, 16 r_i) for atoms z and levels i, restricted through a kd-tree.
class BetaTable {
 public:
  BetaTable(const DiscreteMeasure& mu, const KdTree& tree, int levels)
      : mu_(mu), tree_(tree), levels_(levels), cache_(mu.atoms.size() * static_cast<std::size_t>(levels), -1.0) {}

  double at(std::size_t z, int i) {
    if (i >= levels_) return 0.0;
    double& slot = cache_[z * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(i)];
    if (slot < 0.0) slot = compute(z, i);
    return slot;
  }
  // sum_{i >= l} beta^2(z, 16 r_i)
  double tail(std::size_t z, int l) {
    double s = 0.0;
    for (int i = std::max(l, 0); i < levels_; ++i) s += at(z, i);
    return s;
  }

 private:
  double compute(std::size_t z, int i) const {
    const double r = 16.0 * dyadic(i);
    const Vector& c = mu_.atoms[z].x;
    DiscreteMeasure local;
    local.k = mu_.k;
    for (std::size_t j : tree_.within(c, r)) local.atoms.push_back(mu_.atoms[j]);
    return beta_number(local, c, r, mu_.k).beta_sq;
  }

  const DiscreteMeasure& mu_;
  const KdTree& tree_;
  int levels_;
  std::vector<double> cache_;
};

HypothesisSum evaluate(const DiscreteMeasure& mu, const KdTree& tree, BetaTable& table, const Vector& x, int l,
                       double eps_k) {
  HypothesisSum out;
  const double rl = dyadic(l);
  for (std::size_t j : tree.within(x, rl)) out.mass += mu.weight(j);
  out.triggered = x.norm() + rl <= 2.0 && out.mass >= eps_k * std::pow(rl, mu.k);
  for (std::size_t z : tree.within(x, 2.0 * rl)) out.sum += mu.weight(z) * table.tail(z, l);
  out.ratio = out.sum / std::pow(rl, mu.k);
  return out;
}

}  // namespace

HypothesisSum hypothesis_sum(const DiscreteMeasure& mu, const Vector& x, int l, double eps_k) {
  require(l >= 0, "hypothesis sum: level must be non-negative");
  const KdTree tree(mu.points());
  BetaTable table(mu, tree, truncation_level(mu));
  return evaluate(mu, tree, table, x, l, eps_k);
}

PackingReport packing_report(const DiscreteMeasure& mu_in, const PackingOptions& opts) {
  require(opts.lattice_spacing > 0.0, "packing report: lattice spacing must be positive");
  DiscreteMeasure mu = mu_in;
  mu.disjoint = true;
  mu.validate();
  PackingReport rep;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if (mu.atoms[i].x.norm() <= 1.0) rep.mass_B1 += mu.weight(i);
  if (mu.atoms.empty()) return rep;

  const int n = mu.dim();
  const int trunc = truncation_level(mu);
  rep.levels = (opts.max_level >= 0 ? opts.max_level : trunc) + 1;
  const KdTree tree(mu.points());

  std::vector<Vector> centers = mu.points();
  const int per_axis = static_cast<int>(std::floor(2.0 / opts.lattice_spacing));
  std::vector<int> idx(n, -per_axis);
  while (true) {
    Vector x(n);
    for (int a = 0; a < n; ++a) x[a] = idx[a] * opts.lattice_spacing;
    if (x.norm() <= 2.0) centers.push_back(x);
    int a = 0;
    while (a < n && ++idx[a] > per_axis) idx[a++] = -per_axis;
    if (a == n) break;
  }

  // Fill the beta table once so the parallel scan only reads it.
  BetaTable table(mu, tree, trunc);
  for (std::size_t z = 0; z < mu.atoms.size(); ++z) table.tail(z, 0);

  std::vector<double> worst(centers.size(), 0.0);
  std::vector<std::size_t> scanned(centers.size(), 0), fired(centers.size(), 0);
  parallel_for(
      centers.size(),
      [&](std::size_t c) {
        for (int l = 0; l < rep.levels; ++l) {
          if (centers[c].norm() + dyadic(l) > 2.0) continue;
          ++scanned[c];
          const HypothesisSum h = evaluate(mu, tree, table, centers[c], l, opts.eps_k);
          if (!h.triggered) continue;
          ++fired[c];
          worst[c] = std::max(worst[c], h.ratio);
        }
      },
      opts.threads);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    rep.worst_ratio = std::max(rep.worst_ratio, worst[c]);
    rep.scan_size += scanned[c];
    rep.triggered += fired[c];
  }
  return rep;
}

nlohmann::json packing_report_json(const PackingReport& r) {
  return {{"schema", 1},         {"mass_B1", r.mass_B1}, {"worst_ratio", r.worst_ratio},
          {"scan_size", r.scan_size}, {"triggered", r.triggered}, {"levels", r.levels}};
}

DiscreteMeasure lattice_family(int n, int k, double tau, double spacing, double extent, double jitter,
                               std::uint64_t seed) {
  require(n >= 1 && k >= 0 && k <= n, "lattice family: need 0 <= k <= n");
  require(tau > 0.0 && tau <= 1.0 && spacing > 0.0 && extent >= 0.0 && jitter >= 0.0,
          "lattice family: invalid size parameters");
  DiscreteMeasure mu;
  mu.k = k;
  mu.disjoint = true;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int m = static_cast<int>(std::floor(extent / spacing));
  std::vector<int> idx(k, -m);
  while (true) {
    Vector x = Vector::Zero(n);
    for (int a = 0; a < k; ++a) x[a] = idx[a] * spacing;
    if (x.norm() <= extent + 1e-12) {
      if (jitter > 0.0) {
        Vector g(n);
        for (int a = 0; a < n; ++a) g[a] = normal(rng);
        x += g * (jitter * std::pow(unif(rng), 1.0 / n) / g.norm());
      }
      mu.atoms.push_back({x, tau});
    }
    int a = 0;
    while (a < k && ++idx[a] > m) idx[a++] = -m;
    if (a == k) break;
  }
  mu.validate();
  return mu;
}

}  // namespace strata
