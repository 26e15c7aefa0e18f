#pragma once

#include "strata/beta.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace strata {

// Dyadic scale r_l = 2^-l.
inline double dyadic(int l) { return std::ldexp(1.0, -l); }

// Atoms with tau <= r only.
DiscreteMeasure truncate(const DiscreteMeasure& mu, double r);

// Smallest i with 16 r_i < min tau: from there on every ball B_{16 r_i}(z) around an atom
// holds that atom alone and the beta numbers vanish.
int truncation_level(const DiscreteMeasure& mu);

struct HypothesisSum {
  bool triggered = false;  // B_{r_l}(x) inside B_2 and mu(B_{r_l}(x)) >= eps_k r_l^k
  double mass = 0.0;       // mu(B_{r_l}(x))
  double sum = 0.0;        // sum_{i >= l} int_{B_{2 r_l}(x)} beta^2(z, 16 r_i) dmu(z)
  double ratio = 0.0;      // sum / r_l^k
};

// The sum is evaluated whether or not the trigger fires.
HypothesisSum hypothesis_sum(const DiscreteMeasure& mu, const Vector& x, int l, double eps_k);

struct PackingOptions {
  double eps_k = 0.1;
  double lattice_spacing = 0.25;  // coarse lattice of scan centers in B_2, added to the atoms
  int max_level = -1;             // scan levels 0..max_level; -1 means the truncation level
  int threads = 0;
};

struct PackingReport {
  double mass_B1 = 0.0;       // sum of tau^k over atoms in the closed unit ball
  double worst_ratio = 0.0;   // max hypothesis ratio over triggered (x, l)
  std::size_t scan_size = 0;  // number of (x, l) pairs examined
  std::size_t triggered = 0;
  int levels = 0;
  // Hypothesis with threshold delta holds on the scanned grid.
  bool hypothesis_holds(double delta) const { return worst_ratio < delta * delta; }
};

// Rejects families whose balls overlap.
PackingReport packing_report(const DiscreteMeasure& mu, const PackingOptions& opts = {});
nlohmann::json packing_report_json(const PackingReport& r);

// Atoms on a centered k-dimensional square lattice of the given spacing inside the ball of
// radius extent, embedded in the first k coordinates of R^n, each moved by a uniform random
// vector of length at most jitter.
DiscreteMeasure lattice_family(int n, int k, double tau, double spacing, double extent, double jitter = 0.0,
                               std::uint64_t seed = 0);

}  // namespace strata
