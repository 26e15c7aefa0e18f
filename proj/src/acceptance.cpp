#include "strata/acceptance.hpp"

#include "strata/beta.hpp"
#include "strata/covering.hpp"
#include "strata/fields.hpp"
#include "strata/frequency.hpp"
#include "strata/minkowski.hpp"
#include "strata/parallel.hpp"
#include "strata/reifenberg.hpp"
#include "strata/stratify.hpp"
#include "strata/symmetry.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace strata {

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

using Rng = std::mt19937_64;

Vector random_point(Rng& rng, int n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = normal(rng);
  return x * (radius * std::pow(unif(rng), 1.0 / n) / x.norm());
}

HarmonicPolynomial random_harmonic(Rng& rng, int n, int d) {
  std::normal_distribution<double> normal;
  std::vector<double> c(harmonic_dimension(n, d));
  for (double& x : c) x = normal(rng);
  return HarmonicPolynomial::from_basis(n, d, c);
}

Matrix random_rotation(Rng& rng, int n) {
  std::normal_distribution<double> normal;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix Q = qr.householderQ();
  if (Q.determinant() < 0) Q.col(0) *= -1.0;
  return Q;
}

HarmonicPolynomial monomial_sum(int n, int d, const std::vector<std::pair<Exponent, double>>& terms) {
  HomogeneousPolynomial p(n, d);
  for (const auto& [e, c] : terms) p.coeffs()[p.table().index(e)] += c;
  return HarmonicPolynomial::from_monomials(p);
}

// x_1^2 - x_2^2 in R^n.
FieldPtr saddle(int n) {
  Exponent a(n, 0), b(n, 0);
  a[0] = 2;
  b[1] = 2;
  return make_polynomial(monomial_sum(n, 2, {{a, 1.0}, {b, -1.0}}));
}

HarmonicPolynomial coordinate(int n, int i) {
  Exponent e(n, 0);
  e[i] = 1;
  return monomial_sum(n, 1, {{e, 1.0}});
}

// Lattice of spacing h on [lo, hi]^k in the first k coordinates; the others equal c.
std::vector<Vector> flat_sample(int n, int k, double lo, double hi, double h, double c) {
  std::vector<Vector> out;
  const int m = static_cast<int>(std::round((hi - lo) / h));
  std::vector<int> idx(k, 0);
  for (;;) {
    Vector p = Vector::Constant(n, c);
    for (int d = 0; d < k; ++d) p[d] = lo + idx[d] * h;
    out.push_back(p);
    int d = 0;
    while (d < k && ++idx[d] > m) idx[d++] = 0;
    if (d >= k) break;
  }
  return out;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(3) << x;
  return s.str();
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict frequency_equals_degree(const AcceptanceOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(o.seed + 1);
  double worst = 0.0;
  std::size_t count = 0;
  for (int n = 2; n <= 4; ++n)
    for (int d = 1; d <= 5; ++d) {
      std::vector<HarmonicPolynomial> polys;
      for (const HomogeneousPolynomial& b : harmonic_monomial_basis(n, d)) polys.push_back(HarmonicPolynomial::from_monomials(b));
      polys.push_back(random_harmonic(rng, n, d));
      for (const HarmonicPolynomial& P : polys) {
        const FieldPtr v = make_polynomial(P);
        for (double r : {0.1, 0.5, 1.0}) {
          worst = std::max(worst, std::abs(frequency(*v, Vector::Zero(n), r) - d));
          ++count;
        }
      }
    }
  const double t = elapsed(t0);
  return {worst < 1e-5 && t < 10.0, std::to_string(count) + " evaluations, max |N - d| = " + fmt(worst) +
                                        ", " + fmt(t) + " s (limit 10 s)"};
}

Verdict monotone_profiles(const AcceptanceOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(o.seed + 2);
  std::normal_distribution<double> normal;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t undefined = 0;
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + i % 3;
    std::vector<FieldPtr> terms;
    for (int d = 1; d <= 4; ++d)
      if (d == 1 || (i >> d) % 2) terms.push_back(make_polynomial(random_harmonic(rng, n, d).scaled(std::exp(normal(rng)))));
    const FieldPtr v = make_sum(terms);
    const FrequencyProfile prof = frequency_profile(*v, random_point(rng, n, 0.5), std::ldexp(1.0, -19), 1.0, 2.0);
    for (double d : prof.drops) {
      if (std::isnan(d)) ++undefined;
      else worst = std::min(worst, d);
    }
  }
  const double t = elapsed(t0);
  return {worst >= -1e-7 && undefined == 0 && t < 60.0,
          "50 profiles over 20 scales, min drop = " + fmt(worst) + ", undefined drops " + std::to_string(undefined) +
              ", " + fmt(t) + " s (limit 60 s)"};
}

Verdict rescaling_invariance(const AcceptanceOptions& o) {
  Rng rng(o.seed + 3);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int n = 2 + i % 3;
    FieldPtr v;
    if (i < 5) {
      v = make_sum({make_polynomial(random_harmonic(rng, n, 1)), make_polynomial(random_harmonic(rng, n, 2 + i % 3))});
    } else {
      v = make_hinged(random_harmonic(rng, n, 1 + i % 3), 2.0, Frame{random_rotation(rng, n), Vector::Zero(n)});
    }
    for (double a : {-2.0, 3.0})
      for (double b : {0.5, 4.0}) {
        const auto [N, M] = frequency_rescaling_check(v, a, b, 1.0, 0.7);
        worst = std::max(worst, std::abs(N - M));
      }
  }
  return {worst < 1e-8, "10 fields x 4 rescalings, max difference = " + fmt(worst) + " (limit 1e-8)"};
}

Verdict beta_identity(const AcceptanceOptions& o) {
  Rng rng(o.seed + 4);
  std::uniform_real_distribution<double> tau(0.05, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + i % 3, k = (i / 3) % n;
    DiscreteMeasure mu;
    mu.k = k;
    const int atoms = 1 + i % 30;
    for (int a = 0; a < atoms; ++a) mu.atoms.push_back({random_point(rng, n, 1.0), tau(rng)});
    const Vector p = random_point(rng, n, 0.3);
    worst = std::max(worst, std::abs(beta_number(mu, p, 0.8, k).beta_sq - beta_bruteforce(mu, p, 0.8, k)));
  }
  double planar = 0.0;
  std::uniform_real_distribution<double> coef(-0.4, 0.4);
  for (int n = 2; n <= 4; ++n)
    for (int k = 0; k < n; ++k)
      for (int trial = 0; trial < 5; ++trial) {
        const Matrix R = random_rotation(rng, n);
        const Vector base = random_point(rng, n, 0.2);
        DiscreteMeasure mu;
        mu.k = k;
        for (int a = 0; a < 12; ++a) {
          Vector x = base;
          for (int j = 0; j < k; ++j) x += coef(rng) * R.col(j);
          mu.atoms.push_back({x, 0.1 + 0.9 * std::abs(coef(rng))});
        }
        planar = std::max(planar, beta_number(mu, Vector::Zero(n), 1.0, k).beta_sq);
      }
  return {worst <= 1e-6 && planar <= 1e-12,
          "200 measures, max |eigen - search| = " + fmt(worst) + "; planar max beta^2 = " + fmt(planar)};
}

Verdict reifenberg_segments(const AcceptanceOptions& o) {
  const double tau = std::ldexp(1.0, -6);
  const DiscreteMeasure flat = lattice_family(2, 1, tau, 3 * tau, 0.5);
  PackingOptions po;
  po.threads = o.threads;
  const PackingReport a = packing_report(flat, po);
  bool ok = a.triggered > 0 && a.worst_ratio <= 1e-12 && a.mass_B1 <= 0.4;
  double worst_mass = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PackingReport b = packing_report(lattice_family(2, 1, tau, 3 * tau, 0.5, 0.1 * tau, o.seed + 50 + s), po);
    worst_mass = std::max(worst_mass, b.mass_B1 / a.mass_B1);
  }
  ok = ok && worst_mass <= 2.0;
  return {ok, "flat sum = " + fmt(a.worst_ratio) + " over " + std::to_string(a.triggered) +
                  " triggered balls, mass = " + fmt(a.mass_B1) + " (limit 0.4); jittered mass ratio <= " +
                  fmt(worst_mass) + " (limit 2)"};
}

Verdict covering_audits(const AcceptanceOptions& o) {
  const FieldPtr v = saddle(3);
  std::ostringstream d;
  bool ok = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  SymmetryCache cache;
  for (int e = 3; e <= 6; ++e) {
    CoveringParams p;
    p.k = 1;
    p.eps = 0.05;
    p.R = std::ldexp(1.0, -e);
    p.stratify.threads = o.threads;
    try {
      const std::vector<Vector> S = cover_stratum_sample(*v, p, &cache);
      const CoverReport rep = build_cover(*v, p, S);
      const std::size_t misses = uncovered_points(rep, cover_stratum_sample(*v, p, &cache, p.R / 4));
      ok = ok && misses == 0 && rep.uncovered == 0;
      lo = std::min(lo, rep.sum_rx);
      hi = std::max(hi, rep.sum_rx);
      d << "R=2^-" << e << ": sum r_x = " << fmt(rep.sum_rx) << ", misses " << misses << ", depth " << rep.depth
        << "; ";
    } catch (const DepthExceeded& ex) {
      ok = false;
      d << "R=2^-" << e << ": " << ex.what() << "; ";
    }
  }
  ok = ok && hi < 2.0 * lo;
  d << "spread " << fmt(hi / lo) << " (limit 2)";
  return {ok, d.str()};
}

Verdict scaling_exponents(const AcceptanceOptions& o) {
  std::ostringstream d;
  bool ok = true;
  auto run = [&](int n, int k, int e_hi) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> radii;
    for (int e = 2; e <= e_hi; ++e) radii.push_back(std::ldexp(1.0, -e));
    ScalingOptions so;
    so.stratify.threads = o.threads;
    so.volume.seed = o.seed;
    const ScalingFit f = scaling_fit(*saddle(n), k, 0.05, radii, so);
    const double t = elapsed(t0);
    ok = ok && !f.degenerate && std::abs(f.exponent - 2.0) <= 0.3 && t < 600.0;
    d << "R^" << n << " k=" << k << ": exponent " << fmt(f.exponent) << " over R=2^-2..2^-" << e_hi << " in " << fmt(t)
      << " s; ";
  };
  run(3, 1, 6);
  run(4, 2, 5);
  d << "target 2 +- 0.3, limit 600 s each";
  return {ok, d.str()};
}

Verdict spine_classification(const AcceptanceOptions& o) {
  Rng rng(o.seed + 8);
  double worst = 0.0;
  for (int n : {3, 4}) {
    const FieldPtr v = make_hinged(coordinate(n, n - 1), 0.5);
    for (int i = 0; i < 6; ++i) {
      Vector p = random_point(rng, n, 0.5);
      p[n - 1] = 0.0;
      for (double r : scan_scales(1.0 / 64, 2.0)) worst = std::max(worst, nearest_k_symmetric(*v, p, r, n - 1).distance);
    }
  }
  StratifyOptions so;
  so.eps = 0.05;
  so.r = 1.0 / 128;
  so.threads = o.threads;
  std::size_t far = 0, leaked = 0;
  struct Case {
    int n;
    double spacing;
  };
  for (const Case c : {Case{3, 1.0 / 16}, Case{4, 1.0 / 8}}) {
    const FieldPtr v = saddle(c.n);
    for (const StratumSample& s : stratify(*v, lattice_in_ball(Vector::Zero(c.n), 0.25, c.spacing), so)) {
      if (std::hypot(s.point[0], s.point[1]) <= 0.05) continue;
      ++far;
      for (int k = 0; k <= c.n - 3; ++k) leaked += s.in_stratum[k] != 0;
    }
  }
  return {worst < 1e-4 && leaked == 0 && far > 0,
          "hinged spine max (n-1)-distance = " + fmt(worst) + " (limit 1e-4); saddle points off the spine: " +
              std::to_string(far) + ", in low strata: " + std::to_string(leaked)};
}

Verdict porosity_and_dimension(const AcceptanceOptions&) {
  std::ostringstream d;
  bool ok = true;
  const double r0 = std::ldexp(1.0, -8);
  for (int n = 2; n <= 3; ++n) {
    const std::vector<Vector> E = flat_sample(n, n - 1, 0.0, 1.0, n == 2 ? 1.0 / 1024 : 1.0 / 256, 0.0);
    const PorousBound b = porous_volume_bound_check(E, n, 0.25, r0);
    ok = ok && b.holds();
    d << "hyperplane in R^" << n << ": volume " << fmt(b.measured) << " <= " << fmt(b.bound) << ", alpha "
      << fmt(b.measured_alpha) << "; ";
  }
  const double rmin = 1.0 / 128;
  const std::vector<double> radii{8 * rmin, 4 * rmin, 2 * rmin, rmin};
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n)
    for (int k = 0; k < n; ++k) {
      const double w = 4 * rmin;
      const Box window{Vector::Constant(n, 0.5 - w / 2), Vector::Constant(n, 0.5 + w / 2)};
      const std::vector<Vector> E =
          k == 0 ? std::vector<Vector>{Vector::Constant(n, 0.5)}
                 : flat_sample(n, k, 0.5 - w / 2 - radii[0], 0.5 + w / 2 + radii[0], rmin / 2, 0.5);
      const DimensionFit f = dimension_fit(E, n, radii, k == 0 ? std::nullopt : std::optional<Box>(window));
      worst = std::max(worst, std::abs(f.dimension - k));
    }
  ok = ok && worst <= 0.2;
  d << "k-plane dimension max error " << fmt(worst) << " (limit 0.2)";
  return {ok, d.str()};
}

// Spearman correlation, ties sharing their mean rank.
double rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t t = i; t <= j; ++t) r[idx[t]] = 0.5 * (i + j);
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> a = ranks(x), b = ranks(y);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Verdict rigidity_trend(const AcceptanceOptions&) {
  const HarmonicPolynomial P1 = coordinate(3, 0);
  const HarmonicPolynomial P3 = monomial_sum(3, 3, {{{0, 0, 3}, 1.0}, {{2, 0, 1}, -1.5}, {{0, 2, 1}, -1.5}});
  const FieldPtr low = make_polynomial(P1.scaled(1.0 / std::sqrt(P1.sphere_mean_square())));
  const HarmonicPolynomial high = P3.scaled(1.0 / std::sqrt(P3.sphere_mean_square()));
  const std::vector<double> ts{0.0, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> drops, dists;
  std::ostringstream d;
  for (double t : ts) {
    const FieldPtr v = t == 0.0 ? low : make_sum({low, make_polynomial(high.scaled(t))});
    const RigidityReport r = rigidity_check(*v, Vector::Zero(3), 0.25);
    drops.push_back(r.drop);
    dists.push_back(r.distance0);
    d << "t=" << t << ": drop " << fmt(r.drop) << ", dist " << fmt(r.distance0) << "; ";
  }
  const double cd = rank_correlation(ts, drops), cs = rank_correlation(ts, dists);
  d << "rank correlations " << fmt(cd) << ", " << fmt(cs);
  return {cd == 1.0 && cs == 1.0, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  Verdict (*run)(const AcceptanceOptions&);
};

const Criterion kCriteria[] = {
    {1, "frequency of homogeneous harmonics equals degree", frequency_equals_degree},
    {2, "frequency profiles are monotone", monotone_profiles},
    {3, "frequency is invariant under affine rescaling", rescaling_invariance},
    {4, "beta eigen identity", beta_identity},
    {5, "discrete Reifenberg segment family", reifenberg_segments},
    {6, "covering audits for the saddle", covering_audits},
    {7, "stratum tube volume scaling", scaling_exponents},
    {8, "spine classification", spine_classification},
    {9, "porosity bound and plane dimensions", porosity_and_dimension},
    {10, "rigidity trend", rigidity_trend},
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  for (int id : opts.only)
    require(id >= 1 && id <= acceptance_criteria, "acceptance: unknown criterion " + std::to_string(id));
  if (opts.threads > 0) set_default_threads(opts.threads);
  std::vector<CriterionResult> out;
  for (const Criterion& c : kCriteria) {
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), c.id) == opts.only.end()) continue;
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Verdict v = c.run(opts);
      r.passed = v.passed;
      r.detail = v.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = elapsed(t0);
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "[PASS] " : "[FAIL] ") << std::setw(2) << r.id << ' ' << r.name << " (" << std::fixed
    << std::setprecision(1) << r.seconds << " s): " << r.detail;
  return s.str();
}

}  // namespace strata
