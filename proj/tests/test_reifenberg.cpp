#include "support.hpp"
#include "strata/reifenberg.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>

using namespace strata;
using namespace testing_support;

namespace {

// Closed-ball beta^2 from the weighted covariance, computed with Eigen's solver.
double oracle_beta(const DiscreteMeasure& mu, const Vector& p, double r) {
  const int n = mu.dim(), k = mu.k;
  double mass = 0.0;
  Vector m = Vector::Zero(n);
  for (const Atom& a : mu.atoms)
    if ((a.x - p).norm() <= r) mass += std::pow(a.tau, k), m += std::pow(a.tau, k) * a.x;
  if (mass == 0.0) return 0.0;
  m /= mass;
  Matrix S = Matrix::Zero(n, n);
  for (const Atom& a : mu.atoms)
    if ((a.x - p).norm() <= r) S += std::pow(a.tau, k) * (a.x - m) * (a.x - m).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  double tail = 0.0;
  for (int i = 0; i < n - k; ++i) tail += std::max(0.0, es.eigenvalues()[i]);
  return tail / std::pow(r, k + 2);
}

// Double loop over atoms and all 40 dyadic levels from l on.
double oracle_sum(const DiscreteMeasure& mu, const Vector& x, int l) {
  double s = 0.0;
  for (const Atom& z : mu.atoms) {
    if ((z.x - x).norm() > 2.0 * std::ldexp(1.0, -l)) continue;
    for (int i = l; i < l + 40; ++i) s += std::pow(z.tau, mu.k) * oracle_beta(mu, z.x, 16.0 * std::ldexp(1.0, -i));
  }
  return s;
}

DiscreteMeasure circle_family(int count, double tau) {
  DiscreteMeasure mu;
  mu.k = 1;
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * i / count;
    mu.atoms.push_back({vec({std::cos(t), std::sin(t)}), tau});
  }
  return mu;
}

// Disjoint family with dyadic radii 2^-3..2^-6 scattered in the unit ball.
DiscreteMeasure mixed_family(std::mt19937_64& rng, int n, int k) {
  DiscreteMeasure mu;
  mu.k = k;
  std::uniform_int_distribution<int> level(3, 6);
  for (int tries = 0; tries < 2000 && mu.atoms.size() < 60; ++tries) {
    const Atom a{random_point(rng, n, 1.0), std::ldexp(1.0, -level(rng))};
    bool ok = true;
    for (const Atom& b : mu.atoms) ok = ok && (a.x - b.x).norm() >= a.tau + b.tau;
    if (ok) mu.atoms.push_back(a);
  }
  return mu;
}

}  // namespace

TEST_SUITE("reifenberg") {

TEST_CASE("collinear families have a vanishing hypothesis sum") {
  const DiscreteMeasure seg = lattice_family(2, 1, std::ldexp(1.0, -6), 3 * std::ldexp(1.0, -6), 0.5);
  for (int l = 0; l <= truncation_level(seg); ++l)
    for (const Vector& x : {vec({0.0, 0.0}), vec({0.2, 0.01}), seg.atoms.front().x})
      CHECK(std::abs(hypothesis_sum(seg, x, l, 0.1).sum) <= 1e-12);
}

TEST_CASE("a single atom has a vanishing hypothesis sum") {
  DiscreteMeasure one;
  one.k = 1;
  one.atoms = {{vec({0.1, 0.2}), 0.3}};
  for (int l = 0; l < 6; ++l) CHECK(hypothesis_sum(one, vec({0.0, 0.0}), l, 0.1).sum == 0.0);
}

TEST_CASE("circle family sum matches a direct double loop") {
  const DiscreteMeasure circle = circle_family(64, 0.02);
  for (const Vector& x : {vec({1.0, 0.0}), vec({0.0, 0.9}), vec({-0.7, -0.7})}) {
    const HypothesisSum h = hypothesis_sum(circle, x, 3, 0.1);
    CHECK(h.sum > 0.0);
    CHECK(h.sum == doctest::Approx(oracle_sum(circle, x, 3)).epsilon(1e-10));
    CHECK(h.ratio == doctest::Approx(h.sum / 0.125).epsilon(1e-15));
  }
}

TEST_CASE("the trigger follows the mass and containment conditions") {
  const DiscreteMeasure seg = lattice_family(2, 1, std::ldexp(1.0, -6), 3 * std::ldexp(1.0, -6), 0.5);
  const HypothesisSum inside = hypothesis_sum(seg, vec({0.0, 0.0}), 2, 0.1);
  CHECK(inside.triggered);
  CHECK(inside.mass == doctest::Approx(seg.mass(vec({0.0, 0.0}), 0.25)));
  CHECK_FALSE(hypothesis_sum(seg, vec({1.9, 0.0}), 2, 0.1).triggered);  // B_{1/4} leaves B_2
  CHECK_FALSE(hypothesis_sum(seg, vec({0.0, 0.5}), 3, 0.1).triggered);  // no mass nearby
}

TEST_CASE("segment family packing arithmetic") {
  const double tau = std::ldexp(1.0, -6);
  const DiscreteMeasure seg = lattice_family(2, 1, tau, 3 * tau, 0.5);
  const int count = 2 * static_cast<int>(std::floor(0.5 / (3 * tau))) + 1;
  REQUIRE(static_cast<int>(seg.atoms.size()) == count);
  const PackingReport rep = packing_report(seg);
  CHECK(rep.mass_B1 == doctest::Approx(count * tau).epsilon(1e-14));
  CHECK(rep.mass_B1 <= 0.4);
  CHECK(rep.worst_ratio <= 1e-12);
  CHECK(rep.triggered > 0);
  CHECK(rep.hypothesis_holds(1e-3));
}

TEST_CASE("jittered segment keeps its mass and gains a positive sum") {
  const double tau = std::ldexp(1.0, -6);
  const DiscreteMeasure flat = lattice_family(2, 1, tau, 3 * tau, 0.5);
  const DiscreteMeasure jit = lattice_family(2, 1, tau, 3 * tau, 0.5, 0.1 * tau, 4);
  const PackingReport a = packing_report(flat), b = packing_report(jit);
  CHECK(b.worst_ratio > 0.0);
  CHECK(b.mass_B1 <= 2.0 * a.mass_B1);
}

TEST_CASE("one unit ball at the origin has unit mass") {
  DiscreteMeasure one;
  one.k = 2;
  one.atoms = {{vec({0.0, 0.0, 0.0}), 1.0}};
  CHECK(packing_report(one).mass_B1 == 1.0);
}

TEST_CASE("overlapping families are rejected") {
  DiscreteMeasure bad;
  bad.k = 1;
  bad.atoms = {{vec({0.0, 0.0}), 0.1}, {vec({0.15, 0.0}), 0.1}};
  CHECK_THROWS_AS(packing_report(bad), InvalidArgument);
}

TEST_CASE("truncated measures agree with the full measure at matched scales") {
  std::mt19937_64 rng(41);
  for (int n = 2; n <= 3; ++n) {
    const DiscreteMeasure mu = mixed_family(rng, n, 1);
    REQUIRE(pairwise_disjoint(mu.atoms));
    for (int i = 2; i <= 6; ++i)
      for (int j = i; j <= 7; ++j) {
        const DiscreteMeasure mi = truncate(mu, dyadic(i)), mj = truncate(mu, dyadic(j));
        for (const Atom& a : mj.atoms) {
          const double bi = beta_number(mi, a.x, dyadic(j)).beta_sq;
          const double bj = beta_number(mj, a.x, dyadic(j)).beta_sq;
          CHECK(std::abs(bi - bj) <= 1e-12);
        }
      }
  }
}

TEST_CASE("mass in the unit ball ignores atom order") {
  std::mt19937_64 rng(43);
  DiscreteMeasure mu = mixed_family(rng, 2, 1);
  const double before = packing_report(mu).mass_B1;
  std::shuffle(mu.atoms.begin(), mu.atoms.end(), rng);
  CHECK(packing_report(mu).mass_B1 == doctest::Approx(before).epsilon(1e-15));
}

TEST_CASE("packing reports do not depend on the thread count") {
  const DiscreteMeasure circle = circle_family(48, 0.02);
  PackingOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const PackingReport a = packing_report(circle, one), b = packing_report(circle, many);
  CHECK(a.worst_ratio == b.worst_ratio);
  CHECK(a.scan_size == b.scan_size);
  CHECK(a.triggered == b.triggered);
  const auto j = packing_report_json(a);
  CHECK(j.at("schema") == 1);
  CHECK(j.at("scan_size") == a.scan_size);
}

TEST_CASE("lattice families are disjoint k-dimensional grids") {
  const DiscreteMeasure plane = lattice_family(3, 2, 0.02, 0.1, 0.5);
  CHECK(pairwise_disjoint(plane.atoms));
  int expect = 0;
  for (int a = -5; a <= 5; ++a)
    for (int b = -5; b <= 5; ++b) expect += (a * a + b * b) * 0.01 <= 0.25 + 1e-12;
  CHECK(static_cast<int>(plane.atoms.size()) == expect);
  for (const Atom& at : plane.atoms) CHECK(at.x[2] == 0.0);
  CHECK(lattice_family(2, 0, 0.5, 1.0, 0.0).atoms.size() == 1);
}

}
