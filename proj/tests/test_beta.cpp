#include "support.hpp"
#include "strata/beta.hpp"
#include "strata/fields.hpp"
#include "strata/frequency.hpp"
#include "strata/spatial_index.hpp"

#include <doctest.h>

#include <numbers>

using namespace strata;
using namespace testing_support;

namespace {

DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int k, int atoms, double spread = 1.0) {
  std::uniform_real_distribution<double> tau(0.05, 1.0);
  DiscreteMeasure mu;
  mu.k = k;
  for (int i = 0; i < atoms; ++i) mu.atoms.push_back({random_point(rng, n, spread), tau(rng)});
  return mu;
}

// Measure supported on a random affine k-plane through the unit ball.
DiscreteMeasure planar_measure(std::mt19937_64& rng, int n, int k, int atoms) {
  const Matrix R = random_rotation(rng, n);
  const Vector base = random_point(rng, n, 0.2);
  std::uniform_real_distribution<double> coef(-0.4, 0.4), tau(0.1, 1.0);
  DiscreteMeasure mu;
  mu.k = k;
  for (int i = 0; i < atoms; ++i) {
    Vector x = base;
    for (int j = 0; j < k; ++j) x += coef(rng) * R.col(j);
    mu.atoms.push_back({x, tau(rng)});
  }
  return mu;
}

// Independent planar oracle: lines through the weighted mean, angle grid then golden refinement.
double line_oracle_2d(const DiscreteMeasure& mu, const Vector& p, double r) {
  std::vector<Vector> y;
  std::vector<double> w;
  Vector m = Vector::Zero(2);
  double mass = 0.0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if ((mu.atoms[i].x - p).norm() <= r) {
      y.push_back(mu.atoms[i].x);
      w.push_back(std::pow(mu.atoms[i].tau, mu.k));
      m += w.back() * y.back();
      mass += w.back();
    }
  if (y.empty()) return 0.0;
  m /= mass;
  auto f = [&](double t) {
    const double nx = -std::sin(t), ny = std::cos(t);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = nx * (y[i][0] - m[0]) + ny * (y[i][1] - m[1]);
      s += w[i] * d * d;
    }
    return s / std::pow(r, 3);
  };
  const int grid = 4000;
  int best = 0;
  for (int i = 1; i < grid; ++i)
    if (f(std::numbers::pi * i / grid) < f(std::numbers::pi * best / grid)) best = i;
  double a = std::numbers::pi * (best - 1) / grid, b = std::numbers::pi * (best + 1) / grid;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    (f(c) < f(d) ? b : a) = (f(c) < f(d) ? d : c);
  }
  return f(0.5 * (a + b));
}

HarmonicPolynomial saddle3() { return monomials(3, 2, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, -1.0}}); }

}  // namespace

TEST_SUITE("beta") {

TEST_CASE("kd-tree queries agree with brute force") {
  std::mt19937_64 rng(11);
  for (int n = 1; n <= 4; ++n) {
    std::vector<Vector> pts;
    for (int i = 0; i < 300; ++i) pts.push_back(random_point(rng, n, 1.0));
    pts.push_back(pts[5]);  // duplicate point
    const KdTree tree(pts);
    for (int q = 0; q < 40; ++q) {
      const Vector x = random_point(rng, n, 1.2);
      const double rad = 0.05 + 0.4 * (q % 5) / 4.0;
      std::vector<std::size_t> expect;
      std::size_t nearest = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if ((pts[i] - x).norm() <= rad) expect.push_back(i);
        if ((pts[i] - x).norm() < (pts[nearest] - x).norm()) nearest = i;
      }
      CHECK(tree.within(x, rad) == expect);
      CHECK(tree.any_within(x, rad) == !expect.empty());
      const auto [idx, dist] = tree.nearest(x);
      CHECK(idx == nearest);
      CHECK(dist == doctest::Approx((pts[nearest] - x).norm()).epsilon(1e-15));
    }
  }
  CHECK(KdTree().within(vec({0.0}), 1.0).empty());
  CHECK_THROWS_AS(KdTree().nearest(vec({0.0})), InvalidArgument);
}

TEST_CASE("jacobi eigen-decomposition matches a reference solver") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int n = 1; n <= 8; ++n) {
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
    A = A * A.transpose();
    const SymmetricEigen e = jacobi_eigen(A);
    Eigen::SelfAdjointEigenSolver<Matrix> ref(A);
    for (int i = 0; i < n; ++i) {
      CHECK(e.values[i] == doctest::Approx(ref.eigenvalues()[n - 1 - i]).epsilon(1e-12).scale(A.norm()));
      CHECK((A * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm() <= 1e-12 * A.norm());
      if (i > 0) CHECK(e.values[i] <= e.values[i - 1]);
    }
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm() <= 1e-12);
  }
  // Repeated eigenvalues keep the deterministic sign convention.
  const SymmetricEigen id = jacobi_eigen(Matrix::Identity(3, 3) * 2.0);
  CHECK(id.vectors == Matrix::Identity(3, 3));
}

TEST_CASE("worked beta examples") {
  DiscreteMeasure line;
  line.k = 1;
  for (int i = 0; i < 7; ++i) line.atoms.push_back({vec({0.1 * i, 0.2 * i + 0.05}), 0.03});
  CHECK(beta_number(line, vec({0.2, 0.4}), 0.5).beta_sq <= 1e-12);
  CHECK(beta_bruteforce(line, vec({0.2, 0.4}), 0.5, 1) <= 1e-12);

  DiscreteMeasure two;
  two.k = 0;
  two.atoms = {{vec({0.0, 0.0}), 1.0}, {vec({1.0, 0.0}), 1.0}};
  const BetaResult b = beta_number(two, vec({0.5, 0.0}), 1.0);
  CHECK(b.beta_sq == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b.X.isApprox(vec({0.5, 0.0})));
  CHECK(beta_bruteforce(two, vec({0.5, 0.0}), 1.0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  DiscreteMeasure one;
  one.atoms = {{vec({0.3, -0.1, 0.2}), 0.5}};
  for (int k = 0; k <= 3; ++k) {
    one.k = k;
    CHECK(beta_number(one, vec({0.0, 0.0, 0.0}), 1.0, k).beta_sq == 0.0);
    CHECK(beta_bruteforce(one, vec({0.0, 0.0, 0.0}), 1.0, k) <= 1e-14);
  }
}

TEST_CASE("empty balls give zero with a flag") {
  DiscreteMeasure mu;
  mu.k = 1;
  mu.atoms = {{vec({1.0, 1.0}), 0.1}};
  const BetaResult b = beta_number(mu, vec({0.0, 0.0}), 0.5);
  CHECK(b.empty);
  CHECK(b.beta_sq == 0.0);
  CHECK(beta_bruteforce(mu, vec({0.0, 0.0}), 0.5, 1) == 0.0);
}

TEST_CASE("closed balls include atoms on the boundary") {
  DiscreteMeasure mu;
  mu.k = 0;
  mu.atoms = {{vec({0.0, 0.0}), 1.0}, {vec({1.0, 0.0}), 1.0}};
  CHECK(beta_number(mu, vec({0.0, 0.0}), 1.0).count == 2);
  CHECK(mu.mass(vec({0.0, 0.0}), 1.0) == 2.0);
}

TEST_CASE("beta equals the defining functional at the eigen plane") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 3, k = trial % n;
    const DiscreteMeasure mu = random_measure(rng, n, k, 5 + trial % 20);
    const Vector p = random_point(rng, n, 0.3);
    const BetaResult b = beta_number(mu, p, 0.9, k);
    CHECK(b.beta_sq == doctest::Approx(plane_functional(mu, p, 0.9, b.X, b.plane)).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("brute-force search matches the eigen identity") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 2 + trial % 3, k = trial % n;
    const DiscreteMeasure mu = random_measure(rng, n, k, 2 + trial % 49);
    const Vector p = random_point(rng, n, 0.3);
    const double eig = beta_number(mu, p, 0.8, k).beta_sq;
    const double bf = beta_bruteforce(mu, p, 0.8, k);
    CHECK_MESSAGE(std::abs(bf - eig) <= 1e-6, "trial " << trial << " n " << n << " k " << k << " " << bf << " " << eig);
    CHECK(bf >= eig - 1e-10);
  }
}

TEST_CASE("planar lines agree with an angle-scan oracle") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const DiscreteMeasure mu = random_measure(rng, 2, 1, 3 + trial);
    const double oracle = line_oracle_2d(mu, vec({0.0, 0.0}), 0.7);
    CHECK(beta_number(mu, vec({0.0, 0.0}), 0.7).beta_sq == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("random 10-atom measures in R^3 with k = 2") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const DiscreteMeasure mu = random_measure(rng, 3, 2, 10);
    const Vector p = vec({0.0, 0.0, 0.0});
    CHECK(beta_bruteforce(mu, p, 1.0, 2) >= beta_number(mu, p, 1.0, 2).beta_sq - 1e-10);
  }
}

TEST_CASE("measures on k-planes have zero beta") {
  std::mt19937_64 rng(19);
  for (int n = 2; n <= 4; ++n)
    for (int k = 0; k < n; ++k)
      for (int trial = 0; trial < 5; ++trial) {
        const DiscreteMeasure mu = planar_measure(rng, n, k, 12);
        const Vector p = Vector::Zero(n);
        CHECK(beta_number(mu, p, 1.0, k).beta_sq <= 1e-12);
        if (k == 2) CHECK(beta_bruteforce(mu, p, 1.0, k) <= 1e-12);
      }
}

TEST_CASE("beta is invariant under rigid motions") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 3, k = trial % n;
    const DiscreteMeasure mu = random_measure(rng, n, k, 15);
    const Vector p = random_point(rng, n, 0.2);
    const Matrix R = random_rotation(rng, n);
    const Vector t = random_point(rng, n, 3.0);
    DiscreteMeasure moved = mu;
    for (Atom& a : moved.atoms) a.x = R * a.x + t;
    const double before = beta_number(mu, p, 0.75, k).beta_sq;
    const double after = beta_number(moved, R * p + t, 0.75, k).beta_sq;
    CHECK(std::abs(before - after) <= 1e-10);
  }
}

TEST_CASE("beta scales by s^-k when the measure and radius are scaled") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3, k = trial % n;
    const DiscreteMeasure mu = random_measure(rng, n, k, 12);
    const Vector p = random_point(rng, n, 0.2);
    for (double s : {0.25, 3.0}) {
      DiscreteMeasure scaled = mu;
      for (Atom& a : scaled.atoms) a.x *= s;
      const double base = beta_number(mu, p, 0.8, k).beta_sq;
      CHECK(beta_number(scaled, s * p, s * 0.8, k).beta_sq ==
            doctest::Approx(base * std::pow(s, -k)).epsilon(1e-12).scale(1e-300));
    }
  }
}

TEST_CASE("adding an atom on the optimal plane does not raise the infimum") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3, k = 1 + trial % (n - 1);
    DiscreteMeasure mu = random_measure(rng, n, k, 10, 0.6);
    const Vector p = Vector::Zero(n);
    const BetaResult b = beta_number(mu, p, 1.0, k);
    const double before = beta_bruteforce(mu, p, 1.0, k);
    Vector y = b.X + 0.1 * b.plane.col(0);
    mu.atoms.push_back({y, 0.5});
    CHECK(beta_bruteforce(mu, p, 1.0, k) <= before + 1e-10);
  }
}

TEST_CASE("measure JSON round-trips and validation catches overlaps") {
  DiscreteMeasure mu;
  mu.k = 1;
  mu.disjoint = true;
  mu.atoms = {{vec({0.0, 0.0}), 0.1}, {vec({0.3, 0.0}), 0.1}};
  const DiscreteMeasure back = measure_from_json(nlohmann::json::parse(measure_to_json(mu).dump()));
  REQUIRE(back.atoms.size() == 2);
  CHECK(back.k == 1);
  CHECK(back.atoms[1].x == mu.atoms[1].x);
  CHECK(back.atoms[1].tau == 0.1);
  CHECK(back.disjoint);

  mu.atoms.push_back({vec({0.35, 0.0}), 0.1});
  CHECK_FALSE(pairwise_disjoint(mu.atoms));
  CHECK_THROWS_AS(mu.validate(), InvalidArgument);
  CHECK_THROWS_AS(measure_from_json(measure_to_json(mu)), InvalidArgument);
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"k":1,"atoms":[],"extra":0})")), InvalidArgument);
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"k":1,"atoms":[{"x":[0],"tau":2}]})")), InvalidArgument);
  CHECK_THROWS_AS(measure_from_json(nlohmann::json::parse(R"({"k":1,"atoms":[{"x":[0,0]},{"x":[1],"tau":1}]})")),
                  InvalidArgument);
}

TEST_CASE("pairwise disjointness matches a direct double loop") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> tau(0.01, 0.08);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Atom> atoms;
    for (int i = 0; i < 40; ++i) atoms.push_back({random_point(rng, 2, 1.0), tau(rng)});
    bool expect = true;
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t j = i + 1; j < atoms.size(); ++j)
        if ((atoms[i].x - atoms[j].x).norm() < atoms[i].tau + atoms[j].tau) expect = false;
    CHECK(pairwise_disjoint(atoms) == expect);
  }
}

TEST_CASE("beta against the frequency drop for the saddle") {
  const FieldPtr v = make_polynomial(saddle3());
  DiscreteMeasure axis;
  axis.k = 1;
  for (int i = -4; i <= 4; ++i) axis.atoms.push_back({vec({0.0, 0.0, 0.05 * i}), 0.01});
  const Vector p = vec({0.0, 0.0, 0.0});
  const BetaFrequencyCheck on = beta_frequency_inequality_check(*v, axis, p, 0.25, 0.05);
  CHECK(on.lhs_beta_sq <= 1e-14);
  CHECK(on.drop_integral >= -1e-8);
  CHECK(on.zero_symmetric);
  CHECK(on.not_next_symmetric);

  DiscreteMeasure off = axis;
  for (std::size_t i = 0; i < off.atoms.size(); ++i) off.atoms[i].x[i % 2] += (i % 3 == 0 ? 0.05 : -0.05);
  const BetaFrequencyCheck moved = beta_frequency_inequality_check(*v, off, p, 0.25, 0.05);
  CHECK(moved.lhs_beta_sq > 0.0);
  CHECK(moved.drop_integral > 0.0);
  // Direct recomputation of the drop integral.
  double drop = 0.0;
  for (const Atom& a : off.atoms)
    drop += std::pow(a.tau, 1) * (frequency(*v, a.x, 2.0) - frequency(*v, a.x, 0.25));
  CHECK(moved.drop_integral == doctest::Approx(drop / 0.25).epsilon(1e-10));

  DiscreteMeasure single;
  single.k = 1;
  single.atoms = {{vec({0.02, 0.0, 0.1}), 0.01}};
  CHECK(beta_frequency_inequality_check(*v, single, p, 0.25, 0.05).lhs_beta_sq == 0.0);

  std::vector<BetaFrequencyCheck> family{on, moved};
  const BetaFrequencyFit fit = fit_beta_frequency(family, {0.25, 0.25}, 1.0);
  CHECK(fit.used >= 1);
  CHECK(moved.lhs_beta_sq <= fit.C * family[1].rhs_bound * (1 + 1e-12));
}

}
