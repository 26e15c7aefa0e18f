#include "support.hpp"
#include "strata/frequency.hpp"
#include "strata/stratify.hpp"
#include "strata/symmetry.hpp"

#include <doctest.h>

#include <numbers>
#include <sstream>

using namespace strata;
using namespace testing_support;

namespace {

HarmonicPolynomial saddle3() { return monomials(3, 2, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, -1.0}}); }

// Ball-average nodes in R^3 from spherical coordinates: 4-point radial Gauss rule and
// midpoint rules in both angles.
struct BallGrid3 {
  std::vector<Vector> y;
  std::vector<double> w;
};

BallGrid3 ball_grid3(int n_theta = 60, int n_phi = 120) {
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  BallGrid3 g;
  double total = 0.0;
  for (int a = 0; a < 4; ++a) {
    const double r = 0.5 * (gx[a] + 1.0);
    for (int i = 0; i < n_theta; ++i) {
      const double th = std::numbers::pi * (i + 0.5) / n_theta;
      for (int j = 0; j < n_phi; ++j) {
        const double ph = 2.0 * std::numbers::pi * (j + 0.5) / n_phi;
        g.y.push_back(vec({r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th)}));
        const double w = gw[a] * r * r * std::sin(th);
        g.w.push_back(w);
        total += w;
      }
    }
  }
  for (double& w : g.w) w /= total;
  return g;
}

// Sphere mean of f over S^2 by the midpoint rule in both angles.
double sphere_mean3(const std::function<double(const Vector&)>& f, int n_theta = 200, int n_phi = 400) {
  double s = 0.0, total = 0.0;
  for (int i = 0; i < n_theta; ++i) {
    const double th = std::numbers::pi * (i + 0.5) / n_theta;
    for (int j = 0; j < n_phi; ++j) {
      const double ph = 2.0 * std::numbers::pi * (j + 0.5) / n_phi;
      const double w = std::sin(th);
      s += w * f(vec({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)}));
      total += w;
    }
  }
  return s / total;
}

// Minimum over unit w and hinge c > 0 of the ball average |g - M|^2, M the sphere-normalized
// model c (w.y)^+ - (w.y)^-. Uses avg_S (w.y)^2 = 1/3, avg_S (w.y)|w.y| = 0 and
// avg_B M^2 = 3/5 for a normalized 1-homogeneous model.
double oracle_linear_hinge_distance(const std::function<double(const Vector&)>& g, int n_dirs = 3000) {
  const BallGrid3 grid = ball_grid3();
  std::vector<double> gv(grid.y.size());
  double g2 = 0.0;
  for (std::size_t i = 0; i < grid.y.size(); ++i) {
    gv[i] = g(grid.y[i]);
    g2 += grid.w[i] * gv[i] * gv[i];
  }
  double best = 1e300;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n_dirs; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / n_dirs;
    const double rr = std::sqrt(1.0 - z * z);
    const Vector w = vec({rr * std::cos(golden * k), rr * std::sin(golden * k), z});
    double A = 0.0, B = 0.0;
    for (std::size_t i = 0; i < grid.y.size(); ++i) {
      const double t = w.dot(grid.y[i]);
      A += grid.w[i] * gv[i] * t;
      B += grid.w[i] * gv[i] * std::abs(t);
    }
    for (int j = 0; j <= 800; ++j) {
      const double c = std::pow(10.0, -4.0 + 8.0 * j / 800.0);
      const double cross = (0.5 * (c + 1.0) * A + 0.5 * (c - 1.0) * B) / std::sqrt((c * c + 1.0) / 6.0);
      best = std::min(best, g2 - 2.0 * cross + 0.6);
    }
  }
  return best;
}

// T_{p,s} v for the saddle x^2 - y^2, with the normalizer from an independent sphere mean.
std::function<double(const Vector&)> rescaled_saddle(const Vector& p, double s) {
  auto v = [](const Vector& x) { return x[0] * x[0] - x[1] * x[1]; };
  const double vp = v(p);
  const double norm = std::sqrt(sphere_mean3([&](const Vector& y) { return std::pow(v(p + s * y) - vp, 2); }));
  return [=](const Vector& y) { return (v(p + s * y) - vp) / norm; };
}

double model_sphere_mean_square(const SymmetryFit& fit) {
  const int n = fit.P.dim();
  const FieldPtr model = fit.c == 1.0 ? make_polynomial(fit.P) : make_hinged(fit.P, fit.c);
  const NodeSet s = sphere_nodes(*model, Vector::Zero(n), 1.0, 32);
  double ms = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) ms += s.weights[i] * std::pow(fit.model(s.point(i)), 2);
  return ms / s.total_weight();
}

double max_derivative_along(const SymmetryFit& fit, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Vector y = random_point(rng, fit.P.dim(), 1.0);
    const Vector g = fit.P.grad(y);
    for (int j = 0; j < fit.V.cols(); ++j) worst = std::max(worst, std::abs(g.dot(fit.V.col(j))));
  }
  return worst;
}

}  // namespace

TEST_SUITE("symmetry") {
  TEST_CASE("saddle is 1-symmetric along the third axis") {
    const FieldPtr v = make_polynomial(saddle3());
    const auto fit = nearest_k_symmetric(*v, Vector::Zero(3), 1.0, 1);
    CHECK(fit.distance < 1e-6);
    CHECK(fit.degree == 2);
    CHECK(fit.c == doctest::Approx(1.0).epsilon(1e-6));
    REQUIRE(fit.V.cols() == 1);
    CHECK(std::abs(fit.V(2, 0)) == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("one-sided linear field recovers the 1:2 branch ratio on its spine") {
    const FieldPtr v = make_hinged(coordinate(4, 3), 0.5);
    const auto fit = nearest_k_symmetric(*v, vec({0.1, -0.2, 0.05, 0.0}), 0.3, 3);
    CHECK(fit.distance < 1e-6);
    CHECK(fit.c == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.degree == 1);
    CHECK(is_symmetric(*v, vec({0.0, 0.1, 0.0, 0.0}), 0.05, 3, 1e-6));
  }

  TEST_CASE("saddle has no 2-symmetric model; the gap matches an exhaustive search") {
    const FieldPtr v = make_polynomial(saddle3());
    const auto fit = nearest_k_symmetric(*v, Vector::Zero(3), 1.0, 2);
    const double oracle = oracle_linear_hinge_distance(rescaled_saddle(Vector::Zero(3), 1.0));
    CHECK(oracle > 0.5);
    CHECK(fit.distance <= 2.0 * oracle);
    CHECK(fit.distance >= 0.99 * oracle);
    CHECK_FALSE(is_symmetric(*v, Vector::Zero(3), 1.0, 2, 0.01));
  }

  TEST_CASE("off-centre saddle: 2-symmetry distance agrees with the exhaustive search") {
    const FieldPtr v = make_polynomial(saddle3());
    const Vector p = vec({0.3, 0.1, -0.2});
    const auto fit = nearest_k_symmetric(*v, p, 0.5, 2);
    const double oracle = oracle_linear_hinge_distance(rescaled_saddle(p, 0.5));
    CHECK(fit.distance <= 2.0 * oracle);
    CHECK(fit.distance >= 0.99 * oracle);
  }

  TEST_CASE("linear fields are (n-1)-symmetric everywhere") {
    std::mt19937_64 rng(3);
    for (int n : {2, 3, 4}) {
      const FieldPtr v = make_polynomial(random_harmonic(rng, n, 1));
      for (int t = 0; t < 3; ++t) CHECK(is_symmetric(*v, random_point(rng, n, 0.5), 0.25, n - 1, 0.01));
    }
  }

  TEST_CASE("exact hinged homogeneous fields are 0-symmetric at the hinge origin") {
    std::mt19937_64 rng(5);
    for (int n : {2, 3, 4})
      for (int d : {1, 2, 3}) {
        Frame frame{random_rotation(rng, n), Vector::Zero(n)};
        const FieldPtr v = make_hinged(random_harmonic(rng, n, d), 2.5, frame);
        const auto fit = nearest_k_symmetric(*v, Vector::Zero(n), 0.7, 0);
        CHECK(fit.distance < 1e-8);
        CHECK(fit.degree == d);
        CHECK(is_symmetric(*v, Vector::Zero(n), 0.7, 0, 1e-6));
      }
  }

  TEST_CASE("fits are sphere-normalized and invariant along V") {
    std::mt19937_64 rng(9);
    const FieldPtr saddle = make_polynomial(saddle3());
    const FieldPtr hinged = make_hinged(random_harmonic(rng, 3, 2), 3.0);
    for (const FieldPtr& v : {saddle, hinged})
      for (int k = 0; k <= 2; ++k) {
        const auto fit = nearest_k_symmetric(*v, vec({0.1, 0.05, -0.1}), 0.6, k);
        CHECK(model_sphere_mean_square(fit) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(max_derivative_along(fit, rng) < 1e-8);
        CHECK((fit.V.transpose() * fit.V - Matrix::Identity(k, k)).norm() < 1e-10);
      }
  }

  TEST_CASE("distances are monotone in k") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 4; ++trial) {
      const int n = 3;
      const FieldPtr v = make_sum({make_hinged(random_harmonic(rng, n, 2), 1.7),
                                   make_polynomial(random_harmonic(rng, n, 1))});
      const SymmetryTarget target(*v, random_point(rng, n, 0.25), 0.5, 0);
      const auto dist = symmetry_distances(target, 0, {});
      for (int k = 0; k < n; ++k) CHECK(dist[k + 1] >= dist[k] - 1e-10);
    }
  }

  TEST_CASE("distance is invariant under positive scaling and consistent rotation") {
    std::mt19937_64 rng(13);
    const HarmonicPolynomial P = random_harmonic(rng, 3, 2);
    const FieldPtr v = make_hinged(P, 2.0);
    const FieldPtr scaled = compose_affine(v, 3.7, 1.0, 0.0);
    const Matrix R = random_rotation(rng, 3);
    const FieldPtr rotated = make_hinged(P, 2.0, Frame{R, Vector::Zero(3)});
    const Vector p = vec({0.1, -0.05, 0.02});
    for (int k = 0; k <= 3; ++k) {
      const double base = nearest_k_symmetric(*v, p, 0.5, k).distance;
      CHECK(nearest_k_symmetric(*scaled, p, 0.5, k).distance == doctest::Approx(base).epsilon(1e-8));
      // the rotated field at R^T p sees the same rescaled field up to rotation
      const double rot = nearest_k_symmetric(*rotated, R.transpose() * p, 0.5, k).distance;
      CHECK(std::abs(rot - base) <= 1e-8 + 1e-6 * base);
    }
  }

  TEST_CASE("fits are deterministic") {
    const FieldPtr v = make_sum({make_polynomial(saddle3()), make_polynomial(coordinate(3, 2))});
    const auto a = nearest_k_symmetric(*v, vec({0.1, 0.2, 0.0}), 0.5, 1);
    const auto b = nearest_k_symmetric(*v, vec({0.1, 0.2, 0.0}), 0.5, 1);
    CHECK(a.distance == b.distance);
    CHECK(a.c == b.c);
    CHECK((a.V - b.V).norm() == 0.0);
  }

  TEST_CASE("constant fields are degenerate") {
    HomogeneousPolynomial one(3, 0);
    one.coeffs()[0] = 2.0;
    const FieldPtr v = make_polynomial(HarmonicPolynomial::from_monomials(one));
    CHECK_THROWS_AS(nearest_k_symmetric(*v, Vector::Zero(3), 0.5, 1), DegenerateRescaling);
    CHECK_THROWS_AS(nearest_k_symmetric(*make_polynomial(saddle3()), Vector::Zero(3), 0.5, 4), InvalidArgument);
  }

  TEST_CASE("rigidity: exact homogeneous hinged field") {
    std::mt19937_64 rng(17);
    const FieldPtr v = make_hinged(random_harmonic(rng, 3, 2), 2.0);
    const auto rep = rigidity_check(*v, Vector::Zero(3), 0.25);
    CHECK(std::abs(rep.drop) < 1e-10);
    CHECK(rep.distance0 < 1e-6);
  }

  TEST_CASE("rigidity: degree 1 plus degree 3 mixtures") {
    // v = P1 + b P3 with unit sphere mean squares; N(r) = (1 + 3 b^2 r^4) / (1 + b^2 r^4).
    HomogeneousPolynomial p1 = coordinate(3, 0).monomial_form();
    p1 *= std::sqrt(3.0);
    const HarmonicPolynomial P3 = monomials(3, 3, {{{0, 0, 3}, 1.0}, {{2, 0, 1}, -1.5}, {{0, 2, 1}, -1.5}});
    const double s3 = 1.0 / std::sqrt(P3.sphere_mean_square());
    const double gamma = 0.5;
    auto N = [](double b, double r) { return (1 + 3 * b * b * std::pow(r, 4)) / (1 + b * b * std::pow(r, 4)); };
    // distance of T_{0,1} v to the normalized P1: (alpha - 1)^2 3/5 + beta^2 3/9
    auto linear_distance = [](double b) {
      const double nrm = std::sqrt(1 + b * b);
      return std::pow(1.0 / nrm - 1.0, 2) * 0.6 + std::pow(b / nrm, 2) / 3.0;
    };
    double small_distance = 0.0;
    for (double b : {0.01, 1.0}) {
      HomogeneousPolynomial p3 = P3.monomial_form();
      p3 *= b * s3;
      const FieldPtr v = make_sum({make_polynomial(HarmonicPolynomial::from_monomials(p1)),
                                   make_polynomial(HarmonicPolynomial::from_monomials(p3))});
      const auto rep = rigidity_check(*v, Vector::Zero(3), gamma);
      CHECK(rep.drop == doctest::Approx(N(b, 1.0) - N(b, gamma)).epsilon(1e-8));
      CHECK(rep.distance0 <= linear_distance(b) + 1e-10);
      if (b < 0.5) {
        small_distance = rep.distance0;
        CHECK(rep.drop < 1e-3);
        CHECK(rep.distance0 < 1e-4);
      } else {
        CHECK(rep.drop > 0.5);
        CHECK(rep.distance0 > 100.0 * small_distance);
      }
    }
  }

  TEST_CASE("wiggle room") {
    const FieldPtr saddle = make_polynomial(saddle3());
    const auto s = wiggle_room_check(*saddle, Vector::Zero(3), 0.1, 0.05, 1);
    CHECK(s.min_frequency == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(s.precondition_ok);
    CHECK(s.margin > 0.0);

    const FieldPtr linear = make_polynomial(coordinate(3, 0));
    const auto l = wiggle_room_check(*linear, Vector::Zero(3), 0.1, 0.05, 1);
    CHECK(l.min_frequency == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_FALSE(l.precondition_ok);

    std::mt19937_64 rng(19);
    const FieldPtr hinged = make_hinged(random_harmonic(rng, 3, 2), 2.0);
    const auto h = wiggle_room_check(*hinged, Vector::Zero(3), 0.1, 0.05, 0);
    CHECK(std::abs(h.min_frequency - 2.0) < 1e-4);
  }

  TEST_CASE("cone splitting") {
    const HarmonicPolynomial P3 = saddle3();
    const auto degenerate = cone_splitting_check(P3, Vector::Unit(3, 2), Vector::Unit(3, 2));
    CHECK_FALSE(degenerate.precondition_ok);

    // x1^2 - x2^2 in R^4 is homogeneous about e4 and invariant along e3.
    const HarmonicPolynomial P4 = monomials(4, 2, {{{2, 0, 0, 0}, 1.0}, {{0, 2, 0, 0}, -1.0}});
    const auto four = cone_splitting_check(P4, Vector::Unit(4, 2), Vector::Unit(4, 3));
    CHECK(four.precondition_ok);
    CHECK(four.invariant);

    const auto linear = cone_splitting_check(coordinate(3, 0), Matrix::Zero(3, 0), Vector::Unit(3, 1));
    CHECK(linear.precondition_ok);
    CHECK(linear.invariant);

    const auto not_invariant = cone_splitting_check(P3, Vector::Unit(3, 0), Vector::Unit(3, 2));
    CHECK_FALSE(not_invariant.precondition_ok);
  }
}

TEST_SUITE("stratify") {
  TEST_CASE("scale set and lattice") {
    const auto s = scan_scales(0.125, 2.0);
    REQUIRE(s.size() == 4);
    CHECK(s.back() == doctest::Approx(1.0));
    CHECK_THROWS_AS(scan_scales(0.1, 1.0), InvalidArgument);
    // points of (1/8) Z^2 in the closed disk of radius 1/4: 1 + 4 + 4 + 4
    CHECK(lattice_in_ball(Vector::Zero(2), 0.25, 0.125).size() == 13);
  }

  TEST_CASE("linear field has an empty 1-stratum") {
    const FieldPtr v = make_polynomial(coordinate(3, 0));
    StratifyOptions opts;
    opts.eps = 0.05;
    opts.r = 1.0 / 64;
    const auto samples = stratify(*v, lattice_in_ball(Vector::Zero(3), 0.25, 0.125), opts);
    for (const auto& s : samples) {
      CHECK_FALSE(s.in_stratum[1]);
      CHECK_FALSE(s.in_stratum[0]);
    }
  }

  TEST_CASE("saddle 1-stratum concentrates on the axis") {
    const FieldPtr v = make_polynomial(saddle3());
    StratifyOptions opts;
    opts.eps = 0.05;
    opts.r = 1.0 / 128;
    const auto samples = stratify(*v, lattice_in_ball(Vector::Zero(3), 0.25, 1.0 / 16), opts);
    int on_axis = 0;
    for (const auto& s : samples) {
      const double axis = std::hypot(s.point[0], s.point[1]);
      if (axis < 1e-12) {
        ++on_axis;
        CHECK(s.in_stratum[1]);
      } else if (axis > 0.05) {
        CHECK_FALSE(s.in_stratum[1]);
      }
      for (int k = 0; k < 3; ++k) CHECK((!s.in_stratum[k] || s.in_stratum[k + 1]));
    }
    CHECK(on_axis == 9);
    // independent check at the smallest scale for the closest off-axis lattice points
    for (const Vector& p : {vec({0.0625, 0.0, 0.0}), vec({0.0625, 0.0625, 0.125})})
      CHECK(oracle_linear_hinge_distance(rescaled_saddle(p, opts.r), 600) < opts.eps);
    CHECK(oracle_linear_hinge_distance(rescaled_saddle(vec({0.0, 0.0, 0.125}), opts.r), 600) > opts.eps);
  }

  TEST_CASE("exhaustive scan agrees with the early-stopping scan") {
    const FieldPtr v = make_sum({make_polynomial(saddle3()), make_polynomial(coordinate(3, 2))});
    StratifyOptions fast;
    fast.eps = 0.05;
    fast.r = 0.25;
    StratifyOptions full = fast;
    full.exhaustive = true;
    for (const Vector& p : {vec({0.0, 0.0, 0.0}), vec({0.2, 0.0, 0.1}), vec({0.05, 0.05, 0.0})}) {
      const auto a = classify_point(*v, p, fast);
      const auto b = classify_point(*v, p, full);
      for (int k = 0; k <= 3; ++k) CHECK(a.in_stratum[k] == b.in_stratum[k]);
    }
  }

  TEST_CASE("csv layout") {
    const FieldPtr v = make_polynomial(coordinate(2, 0));
    StratifyOptions opts;
    opts.r = 0.5;
    const auto samples = stratify(*v, {Vector::Zero(2)}, opts);
    std::ostringstream out;
    write_stratify_csv(out, samples);
    const std::string text = out.str();
    CHECK(text.rfind("x0,x1,k,min_distance,scale,in_stratum\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }
}
