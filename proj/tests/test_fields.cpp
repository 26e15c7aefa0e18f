#include "support.hpp"
#include "strata/fields.hpp"
#include "strata/integration.hpp"

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <numbers>

using namespace strata;
using namespace testing_support;

namespace {

HarmonicPolynomial saddle2() { return monomials(2, 2, {{{2, 0}, 1.0}, {{0, 2}, -1.0}}); }
HarmonicPolynomial saddle3() { return monomials(3, 2, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, -1.0}}); }
Matrix rotation3(double a, double b) {
  Matrix Rz(3, 3), Rx(3, 3);
  Rz << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  Rx << 1, 0, 0, 0, std::cos(b), -std::sin(b), 0, std::sin(b), std::cos(b);
  return Rz * Rx;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("hinged field with unit hinge equals its polynomial") {
  std::mt19937_64 rng(1);
  for (int n = 2; n <= 4; ++n)
    for (int d = 1; d <= 4; ++d) {
      const HarmonicPolynomial p = random_harmonic(rng, n, d);
      const FieldPtr h = make_hinged(p, 1.0);
      const FieldPtr q = make_polynomial(p);
      for (int t = 0; t < 20; ++t) {
        const Vector x = random_point(rng, n, 2.0);
        CHECK(std::abs((*h)(x) - (*q)(x)) <= 1e-12 * std::max(1.0, std::abs((*q)(x))));
      }
    }
}

TEST_CASE("hinged field examples") {
  const FieldPtr v = make_hinged(saddle2(), 3.0);
  CHECK((*v)(vec({1.0, 0.0})) == doctest::Approx(3.0));
  CHECK((*v)(vec({0.0, 1.0})) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(make_hinged(saddle2(), 0.0), InvalidArgument);
  CHECK_THROWS_AS(make_hinged(saddle2(), -1.0), InvalidArgument);

  // Half-slope on the positive side, full slope on the negative side.
  const FieldPtr e = make_hinged(coordinate(4, 3), 0.5);
  CHECK((*e)(vec({0.1, 0.2, 0.3, 0.4})) == doctest::Approx(0.2));
  CHECK((*e)(vec({0.1, 0.2, 0.3, -0.4})) == doctest::Approx(-0.4));
  CHECK((*e)(vec({5.0, -2.0, 1.0, 0.0})) == 0.0);
}

TEST_CASE("hinged fields are positively homogeneous about their frame origin") {
  std::mt19937_64 rng(2);
  const Frame frame{rotation3(0.3, 1.1), vec({0.2, -0.1, 0.4})};
  for (int d = 1; d <= 4; ++d) {
    const HarmonicPolynomial p = random_harmonic(rng, 3, d);
    const FieldPtr v = make_hinged(p, 2.5, frame);
    for (int t = 0; t < 10; ++t) {
      const Vector x = random_point(rng, 3, 1.5);
      for (double s : {0.3, 1.7}) {
        const Vector y = frame.origin + s * (x - frame.origin);
        const double lhs = (*v)(y), rhs = std::pow(s, d) * (*v)(x);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
      }
    }
  }
}

TEST_CASE("hinged gradient matches finite differences away from the hinge") {
  std::mt19937_64 rng(4);
  const Frame frame{rotation3(-0.7, 0.4), vec({0.0, 0.1, 0.0})};
  const FieldPtr v = make_hinged(random_harmonic(rng, 3, 3), 1.7, frame);
  const double L = lipschitz_bound(*v, Vector::Zero(3), 2.0);
  const double h = 1e-6;
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const Vector x = random_point(rng, 3, 1.0);
    if (std::abs((*v)(x)) <= L * 1e-4) continue;
    const Vector g = v->grad(x);
    for (int i = 0; i < 3; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      CHECK(std::abs(g[i] - ((*v)(xp) - (*v)(xm)) / (2 * h)) < 1e-5 * std::max(1.0, L));
    }
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("fields are Lipschitz with the measured bound") {
  std::mt19937_64 rng(6);
  const FieldPtr v = make_hinged(random_harmonic(rng, 3, 2), 3.0);
  const double L = lipschitz_bound(*v, Vector::Zero(3), 2.0, 21);
  for (int t = 0; t < 500; ++t) {
    const Vector x = random_point(rng, 3, 2.0), y = random_point(rng, 3, 2.0);
    CHECK(std::abs((*v)(x) - (*v)(y)) <= L * (x - y).norm() * (1.0 + 1e-9));
  }
}

TEST_CASE("mollification examples") {
  HomogeneousPolynomial c(3, 0);
  c.coeffs()[0] = 5.0;
  const FieldPtr five = mollify(make_polynomial(HarmonicPolynomial::from_monomials(c)), 0.3);
  CHECK((*five)(vec({0.2, -1.0, 3.0})) == doctest::Approx(5.0).epsilon(1e-13));

  const FieldPtr x1 = mollify(make_polynomial(coordinate(3, 0)), 0.1);
  CHECK(std::abs((*x1)(vec({1.0, 0.0, 0.0})) - 1.0) < 1e-6);

  // Mean value property for a harmonic cubic away from its zero set.
  std::mt19937_64 rng(8);
  const FieldPtr cubic = make_polynomial(random_harmonic(rng, 3, 3));
  const FieldPtr mc = mollify(cubic, 0.2);
  const Vector x = vec({0.3, 0.5, -0.2});
  CHECK(std::abs((*mc)(x) - (*cubic)(x)) < 1e-6);
  const Vector g = mc->grad(x), g0 = cubic->grad(x);
  CHECK((g - g0).norm() < 1e-6);
}

TEST_CASE("mollified hinged linear field at a spine point matches a one-dimensional oracle") {
  const int n = 4;
  const double eps = 0.1, c = 0.5;
  const FieldPtr v = make_hinged(coordinate(n, n - 1), c);
  const double got = (*mollify(v, eps))(Vector::Zero(n));
  // Marginal of the bump along the last axis, up to a constant.
  auto marginal = [&](double t) {
    const double R = std::sqrt(std::max(0.0, 1.0 - t * t));
    return simpson([&](double s) { return s * s * (s * s < R * R ? std::exp(-1.0 / (R * R - s * s)) : 0.0); }, 0.0, R, 800);
  };
  auto field1d = [&](double z) { return z > 0 ? c * z : z; };
  const double num = simpson([&](double t) { return field1d(-eps * t) * marginal(t); }, -1.0, 1.0, 800);
  const double den = simpson([&](double t) { return marginal(t); }, -1.0, 1.0, 800);
  const double oracle = num / den;
  CHECK(std::abs(got) < eps);
  CHECK(std::abs(got - oracle) < 2e-3 * std::abs(oracle));
}

TEST_CASE("rescale normalizes to unit sphere mean square") {
  const FieldPtr v = make_polynomial(saddle2());
  const FieldPtr t = rescale(v, Vector::Zero(2), 2.0);
  CHECK(std::abs((*t)(Vector::Zero(2))) < 1e-15);
  const SphereRule& rule = sphere_rule(2, 16);
  double ms = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) ms += rule.weight(i) * std::pow(t->value(rule.node(i)), 2);
  CHECK(std::abs(ms / (2 * std::numbers::pi) - 1.0) < 1e-8);
  // Same field up to scale.
  CHECK((*t)(vec({0.3, 0.7})) / (*v)(vec({0.3, 0.7})) == doctest::Approx((*t)(vec({1.0, 0.2})) / (*v)(vec({1.0, 0.2}))));
}

TEST_CASE("rescale of a constant field is degenerate") {
  HomogeneousPolynomial c(3, 0);
  c.coeffs()[0] = 7.0;
  const FieldPtr v = make_polynomial(HarmonicPolynomial::from_monomials(c));
  CHECK_THROWS_AS(rescale(v, vec({0.1, 0.2, 0.3}), 0.5), DegenerateRescaling);
}

TEST_CASE("rescaled linear field is a fixed point of further rescaling") {
  const FieldPtr v = make_polynomial(coordinate(3, 0));
  const FieldPtr t = rescale(v, vec({0.3, 0.0, 0.0}), 0.5);
  // closed form: y1 * sqrt(n)
  for (const Vector& y : {vec({0.2, 0.1, -0.4}), vec({-1.0, 0.3, 0.3})})
    CHECK((*t)(y) == doctest::Approx(std::sqrt(3.0) * y[0]).epsilon(1e-10));
  const FieldPtr tt = rescale(t, vec({0.5, -0.2, 0.1}), 3.0);
  for (const Vector& y : {vec({0.2, 0.1, -0.4}), vec({-1.0, 0.3, 0.3})})
    CHECK((*tt)(y) == doctest::Approx((*t)(y)).epsilon(1e-10));
}

TEST_CASE("unit-scale rescaling is idempotent") {
  std::mt19937_64 rng(12);
  const FieldPtr v = make_hinged(random_harmonic(rng, 3, 3), 2.0, Frame{rotation3(0.2, 0.9), vec({0.1, 0.0, 0.0})});
  const FieldPtr t = rescale(v, vec({0.05, 0.1, -0.1}), 0.4);
  const FieldPtr tt = rescale(t, Vector::Zero(3), 1.0);
  for (int i = 0; i < 20; ++i) {
    const Vector y = random_point(rng, 3, 1.0);
    CHECK(std::abs((*tt)(y) - (*t)(y)) < 1e-8 * std::max(1.0, std::abs((*t)(y))));
  }
}

TEST_CASE("compose_affine examples") {
  const FieldPtr v = make_polynomial(saddle2());
  const FieldPtr id = compose_affine(v, 1.0, 1.0, 0.0);
  CHECK((*id)(vec({0.4, 0.9})) == doctest::Approx((*v)(vec({0.4, 0.9}))));
  const FieldPtr w = compose_affine(v, 3.0, 2.0, 5.0);
  CHECK((*w)(vec({1.0, 0.0})) == doctest::Approx(17.0));
  CHECK_THROWS_AS(compose_affine(v, 0.0, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(compose_affine(v, 1.0, 0.0, 0.0), InvalidArgument);
  // Zero set of w scales by 1/b.
  const FieldPtr w0 = compose_affine(v, -2.0, 4.0, 0.0);
  const auto zs = zero_set_sample(*v, Box{vec({-1, -1}), vec({1, 1})}, 0.1);
  REQUIRE(!zs.empty());
  for (const auto& z : zs) CHECK(std::abs((*w0)(z / 4.0)) < 1e-7);
}

TEST_CASE("zero set sampling") {
  const FieldPtr x1 = make_polynomial(coordinate(3, 0));
  const auto pts = zero_set_sample(*x1, Box{vec({-1, -1, -1}), vec({1, 1, 1})}, 0.1);
  CHECK(!pts.empty());
  for (const auto& p : pts) CHECK(std::abs(p[0]) < 1e-10);

  const FieldPtr s = make_polynomial(saddle2());
  const auto diag = zero_set_sample(*s, Box{vec({-1, -1}), vec({1, 1})}, 0.07);
  CHECK(diag.size() > 40);
  for (const auto& p : diag) CHECK(std::abs(std::abs(p[0]) - std::abs(p[1])) < 1e-8);

  HomogeneousPolynomial c(2, 0);
  c.coeffs()[0] = 1.0;
  const FieldPtr positive = make_sum({make_polynomial(HarmonicPolynomial::from_monomials(c))});
  CHECK(zero_set_sample(*positive, Box{vec({-1, -1}), vec({1, 1})}, 0.1).empty());
}

TEST_CASE("sampled fields interpolate and round-trip through disk") {
  const FieldPtr lin = make_sum({make_polynomial(coordinate(2, 0)), compose_affine(make_polynomial(coordinate(2, 1)), 2.0, 1.0, 0.5)});
  const SampledGrid grid = sample_on_grid(*lin, Box{vec({-1, -1}), vec({1, 1})}, {11, 21});
  const FieldPtr s1 = make_sampled(grid, 1);
  const FieldPtr s3 = make_sampled(grid, 3);
  for (const Vector& x : {vec({0.13, -0.37}), vec({-0.91, 0.66})}) {
    CHECK((*s1)(x) == doctest::Approx((*lin)(x)).epsilon(1e-12));
    CHECK((*s3)(x) == doctest::Approx((*lin)(x)).epsilon(1e-12));
    const Vector g = s1->grad(x);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(2.0));
  }
  const FieldPtr smooth = make_polynomial(monomials(2, 3, {{{3, 0}, 1.0}, {{1, 2}, -3.0}}));
  const SampledGrid g2 = sample_on_grid(*smooth, Box{vec({-1, -1}), vec({1, 1})}, {41, 41});
  double err1 = 0.0, err3 = 0.0;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Vector x = random_point(rng, 2, 0.8);
    err1 = std::max(err1, std::abs((*make_sampled(g2, 1))(x) - (*smooth)(x)));
    err3 = std::max(err3, std::abs((*make_sampled(g2, 3))(x) - (*smooth)(x)));
  }
  CHECK(err3 < err1);
  CHECK(err1 < 0.01);

  const auto dir = std::filesystem::temp_directory_path() / "strata_grid_test";
  std::filesystem::create_directories(dir);
  const std::string header = (dir / "grid.json").string();
  write_sampled_grid(grid, header);
  const SampledGrid back = read_sampled_grid(header);
  CHECK(back.values == grid.values);
  CHECK(back.shape == grid.shape);
  CHECK_THROWS_AS(make_sampled(grid, 2), InvalidArgument);
}

TEST_CASE("split-aware nodes integrate a kinked integrand accurately") {
  // |x_3| over the unit sphere in R^3 equals 2 pi.
  const FieldPtr v = make_hinged(coordinate(3, 2), 2.0);
  const NodeSet nodes = sphere_nodes(*v, Vector::Zero(3), 1.0, 12);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += nodes.weights[i] * std::abs(nodes.point(i)[2]);
  CHECK(s == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
  CHECK(nodes.total_weight() == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
  const NodeSet ball = ball_nodes(*v, Vector::Zero(3), 2.0, 12);
  CHECK(ball.total_weight() == doctest::Approx(32.0 * std::numbers::pi / 3.0).epsilon(1e-12));
}

}
