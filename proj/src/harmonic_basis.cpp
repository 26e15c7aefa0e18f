#include "strata/harmonic_basis.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace strata {

namespace {

double binomial(int a, int b) {
  if (b < 0 || a < 0 || b > a) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

// Harmonic polynomial with x1-profile seeded by a monomial in the remaining variables.
HomogeneousPolynomial harmonic_extension(int n, int d, const HomogeneousPolynomial& seed, int j0) {
  HomogeneousPolynomial out(n, d);
  const MonomialTable& full = monomial_table(n, d);
  HomogeneousPolynomial q = seed;
  for (int j = j0; j <= d; j += 2) {
    for (std::size_t m = 0; m < q.coeffs().size(); ++m) {
      if (q.coeffs()[m] == 0.0) continue;
      const Exponent& e = q.table().exponent(m);
      Exponent fe(n);
      fe[0] = j;
      for (int i = 1; i < n; ++i) fe[i] = e[i - 1];
      out.coeffs()[full.index(fe)] += q.coeffs()[m];
    }
    if (q.degree() < 2) break;
    q = q.laplacian();
    q *= -1.0 / ((j + 1.0) * (j + 2.0));
  }
  return out;
}

std::vector<HomogeneousPolynomial> construct(int n, int d) {
  std::vector<HomogeneousPolynomial> raw;
  if (n == 1) {
    if (d <= 1) {
      HomogeneousPolynomial p(1, d);
      p.coeffs()[0] = 1.0;
      raw.push_back(p);
    }
  } else {
    for (int j0 = 1; j0 >= 0; --j0) {
      if (d - j0 < 0) continue;
      const MonomialTable& seeds = monomial_table(n - 1, d - j0);
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        HomogeneousPolynomial seed(n - 1, d - j0);
        seed.coeffs()[s] = 1.0;
        raw.push_back(harmonic_extension(n, d, seed, j0));
      }
    }
  }
  // Modified Gram-Schmidt under the exact sphere inner product, two passes.
  std::vector<HomogeneousPolynomial> basis;
  for (auto p : raw) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : basis) {
        HomogeneousPolynomial proj = u;
        proj *= sphere_inner(p, u);
        p -= proj;
      }
    }
    const double norm = std::sqrt(sphere_inner(p, p));
    p *= 1.0 / norm;
    basis.push_back(std::move(p));
  }
  return basis;
}

const std::vector<HomogeneousPolynomial>& cached(int n, int d) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<HomogeneousPolynomial>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({n, d});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n, d), construct(n, d)).first;
  return it->second;
}

}  // namespace

std::vector<HomogeneousPolynomial> build_harmonic_basis(int n, int d) {
  require(n >= 1 && d >= 0, "harmonic_basis: invalid arguments");
  return construct(n, d);
}

std::size_t harmonic_dimension(int n, int d) {
  require(n >= 1 && d >= 0, "harmonic_dimension: invalid arguments");
  if (n == 1) return d <= 1 ? 1 : 0;
  return static_cast<std::size_t>(std::llround(binomial(n + d - 1, d) - binomial(n + d - 3, d - 2)));
}

const std::vector<HomogeneousPolynomial>& harmonic_monomial_basis(int n, int d) {
  require(n >= 2, "harmonic_basis: dimension must be at least 2");
  require(d >= 0, "harmonic_basis: degree must be non-negative");
  return cached(n, d);
}

const std::vector<HomogeneousPolynomial>& harmonic_monomial_basis_any(int n, int d) {
  require(n >= 1 && d >= 0, "harmonic_basis: invalid arguments");
  return cached(n, d);
}

HarmonicPolynomial HarmonicPolynomial::from_basis(int n, int d, std::vector<double> coeffs) {
  const auto& basis = harmonic_monomial_basis_any(n, d);
  require(coeffs.size() == basis.size(), "harmonic polynomial: expected " + std::to_string(basis.size()) +
                                             " basis coefficients, got " + std::to_string(coeffs.size()));
  HarmonicPolynomial out;
  out.poly_ = HomogeneousPolynomial(n, d);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    HomogeneousPolynomial t = basis[i];
    t *= coeffs[i];
    out.poly_ += t;
  }
  out.coeffs_ = std::move(coeffs);
  return out;
}

HarmonicPolynomial HarmonicPolynomial::from_monomials(const HomogeneousPolynomial& p, double tol) {
  const HomogeneousPolynomial lap = p.laplacian();
  const double scale = std::max(p.max_abs_coeff(), 1e-300);
  require(lap.max_abs_coeff() <= tol * scale * std::max(1, p.degree() * p.degree()),
          "harmonic polynomial: the given polynomial is not harmonic");
  const auto& basis = harmonic_monomial_basis_any(p.dim(), p.degree());
  HarmonicPolynomial out;
  out.poly_ = p;
  out.coeffs_.resize(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) out.coeffs_[i] = sphere_inner(p, basis[i]);
  return out;
}

Vector HarmonicPolynomial::grad(const Vector& x) const {
  Vector g(dim());
  gradient(coords(x), {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

double HarmonicPolynomial::sphere_mean_square() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return s / sphere_area(dim());
}

HarmonicPolynomial HarmonicPolynomial::scaled(double s) const {
  HarmonicPolynomial out = *this;
  out.poly_ *= s;
  for (double& c : out.coeffs_) c *= s;
  return out;
}

double eval_poly(const HarmonicPolynomial& p, const Vector& x) { return p(x); }
Vector grad_poly(const HarmonicPolynomial& p, const Vector& x) { return p.grad(x); }

nlohmann::json basis_to_json(int n, int d) {
  const auto& basis = harmonic_monomial_basis(n, d);
  const MonomialTable& table = monomial_table(n, d);
  nlohmann::json j;
  j["schema"] = 1;
  j["n"] = n;
  j["d"] = d;
  j["ordering"] = "graded_lex";
  j["monomials"] = table.exponents();
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& p : basis) coeffs.push_back(p.coeffs());
  j["coeffs"] = coeffs;
  return j;
}

std::vector<HarmonicPolynomial> basis_from_json(const nlohmann::json& j) {
  require(j.is_object(), "basis: expected a JSON object");
  for (const auto& [key, _] : j.items())
    require(key == "schema" || key == "n" || key == "d" || key == "ordering" || key == "monomials" || key == "coeffs",
            "basis: unknown key '" + key + "'");
  require(j.contains("n") && j.contains("d") && j.contains("coeffs"), "basis: missing n, d or coeffs");
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  require(n >= 2 && d >= 0, "basis: invalid n or d");
  if (j.contains("ordering")) require(j.at("ordering") == "graded_lex", "basis: unsupported monomial ordering");
  const MonomialTable& table = monomial_table(n, d);
  if (j.contains("monomials"))
    require(j.at("monomials").get<std::vector<Exponent>>() == table.exponents(), "basis: monomial list mismatch");
  std::vector<HarmonicPolynomial> out;
  for (const auto& row : j.at("coeffs")) {
    auto c = row.get<std::vector<double>>();
    require(c.size() == table.size(), "basis: coefficient row has the wrong length");
    out.push_back(HarmonicPolynomial::from_monomials(HomogeneousPolynomial(n, d, std::move(c))));
  }
  require(out.size() == harmonic_dimension(n, d), "basis: wrong number of basis elements");
  return out;
}

}  // namespace strata
