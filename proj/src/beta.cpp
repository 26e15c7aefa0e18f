#include "strata/beta.hpp"

#include "strata/frequency.hpp"
#include "strata/spatial_index.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <random>

namespace strata {

std::vector<Vector> DiscreteMeasure::points() const {
  std::vector<Vector> out;
  out.reserve(atoms.size());
  for (const Atom& a : atoms) out.push_back(a.x);
  return out;
}

double DiscreteMeasure::mass(const Vector& p, double r) const {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if ((atoms[i].x - p).norm() <= r) m += weight(i);
  return m;
}

bool pairwise_disjoint(const std::vector<Atom>& atoms) {
  if (atoms.size() < 2) return true;
  std::vector<Vector> pts;
  double tau_max = 0.0;
  for (const Atom& a : atoms) pts.push_back(a.x), tau_max = std::max(tau_max, a.tau);
  const KdTree tree(std::move(pts));
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j : tree.within(atoms[i].x, atoms[i].tau + tau_max))
      if (j != i && (atoms[i].x - atoms[j].x).norm() < atoms[i].tau + atoms[j].tau) return false;
  return true;
}

void DiscreteMeasure::validate() const {
  require(k >= 0, "measure: k must be non-negative");
  const int n = dim();
  for (const Atom& a : atoms) {
    require(a.x.size() == n && n > 0, "measure: atoms must share a positive dimension");
    require(a.tau > 0.0 && a.tau <= 1.0, "measure: radii must lie in (0, 1]");
    require(a.x.allFinite(), "measure: non-finite atom coordinates");
  }
  require(k <= std::max(n, 0) || atoms.empty(), "measure: k exceeds the ambient dimension");
  if (disjoint) require(pairwise_disjoint(atoms), "measure: balls are not pairwise disjoint");
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  require(j.is_object(), "measure: expected a JSON object");
  for (const auto& [key, _] : j.items())
    require(key == "schema" || key == "k" || key == "atoms" || key == "disjoint", "measure: unknown key '" + key + "'");
  if (j.contains("schema")) require(j.at("schema") == 1, "measure: unsupported schema");
  require(j.contains("k") && j.at("k").is_number_integer(), "measure: 'k' must be an integer");
  require(j.contains("atoms") && j.at("atoms").is_array(), "measure: 'atoms' must be an array");
  DiscreteMeasure mu;
  mu.k = j.at("k").get<int>();
  mu.disjoint = j.value("disjoint", false);
  for (const auto& a : j.at("atoms")) {
    require(a.is_object(), "measure: atoms must be objects");
    for (const auto& [key, _] : a.items())
      require(key == "x" || key == "tau", "measure: unknown atom key '" + key + "'");
    require(a.contains("x") && a.contains("tau"), "measure: atoms need 'x' and 'tau'");
    try {
      const auto x = a.at("x").get<std::vector<double>>();
      mu.atoms.push_back({Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())), a.at("tau").get<double>()});
    } catch (const nlohmann::json::exception&) {
      throw InvalidArgument("measure: atom entries have the wrong type");
    }
  }
  mu.validate();
  return mu;
}

nlohmann::json measure_to_json(const DiscreteMeasure& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : mu.atoms) atoms.push_back({{"x", std::vector<double>(a.x.data(), a.x.data() + a.x.size())}, {"tau", a.tau}});
  return {{"schema", 1}, {"k", mu.k}, {"disjoint", mu.disjoint}, {"atoms", atoms}};
}

SymmetricEigen jacobi_eigen(const Matrix& A_in, double tol, int max_sweeps) {
  const int n = static_cast<int>(A_in.rows());
  require(A_in.cols() == n, "jacobi_eigen: matrix must be square");
  Matrix A = 0.5 * (A_in + A_in.transpose());
  Matrix V = Matrix::Identity(n, n);
  const double scale = std::max(A.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(A(i, j)));
    if (off <= tol * scale) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(A(p, q)) <= std::numeric_limits<double>::min()) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return A(a, a) > A(b, b); });
  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (int i = 0; i < n; ++i) {
    out.values[i] = A(idx[i], idx[i]);
    Vector v = V.col(idx[i]);
    for (int k = 0; k < n; ++k)
      if (std::abs(v[k]) > 1e-12) {
        if (v[k] < 0) v = -v;
        break;
      }
    out.vectors.col(i) = v;
  }
  return out;
}

BetaResult beta_number(const DiscreteMeasure& mu, const Vector& p, double r, int k) {
  require(r > 0.0, "beta: radius must be positive");
  const int n = static_cast<int>(p.size());
  require(k >= 0 && k <= n, "beta: plane dimension out of range");
  BetaResult out;
  out.X = Vector::Zero(n);
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if ((mu.atoms[i].x - p).norm() <= r) {
      const double w = mu.weight(i);
      out.mass += w;
      out.X += w * mu.atoms[i].x;
      ++out.count;
    }
  if (out.count == 0 || out.mass <= 0.0) {
    out.empty = true;
    out.X = p;
    out.eigvals = Vector::Zero(n);
    out.eigvecs = Matrix::Identity(n, n);
    out.plane = out.eigvecs.leftCols(k);
    return out;
  }
  out.X /= out.mass;
  Matrix Q = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if ((mu.atoms[i].x - p).norm() <= r) {
      const Vector d = mu.atoms[i].x - out.X;
      Q.noalias() += mu.weight(i) * d * d.transpose();
    }
  Q /= out.mass;
  const SymmetricEigen e = jacobi_eigen(Q);
  out.eigvals = e.values.cwiseMax(0.0);
  out.eigvecs = e.vectors;
  out.plane = e.vectors.leftCols(k);
  out.beta_sq = out.mass / std::pow(r, k + 2) * out.eigvals.tail(n - k).sum();
  return out;
}

double plane_functional(const DiscreteMeasure& mu, const Vector& p, double r, const Vector& c, const Matrix& U) {
  double s = 0.0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    if ((mu.atoms[i].x - p).norm() > r) continue;
    const Vector d = mu.atoms[i].x - c;
    const Vector along = U.transpose() * d;
    s += mu.weight(i) * std::max(0.0, d.squaredNorm() - along.squaredNorm());
  }
  return s / std::pow(r, static_cast<double>(U.cols()) + 2.0);
}

namespace {

// Weighted functional for a frame whose first k columns span the plane; the plane passes
// through the weighted mean of the ball atoms, which minimizes over offsets for fixed directions.
struct PlaneSearch {
  std::vector<Vector> y;
  std::vector<double> w;
  Vector mean;
  int k = 0;
  double scale = 1.0;

  double operator()(const Matrix& F) const {
    const Matrix N = F.rightCols(F.cols() - k);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * (N.transpose() * (y[i] - mean)).squaredNorm();
    return s * scale;
  }
};

void rotate(Matrix& F, int i, int j, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vector a = F.col(i), b = F.col(j);
  F.col(i) = c * a + s * b;
  F.col(j) = -s * a + c * b;
}

double descend(const PlaneSearch& f, Matrix& F) {
  const int n = static_cast<int>(F.rows());
  double best = f(F);
  for (double step = 0.5; step > 1e-10; step *= 0.5) {
    bool moved = true;
    for (int iter = 0; moved && iter < 100000; ++iter) {
      moved = false;
      for (int i = 0; i < f.k; ++i)
        for (int j = f.k; j < n; ++j)
          for (double sgn : {1.0, -1.0}) {
            Matrix G = F;
            rotate(G, i, j, sgn * step);
            const double val = f(G);
            if (val < best) best = val, F = G, moved = true;
          }
    }
  }
  return best;
}

}  // namespace

double beta_bruteforce(const DiscreteMeasure& mu, const Vector& p, double r, int k, int grid_density, unsigned seed) {
  require(r > 0.0, "beta: radius must be positive");
  const int n = static_cast<int>(p.size());
  require(k >= 0 && k <= n, "beta: plane dimension out of range");
  PlaneSearch f;
  f.k = k;
  f.scale = 1.0 / std::pow(r, k + 2);
  double mass = 0.0;
  f.mean = Vector::Zero(n);
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    if ((mu.atoms[i].x - p).norm() <= r) {
      f.y.push_back(mu.atoms[i].x);
      f.w.push_back(mu.weight(i));
      mass += f.w.back();
      f.mean += f.w.back() * mu.atoms[i].x;
    }
  if (f.y.empty() || k == n) return 0.0;
  f.mean /= mass;
  if (k == 0) return f(Matrix::Identity(n, n));

  std::vector<Matrix> seeds;
  // Coordinate frames: every choice of k axes for the plane.
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<int>(std::popcount(mask)) != k) continue;
    Matrix F(n, n);
    int a = 0, b = k;
    for (int i = 0; i < n; ++i) F.col((mask >> i) & 1u ? a++ : b++) = Vector::Unit(n, i);
    seeds.push_back(F);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int s = 0; s < grid_density; ++s) {
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
    seeds.push_back(Eigen::HouseholderQR<Matrix>(A).householderQ());
  }
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t s = 0; s < seeds.size(); ++s) ranked.push_back({f(seeds[s]), s});
  std::sort(ranked.begin(), ranked.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < std::min<std::size_t>(3, ranked.size()); ++s) {
    Matrix F = seeds[ranked[s].second];
    best = std::min(best, descend(f, F));
  }
  return best;
}

BetaFrequencyCheck beta_frequency_inequality_check(const ScalarField& v, const DiscreteMeasure& mu, const Vector& p,
                                                   double r, double eps, const BetaFrequencyOptions& opts) {
  require(r > 0.0, "beta-frequency check: radius must be positive");
  require(v.dim() == static_cast<int>(p.size()), "beta-frequency check: dimension mismatch");
  BetaFrequencyCheck out;
  const int n = v.dim(), k = mu.k;
  const BetaResult b = beta_number(mu, p, r, k);
  out.lhs_beta_sq = b.beta_sq;
  out.mass_term = b.mass / std::pow(r, k);
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    if ((mu.atoms[i].x - p).norm() > r) continue;
    try {
      const double d = frequency(v, mu.atoms[i].x, 8.0 * r, opts.order) - frequency(v, mu.atoms[i].x, r, opts.order);
      out.drop_integral += mu.weight(i) * d;
    } catch (const DegenerateHeight&) {
      out.note = "degenerate height at an atom; its drop was skipped";
    }
  }
  out.drop_integral /= std::pow(r, k);
  out.zero_symmetric = is_symmetric(v, p, 8.0 * r, 0, opts.delta, opts.symmetry);
  out.not_next_symmetric = k + 1 > n || !is_symmetric(v, p, 8.0 * r, k + 1, eps, opts.symmetry);
  if (!out.precondition() && out.note.empty()) out.note = "precondition not met";
  out.rhs_bound = out.drop_integral + out.mass_term;
  return out;
}

BetaFrequencyFit fit_beta_frequency(std::vector<BetaFrequencyCheck>& family, const std::vector<double>& radii, double m) {
  require(family.size() == radii.size(), "beta-frequency fit: one radius per check");
  BetaFrequencyFit fit;
  fit.m = m;
  for (std::size_t i = 0; i < family.size(); ++i) {
    BetaFrequencyCheck& c = family[i];
    c.rhs_bound = c.drop_integral + c.mass_term * std::pow(radii[i], m);
    if (!c.precondition() || c.rhs_bound <= 0.0) continue;
    fit.C = std::max(fit.C, c.lhs_beta_sq / c.rhs_bound);
    ++fit.used;
  }
  return fit;
}

}  // namespace strata
