#include "strata/symmetry.hpp"

#include "strata/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

namespace strata {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Orthonormal complement of the column span of W (n x m), as n x (n - m).
Matrix complement(const Matrix& W) {
  const int n = static_cast<int>(W.rows());
  const int m = static_cast<int>(W.cols());
  if (m == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(W);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.rightCols(n - m);
}

Matrix orthonormalize(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  Eigen::HouseholderQR<Matrix> qr(A);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
  return Q.leftCols(A.cols());
}

struct FeatureSet {
  Matrix ball;    // N x h
  Matrix sphere;  // Ns x h
};

// Basis coefficients of the degree-d harmonic polynomials in m variables, one column each.
const Matrix& basis_matrix(int m, int d) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Matrix> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({m, d});
  if (it == cache.end()) {
    const auto& basis = harmonic_monomial_basis_any(m, d);
    const MonomialTable& table = monomial_table(m, d);
    Matrix C = Matrix::Zero(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t b = 0; b < basis.size(); ++b)
      for (std::size_t k = 0; k < table.size(); ++k) C(k, b) = basis[b].coeffs()[k];
    it = cache.emplace(std::make_pair(m, d), std::move(C)).first;
  }
  return it->second;
}

// Monomials of degree d at the columns of Z (m x N), one row per point.
Matrix monomials_at(const Matrix& Z, int d) {
  const int m = static_cast<int>(Z.rows());
  const MonomialTable& table = monomial_table(m, d);
  Matrix out(Z.cols(), static_cast<Eigen::Index>(table.size()));
  std::vector<double> pw(static_cast<std::size_t>(m) * (d + 1));
  for (Eigen::Index i = 0; i < Z.cols(); ++i) {
    for (int a = 0; a < m; ++a) {
      double* row = pw.data() + static_cast<std::size_t>(a) * (d + 1);
      row[0] = 1.0;
      for (int e = 1; e <= d; ++e) row[e] = row[e - 1] * Z(a, i);
    }
    for (std::size_t k = 0; k < table.size(); ++k) {
      const Exponent& e = table.exponent(k);
      double t = 1.0;
      for (int a = 0; a < m; ++a) t *= pw[static_cast<std::size_t>(a) * (d + 1) + e[a]];
      out(i, static_cast<Eigen::Index>(k)) = t;
    }
  }
  return out;
}

FeatureSet features(const SymmetryTarget& t, const Matrix& W, int d) {
  const int n = t.dim();
  const Matrix& C = basis_matrix(static_cast<int>(W.cols()), d);
  const Eigen::Map<const Matrix> Y(t.node(0).data(), n, static_cast<Eigen::Index>(t.size()));
  const Eigen::Map<const Matrix> S(t.sphere().points.data(), n, static_cast<Eigen::Index>(t.sphere().size()));
  FeatureSet f;
  f.ball.noalias() = monomials_at(W.transpose() * Y, d) * C;
  f.sphere.noalias() = monomials_at(W.transpose() * S, d) * C;
  return f;
}

struct Inner {
  Vector a;
  std::vector<char> plus;  // model sign at the ball nodes
  double c = 1.0;
  double residual = kInf;  // before sphere normalization
  double scale = 1.0;
  double distance = kInf;
};

// Alternating fit of c P^+ - P^- with P in the feature span, then sphere normalization.
Inner inner_fit(const SymmetryTarget& t, const FeatureSet& f, int max_alt, double tol, const Inner* warm = nullptr,
                bool coarse = false) {
  const Eigen::Index N = f.ball.rows(), h = f.ball.cols();
  const auto& w = t.weights();
  const auto& g = t.values();
  std::vector<char> plus(N);
  if (warm && static_cast<Eigen::Index>(warm->plus.size()) == N) {
    plus = warm->plus;
  } else {
    for (Eigen::Index i = 0; i < N; ++i) plus[i] = g[i] > 0.0;
  }
  double g2 = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) g2 += w[i] * g[i] * g[i];
  Inner best;
  double best_res = kInf, prev = kInf;
  Matrix Ap(h, h), Am(h, h);
  Vector bp(h), bm(h), P(N);
  Matrix Xw(N, h);
  Vector gw(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double sw = std::sqrt(w[i]);
    Xw.row(i) = sw * f.ball.row(i);
    gw[i] = sw * g[i];
  }
  Matrix Xp(N, h);
  const Matrix A_all = Xw.transpose() * Xw;
  const Vector b_all = Xw.transpose() * gw;
  for (int it = 0; it < std::max(1, max_alt); ++it) {
    for (Eigen::Index i = 0; i < N; ++i) {
      if (plus[i])
        Xp.row(i) = Xw.row(i);
      else
        Xp.row(i).setZero();
    }
    Ap.noalias() = Xp.transpose() * Xp;
    Am = A_all - Ap;
    bp.noalias() = Xp.transpose() * gw;
    bm = b_all - bp;
    // Variable projection: for fixed c the coefficients solve a linear least-squares problem,
    // and the residual g2 - b^T a is minimized over log c.
    auto solve = [&](double c, Vector& a) {
      Matrix A = c * c * Ap + Am;
      A.diagonal().array() += 1e-13 * std::max(A.trace(), 1e-300);
      const Vector b = c * bp + bm;
      a = A.ldlt().solve(b);
      return g2 - b.dot(a);
    };
    Vector a;
    double c = 1.0;
    double res1 = solve(1.0, a);
    if (Ap.trace() > 0.0 && Am.trace() > 0.0) {
      double best_l = 0.0, best_f = res1;
      const int steps = coarse ? 6 : 12;
      const double grid = 6.0 / steps;
      for (int j = -steps; j <= steps; ++j) {
        const double fj = solve(std::pow(10.0, grid * j), a);
        if (fj < best_f) best_f = fj, best_l = grid * j;
      }
      constexpr double gr = 0.6180339887498949;
      double lo = best_l - grid, hi = best_l + grid;
      double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
      double f1 = solve(std::pow(10.0, x1), a), f2 = solve(std::pow(10.0, x2), a);
      for (int k = 0; k < 80 && hi - lo > (coarse ? 1e-3 : 1e-11); ++k) {
        if (f1 < f2) {
          hi = x2, x2 = x1, f2 = f1;
          x1 = hi - gr * (hi - lo);
          f1 = solve(std::pow(10.0, x1), a);
        } else {
          lo = x1, x1 = x2, f1 = f2;
          x2 = lo + gr * (hi - lo);
          f2 = solve(std::pow(10.0, x2), a);
        }
      }
      const double lstar = f1 < f2 ? x1 : x2;
      const double fstar = std::min(f1, f2);
      if (fstar < res1 - 1e-15 * std::max(1.0, g2)) c = std::pow(10.0, std::clamp(lstar, -8.0, 8.0));
    }
    solve(c, a);
    P = f.ball * a;
    bool changed = false;
    double res = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const char s = P[i] > 0.0;
      changed |= s != plus[i];
      plus[i] = s;
      const double r = g[i] - (s ? c : 1.0) * P[i];
      res += w[i] * r * r;
    }
    if (res < best_res) {
      best_res = res;
      best.residual = res;
      best.a = a;
      best.c = c;
      best.plus = plus;
    }
    if (!changed || !(prev - res >= tol)) break;
    prev = res;
  }
  if (best.a.size() == 0) return best;
  const Vector PS = f.sphere * best.a;
  double ms = 0.0;
  const auto& ws = t.sphere().weights;
  for (Eigen::Index i = 0; i < PS.size(); ++i) {
    const double m = PS[i] > 0.0 ? best.c * PS[i] : PS[i];
    ms += ws[i] * m * m;
  }
  if (!(ms > 1e-300)) {
    best.distance = kInf;
    return best;
  }
  best.scale = 1.0 / std::sqrt(ms);
  P = f.ball * best.a;
  double dist = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    const double m = best.scale * (P[i] > 0.0 ? best.c * P[i] : P[i]);
    dist += w[i] * (g[i] - m) * (g[i] - m);
  }
  best.distance = dist;
  return best;
}

struct Candidate {
  Matrix W;
  int degree = 0;
  Inner fit;
};

std::vector<Vector> direction_set(int n, int count, std::mt19937_64& rng) {
  std::vector<Vector> dirs;
  if (n == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = std::numbers::pi * (i + 0.5) / count;
      Vector v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
  } else if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (i + 0.5) / count;
      const double rr = std::sqrt(1.0 - z * z);
      Vector v(3);
      v << rr * std::cos(golden * i), rr * std::sin(golden * i), z;
      dirs.push_back(v);
    }
  } else {
    std::normal_distribution<double> normal;
    for (int i = 0; i < n; ++i) dirs.push_back(Vector::Unit(n, i));
    while (static_cast<int>(dirs.size()) < count) {
      Vector v(n);
      for (int i = 0; i < n; ++i) v[i] = normal(rng);
      dirs.push_back(v.normalized());
    }
  }
  return dirs;
}

std::vector<Matrix> candidate_frames(const SymmetryTarget& t, int m, const SymmetryOptions& opts) {
  const int n = t.dim();
  std::vector<Matrix> frames;
  Eigen::SelfAdjointEigenSolver<Matrix> es(t.gradient_moment());
  frames.push_back(es.eigenvectors().rightCols(m).rowwise().reverse());
  if (m == n) return frames;
  std::mt19937_64 rng(opts.seed);
  if (m == 1) {
    for (const auto& d : direction_set(n, opts.direction_grid, rng)) frames.push_back(d);
  } else if (m == n - 1) {
    for (const auto& d : direction_set(n, opts.direction_grid, rng)) frames.push_back(complement(d));
  } else {
    std::vector<int> pick(n, 0);
    std::fill(pick.begin(), pick.begin() + m, 1);
    std::sort(pick.begin(), pick.end(), std::greater<int>());
    do {
      Matrix W = Matrix::Zero(n, m);
      int col = 0;
      for (int i = 0; i < n; ++i)
        if (pick[i]) W(i, col++) = 1.0;
      frames.push_back(W);
    } while (std::prev_permutation(pick.begin(), pick.end()));
    std::normal_distribution<double> normal;
    for (int s = 0; s < opts.frame_samples; ++s) {
      Matrix A(n, m);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) A(i, j) = normal(rng);
      frames.push_back(orthonormalize(A));
    }
  }
  return frames;
}

std::vector<int> degrees_for(int m, int d_max) {
  std::vector<int> out;
  for (int d = 1; d <= d_max; ++d)
    if (harmonic_dimension(m, d) > 0) out.push_back(d);
  return out;
}

Candidate best_over_degrees(const SymmetryTarget& t, const Matrix& W, const std::vector<int>& degrees, int max_alt,
                            double tol, bool coarse = false) {
  Candidate best;
  best.W = W;
  for (int d : degrees) {
    const Inner in = inner_fit(t, features(t, W, d), max_alt, tol, nullptr, coarse);
    if (in.distance < best.fit.distance) {
      best.fit = in;
      best.degree = d;
    }
  }
  return best;
}

// Pattern search over tangent coordinates of the Grassmannian at W.
void refine(const SymmetryTarget& t, Candidate& cand, const SymmetryOptions& opts, double step = 0.25,
            double step_min = 0.0, int max_evals = 300) {
  const int n = t.dim();
  const int m = static_cast<int>(cand.W.cols());
  if (m == 0 || m == n) return;
  if (step_min <= 0.0) step_min = opts.refine_step_min;
  int evals = 0;
  while (step >= step_min && evals < max_evals) {
    const Matrix Wc = complement(cand.W);
    Candidate best_trial;
    for (int i = 0; i < n - m; ++i)
      for (int j = 0; j < m; ++j)
        for (double sgn : {1.0, -1.0}) {
          Matrix W = cand.W;
          W.col(j) += sgn * step * Wc.col(i);
          W = orthonormalize(W);
          const Inner in =
              inner_fit(t, features(t, W, cand.degree), opts.max_alternations, opts.tolerance, &cand.fit);
          ++evals;
          if (in.distance < best_trial.fit.distance) {
            best_trial.fit = in;
            best_trial.W = W;
            best_trial.degree = cand.degree;
          }
        }
    if (best_trial.fit.distance < cand.fit.distance - 1e-15) {
      cand = best_trial;
    } else {
      step *= 0.5;
    }
  }
}

SymmetryFit expand(const SymmetryTarget& t, int k, const Candidate& cand, int order) {
  const int n = t.dim();
  SymmetryFit fit;
  fit.k = k;
  fit.degree = cand.degree;
  fit.c = cand.fit.c;
  fit.W = cand.W;
  fit.V = complement(cand.W);
  const int m = static_cast<int>(cand.W.cols());
  const auto& basis = harmonic_monomial_basis_any(m, cand.degree);
  HomogeneousPolynomial q(m, cand.degree);
  for (std::size_t b = 0; b < basis.size(); ++b) {
    HomogeneousPolynomial term = basis[b];
    term *= cand.fit.a[static_cast<Eigen::Index>(b)] * cand.fit.scale;
    q += term;
  }
  HomogeneousPolynomial p = q.compose_linear(cand.W.transpose());
  // Normalization on nodes split along the model's own zero set.
  {
    const FieldPtr model = fit.c == 1.0 || cand.degree == 0
                               ? make_polynomial(HarmonicPolynomial::from_monomials(p, 1e-7))
                               : make_hinged(HarmonicPolynomial::from_monomials(p, 1e-7), fit.c);
    const NodeSet s = sphere_nodes(*model, Vector::Zero(n), 1.0, 2 * order);
    double ms = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) ms += s.weights[i] * std::pow(model->value(s.point(i)), 2);
    ms /= s.total_weight();
    if (ms > 0.0) p *= 1.0 / std::sqrt(ms);
  }
  fit.P = HarmonicPolynomial::from_monomials(p, 1e-7);
  const FieldPtr model = fit.c == 1.0 || cand.degree == 0 ? make_polynomial(fit.P) : make_hinged(fit.P, fit.c);
  fit.distance = t.exact_distance(*model);
  return fit;
}

FieldPtr model_field(const SymmetryFit& fit) {
  return fit.c == 1.0 || fit.degree == 0 ? make_polynomial(fit.P) : make_hinged(fit.P, fit.c);
}

// Refits on nodes split along the kinks of the field and of the current model, so that
// the objective no longer carries the quadrature error of integrating across a kink.
SymmetryFit polish(const SymmetryTarget& t, int k, const Candidate& start, const SymmetryOptions& opts) {
  SymmetryFit fit = expand(t, k, start, t.order());
  Candidate cand = start;
  for (int round = 0; round < 3; ++round) {
    const SymmetryTarget split = t.split_along(*model_field(fit));
    Inner warm;
    warm.c = cand.fit.c;
    const Vector P = features(split, cand.W, cand.degree).ball * cand.fit.a;
    warm.plus.resize(static_cast<std::size_t>(P.size()));
    for (Eigen::Index i = 0; i < P.size(); ++i) warm.plus[i] = P[i] > 0.0;
    Candidate trial = cand;
    trial.fit = inner_fit(split, features(split, cand.W, cand.degree), opts.max_alternations, opts.tolerance, &warm);
    refine(split, trial, opts, 0.02, 1e-6, 120);
    const SymmetryFit next = expand(t, k, trial, t.order());
    if (!(next.distance < fit.distance)) break;
    const double gain = fit.distance - next.distance;
    fit = next;
    cand = trial;
    if (gain < 1e-12) break;
  }
  return fit;
}

SymmetryFit constant_fit(const SymmetryTarget& t, bool quick) {
  const int n = t.dim();
  SymmetryFit fit;
  fit.k = n;
  fit.degree = 0;
  fit.c = 1.0;
  fit.V = Matrix::Identity(n, n);
  fit.W = Matrix::Zero(n, 0);
  fit.distance = kInf;
  for (double sgn : {1.0, -1.0}) {
    HomogeneousPolynomial p(n, 0);
    p.coeffs()[0] = sgn;
    const HarmonicPolynomial P = HarmonicPolynomial::from_monomials(p);
    double d = 0.0;
    if (quick) {
      for (std::size_t i = 0; i < t.size(); ++i) d += t.weights()[i] * std::pow(t.values()[i] - sgn, 2);
    } else {
      d = t.exact_distance(*make_polynomial(P));
    }
    if (d < fit.distance) {
      fit.distance = d;
      fit.P = P;
    }
  }
  return fit;
}

// Search restricted to exactly k invariant directions.
SymmetryFit search_level(const SymmetryTarget& t, int k, const SymmetryOptions& opts, std::optional<double> eps,
                         int order) {
  const int n = t.dim();
  const int m = n - k;
  if (m == 0) return constant_fit(t, eps.has_value());
  const std::vector<int> degrees = degrees_for(m, opts.d_max);
  SymmetryFit none;
  none.k = k;
  none.distance = kInf;
  if (degrees.empty()) return none;
  const std::vector<Matrix> frames = candidate_frames(t, m, opts);
  // Leading frame with full alternation: certifies exact and near-exact cases cheaply.
  Candidate lead = best_over_degrees(t, frames.front(), degrees, opts.max_alternations, opts.tolerance);
  if ((eps && lead.fit.distance < *eps) || lead.fit.residual < 1e-13) return expand(t, k, lead, order);
  std::vector<Candidate> quick;
  quick.push_back(lead);
  for (std::size_t f = 1; f < frames.size(); ++f) {
    Candidate c = best_over_degrees(t, frames[f], degrees, 6, opts.tolerance, true);
    if (eps && c.fit.distance < *eps) return expand(t, k, c, order);
    quick.push_back(std::move(c));
  }
  std::stable_sort(quick.begin(), quick.end(),
                   [](const Candidate& a, const Candidate& b) { return a.fit.distance < b.fit.distance; });
  Candidate best;
  const int refine_count = std::min<int>(opts.refine_candidates, static_cast<int>(quick.size()));
  for (int i = 0; i < refine_count; ++i) {
    Candidate c = best_over_degrees(t, quick[i].W, {quick[i].degree}, opts.max_alternations, opts.tolerance);
    refine(t, c, opts);
    c = best_over_degrees(t, c.W, degrees, opts.max_alternations, opts.tolerance);
    if (c.fit.distance < best.fit.distance) best = c;
    if (eps && best.fit.distance < *eps) break;
  }
  if (!std::isfinite(best.fit.distance)) return none;
  // Split-node refits pay off where kinked integrals are resolved accurately, which the
  // latitude splitting provides in three dimensions.
  if (eps || best.fit.residual < 1e-13 || n > 3) return expand(t, k, best, order);
  return polish(t, k, best, opts);
}

SymmetryFit relabel(const SymmetryFit& higher, int k) {
  SymmetryFit fit = higher;
  fit.k = k;
  fit.V = higher.V.leftCols(k);
  fit.W = complement(fit.V);
  return fit;
}

std::vector<SymmetryFit> chain(const SymmetryTarget& t, int k_lo, const SymmetryOptions& opts,
                               std::optional<double> eps) {
  const int n = t.dim();
  const int order = opts.order > 0 ? opts.order : fit_order(n);
  std::vector<SymmetryFit> fits(n + 1);
  fits[n] = search_level(t, n, opts, eps, order);
  for (int k = n - 1; k >= k_lo; --k) {
    if (eps && fits[k + 1].distance < *eps) {
      fits[k] = relabel(fits[k + 1], k);
      continue;
    }
    SymmetryFit own = search_level(t, k, opts, eps, order);
    fits[k] = own.distance <= fits[k + 1].distance ? own : relabel(fits[k + 1], k);
  }
  return fits;
}

}  // namespace

int fit_order(int n) { return n <= 3 ? 12 : 8; }

double SymmetryFit::model(Coords y) const {
  const double p = P.eval(y);
  return p > 0.0 ? c * p : p;
}

SymmetryTarget::SymmetryTarget(const ScalarField& v, const Vector& p, double r, int order)
    : n_(v.dim()), order_(order > 0 ? order : fit_order(v.dim())) {
  require(p.size() == n_, "symmetry: point has the wrong dimension");
  require(r > 0.0 && std::isfinite(r), "symmetry: radius must be positive");
  const double vp = v.value(coords(p));
  const double norm = rescale_normalizer(v, p, r, 0);
  if (!(norm > 1e-14 * std::max(1.0, std::abs(vp))))
    throw DegenerateRescaling("symmetry: the field is constant to working precision near the point");
  rescaled_ = std::make_shared<AffineField>(FieldPtr(std::shared_ptr<void>(), &v), 1.0 / norm, r, p, -vp / norm);
  sample(ball_nodes(n_, Vector::Zero(n_), 1.0, order_), sphere_nodes(n_, Vector::Zero(n_), 1.0, order_));
}

void SymmetryTarget::sample(const NodeSet& ball, const NodeSet& sphere) {
  const double total = ball.total_weight();
  y_ = ball.points;
  w_.resize(ball.size());
  g_.resize(ball.size());
  G_ = Matrix::Zero(n_, n_);
  std::vector<double> grad(n_);
  for (std::size_t i = 0; i < ball.size(); ++i) {
    w_[i] = ball.weights[i] / total;
    g_[i] = rescaled_->value_and_gradient(ball.point(i), grad);
    const Eigen::Map<const Vector> gv(grad.data(), n_);
    G_.noalias() += w_[i] * gv * gv.transpose();
  }
  sphere_ = sphere;
  const double stotal = sphere_.total_weight();
  for (double& w : sphere_.weights) w /= stotal;
}

SymmetryTarget SymmetryTarget::split_along(const ScalarField& model) const {
  const FieldPtr alias(std::shared_ptr<void>(), &model);
  const FieldPtr both = make_sum({rescaled_, alias});
  SymmetryTarget t;
  t.n_ = n_;
  t.order_ = order_;
  t.rescaled_ = rescaled_;
  t.sample(ball_nodes(*both, Vector::Zero(n_), 1.0, order_), sphere_nodes(*both, Vector::Zero(n_), 1.0, order_));
  return t;
}

double SymmetryTarget::exact_distance(const ScalarField& model) const {
  const FieldPtr alias(std::shared_ptr<void>(), &model);
  const NodeSet nodes = ball_nodes(*make_sum({rescaled_, alias}), Vector::Zero(n_), 1.0, order_);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = rescaled_->value(nodes.point(i)) - model.value(nodes.point(i));
    s += nodes.weights[i] * d * d;
  }
  return s / nodes.total_weight();
}

double SymmetryTarget::value_gap(const SymmetryTarget& other) const {
  if (other.g_.size() != g_.size() || other.y_.size() != y_.size()) return kInf;
  double gap = 0.0;
  for (std::size_t i = 0; i < y_.size(); ++i)
    if (std::abs(y_[i] - other.y_[i]) > 1e-13) return kInf;
  for (std::size_t i = 0; i < g_.size(); ++i) gap = std::max(gap, std::abs(g_[i] - other.g_[i]));
  return gap;
}

SymmetryFit nearest_k_symmetric(const SymmetryTarget& target, int k, const SymmetryOptions& opts) {
  require(k >= 0 && k <= target.dim(), "nearest_k_symmetric: k must lie in [0, n]");
  // An exact fit at level k cannot be improved by the levels above it.
  SymmetryFit own = search_level(target, k, opts, std::nullopt, target.order());
  if (own.distance < 1e-8 || k == target.dim()) return own;
  const auto above = chain(target, k + 1, opts, std::nullopt);
  return own.distance <= above[k + 1].distance ? own : relabel(above[k + 1], k);
}

SymmetryFit nearest_k_symmetric(const ScalarField& v, const Vector& p, double r, int k, const SymmetryOptions& opts) {
  const SymmetryTarget t(v, p, r, opts.order);
  return nearest_k_symmetric(t, k, opts);
}

std::vector<double> symmetry_distances(const SymmetryTarget& target, int k_lo, const SymmetryOptions& opts,
                                       std::optional<double> eps) {
  require(k_lo >= 0 && k_lo <= target.dim(), "symmetry_distances: k out of range");
  const auto fits = chain(target, k_lo, opts, eps);
  std::vector<double> out(target.dim() + 1, std::numeric_limits<double>::quiet_NaN());
  for (int k = k_lo; k <= target.dim(); ++k) out[k] = fits[k].distance;
  return out;
}

bool is_symmetric(const SymmetryTarget& t, int k, double eps, const SymmetryOptions& opts) {
  require(eps > 0.0, "is_symmetric: eps must be positive");
  require(k >= 0 && k <= t.dim(), "is_symmetric: k must lie in [0, n]");
  if (search_level(t, k, opts, eps, t.order()).distance < eps) return true;
  return chain(t, k, opts, eps)[k].distance < eps;
}

bool is_symmetric(const ScalarField& v, const Vector& p, double r, int k, double eps, const SymmetryOptions& opts) {
  require(eps > 0.0, "is_symmetric: eps must be positive");
  require(k >= 0 && k <= v.dim(), "is_symmetric: k must lie in [0, n]");
  const SymmetryTarget t(v, p, r, opts.order);
  if (search_level(t, k, opts, eps, t.order()).distance < eps) return true;
  return chain(t, k, opts, eps)[k].distance < eps;
}

RigidityReport rigidity_check(const ScalarField& v, const Vector& p, double gamma, const SymmetryOptions& opts) {
  require(gamma > 0.0 && gamma < 1.0, "rigidity_check: gamma must lie in (0, 1)");
  RigidityReport out;
  out.drop = frequency(v, p, 1.0) - frequency(v, p, gamma);
  out.distance0 = nearest_k_symmetric(v, p, 1.0, 0, opts).distance;
  return out;
}

WiggleReport wiggle_room_check(const ScalarField& v, const Vector& p, double r, double eps, int k,
                               const SymmetryOptions& opts, int samples) {
  require(r > 0.0 && samples >= 2, "wiggle_room_check: invalid arguments");
  require(k >= 0 && k + 1 <= v.dim(), "wiggle_room_check: k out of range");
  WiggleReport out;
  out.min_frequency = kInf;
  for (int i = 0; i < samples; ++i) {
    const double rho = r * std::pow(8.0, static_cast<double>(i) / (samples - 1));
    out.min_frequency = std::min(out.min_frequency, frequency(v, p, rho));
  }
  out.margin = out.min_frequency - 1.0;
  out.precondition_ok = !is_symmetric(v, p, 8.0 * r, k + 1, eps, opts);
  return out;
}

ConeSplittingReport cone_splitting_check(const HarmonicPolynomial& P, const Matrix& V, const Vector& x, int samples,
                                         std::uint64_t seed) {
  const int n = P.dim();
  require(V.rows() == n && x.size() == n, "cone_splitting_check: dimension mismatch");
  ConeSplittingReport out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> pts;
  for (int s = 0; s < samples; ++s) {
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = normal(rng);
    pts.push_back(y / std::max(1.0, y.norm()));
  }
  const double scale = std::max(1e-300, P.monomial_form().max_abs_coeff()) * std::max(1, P.degree());
  const Matrix Vo = V.cols() > 0 ? orthonormalize(V) : Matrix::Zero(n, 0);
  const Vector xperp = x - Vo * (Vo.transpose() * x);
  if (xperp.norm() <= 1e-8 * std::max(1.0, x.norm())) {
    out.reason = "x lies in V";
    return out;
  }
  for (const auto& y : pts) {
    const Vector g = P.grad(y);
    for (int j = 0; j < Vo.cols(); ++j)
      if (std::abs(g.dot(Vo.col(j))) > 1e-8 * scale) {
        out.reason = "P is not invariant along V";
        return out;
      }
    // homogeneity about x: P(x + t (y - x)) = t^d P(y)
    const double t = 0.7;
    const double lhs = P(x + t * (y - x)), rhs = std::pow(t, P.degree()) * P(y);
    if (std::abs(lhs - rhs) > 1e-8 * scale * std::max(1.0, (x.norm() + 1.0) * P.degree())) {
      out.reason = "P is not homogeneous about x";
      return out;
    }
  }
  out.precondition_ok = true;
  const Vector dir = xperp.normalized();
  for (const auto& y : pts) out.max_derivative = std::max(out.max_derivative, std::abs(P.grad(y).dot(dir)));
  out.invariant = out.max_derivative < 1e-8 * scale;
  return out;
}

}  // namespace strata
