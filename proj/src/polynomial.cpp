#include "strata/polynomial.hpp"

#include <array>
#include <cmath>
#include <mutex>

namespace strata {

namespace {

constexpr int kMaxDim = 16;
constexpr int kMaxDegree = 32;

void enumerate(int n, int remaining, int var, Exponent& cur, std::vector<Exponent>& out) {
  if (var == n - 1) {
    cur[var] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[var] = e;
    enumerate(n, remaining - e, var + 1, cur, out);
  }
}

using PowerTable = std::array<std::array<double, kMaxDegree + 1>, kMaxDim>;

void fill_powers(Coords x, int d, PowerTable& pw) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    pw[i][0] = 1.0;
    for (int e = 1; e <= d; ++e) pw[i][e] = pw[i][e - 1] * x[i];
  }
}

}  // namespace

MonomialTable::MonomialTable(int n, int d) : n_(n), d_(d) {
  require(n >= 1 && n <= kMaxDim, "monomials: unsupported number of variables");
  require(d >= 0 && d <= kMaxDegree, "monomials: unsupported degree");
  Exponent cur(n, 0);
  enumerate(n, d, 0, cur, exps_);
  for (std::size_t i = 0; i < exps_.size(); ++i) lookup_[exps_[i]] = i;
}

long MonomialTable::index(const Exponent& e) const {
  auto it = lookup_.find(e);
  return it == lookup_.end() ? -1 : static_cast<long>(it->second);
}

const MonomialTable& monomial_table(int n, int d) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<MonomialTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{n, d}];
  if (!slot) slot = std::make_unique<MonomialTable>(n, d);
  return *slot;
}

double sphere_moment(const Exponent& alpha) {
  double log_num = 0.0;
  double total = 0.0;
  for (int a : alpha) {
    if (a % 2 != 0) return 0.0;
    const double b = 0.5 * (a + 1);
    log_num += std::lgamma(b);
    total += b;
  }
  return 2.0 * std::exp(log_num - std::lgamma(total));
}

HomogeneousPolynomial::HomogeneousPolynomial(int n, int d)
    : n_(n), d_(d), table_(&monomial_table(n, d)), c_(table_->size(), 0.0) {}

HomogeneousPolynomial::HomogeneousPolynomial(int n, int d, std::vector<double> coeffs)
    : n_(n), d_(d), table_(&monomial_table(n, d)), c_(std::move(coeffs)) {
  require(c_.size() == table_->size(), "polynomial: coefficient count does not match the monomial basis");
}

double HomogeneousPolynomial::eval(Coords x) const {
  if (d_ == 0) return c_[0];
  PowerTable pw;
  fill_powers(x, d_, pw);
  double sum = 0.0;
  for (std::size_t m = 0; m < c_.size(); ++m) {
    if (c_[m] == 0.0) continue;
    const Exponent& e = table_->exponent(m);
    double t = c_[m];
    for (int i = 0; i < n_; ++i) t *= pw[i][e[i]];
    sum += t;
  }
  return sum;
}

double HomogeneousPolynomial::eval_with_gradient(Coords x, MutCoords g) const {
  for (int i = 0; i < n_; ++i) g[i] = 0.0;
  if (d_ == 0) return c_[0];
  PowerTable pw;
  fill_powers(x, d_, pw);
  double sum = 0.0;
  for (std::size_t m = 0; m < c_.size(); ++m) {
    if (c_[m] == 0.0) continue;
    const Exponent& e = table_->exponent(m);
    double t = c_[m];
    for (int i = 0; i < n_; ++i) t *= pw[i][e[i]];
    sum += t;
    for (int i = 0; i < n_; ++i) {
      if (e[i] == 0) continue;
      double gi = c_[m] * e[i] * pw[i][e[i] - 1];
      for (int j = 0; j < n_; ++j)
        if (j != i) gi *= pw[j][e[j]];
      g[i] += gi;
    }
  }
  return sum;
}

void HomogeneousPolynomial::gradient(Coords x, MutCoords g) const { eval_with_gradient(x, g); }

HomogeneousPolynomial HomogeneousPolynomial::derivative(int var) const {
  if (d_ == 0) return HomogeneousPolynomial(n_, 0);
  HomogeneousPolynomial out(n_, d_ - 1);
  for (std::size_t m = 0; m < c_.size(); ++m) {
    Exponent e = table_->exponent(m);
    if (e[var] == 0 || c_[m] == 0.0) continue;
    const double f = c_[m] * e[var];
    --e[var];
    out.c_[out.table_->index(e)] += f;
  }
  return out;
}

HomogeneousPolynomial HomogeneousPolynomial::laplacian() const {
  if (d_ < 2) return HomogeneousPolynomial(n_, 0);
  HomogeneousPolynomial out(n_, d_ - 2);
  for (std::size_t m = 0; m < c_.size(); ++m) {
    if (c_[m] == 0.0) continue;
    for (int i = 0; i < n_; ++i) {
      Exponent e = table_->exponent(m);
      if (e[i] < 2) continue;
      const double f = c_[m] * e[i] * (e[i] - 1);
      e[i] -= 2;
      out.c_[out.table_->index(e)] += f;
    }
  }
  return out;
}

HomogeneousPolynomial HomogeneousPolynomial::operator*(const HomogeneousPolynomial& o) const {
  require(n_ == o.n_, "polynomial product: dimension mismatch");
  HomogeneousPolynomial out(n_, d_ + o.d_);
  Exponent e(n_);
  for (std::size_t a = 0; a < c_.size(); ++a) {
    if (c_[a] == 0.0) continue;
    const Exponent& ea = table_->exponent(a);
    for (std::size_t b = 0; b < o.c_.size(); ++b) {
      if (o.c_[b] == 0.0) continue;
      const Exponent& eb = o.table_->exponent(b);
      for (int i = 0; i < n_; ++i) e[i] = ea[i] + eb[i];
      out.c_[out.table_->index(e)] += c_[a] * o.c_[b];
    }
  }
  return out;
}

HomogeneousPolynomial& HomogeneousPolynomial::operator+=(const HomogeneousPolynomial& o) {
  require(n_ == o.n_ && d_ == o.d_, "polynomial sum: shape mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

HomogeneousPolynomial& HomogeneousPolynomial::operator-=(const HomogeneousPolynomial& o) {
  require(n_ == o.n_ && d_ == o.d_, "polynomial difference: shape mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

HomogeneousPolynomial& HomogeneousPolynomial::operator*=(double s) {
  for (double& c : c_) c *= s;
  return *this;
}

HomogeneousPolynomial HomogeneousPolynomial::compose_linear(const Matrix& A) const {
  require(A.rows() == n_, "compose_linear: matrix rows must equal the number of variables");
  const int target = static_cast<int>(A.cols());
  std::vector<HomogeneousPolynomial> forms;
  for (int i = 0; i < n_; ++i) {
    HomogeneousPolynomial f(target, 1);
    for (int j = 0; j < target; ++j) {
      Exponent e(target, 0);
      e[j] = 1;
      f.c_[f.table_->index(e)] = A(i, j);
    }
    forms.push_back(std::move(f));
  }
  // Powers of each linear form, built once.
  std::vector<std::vector<HomogeneousPolynomial>> powers(n_);
  for (int i = 0; i < n_; ++i) {
    HomogeneousPolynomial one(target, 0);
    one.c_[0] = 1.0;
    powers[i].push_back(one);
    for (int e = 1; e <= d_; ++e) powers[i].push_back(powers[i].back() * forms[i]);
  }
  HomogeneousPolynomial out(target, d_);
  for (std::size_t m = 0; m < c_.size(); ++m) {
    if (c_[m] == 0.0) continue;
    const Exponent& e = table_->exponent(m);
    HomogeneousPolynomial term = powers[0][e[0]];
    for (int i = 1; i < n_; ++i) term = term * powers[i][e[i]];
    term *= c_[m];
    out += term;
  }
  return out;
}

double HomogeneousPolynomial::max_abs_coeff() const {
  double m = 0.0;
  for (double c : c_) m = std::max(m, std::abs(c));
  return m;
}

double sphere_inner(const HomogeneousPolynomial& p, const HomogeneousPolynomial& q) {
  const HomogeneousPolynomial pq = p * q;
  double sum = 0.0;
  for (std::size_t m = 0; m < pq.coeffs().size(); ++m) {
    if (pq.coeffs()[m] == 0.0) continue;
    sum += pq.coeffs()[m] * sphere_moment(pq.table().exponent(m));
  }
  return sum;
}

}  // namespace strata
