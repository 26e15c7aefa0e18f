#include "strata/frequency.hpp"

#include "strata/integration.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace strata {

namespace {

struct SphereSums {
  double H = 0.0;
  double cross = 0.0;   // integral of (v - v(p)) r d_nu v
  double radial2 = 0.0; // integral of (r d_nu v)^2
  double grad2_max = 0.0;
};

SphereSums sphere_sums(const ScalarField& v, const Vector& p, double r, int order) {
  const int n = v.dim();
  const NodeSet nodes = sphere_nodes(v, p, r, order);
  const double vp = v.value(coords(p));
  SphereSums s;
  double g[16];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Coords x = nodes.point(i);
    const double f = v.value_and_gradient(x, {g, static_cast<std::size_t>(n)}) - vp;
    double radial = 0.0, g2 = 0.0;
    for (int k = 0; k < n; ++k) {
      radial += g[k] * (x[k] - p[k]);
      g2 += g[k] * g[k];
    }
    const double w = nodes.weights[i];
    s.H += w * f * f;
    s.cross += w * f * radial;
    s.radial2 += w * radial * radial;
    s.grad2_max = std::max(s.grad2_max, g2);
  }
  return s;
}

bool degenerate_height(const ScalarField& v, double H, double grad2_max, double r) {
  double L2 = grad2_max;
  if (auto L = v.lipschitz_hint()) L2 = *L * *L;
  return H <= 1e-14 * L2 * std::pow(r, v.dim() + 1);
}

void check_args(const ScalarField& v, const Vector& p, double r) {
  require(p.size() == v.dim(), "frequency: point has the wrong dimension");
  require(r > 0.0 && std::isfinite(r), "frequency: radius must be positive");
}

}  // namespace

double height(const ScalarField& v, const Vector& p, double r, int order) {
  check_args(v, p, r);
  const NodeSet nodes = sphere_nodes(v, p, r, order);
  const double vp = v.value(coords(p));
  double H = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double f = v.value(nodes.point(i)) - vp;
    H += nodes.weights[i] * f * f;
  }
  return H;
}

double dirichlet(const ScalarField& v, const Vector& p, double r, int order) {
  check_args(v, p, r);
  const int n = v.dim();
  const NodeSet nodes = ball_nodes(v, p, r, order);
  double D = 0.0;
  double g[16];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    v.value_and_gradient(nodes.point(i), {g, static_cast<std::size_t>(n)});
    double g2 = 0.0;
    for (int k = 0; k < n; ++k) g2 += g[k] * g[k];
    D += nodes.weights[i] * g2;
  }
  return D;
}

FrequencyRecord frequency_record(const ScalarField& v, const Vector& p, double r, int order, bool with_lambda) {
  check_args(v, p, r);
  FrequencyRecord rec;
  rec.p = p;
  rec.r = r;
  const SphereSums s = sphere_sums(v, p, r, order);
  rec.H = s.H;
  rec.D = dirichlet(v, p, r, order);
  if (degenerate_height(v, s.H, s.grad2_max, r)) {
    rec.degenerate = true;
    rec.N = std::numeric_limits<double>::quiet_NaN();
    return rec;
  }
  rec.N = std::max(0.0, r * rec.D / rec.H);
  if (with_lambda) rec.lambda = s.cross / s.H;
  return rec;
}

double frequency(const ScalarField& v, const Vector& p, double r, int order) {
  const FrequencyRecord rec = frequency_record(v, p, r, order, false);
  if (rec.degenerate) throw DegenerateHeight("frequency: the height vanishes at this point and scale");
  return rec.N;
}

double lambda(const ScalarField& v, const Vector& p, double r, int order) {
  check_args(v, p, r);
  const SphereSums s = sphere_sums(v, p, r, order);
  if (degenerate_height(v, s.H, s.grad2_max, r)) throw DegenerateHeight("lambda: the height vanishes");
  return s.cross / s.H;
}

double homogeneity_defect(const ScalarField& v, const Vector& p, double r, int order) {
  check_args(v, p, r);
  const SphereSums s = sphere_sums(v, p, r, order);
  if (degenerate_height(v, s.H, s.grad2_max, r)) throw DegenerateHeight("homogeneity defect: the height vanishes");
  const double lam = s.cross / s.H;
  // integral of (radial - lam f)^2 expanded; clamp the rounding residue
  return std::max(0.0, (s.radial2 - 2.0 * lam * s.cross + lam * lam * s.H) / s.H);
}

FrequencyProfile frequency_profile(const ScalarField& v, const Vector& p, double r_min, double r_max, double q,
                                   int order) {
  require(r_min > 0.0 && r_max > r_min, "frequency_profile: need 0 < r_min < r_max");
  require(q > 1.0, "frequency_profile: ratio must exceed 1");
  FrequencyProfile prof;
  prof.p = p;
  for (int i = 0;; ++i) {
    const double r = r_min * std::pow(q, i);
    if (r > r_max * (1.0 + 1e-12)) break;
    prof.scales.push_back(r);
    require(prof.scales.size() <= 100000, "frequency_profile: too many scales");
  }
  for (double r : prof.scales) prof.records.push_back(frequency_record(v, p, r, order));
  for (std::size_t i = 0; i + 1 < prof.records.size(); ++i)
    prof.drops.push_back(prof.records[i + 1].N - prof.records[i].N);
  return prof;
}

double drop(const FrequencyProfile& profile, double s, double S) {
  auto find = [&](double r) -> const FrequencyRecord& {
    for (const auto& rec : profile.records)
      if (std::abs(rec.r - r) <= 1e-9 * r) return rec;
    throw InvalidArgument("drop: scale not present in the profile");
  };
  const auto& a = find(s);
  const auto& b = find(S);
  if (a.degenerate || b.degenerate) throw DegenerateHeight("drop: degenerate scale");
  return b.N - a.N;
}

std::pair<double, double> frequency_rescaling_check(const FieldPtr& v, double a, double b, double c0, double r,
                                                    int order) {
  const FieldPtr w = compose_affine(v, a, b, c0);
  const Vector zero = Vector::Zero(v->dim());
  return {frequency(*v, zero, r, order), frequency(*w, zero, r / std::abs(b), order)};
}

DoublingCheck doubling_check(const ScalarField& v, const Vector& p, double s, double S, int order) {
  require(s > 0.0 && S > s, "doubling_check: need 0 < s < S");
  const FrequencyRecord small = frequency_record(v, p, s, order, false);
  const FrequencyRecord large = frequency_record(v, p, S, order, false);
  if (small.degenerate || large.degenerate) throw DegenerateHeight("doubling_check: degenerate height");
  const int n = v.dim();
  DoublingCheck out;
  out.lhs = large.H / small.H;
  out.rhs_upper = std::pow(S / s, (n - 1) + 2.0 * large.N);
  out.rhs_lower = std::pow(S / s, (n - 1) + 2.0 * small.N);
  return out;
}

void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRecord>& records) {
  if (records.empty()) return;
  const int n = static_cast<int>(records.front().p.size());
  for (int i = 0; i < n; ++i) out << "p" << i << ",";
  out << "r,H,D,N,lambda\n";
  out << std::setprecision(12);
  for (const auto& rec : records) {
    for (int i = 0; i < n; ++i) out << rec.p[i] << ",";
    out << rec.r << "," << rec.H << "," << rec.D << ",";
    if (rec.degenerate)
      out << "nan,nan\n";
    else
      out << rec.N << "," << (rec.lambda ? *rec.lambda : std::numeric_limits<double>::quiet_NaN()) << "\n";
  }
}

}  // namespace strata
