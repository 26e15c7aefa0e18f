#include "strata/fields.hpp"

#include "strata/integration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <filesystem>

namespace strata {

double ScalarField::kink(std::size_t, Coords) const { throw InvalidArgument("field has no kink functions"); }

Vector ScalarField::grad(const Vector& x) const {
  Vector g(dim());
  value_and_gradient(coords(x), {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

void ScalarField::base_spec(nlohmann::json& j) const {
  j["n"] = n_;
  if (lipschitz_) j["lipschitz_hint"] = *lipschitz_;
}

Frame Frame::identity(int n) { return Frame{Matrix::Identity(n, n), Vector::Zero(n)}; }

Vector Frame::apply(Coords x) const { return rotation * (to_vector(x) - origin); }

void Frame::validate(int n) const {
  require(rotation.rows() == n && rotation.cols() == n, "frame: rotation must be n x n");
  require(origin.size() == n, "frame: origin must have n entries");
  const double err = (rotation.transpose() * rotation - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  require(err < 1e-10, "frame: rotation is not orthogonal");
}

namespace {

nlohmann::json poly_json(const HarmonicPolynomial& p) {
  nlohmann::json j;
  j["degree"] = p.degree();
  j["coeffs"] = p.coeffs();
  return j;
}

// Hinged-part plane: top two eigenvectors of the sphere second moment of grad P.
Matrix gradient_plane(const HarmonicPolynomial& p, const Frame& frame) {
  const int n = p.dim();
  const SphereRule& rule = sphere_rule(n, std::max(2, 2 * p.degree()));
  Matrix G = Matrix::Zero(n, n);
  Vector g(n);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    p.gradient(rule.node(i), {g.data(), static_cast<std::size_t>(n)});
    G += rule.weight(i) * g * g.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  Matrix top(n, 2);
  top.col(0) = es.eigenvectors().col(n - 1);
  top.col(1) = es.eigenvectors().col(n - 2);
  return frame.rotation.transpose() * top;
}

}  // namespace

PolynomialField::PolynomialField(HarmonicPolynomial p) : ScalarField(p.dim()), p_(std::move(p)) {}

nlohmann::json PolynomialField::spec() const {
  nlohmann::json j = poly_json(p_);
  j["type"] = "polynomial";
  base_spec(j);
  return j;
}

HingedField::HingedField(HarmonicPolynomial p, double c, Frame frame)
    : ScalarField(p.dim()), p_(std::move(p)), c_(c), frame_(std::move(frame)) {
  require(c > 0.0 && std::isfinite(c), "hinged field: the hinge constant must be positive");
  frame_.validate(p_.dim());
  plane_ = gradient_plane(p_, frame_);
}

double HingedField::value(Coords x) const {
  const int n = dim();
  double y[16];
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += frame_.rotation(i, j) * (x[j] - frame_.origin[j]);
    y[i] = s;
  }
  const double p = p_.eval({y, static_cast<std::size_t>(n)});
  return p > 0.0 ? c_ * p : p;
}

double HingedField::value_and_gradient(Coords x, MutCoords g) const {
  const int n = dim();
  double y[16], gy[16];
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += frame_.rotation(i, j) * (x[j] - frame_.origin[j]);
    y[i] = s;
  }
  const double p = p_.eval_with_gradient({y, static_cast<std::size_t>(n)}, {gy, static_cast<std::size_t>(n)});
  const double f = p > 0.0 ? c_ : 1.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += frame_.rotation(i, j) * gy[i];
    g[j] = f * s;
  }
  return f * p;
}

double HingedField::kink(std::size_t, Coords x) const {
  const int n = dim();
  double y[16];
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += frame_.rotation(i, j) * (x[j] - frame_.origin[j]);
    y[i] = s;
  }
  return p_.eval({y, static_cast<std::size_t>(n)});
}

nlohmann::json HingedField::spec() const {
  nlohmann::json j = poly_json(p_);
  j["type"] = "hinged";
  j["c"] = c_;
  nlohmann::json rot = nlohmann::json::array();
  for (int i = 0; i < dim(); ++i) {
    std::vector<double> row(dim());
    for (int k = 0; k < dim(); ++k) row[k] = frame_.rotation(i, k);
    rot.push_back(row);
  }
  j["frame"] = {{"rotation", rot},
                {"origin", std::vector<double>(frame_.origin.data(), frame_.origin.data() + dim())}};
  base_spec(j);
  return j;
}

AffineField::AffineField(FieldPtr base, double a, double b, Vector shift, double c0)
    : ScalarField(base->dim()), base_(std::move(base)), a_(a), b_(b), c0_(c0), shift_(std::move(shift)) {
  require(a != 0.0 && std::isfinite(a), "affine field: a must be nonzero");
  require(b != 0.0 && std::isfinite(b), "affine field: b must be nonzero");
  require(shift_.size() == dim(), "affine field: shift has the wrong dimension");
  if (auto L = base_->lipschitz_hint()) set_lipschitz_hint(std::abs(a * b) * *L);
}

double AffineField::value(Coords y) const {
  double x[16];
  for (int i = 0; i < dim(); ++i) x[i] = shift_[i] + b_ * y[i];
  return a_ * base_->value({x, static_cast<std::size_t>(dim())}) + c0_;
}

double AffineField::value_and_gradient(Coords y, MutCoords g) const {
  double x[16];
  for (int i = 0; i < dim(); ++i) x[i] = shift_[i] + b_ * y[i];
  const double v = base_->value_and_gradient({x, static_cast<std::size_t>(dim())}, g);
  for (int i = 0; i < dim(); ++i) g[i] *= a_ * b_;
  return a_ * v + c0_;
}

double AffineField::kink(std::size_t i, Coords y) const {
  double x[16];
  for (int k = 0; k < dim(); ++k) x[k] = shift_[k] + b_ * y[k];
  return base_->kink(i, {x, static_cast<std::size_t>(dim())});
}

nlohmann::json AffineField::spec() const {
  nlohmann::json j;
  j["type"] = "affine";
  j["base"] = base_->spec();
  j["a"] = a_;
  j["b"] = b_;
  j["c0"] = c0_;
  j["shift"] = std::vector<double>(shift_.data(), shift_.data() + dim());
  base_spec(j);
  return j;
}

SumField::SumField(std::vector<FieldPtr> terms) : ScalarField(terms.empty() ? 0 : terms.front()->dim()) {
  require(!terms.empty(), "sum field: needs at least one term");
  for (const auto& t : terms) require(t && t->dim() == dim(), "sum field: terms must share a dimension");
  terms_ = std::move(terms);
  for (std::size_t t = 0; t < terms_.size(); ++t)
    for (std::size_t k = 0; k < terms_[t]->kink_count(); ++k) kink_owner_.emplace_back(t, k);
}

double SumField::value(Coords x) const {
  double s = 0.0;
  for (const auto& t : terms_) s += t->value(x);
  return s;
}

double SumField::value_and_gradient(Coords x, MutCoords g) const {
  double s = 0.0;
  double tmp[16];
  for (int i = 0; i < dim(); ++i) g[i] = 0.0;
  for (const auto& t : terms_) {
    s += t->value_and_gradient(x, {tmp, static_cast<std::size_t>(dim())});
    for (int i = 0; i < dim(); ++i) g[i] += tmp[i];
  }
  return s;
}

double SumField::kink(std::size_t i, Coords x) const {
  const auto& [t, k] = kink_owner_.at(i);
  return terms_[t]->kink(k, x);
}

std::optional<Matrix> SumField::split_plane() const {
  for (const auto& t : terms_)
    if (t->kink_count() > 0)
      if (auto p = t->split_plane()) return p;
  return std::nullopt;
}

bool SumField::harmonic() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const FieldPtr& t) { return t->harmonic(); });
}

nlohmann::json SumField::spec() const {
  nlohmann::json j;
  j["type"] = "sum";
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) terms.push_back(t->spec());
  j["terms"] = terms;
  base_spec(j);
  return j;
}

void SampledGrid::validate() const {
  require(!shape.empty() && shape.size() <= 16, "sampled grid: shape must list 1..16 axes");
  require(spacing.size() == shape.size(), "sampled grid: spacing must match the shape");
  require(origin.size() == shape.size(), "sampled grid: origin must match the shape");
  std::size_t total = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    require(shape[i] >= 2, "sampled grid: every axis needs at least two samples");
    require(spacing[i] > 0.0, "sampled grid: spacing must be positive");
    total *= shape[i];
  }
  require(values.size() == total, "sampled grid: value count does not match the shape");
}

SampledGrid read_sampled_grid(const std::string& header_path) {
  std::ifstream in(header_path);
  require(static_cast<bool>(in), "sampled grid: cannot open " + header_path);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(header_path + ": " + e.what());
  }
  for (const auto& [key, _] : h.items())
    require(key == "shape" || key == "spacing" || key == "origin" || key == "data" || key == "schema",
            header_path + ": unknown key '" + key + "'");
  SampledGrid g;
  g.shape = h.at("shape").get<std::vector<std::size_t>>();
  if (h.at("spacing").is_number())
    g.spacing.assign(g.shape.size(), h.at("spacing").get<double>());
  else
    g.spacing = h.at("spacing").get<std::vector<double>>();
  g.origin = h.at("origin").get<std::vector<double>>();
  std::filesystem::path data = h.contains("data") ? std::filesystem::path(h.at("data").get<std::string>())
                                                  : std::filesystem::path(header_path).replace_extension(".bin");
  if (data.is_relative()) data = std::filesystem::path(header_path).parent_path() / data;
  std::ifstream bin(data, std::ios::binary);
  require(static_cast<bool>(bin), "sampled grid: cannot open data file " + data.string());
  std::size_t total = 1;
  for (auto s : g.shape) total *= s;
  g.values.resize(total);
  bin.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(total * sizeof(double)));
  require(bin.gcount() == static_cast<std::streamsize>(total * sizeof(double)),
          "sampled grid: data file is shorter than the shape requires");
  g.source = header_path;
  g.validate();
  return g;
}

void write_sampled_grid(const SampledGrid& grid, const std::string& header_path) {
  grid.validate();
  std::filesystem::path data = std::filesystem::path(header_path).replace_extension(".bin");
  nlohmann::json h;
  h["shape"] = grid.shape;
  h["spacing"] = grid.spacing;
  h["origin"] = grid.origin;
  h["data"] = data.filename().string();
  std::ofstream(header_path) << h.dump(2) << "\n";
  std::ofstream bin(data, std::ios::binary);
  bin.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
}

SampledGrid sample_on_grid(const ScalarField& v, const Box& box, const std::vector<std::size_t>& shape) {
  const int n = v.dim();
  require(static_cast<int>(shape.size()) == n && box.dim() == n, "sample_on_grid: dimension mismatch");
  SampledGrid g;
  g.shape = shape;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    require(shape[i] >= 2, "sample_on_grid: need two samples per axis");
    g.origin.push_back(box.lo[i]);
    g.spacing.push_back((box.hi[i] - box.lo[i]) / static_cast<double>(shape[i] - 1));
    total *= shape[i];
  }
  g.values.resize(total);
  std::vector<double> x(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int i = n - 1; i >= 0; --i) {
      x[i] = g.origin[i] + g.spacing[i] * static_cast<double>(rem % shape[i]);
      rem /= shape[i];
    }
    g.values[flat] = v.value(x);
  }
  return g;
}

SampledField::SampledField(SampledGrid grid, int order)
    : ScalarField(grid.dim()), grid_(std::move(grid)), order_(order) {
  grid_.validate();
  require(order == 1 || order == 3, "sampled field: interpolation order must be 1 or 3");
  strides_.assign(grid_.shape.size(), 1);
  for (int i = dim() - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * grid_.shape[i + 1];
}

double SampledField::interpolate(Coords x, MutCoords* g) const {
  const int n = dim();
  const int taps = order_ == 1 ? 2 : 4;
  long base[16];
  double w[16][4], dw[16][4];
  for (int i = 0; i < n; ++i) {
    const double last = static_cast<double>(grid_.shape[i] - 1);
    double u = (x[i] - grid_.origin[i]) / grid_.spacing[i];
    const bool clamped = u < 0.0 || u > last;
    u = std::clamp(u, 0.0, last);
    long i0 = std::min(static_cast<long>(std::floor(u)), static_cast<long>(grid_.shape[i]) - 2);
    const double t = u - static_cast<double>(i0);
    const double inv_h = clamped ? 0.0 : 1.0 / grid_.spacing[i];
    if (order_ == 1) {
      base[i] = i0;
      w[i][0] = 1.0 - t;
      w[i][1] = t;
      dw[i][0] = -inv_h;
      dw[i][1] = inv_h;
    } else {
      base[i] = i0 - 1;
      const double t2 = t * t, t3 = t2 * t;
      w[i][0] = 0.5 * (-t3 + 2.0 * t2 - t);
      w[i][1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
      w[i][2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
      w[i][3] = 0.5 * (t3 - t2);
      dw[i][0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0) * inv_h;
      dw[i][1] = 0.5 * (9.0 * t2 - 10.0 * t) * inv_h;
      dw[i][2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0) * inv_h;
      dw[i][3] = 0.5 * (3.0 * t2 - 2.0 * t) * inv_h;
      // Out-of-range taps are replaced by linear extrapolation from the two nearest samples.
      if (base[i] < 0) {
        w[i][1] += 2.0 * w[i][0], w[i][2] -= w[i][0], w[i][0] = 0.0;
        dw[i][1] += 2.0 * dw[i][0], dw[i][2] -= dw[i][0], dw[i][0] = 0.0;
      }
      if (base[i] + 3 > static_cast<long>(grid_.shape[i]) - 1) {
        w[i][2] += 2.0 * w[i][3], w[i][1] -= w[i][3], w[i][3] = 0.0;
        dw[i][2] += 2.0 * dw[i][3], dw[i][1] -= dw[i][3], dw[i][3] = 0.0;
      }
    }
  }
  if (g)
    for (int i = 0; i < n; ++i) (*g)[i] = 0.0;
  double value = 0.0;
  long corner_count = 1;
  for (int i = 0; i < n; ++i) corner_count *= taps;
  int idx[16];
  for (long c = 0; c < corner_count; ++c) {
    long rem = c;
    std::size_t flat = 0;
    double wt = 1.0;
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % taps);
      rem /= taps;
      const long gi = std::clamp(base[i] + idx[i], 0L, static_cast<long>(grid_.shape[i]) - 1);
      flat += static_cast<std::size_t>(gi) * strides_[i];
      wt *= w[i][idx[i]];
    }
    const double f = grid_.values[flat];
    value += wt * f;
    if (g) {
      for (int i = 0; i < n; ++i) {
        double d = dw[i][idx[i]];
        for (int j = 0; j < n; ++j)
          if (j != i) d *= w[j][idx[j]];
        (*g)[i] += d * f;
      }
    }
  }
  return value;
}

double SampledField::value(Coords x) const { return interpolate(x, nullptr); }

double SampledField::value_and_gradient(Coords x, MutCoords g) const { return interpolate(x, &g); }

nlohmann::json SampledField::spec() const {
  nlohmann::json j;
  j["type"] = "sampled";
  j["grid_ref"] = grid_.source;
  j["order"] = order_;
  base_spec(j);
  return j;
}

MollifiedField::MollifiedField(FieldPtr base, double eps, int order)
    : ScalarField(base->dim()), base_(std::move(base)), eps_(eps), order_(order) {
  require(eps > 0.0 && std::isfinite(eps), "mollify: eps must be positive");
  const int n = dim();
  const BallRule& rule = ball_rule(n, order);
  double total = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    double r2 = 0.0;
    for (double c : rule.node(i)) r2 += c * c;
    const double phi = r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
    const double w = rule.weight(i) * phi;
    if (w == 0.0) continue;
    for (double c : rule.node(i)) offsets_.push_back(eps * c);
    weights_.push_back(w);
    total += w;
  }
  for (double& w : weights_) w /= total;
  if (auto L = base_->lipschitz_hint()) set_lipschitz_hint(*L);
}

double MollifiedField::value(Coords x) const {
  std::vector<double> g(dim());
  return value_and_gradient(x, g);
}

double MollifiedField::value_and_gradient(Coords x, MutCoords g) const {
  const int n = dim();
  double y[16], gy[16];
  double s = 0.0;
  for (int i = 0; i < n; ++i) g[i] = 0.0;
  if (base_->kink_count() == 0) {
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      for (int i = 0; i < n; ++i) y[i] = x[i] - offsets_[k * n + i];
      s += weights_[k] * base_->value_and_gradient({y, static_cast<std::size_t>(n)}, {gy, static_cast<std::size_t>(n)});
      for (int i = 0; i < n; ++i) g[i] += weights_[k] * gy[i];
    }
    return s;
  }
  // Kinked base: integrate on nodes split at the kinks, normalizing the bump on the same nodes.
  const Vector center = to_vector(x);
  const NodeSet nodes = ball_nodes(*base_, center, eps_, order_);
  double total = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Coords p = nodes.point(k);
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += (p[i] - x[i]) * (p[i] - x[i]);
    r2 /= eps_ * eps_;
    if (r2 >= 1.0) continue;
    const double w = nodes.weights[k] * std::exp(-1.0 / (1.0 - r2));
    s += w * base_->value_and_gradient(p, {gy, static_cast<std::size_t>(n)});
    for (int i = 0; i < n; ++i) g[i] += w * gy[i];
    total += w;
  }
  for (int i = 0; i < n; ++i) g[i] /= total;
  return s / total;
}

nlohmann::json MollifiedField::spec() const {
  nlohmann::json j;
  j["type"] = "mollified";
  j["base"] = base_->spec();
  j["eps"] = eps_;
  j["order"] = order_;
  base_spec(j);
  return j;
}

namespace {

class HintedField final : public ScalarField {
 public:
  HintedField(FieldPtr base, double L) : ScalarField(base->dim()), base_(std::move(base)) { set_lipschitz_hint(L); }
  double value(Coords x) const override { return base_->value(x); }
  double value_and_gradient(Coords x, MutCoords g) const override { return base_->value_and_gradient(x, g); }
  std::size_t kink_count() const override { return base_->kink_count(); }
  double kink(std::size_t i, Coords x) const override { return base_->kink(i, x); }
  std::optional<Matrix> split_plane() const override { return base_->split_plane(); }
  bool harmonic() const override { return base_->harmonic(); }
  nlohmann::json spec() const override {
    nlohmann::json j = base_->spec();
    j["lipschitz_hint"] = *lipschitz_hint();
    return j;
  }

 private:
  FieldPtr base_;
};

}  // namespace

FieldPtr make_polynomial(const HarmonicPolynomial& p) {
  require(p.dim() >= 1 && p.dim() <= 16, "polynomial field: unsupported dimension");
  return std::make_shared<PolynomialField>(p);
}

FieldPtr make_hinged(const HarmonicPolynomial& p, double c, const Frame& frame) {
  require(p.dim() >= 2 && p.dim() <= 16, "hinged field: unsupported dimension");
  return std::make_shared<HingedField>(p, c, frame);
}

FieldPtr make_hinged(const HarmonicPolynomial& p, double c) { return make_hinged(p, c, Frame::identity(p.dim())); }

FieldPtr compose_affine(FieldPtr v, double a, double b, double c0) {
  require(v != nullptr, "compose_affine: missing field");
  const int n = v->dim();
  return std::make_shared<AffineField>(std::move(v), a, b, Vector::Zero(n), c0);
}

FieldPtr make_sum(std::vector<FieldPtr> terms) { return std::make_shared<SumField>(std::move(terms)); }

FieldPtr make_sampled(SampledGrid grid, int order) { return std::make_shared<SampledField>(std::move(grid), order); }

FieldPtr mollify(FieldPtr v, double eps, int order) {
  require(v != nullptr, "mollify: missing field");
  return std::make_shared<MollifiedField>(std::move(v), eps, order);
}

FieldPtr with_lipschitz_hint(FieldPtr v, double L) {
  require(L > 0.0 && std::isfinite(L), "lipschitz hint must be positive");
  return std::make_shared<HintedField>(std::move(v), L);
}

double rescale_normalizer(const ScalarField& v, const Vector& x, double r, int order) {
  require(r > 0.0 && std::isfinite(r), "rescale: radius must be positive");
  require(x.size() == v.dim(), "rescale: point has the wrong dimension");
  const NodeSet nodes = sphere_nodes(v, x, r, order);
  const double vx = v.value(coords(x));
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double d = v.value(nodes.point(i)) - vx;
    s += nodes.weights[i] * d * d;
  }
  return std::sqrt(s / nodes.total_weight());
}

FieldPtr rescale(FieldPtr v, const Vector& x, double r, int order) {
  const double norm = rescale_normalizer(*v, x, r, order);
  const double vx = v->value(coords(x));
  if (!(norm > 1e-14 * std::max(1.0, std::abs(vx))))
    throw DegenerateRescaling("rescale: the field is constant to working precision on the sphere");
  return std::make_shared<AffineField>(std::move(v), 1.0 / norm, r, x, -vx / norm);
}

double lipschitz_bound(const ScalarField& v, const Vector& center, double radius, int per_axis) {
  if (auto L = v.lipschitz_hint()) return *L;
  const int n = v.dim();
  std::vector<double> x(n), g(n);
  std::vector<int> idx(n, 0);
  double best = 0.0;
  const double step = per_axis > 1 ? 2.0 * radius / (per_axis - 1) : 0.0;
  while (true) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double off = per_axis > 1 ? -radius + step * idx[i] : 0.0;
      x[i] = center[i] + off;
      r2 += off * off;
    }
    if (r2 <= radius * radius * (1.0 + 1e-12)) {
      v.value_and_gradient(x, g);
      double gn = 0.0;
      for (double c : g) gn += c * c;
      best = std::max(best, std::sqrt(gn));
    }
    int i = n - 1;
    while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
    if (i < 0) break;
  }
  return best;
}

std::vector<Vector> zero_set_sample(const ScalarField& v, const Box& box, double spacing) {
  require(spacing > 0.0 && std::isfinite(spacing), "zero_set_sample: spacing must be positive");
  const int n = v.dim();
  require(box.dim() == n, "zero_set_sample: box has the wrong dimension");
  std::vector<long> count(n);
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    require(box.hi[i] >= box.lo[i], "zero_set_sample: box is inverted");
    count[i] = static_cast<long>(std::floor((box.hi[i] - box.lo[i]) / spacing + 1e-9)) + 1;
    total *= static_cast<std::size_t>(count[i]);
  }
  require(total <= 200'000'000, "zero_set_sample: grid too large");
  std::vector<double> vals(total);
  std::vector<double> x(n);
  auto point_of = [&](std::size_t flat, std::vector<double>& out) {
    for (int i = n - 1; i >= 0; --i) {
      out[i] = box.lo[i] + spacing * static_cast<double>(flat % count[i]);
      flat /= count[i];
    }
  };
  double L = 0.0;
  std::vector<double> g(n);
  for (std::size_t f = 0; f < total; ++f) {
    point_of(f, x);
    vals[f] = v.value_and_gradient(x, g);
    double gn = 0.0;
    for (double c : g) gn += c * c;
    L = std::max(L, std::sqrt(gn));
  }
  if (auto hint = v.lipschitz_hint()) L = *hint;
  if (L <= 0.0) L = 1.0;
  const double tol = 1e-9 * L * spacing;
  std::vector<Vector> out;
  std::vector<std::size_t> stride(n, 1);
  for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * static_cast<std::size_t>(count[i + 1]);
  std::vector<double> a(n), b(n), m(n);
  for (std::size_t f = 0; f < total; ++f) {
    point_of(f, a);
    if (std::abs(vals[f]) <= tol) {
      out.push_back(to_vector(a));
      continue;
    }
    std::size_t rem = f;
    std::vector<long> idx(n);
    for (int i = n - 1; i >= 0; --i) {
      idx[i] = static_cast<long>(rem % count[i]);
      rem /= count[i];
    }
    for (int axis = 0; axis < n; ++axis) {
      if (idx[axis] + 1 >= count[axis]) continue;
      const std::size_t nb = f + stride[axis];
      double fa = vals[f], fb = vals[nb];
      if (std::abs(fb) <= tol || (fa < 0.0) == (fb < 0.0)) continue;
      point_of(nb, b);
      std::vector<double> lo = a, hi = b;
      double fm = fa;
      for (int it = 0; it < 200; ++it) {
        for (int i = 0; i < n; ++i) m[i] = 0.5 * (lo[i] + hi[i]);
        fm = v.value(m);
        if (std::abs(fm) < tol) break;
        if ((fm < 0.0) == (fa < 0.0)) {
          lo = m;
          fa = fm;
        } else {
          hi = m;
        }
      }
      out.push_back(to_vector(m));
    }
  }
  return out;
}

}  // namespace strata
