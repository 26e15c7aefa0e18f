#pragma once

#include "strata/common.hpp"
#include "strata/harmonic_basis.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <vector>

namespace strata {

// An evaluable real function on R^n with a gradient defined almost everywhere.
// Fields are immutable once built and safe to evaluate concurrently.
class ScalarField {
 public:
  explicit ScalarField(int n) : n_(n) {}
  virtual ~ScalarField() = default;

  int dim() const { return n_; }
  virtual double value(Coords x) const = 0;
  virtual double value_and_gradient(Coords x, MutCoords g) const = 0;
  void gradient(Coords x, MutCoords g) const { value_and_gradient(x, g); }

  // Functions whose sign changes mark where the field fails to be smooth.
  virtual std::size_t kink_count() const { return 0; }
  virtual double kink(std::size_t i, Coords x) const;
  // Orthonormal n x 2 frame of a plane in which the kinks are best resolved by circles.
  virtual std::optional<Matrix> split_plane() const { return std::nullopt; }
  // True when the field is a harmonic function on all of R^n.
  virtual bool harmonic() const { return false; }

  virtual nlohmann::json spec() const = 0;

  std::optional<double> lipschitz_hint() const { return lipschitz_; }

  double operator()(const Vector& x) const { return value(coords(x)); }
  Vector grad(const Vector& x) const;

 protected:
  void base_spec(nlohmann::json& j) const;
  void set_lipschitz_hint(double L) { lipschitz_ = L; }

 private:
  int n_;
  std::optional<double> lipschitz_;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

// Rigid frame map F(x) = rotation * (x - origin).
struct Frame {
  Matrix rotation;
  Vector origin;

  static Frame identity(int n);
  Vector apply(Coords x) const;
  void validate(int n) const;
};

class PolynomialField final : public ScalarField {
 public:
  explicit PolynomialField(HarmonicPolynomial p);
  double value(Coords x) const override { return p_.eval(x); }
  double value_and_gradient(Coords x, MutCoords g) const override { return p_.eval_with_gradient(x, g); }
  bool harmonic() const override { return true; }
  nlohmann::json spec() const override;
  const HarmonicPolynomial& polynomial() const { return p_; }

 private:
  HarmonicPolynomial p_;
};

// c * P^+(F(x)) - P^-(F(x)).
class HingedField final : public ScalarField {
 public:
  HingedField(HarmonicPolynomial p, double c, Frame frame);
  double value(Coords x) const override;
  double value_and_gradient(Coords x, MutCoords g) const override;
  std::size_t kink_count() const override { return c_ == 1.0 ? 0 : 1; }
  double kink(std::size_t i, Coords x) const override;
  std::optional<Matrix> split_plane() const override { return plane_; }
  bool harmonic() const override { return c_ == 1.0; }
  nlohmann::json spec() const override;

  const HarmonicPolynomial& polynomial() const { return p_; }
  double hinge() const { return c_; }
  const Frame& frame() const { return frame_; }

 private:
  HarmonicPolynomial p_;
  double c_;
  Frame frame_;
  Matrix plane_;
};

// a * base(shift + b * y) + c0.
class AffineField final : public ScalarField {
 public:
  AffineField(FieldPtr base, double a, double b, Vector shift, double c0);
  double value(Coords y) const override;
  double value_and_gradient(Coords y, MutCoords g) const override;
  std::size_t kink_count() const override { return base_->kink_count(); }
  double kink(std::size_t i, Coords y) const override;
  std::optional<Matrix> split_plane() const override { return base_->split_plane(); }
  bool harmonic() const override { return base_->harmonic(); }
  nlohmann::json spec() const override;

  const FieldPtr& base() const { return base_; }

 private:
  FieldPtr base_;
  double a_, b_, c0_;
  Vector shift_;
};

class SumField final : public ScalarField {
 public:
  explicit SumField(std::vector<FieldPtr> terms);
  double value(Coords x) const override;
  double value_and_gradient(Coords x, MutCoords g) const override;
  std::size_t kink_count() const override { return kink_owner_.size(); }
  double kink(std::size_t i, Coords x) const override;
  std::optional<Matrix> split_plane() const override;
  bool harmonic() const override;
  nlohmann::json spec() const override;

 private:
  std::vector<FieldPtr> terms_;
  std::vector<std::pair<std::size_t, std::size_t>> kink_owner_;
};

// Values on a regular lattice; C order, last axis fastest.
struct SampledGrid {
  std::vector<std::size_t> shape;
  std::vector<double> spacing;
  std::vector<double> origin;
  std::vector<double> values;
  std::string source;  // header path, if read from disk

  int dim() const { return static_cast<int>(shape.size()); }
  void validate() const;
};

// Header JSON {shape, spacing, origin, data}; data is a little-endian float64 file.
SampledGrid read_sampled_grid(const std::string& header_path);
void write_sampled_grid(const SampledGrid& grid, const std::string& header_path);
SampledGrid sample_on_grid(const ScalarField& v, const Box& box, const std::vector<std::size_t>& shape);

class SampledField final : public ScalarField {
 public:
  // order 1: multilinear; order 3: Catmull-Rom cubic.
  SampledField(SampledGrid grid, int order);
  double value(Coords x) const override;
  double value_and_gradient(Coords x, MutCoords g) const override;
  nlohmann::json spec() const override;
  const SampledGrid& grid() const { return grid_; }

 private:
  double interpolate(Coords x, MutCoords* g) const;
  SampledGrid grid_;
  int order_;
  std::vector<std::size_t> strides_;
};

// (v * phi_eps)(x) with the bump phi = k exp(-1/(1-|y|^2)) on B_1.
class MollifiedField final : public ScalarField {
 public:
  MollifiedField(FieldPtr base, double eps, int order);
  double value(Coords x) const override;
  double value_and_gradient(Coords x, MutCoords g) const override;
  bool harmonic() const override { return base_->harmonic(); }
  nlohmann::json spec() const override;

 private:
  FieldPtr base_;
  double eps_;
  int order_;
  std::vector<double> offsets_;
  std::vector<double> weights_;
};

FieldPtr make_polynomial(const HarmonicPolynomial& p);
FieldPtr make_hinged(const HarmonicPolynomial& p, double c, const Frame& frame);
FieldPtr make_hinged(const HarmonicPolynomial& p, double c);
FieldPtr compose_affine(FieldPtr v, double a, double b, double c0);
FieldPtr make_sum(std::vector<FieldPtr> terms);
FieldPtr make_sampled(SampledGrid grid, int order = 1);
FieldPtr mollify(FieldPtr v, double eps, int order = 12);
FieldPtr with_lipschitz_hint(FieldPtr v, double L);

// Normalizer of T_{x,r}: root of the sphere average of (v(x + r y) - v(x))^2.
double rescale_normalizer(const ScalarField& v, const Vector& x, double r, int order = 0);
// T_{x,r} v. Throws DegenerateRescaling when the normalizer vanishes.
FieldPtr rescale(FieldPtr v, const Vector& x, double r, int order = 0);

// Sign changes of v across lattice edges in the box, bisected to |v| < 1e-9 L spacing.
std::vector<Vector> zero_set_sample(const ScalarField& v, const Box& box, double spacing);

// Largest gradient norm over a lattice in B_radius(center), or the hint if present.
double lipschitz_bound(const ScalarField& v, const Vector& center, double radius, int per_axis = 9);

struct FieldMetadata {
  double Lambda = 0.0;  // N(1, 0, v)
  double alpha = 1.0;
  double Gamma = 0.0;
  std::optional<double> m0_hint;
};

}  // namespace strata
