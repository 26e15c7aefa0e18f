#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace strata {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Coords = std::span<const double>;
using MutCoords = std::span<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: maps to exit code 1 in the CLI.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A quantity needed by the computation vanished: maps to exit code 2.
class NumericDegeneracy : public Error {
 public:
  using Error::Error;
};

class DegenerateRescaling : public NumericDegeneracy {
 public:
  using NumericDegeneracy::NumericDegeneracy;
};

class DegenerateHeight : public NumericDegeneracy {
 public:
  using NumericDegeneracy::NumericDegeneracy;
};

class DepthExceeded : public NumericDegeneracy {
 public:
  using NumericDegeneracy::NumericDegeneracy;
};

// Axis-aligned box [lo, hi].
struct Box {
  Vector lo;
  Vector hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(Coords x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
};

inline Coords coords(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline Vector to_vector(Coords c) {
  Vector v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v[static_cast<Eigen::Index>(i)] = c[i];
  return v;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

// Surface area of the unit sphere in R^n.
double sphere_area(int n);
// Volume of the unit ball in R^n.
double ball_volume(int n);

// Lexicographic order on points, used wherever a deterministic preorder is needed.
bool lex_less(const Vector& a, const Vector& b);

}  // namespace strata
