#pragma once

#include "strata/fields.hpp"

#include <iosfwd>
#include <optional>

namespace strata {

struct FrequencyRecord {
  Vector p;
  double r = 0.0;
  double H = 0.0;  // integral of (v - v(p))^2 over the sphere of radius r
  double D = 0.0;  // integral of |grad v|^2 over the ball of radius r
  double N = 0.0;  // r D / H
  std::optional<double> lambda;
  bool degenerate = false;
};

double height(const ScalarField& v, const Vector& p, double r, int order = 0);
double dirichlet(const ScalarField& v, const Vector& p, double r, int order = 0);
// r D / H; throws DegenerateHeight when H <= 1e-14 L^2 r^(n+1).
double frequency(const ScalarField& v, const Vector& p, double r, int order = 0);
// Sphere projection coefficient of the radial derivative onto v - v(p), normalized by H.
double lambda(const ScalarField& v, const Vector& p, double r, int order = 0);
// Normalized defect of r d_nu v - lambda (v - v(p)) on the sphere; zero iff v is homogeneous about p.
double homogeneity_defect(const ScalarField& v, const Vector& p, double r, int order = 0);

// All quantities at one scale. Degenerate heights are flagged instead of thrown.
FrequencyRecord frequency_record(const ScalarField& v, const Vector& p, double r, int order = 0,
                                 bool with_lambda = true);

struct FrequencyProfile {
  Vector p;
  std::vector<double> scales;
  std::vector<FrequencyRecord> records;
  std::vector<double> drops;  // N(scales[i+1]) - N(scales[i]); NaN across degenerate scales
};

// Scales r_min * q^i up to r_max (inclusive within rounding).
FrequencyProfile frequency_profile(const ScalarField& v, const Vector& p, double r_min, double r_max, double q,
                                   int order = 0);
// N(S) - N(s) for two recorded scales.
double drop(const FrequencyProfile& profile, double s, double S);

// (N(r, 0, v), N(r/|b|, 0, a v(b .) + c0)).
std::pair<double, double> frequency_rescaling_check(const FieldPtr& v, double a, double b, double c0, double r,
                                                    int order = 0);

struct DoublingCheck {
  double lhs = 0.0;        // H(S) / H(s)
  double rhs_upper = 0.0;  // (S/s)^((n-1) + 2 N(S))
  double rhs_lower = 0.0;  // (S/s)^((n-1) + 2 N(s))
};
DoublingCheck doubling_check(const ScalarField& v, const Vector& p, double s, double S, int order = 0);

// Columns: p0..p{n-1},r,H,D,N,lambda
void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRecord>& records);

}  // namespace strata
