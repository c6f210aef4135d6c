/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace legdyn {

/// Monomial Π_j sin^{s_j}(θ_j) cos^{c_j}(θ_j) over up to 8 joints, packed one
/// byte per joint (bit 7: sine exponent, bits 0–6: cosine exponent). Kept
/// canonical with respect to sin² = 1 − cos², so s_j ∈ {0, 1}.
using TrigKey = std::uint64_t;

constexpr TrigKey trig_one() { return 0; }

inline int key_sin_exp(TrigKey key, int joint) { return (key >> (8 * joint + 7)) & 1; }
inline int key_cos_exp(TrigKey key, int joint) { return (key >> (8 * joint)) & 0x7f; }
TrigKey make_key(int joints, const int* sin_exp, const int* cos_exp);

/// Exact multilinear algebra over the trigonometric monomials above.
/// Products and derivatives are reduced back to canonical form, so closure
/// under ∂/∂θ_k is structural, not numerical. Offline use only.
class TrigPoly {
public:
  explicit TrigPoly(int joints = 1) : joints_(joints) {}

  static TrigPoly constant(int joints, double value);
  static TrigPoly sin_of(int joints, int joint);
  static TrigPoly cos_of(int joints, int joint);

  int joints() const { return joints_; }
  const std::map<TrigKey, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  double max_abs_coeff() const;

  /// Adds coeff·monomial, reducing any sin² factors on the fly.
  void add_term(TrigKey key, double coeff);

  TrigPoly& operator+=(const TrigPoly& other);
  TrigPoly& operator-=(const TrigPoly& other);
  TrigPoly operator+(const TrigPoly& other) const;
  TrigPoly operator-(const TrigPoly& other) const;
  TrigPoly operator*(const TrigPoly& other) const;
  TrigPoly operator*(double scale) const;
  TrigPoly operator-() const { return *this * -1.0; }

  TrigPoly derivative(int joint) const;

  double evaluate(const double* theta) const;

  /// Drops coefficients below max(abs_tol, rel_tol · max |coeff|); exact
  /// cancellations leave ~1e-17 dust that would otherwise bloat the basis.
  void prune(double abs_tol, double rel_tol);

private:
  int joints_;
  std::map<TrigKey, double> terms_;
};

inline TrigPoly operator*(double scale, const TrigPoly& poly) { return poly * scale; }

/// Value of a single monomial at θ.
double evaluate_key(TrigKey key, int joints, const double* theta);

}  // namespace legdyn
