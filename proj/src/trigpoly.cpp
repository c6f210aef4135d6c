/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/trigpoly.hpp"

#include <cmath>
#include <stdexcept>

namespace legdyn {

TrigKey make_key(int joints, const int* sin_exp, const int* cos_exp) {
  TrigKey key = 0;
  for (int j = 0; j < joints; ++j) {
    if (sin_exp[j] < 0 || sin_exp[j] > 1 || cos_exp[j] < 0 || cos_exp[j] > 0x7f)
      throw std::invalid_argument("trig monomial exponent out of range");
    key |= (static_cast<TrigKey>(sin_exp[j]) << (8 * j + 7));
    key |= (static_cast<TrigKey>(cos_exp[j]) << (8 * j));
  }
  return key;
}

TrigPoly TrigPoly::constant(int joints, double value) {
  TrigPoly p(joints);
  if (value != 0.0) p.terms_[trig_one()] = value;
  return p;
}

TrigPoly TrigPoly::sin_of(int joints, int joint) {
  TrigPoly p(joints);
  p.terms_[static_cast<TrigKey>(1) << (8 * joint + 7)] = 1.0;
  return p;
}

TrigPoly TrigPoly::cos_of(int joints, int joint) {
  TrigPoly p(joints);
  p.terms_[static_cast<TrigKey>(1) << (8 * joint)] = 1.0;
  return p;
}

double TrigPoly::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

void TrigPoly::add_term(TrigKey key, double coeff) {
  if (coeff == 0.0) return;
  auto it = terms_.find(key);
  if (it == terms_.end()) {
    terms_.emplace(key, coeff);
  } else {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& other) {
  for (const auto& [key, c] : other.terms_) add_term(key, c);
  return *this;
}

TrigPoly& TrigPoly::operator-=(const TrigPoly& other) {
  for (const auto& [key, c] : other.terms_) add_term(key, -c);
  return *this;
}

TrigPoly TrigPoly::operator+(const TrigPoly& other) const {
  TrigPoly out = *this;
  out += other;
  return out;
}

TrigPoly TrigPoly::operator-(const TrigPoly& other) const {
  TrigPoly out = *this;
  out -= other;
  return out;
}

namespace {

// Multiplies two canonical monomials; sin exponents may reach 2, which is
// split into (1 - cos^2) recursively.
void emit_product(int joints, TrigKey a, TrigKey b, double coeff,
                  std::map<TrigKey, double>& into) {
  // Find a joint whose combined sin exponent hits 2.
  for (int j = 0; j < joints; ++j) {
    const int s = key_sin_exp(a, j) + key_sin_exp(b, j);
    if (s == 2) {
      // sin² = 1 − cos²: strip both sine bits from this joint and recurse.
      const TrigKey sin_bit = static_cast<TrigKey>(1) << (8 * j + 7);
      const TrigKey a2 = a & ~sin_bit;
      const TrigKey b2 = b & ~sin_bit;
      emit_product(joints, a2, b2, coeff, into);
      const TrigKey cos_sq = static_cast<TrigKey>(2) << (8 * j);
      emit_product(joints, a2 + cos_sq, b2, -coeff, into);
      return;
    }
  }
  // No reduction left: exponents add bytewise (no carries by construction).
  const TrigKey key = a + b;
  auto it = into.find(key);
  if (it == into.end())
    into.emplace(key, coeff);
  else if ((it->second += coeff) == 0.0)
    into.erase(it);
}

}  // namespace

TrigPoly TrigPoly::operator*(const TrigPoly& other) const {
  TrigPoly out(joints_);
  std::map<TrigKey, double> acc;
  for (const auto& [ka, ca] : terms_)
    for (const auto& [kb, cb] : other.terms_) emit_product(joints_, ka, kb, ca * cb, acc);
  for (const auto& [key, c] : acc)
    if (c != 0.0) out.terms_.emplace(key, c);
  return out;
}

TrigPoly TrigPoly::operator*(double scale) const {
  TrigPoly out(joints_);
  if (scale == 0.0) return out;
  for (const auto& [key, c] : terms_) out.terms_.emplace(key, c * scale);
  return out;
}

TrigPoly TrigPoly::derivative(int joint) const {
  TrigPoly out(joints_);
  const TrigKey sin_bit = static_cast<TrigKey>(1) << (8 * joint + 7);
  const TrigKey cos_one = static_cast<TrigKey>(1) << (8 * joint);
  for (const auto& [key, c] : terms_) {
    const int s = key_sin_exp(key, joint);
    const int b = key_cos_exp(key, joint);
    if (s == 1) {
      // d/dθ sin·cos^b = (1+b) cos^{b+1} − b cos^{b-1} after the sin² split
      const TrigKey base = key & ~sin_bit;
      out.add_term(base + cos_one, (1.0 + b) * c);
      if (b > 0) out.add_term(base - cos_one, -static_cast<double>(b) * c);
    } else if (b > 0) {
      // d/dθ cos^b = −b sin cos^{b-1}
      out.add_term((key | sin_bit) - cos_one, -static_cast<double>(b) * c);
    }
  }
  return out;
}

double evaluate_key(TrigKey key, int joints, const double* theta) {
  double value = 1.0;
  for (int j = 0; j < joints; ++j) {
    const int s = key_sin_exp(key, j);
    const int b = key_cos_exp(key, j);
    if (s) value *= std::sin(theta[j]);
    if (b) {
      const double c = std::cos(theta[j]);
      for (int e = 0; e < b; ++e) value *= c;
    }
  }
  return value;
}

double TrigPoly::evaluate(const double* theta) const {
  double acc = 0.0;
  for (const auto& [key, c] : terms_) acc += c * evaluate_key(key, joints_, theta);
  return acc;
}

void TrigPoly::prune(double abs_tol, double rel_tol) {
  const double cut = std::max(abs_tol, rel_tol * max_abs_coeff());
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) < cut)
      it = terms_.erase(it);
    else
      ++it;
  }
}

}  // namespace legdyn
