/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <vector>

#include "legdyn/decompose.hpp"
#include "legdyn/dynamics.hpp"
#include "legdyn/model.hpp"
#include "legdyn/reduction.hpp"

namespace legdyn {

/// Runtime structural-matrix evaluation from precomputed coefficient tables:
/// per step each leg evaluates its basis vector once, mass blocks are sparse
/// coefficient dot products, and mass partials reuse the same coefficients
/// against the precomputed basis-derivative vectors — no matrix chain
/// products in the loop. Same assembly and reshape semantics as the
/// closed-form path.
class FastEvaluator {
public:
  FastEvaluator(const RobotModel& model, const MorphologyVectors& mv,
                std::vector<LegDecomposition> catalog);

  /// Decomposes every catalog entry in place (no cache file).
  static FastEvaluator build(const RobotModel& model, const MorphologyVectors& mv);

  void set_morphology(const MorphologyVectors& mv);
  const MorphologyVectors& morphology() const { return mv_; }
  const ReducedIndex& reduced() const { return idx_; }
  const std::vector<LegDecomposition>& catalog() const { return catalog_; }

  const StructuralMatrices& evaluate(const RobotState& state);
  const StructuralMatrices& current() const { return out_; }

private:
  const RobotModel* model_;
  MorphologyVectors mv_;
  ReducedIndex idx_;
  std::vector<LegDecomposition> catalog_;
  std::vector<InstancedLeg> legs_;
  StructuralMatrices out_;

  // Per-step scratch, confined to this evaluator.
  std::vector<double> values_;
  std::vector<double> dvalues_;
};

}  // namespace legdyn
