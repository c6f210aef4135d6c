/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "legdyn/dynamics.hpp"
#include "legdyn/model.hpp"
#include "legdyn/trigpoly.hpp"

namespace legdyn {

/// Ordered list of trigonometric monomials spanning every entry of a leg's
/// structural matrices, closed under ∂/∂θ_k. Element 0 is the constant 1.
/// Per-joint derivative tables are precomputed so runtime derivative
/// evaluation is a sparse matrix–vector product.
class TrigBasis {
public:
  TrigBasis() = default;

  /// Builds the derivative closure of `keys` plus the constant monomial and
  /// sorts it canonically.
  TrigBasis(int joints, std::vector<TrigKey> keys);

  int joints() const { return joints_; }
  int size() const { return static_cast<int>(keys_.size()); }
  const std::vector<TrigKey>& keys() const { return keys_; }
  int index_of(TrigKey key) const;

  /// Fills values[0..size) with the monomial values at θ.
  void evaluate(const double* theta, double* values) const;

  /// values_k[g] = ∂𝔉_g/∂θ_k evaluated at the same θ as `values`.
  void evaluate_derivative(int joint, const double* values, double* values_k) const;

  /// Exposes the derivative expansion of one basis element, for tests.
  std::vector<std::pair<int, double>> derivative_row(int joint, int element) const;

private:
  int joints_ = 0;
  std::vector<TrigKey> keys_;
  std::unordered_map<TrigKey, int> index_;
  // CSR per joint: row g of D_k lists the basis expansion of ∂𝔉_g/∂θ_k.
  struct Table {
    std::vector<int> ptr;
    std::vector<int> col;
    std::vector<double> val;
  };
  std::vector<Table> deriv_;

  friend struct DecompositionCodec;
};

/// Sparse coefficient matrix of one structural block: each entry of the
/// rows×cols block is a sparse combination of basis values.
struct SparseCoeffs {
  int rows = 0;
  int cols = 0;
  std::vector<int> ptr;        // rows*cols + 1, column-major entries
  std::vector<int> basis;
  std::vector<double> coeff;

  static SparseCoeffs zero(int rows, int cols);

  /// out (column-major, rows*cols) = Σ coeff · values[basis].
  void evaluate(const double* values, double* out) const;
  /// Same, but only the leading `cols_used` columns are written.
  void evaluate_cols(const double* values, double* out, int cols_used) const;

  std::size_t nnz() const { return coeff.size(); }
};

/// Offline decomposition of one catalog morphology: every entry of the link
/// mass blocks, gravity terms, and tip Jacobian written exactly over the
/// trigonometric basis. Built once per catalog entry, before any simulation
/// loop; immutable afterwards.
struct LegDecomposition {
  int dof = 0;
  TrigBasis basis;
  std::uint64_t morphology_hash = 0;

  // Per link: mass blocks (6×6, 6×n, n×n).
  std::vector<SparseCoeffs> link_bb, link_bt, link_tt;
  // Per link: gravity. ntheta (n×3) acts on the body-frame gravity direction
  // scaled by g; ng (3×3) is m·p̂(θ) for the torque rows of the body part.
  std::vector<SparseCoeffs> link_ntheta, link_ng;
  std::vector<double> link_mass;

  bool has_tip = false;
  SparseCoeffs tip_jacobian;  // 6×(6+n): [Ad⁻¹_tip, Ad⁻¹_tip·J_tip]

  /// Reconstructed link mass blocks, for verification against the
  /// closed-form path.
  LinkMassBlocks eval_link_mass(int link, const Eigen::VectorXd& theta) const;
  /// Reconstructed ∂M_link/∂θ_k via the precomputed basis derivatives.
  LinkMassBlocks eval_link_partials(int link, int k, const Eigen::VectorXd& theta) const;
};

/// Algorithm: sweep the leg symbolically, expand every block over the
/// monomials it actually contains, and freeze the coefficients. Throws
/// NonRevoluteJointError unless every joint screw is a unit-axis zero-pitch
/// revolute screw.
LegDecomposition decompose_leg(const LegMorphology& morphology);

std::uint64_t morphology_hash(const LegMorphology& morphology);

/// One robot leg: catalog coefficients with the hip transform folded in and
/// prefix-cumulative tables so evaluation cost does not depend on how many
/// links are present.
struct InstancedLeg {
  int dof = 0;
  const TrigBasis* basis = nullptr;

  // Index p-1 holds the sum over links 0..p-1 (present prefix of length p),
  // trimmed to the leading p columns where applicable.
  std::vector<SparseCoeffs> prefix_bb;      // 6×6
  std::vector<SparseCoeffs> prefix_bt;      // 6×p
  std::vector<SparseCoeffs> prefix_tt;      // p×p
  std::vector<SparseCoeffs> prefix_ntheta;  // p×3
  std::vector<SparseCoeffs> prefix_ng;      // 3×3
  std::vector<double> prefix_mass;

  bool has_tip = false;
  SparseCoeffs tip_jacobian;
};

/// Folds a hip attachment into catalog coefficients (congruence by the hip
/// adjoint on the body blocks; rotation on the gravity blocks).
InstancedLeg instantiate(const LegDecomposition& decomposition, const Pose& hip);

/// Versioned binary cache so the decomposition runs once per morphology.
/// Little-endian 64-bit floats; the loader validates the morphology hash.
void save_decompositions(std::ostream& out, const std::vector<LegDecomposition>& entries);
std::vector<LegDecomposition> load_decompositions(std::istream& in);
void save_decompositions_file(const std::string& path,
                              const std::vector<LegDecomposition>& entries);
std::vector<LegDecomposition> load_decompositions_file(const std::string& path);

/// Loads the cache and checks each entry against the model's catalog hashes.
std::vector<LegDecomposition> load_decompositions_checked(const std::string& path,
                                                          const RobotModel& model);

}  // namespace legdyn
