/****************************************************************************
 * Copyright 2026 the legdyn authors.
 * This library is distributed under the terms of the Apache V2.0
 * License (obtainable from http://www.apache.org/licenses/LICENSE-2.0).
 ****************************************************************************/
#include "legdyn/decompose.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace legdyn {

namespace {

constexpr double kAbsPrune = 1e-14;
constexpr double kRelPrune = 1e-12;

// ---------------------------------------------------------------------------
// Minimal dense matrix over TrigPoly; offline use only.

struct PolyMat {
  int rows = 0, cols = 0, joints = 1;
  std::vector<TrigPoly> e;  // column-major

  PolyMat() = default;
  PolyMat(int r, int c, int n) : rows(r), cols(c), joints(n), e(r * c, TrigPoly(n)) {}

  TrigPoly& at(int r, int c) { return e[r + c * rows]; }
  const TrigPoly& at(int r, int c) const { return e[r + c * rows]; }

  static PolyMat identity(int n, int joints) {
    PolyMat m(n, n, joints);
    for (int i = 0; i < n; ++i) m.at(i, i) = TrigPoly::constant(joints, 1.0);
    return m;
  }

  static PolyMat from_const(const Eigen::MatrixXd& a, int joints) {
    PolyMat m(static_cast<int>(a.rows()), static_cast<int>(a.cols()), joints);
    for (int c = 0; c < m.cols; ++c)
      for (int r = 0; r < m.rows; ++r) m.at(r, c) = TrigPoly::constant(joints, a(r, c));
    return m;
  }

  PolyMat operator*(const PolyMat& other) const {
    PolyMat out(rows, other.cols, joints);
    for (int c = 0; c < other.cols; ++c)
      for (int r = 0; r < rows; ++r) {
        TrigPoly acc(joints);
        for (int k = 0; k < cols; ++k) acc += at(r, k) * other.at(k, c);
        out.at(r, c) = acc;
      }
    return out;
  }

  PolyMat operator+(const PolyMat& other) const {
    PolyMat out = *this;
    for (std::size_t i = 0; i < e.size(); ++i) out.e[i] += other.e[i];
    return out;
  }

  PolyMat transpose() const {
    PolyMat out(cols, rows, joints);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) out.at(c, r) = at(r, c);
    return out;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& p : e) m = std::max(m, p.max_abs_coeff());
    return m;
  }

  void prune() {
    const double cut = std::max(kAbsPrune, kRelPrune * max_abs_coeff());
    for (auto& p : e) p.prune(cut, 0.0);
  }
};

PolyMat poly_skew(const TrigPoly& x, const TrigPoly& y, const TrigPoly& z) {
  const int joints = x.joints();
  PolyMat m(3, 3, joints);
  m.at(0, 1) = -z;
  m.at(0, 2) = y;
  m.at(1, 0) = z;
  m.at(1, 2) = -x;
  m.at(2, 0) = -y;
  m.at(2, 1) = x;
  return m;
}

struct PolyPose {
  PolyMat rot;  // 3x3
  PolyMat pos;  // 3x1

  static PolyPose identity(int joints) {
    PolyPose g;
    g.rot = PolyMat::identity(3, joints);
    g.pos = PolyMat(3, 1, joints);
    return g;
  }

  PolyPose operator*(const PolyPose& other) const {
    PolyPose out;
    out.rot = rot * other.rot;
    out.pos = rot * other.pos + pos;
    return out;
  }
};

// e^{ξ̂ θ_k} for a unit-axis, zero-pitch revolute screw, symbolic in θ_k.
PolyPose poly_exp_revolute(const Twist& screw, int joint, int joints) {
  const Vector3d w = screw.tail<3>();
  const Vector3d v = screw.head<3>();
  if (std::abs(w.norm() - 1.0) > 1e-9)
    throw NonRevoluteJointError("joint screw does not have a unit rotation axis");
  if (std::abs(w.dot(v)) > 1e-9)
    throw NonRevoluteJointError("joint screw has nonzero pitch");

  const TrigPoly s = TrigPoly::sin_of(joints, joint);
  const TrigPoly one_minus_c =
      TrigPoly::constant(joints, 1.0) - TrigPoly::cos_of(joints, joint);
  const Matrix3d wx = skew(w);
  const Matrix3d wx2 = wx * wx;

  PolyPose g;
  g.rot = PolyMat::identity(3, joints);
  g.pos = PolyMat(3, 1, joints);
  const Vector3d axis_moment = w.cross(v);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r)
      g.rot.at(r, c) += s * wx(r, c) + one_minus_c * wx2(r, c);
  // position = (I - R)(ω×v); the pitch term vanishes for revolute screws
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      g.pos.at(r, 0) += (s * -wx(r, c) + one_minus_c * -wx2(r, c)) * axis_moment[c];
  return g;
}

PolyPose from_const_pose(const Pose& g, int joints) {
  PolyPose out;
  out.rot = PolyMat::from_const(g.rotation, joints);
  out.pos = PolyMat::from_const(g.position, joints);
  return out;
}

PolyMat poly_adjoint(const PolyPose& g) {
  const int joints = g.rot.at(0, 0).joints();
  PolyMat ad(6, 6, joints);
  const PolyMat px = poly_skew(g.pos.at(0, 0), g.pos.at(1, 0), g.pos.at(2, 0));
  const PolyMat pxr = px * g.rot;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) {
      ad.at(r, c) = g.rot.at(r, c);
      ad.at(r + 3, c + 3) = g.rot.at(r, c);
      ad.at(r, c + 3) = pxr.at(r, c);
    }
  return ad;
}

PolyMat poly_adjoint_inverse(const PolyPose& g) {
  PolyPose inv;
  inv.rot = g.rot.transpose();
  inv.pos = inv.rot * g.pos;
  for (auto& p : inv.pos.e) p = -p;
  return poly_adjoint(inv);
}

PolyMat poly_twist_transform(const PolyMat& ad, const Twist& xi, int joints) {
  PolyMat out(6, 1, joints);
  for (int r = 0; r < 6; ++r) {
    TrigPoly acc(joints);
    for (int k = 0; k < 6; ++k) acc += ad.at(r, k) * TrigPoly::constant(joints, xi[k]);
    out.at(r, 0) = acc;
  }
  return out;
}

void collect_keys(const PolyMat& m, std::set<TrigKey>& keys) {
  for (const auto& p : m.e)
    for (const auto& [key, c] : p.terms()) keys.insert(key);
}

SparseCoeffs extract(const PolyMat& m, const TrigBasis& basis) {
  SparseCoeffs out;
  out.rows = m.rows;
  out.cols = m.cols;
  out.ptr.reserve(m.e.size() + 1);
  out.ptr.push_back(0);
  for (const auto& p : m.e) {
    for (const auto& [key, c] : p.terms()) {
      const int idx = basis.index_of(key);
      if (idx < 0) throw std::logic_error("monomial missing from the trig basis");
      out.basis.push_back(idx);
      out.coeff.push_back(c);
    }
    out.ptr.push_back(static_cast<int>(out.basis.size()));
  }
  return out;
}

// Dense per-basis slices of a block, used when folding attachments in.
std::vector<Eigen::MatrixXd> to_slices(const SparseCoeffs& sc, int gamma) {
  std::vector<Eigen::MatrixXd> slices(gamma, Eigen::MatrixXd::Zero(sc.rows, sc.cols));
  for (int entry = 0; entry < sc.rows * sc.cols; ++entry) {
    const int r = entry % sc.rows;
    const int c = entry / sc.rows;
    for (int i = sc.ptr[entry]; i < sc.ptr[entry + 1]; ++i)
      slices[sc.basis[i]](r, c) = sc.coeff[i];
  }
  return slices;
}

SparseCoeffs from_slices(const std::vector<Eigen::MatrixXd>& slices, int rows, int cols) {
  double maxc = 0.0;
  for (const auto& s : slices) maxc = std::max(maxc, s.cwiseAbs().maxCoeff());
  const double cut = std::max(kAbsPrune, kRelPrune * maxc);

  SparseCoeffs out;
  out.rows = rows;
  out.cols = cols;
  out.ptr.push_back(0);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      for (int g = 0; g < static_cast<int>(slices.size()); ++g) {
        const double v = slices[g](r, c);
        if (std::abs(v) >= cut) {
          out.basis.push_back(g);
          out.coeff.push_back(v);
        }
      }
      out.ptr.push_back(static_cast<int>(out.basis.size()));
    }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrigBasis

TrigBasis::TrigBasis(int joints, std::vector<TrigKey> seed) : joints_(joints) {
  std::set<TrigKey> keys(seed.begin(), seed.end());
  keys.insert(trig_one());

  // Close under the per-joint derivative maps.
  std::deque<TrigKey> work(keys.begin(), keys.end());
  while (!work.empty()) {
    const TrigKey key = work.front();
    work.pop_front();
    TrigPoly mono(joints_);
    mono.add_term(key, 1.0);
    for (int j = 0; j < joints_; ++j) {
      for (const auto& [dkey, c] : mono.derivative(j).terms()) {
        if (keys.insert(dkey).second) work.push_back(dkey);
      }
    }
  }

  keys_.assign(keys.begin(), keys.end());
  std::sort(keys_.begin(), keys_.end());
  for (int i = 0; i < static_cast<int>(keys_.size()); ++i) index_[keys_[i]] = i;

  deriv_.resize(joints_);
  for (int j = 0; j < joints_; ++j) {
    Table& t = deriv_[j];
    t.ptr.push_back(0);
    for (const TrigKey key : keys_) {
      TrigPoly mono(joints_);
      mono.add_term(key, 1.0);
      for (const auto& [dkey, c] : mono.derivative(j).terms()) {
        t.col.push_back(index_.at(dkey));
        t.val.push_back(c);
      }
      t.ptr.push_back(static_cast<int>(t.col.size()));
    }
  }
}

int TrigBasis::index_of(TrigKey key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? -1 : it->second;
}

void TrigBasis::evaluate(const double* theta, double* values) const {
  for (int i = 0; i < size(); ++i) values[i] = evaluate_key(keys_[i], joints_, theta);
}

void TrigBasis::evaluate_derivative(int joint, const double* values, double* values_k) const {
  const Table& t = deriv_[joint];
  for (int g = 0; g < size(); ++g) {
    double acc = 0.0;
    for (int i = t.ptr[g]; i < t.ptr[g + 1]; ++i) acc += t.val[i] * values[t.col[i]];
    values_k[g] = acc;
  }
}

std::vector<std::pair<int, double>> TrigBasis::derivative_row(int joint, int element) const {
  const Table& t = deriv_[joint];
  std::vector<std::pair<int, double>> row;
  for (int i = t.ptr[element]; i < t.ptr[element + 1]; ++i)
    row.emplace_back(t.col[i], t.val[i]);
  return row;
}

// ---------------------------------------------------------------------------
// SparseCoeffs

SparseCoeffs SparseCoeffs::zero(int rows, int cols) {
  SparseCoeffs out;
  out.rows = rows;
  out.cols = cols;
  out.ptr.assign(rows * cols + 1, 0);
  return out;
}

void SparseCoeffs::evaluate(const double* values, double* out) const {
  const int n = rows * cols;
  for (int entry = 0; entry < n; ++entry) {
    double acc = 0.0;
    for (int i = ptr[entry]; i < ptr[entry + 1]; ++i) acc += coeff[i] * values[basis[i]];
    out[entry] = acc;
  }
}

void SparseCoeffs::evaluate_cols(const double* values, double* out, int cols_used) const {
  const int n = rows * cols_used;
  for (int entry = 0; entry < n; ++entry) {
    double acc = 0.0;
    for (int i = ptr[entry]; i < ptr[entry + 1]; ++i) acc += coeff[i] * values[basis[i]];
    out[entry] = acc;
  }
}

// ---------------------------------------------------------------------------
// Decomposition

std::uint64_t morphology_hash(const LegMorphology& m) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  auto mix_double = [&](double v) { mix(&v, sizeof(v)); };
  auto mix_pose = [&](const Pose& g) {
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 3; ++r) mix_double(g.rotation(r, c));
    for (int r = 0; r < 3; ++r) mix_double(g.position[r]);
  };

  const std::uint32_t dof = m.dof();
  mix(&dof, sizeof(dof));
  for (int j = 0; j < m.dof(); ++j) {
    for (int r = 0; r < 6; ++r) mix_double(m.joint_screws[j][r]);
    mix_pose(m.link_home[j]);
    for (int c = 0; c < 6; ++c)
      for (int r = 0; r < 6; ++r) mix_double(m.link_inertia[j](r, c));
  }
  const std::uint8_t tip = m.tip_home ? 1 : 0;
  mix(&tip, sizeof(tip));
  if (m.tip_home) mix_pose(*m.tip_home);
  return h;
}

LegDecomposition decompose_leg(const LegMorphology& morphology) {
  morphology.validate();
  const int n = morphology.dof();
  if (n > 8) throw NonRevoluteJointError("legs with more than 8 joints are not supported");

  // Symbolic forward sweep of the joint exponentials.
  std::vector<PolyPose> product(n + 1, PolyPose::identity(n));
  for (int k = 0; k < n; ++k)
    product[k + 1] = product[k] * poly_exp_revolute(morphology.joint_screws[k], k, n);

  std::vector<PolyMat> xi_prime(n);
  for (int k = 0; k < n; ++k)
    xi_prime[k] = poly_twist_transform(poly_adjoint(product[k]), morphology.joint_screws[k], n);

  std::vector<PolyMat> block_bb(n), block_bt(n), block_tt(n), block_ng(n), block_nt(n);
  PolyMat tip_block;
  for (int link = 0; link < n; ++link) {
    const Matrix6d ad_home_inv = adjoint_inverse_of(morphology.link_home[link]);
    const Matrix6d iota =
        ad_home_inv.transpose() * morphology.link_inertia[link] * ad_home_inv;

    const PolyMat acc = poly_adjoint_inverse(product[link + 1]);
    PolyMat jac(6, n, n);
    for (int k = 0; k <= link; ++k)
      for (int r = 0; r < 6; ++r) jac.at(r, k) = xi_prime[k].at(r, 0);

    block_bb[link] = acc.transpose() * PolyMat::from_const(iota, n) * acc;
    block_bt[link] = block_bb[link] * jac;
    block_tt[link] = jac.transpose() * block_bt[link];

    // Link CoM position and its joint gradient drive the gravity terms.
    const PolyPose com_pose = product[link + 1] * from_const_pose(morphology.link_home[link], n);
    const double mass = morphology.link_inertia[link](0, 0);
    block_ng[link] = poly_skew(com_pose.pos.at(0, 0), com_pose.pos.at(1, 0),
                               com_pose.pos.at(2, 0));
    for (auto& p : block_ng[link].e) p = p * mass;
    block_nt[link] = PolyMat(n, 3, n);
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < 3; ++a)
        block_nt[link].at(k, a) = com_pose.pos.at(a, 0).derivative(k) * -mass;

    block_bb[link].prune();
    block_bt[link].prune();
    block_tt[link].prune();
    block_ng[link].prune();
    block_nt[link].prune();
  }

  if (morphology.tip_home) {
    const PolyPose tip_pose = product[n] * from_const_pose(*morphology.tip_home, n);
    const PolyMat ad_tip_inv = poly_adjoint_inverse(tip_pose);
    PolyMat jac(6, n, n);
    for (int k = 0; k < n; ++k)
      for (int r = 0; r < 6; ++r) jac.at(r, k) = xi_prime[k].at(r, 0);
    const PolyMat right = ad_tip_inv * jac;
    tip_block = PolyMat(6, 6 + n, n);
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) tip_block.at(r, c) = ad_tip_inv.at(r, c);
      for (int c = 0; c < n; ++c) tip_block.at(r, 6 + c) = right.at(r, c);
    }
    tip_block.prune();
  }

  std::set<TrigKey> keys;
  for (int link = 0; link < n; ++link) {
    collect_keys(block_bb[link], keys);
    collect_keys(block_bt[link], keys);
    collect_keys(block_tt[link], keys);
    collect_keys(block_ng[link], keys);
    collect_keys(block_nt[link], keys);
  }
  if (morphology.tip_home) collect_keys(tip_block, keys);

  LegDecomposition out;
  out.dof = n;
  out.basis = TrigBasis(n, std::vector<TrigKey>(keys.begin(), keys.end()));
  out.morphology_hash = morphology_hash(morphology);
  for (int link = 0; link < n; ++link) {
    out.link_bb.push_back(extract(block_bb[link], out.basis));
    out.link_bt.push_back(extract(block_bt[link], out.basis));
    out.link_tt.push_back(extract(block_tt[link], out.basis));
    out.link_ng.push_back(extract(block_ng[link], out.basis));
    out.link_ntheta.push_back(extract(block_nt[link], out.basis));
    out.link_mass.push_back(morphology.link_inertia[link](0, 0));
  }
  out.has_tip = morphology.tip_home.has_value();
  if (out.has_tip) out.tip_jacobian = extract(tip_block, out.basis);
  return out;
}

LinkMassBlocks LegDecomposition::eval_link_mass(int link, const Eigen::VectorXd& theta) const {
  std::vector<double> values(basis.size());
  basis.evaluate(theta.data(), values.data());
  LinkMassBlocks out;
  out.btheta.resize(6, dof);
  out.thetatheta.resize(dof, dof);
  link_bb[link].evaluate(values.data(), out.bb.data());
  link_bt[link].evaluate(values.data(), out.btheta.data());
  link_tt[link].evaluate(values.data(), out.thetatheta.data());
  return out;
}

LinkMassBlocks LegDecomposition::eval_link_partials(int link, int k,
                                                    const Eigen::VectorXd& theta) const {
  std::vector<double> values(basis.size());
  std::vector<double> dvalues(basis.size());
  basis.evaluate(theta.data(), values.data());
  basis.evaluate_derivative(k, values.data(), dvalues.data());
  LinkMassBlocks out;
  out.btheta.resize(6, dof);
  out.thetatheta.resize(dof, dof);
  link_bb[link].evaluate(dvalues.data(), out.bb.data());
  link_bt[link].evaluate(dvalues.data(), out.btheta.data());
  link_tt[link].evaluate(dvalues.data(), out.thetatheta.data());
  return out;
}

// ---------------------------------------------------------------------------
// Attachment folding

InstancedLeg instantiate(const LegDecomposition& d, const Pose& hip) {
  const int n = d.dof;
  const int gamma = d.basis.size();
  const Matrix6d ad_hip_inv = adjoint_inverse_of(hip);
  const Matrix3d rot_t = hip.rotation.transpose();

  InstancedLeg out;
  out.dof = n;
  out.basis = &d.basis;
  out.has_tip = d.has_tip;

  std::vector<Eigen::MatrixXd> run_bb(gamma, Eigen::MatrixXd::Zero(6, 6));
  std::vector<Eigen::MatrixXd> run_bt(gamma, Eigen::MatrixXd::Zero(6, n));
  std::vector<Eigen::MatrixXd> run_tt(gamma, Eigen::MatrixXd::Zero(n, n));
  std::vector<Eigen::MatrixXd> run_nt(gamma, Eigen::MatrixXd::Zero(n, 3));
  std::vector<Eigen::MatrixXd> run_ng(gamma, Eigen::MatrixXd::Zero(3, 3));
  double run_mass = 0.0;

  auto trim = [&](const std::vector<Eigen::MatrixXd>& run, int r, int c) {
    std::vector<Eigen::MatrixXd> t;
    t.reserve(run.size());
    for (const auto& s : run) t.push_back(s.topLeftCorner(r, c));
    return from_slices(t, r, c);
  };

  for (int link = 0; link < n; ++link) {
    const auto bb = to_slices(d.link_bb[link], gamma);
    const auto bt = to_slices(d.link_bt[link], gamma);
    const auto tt = to_slices(d.link_tt[link], gamma);
    const auto nt = to_slices(d.link_ntheta[link], gamma);
    const auto ng = to_slices(d.link_ng[link], gamma);
    for (int g = 0; g < gamma; ++g) {
      run_bb[g] += ad_hip_inv.transpose() * bb[g] * ad_hip_inv;
      run_bt[g] += ad_hip_inv.transpose() * bt[g];
      run_tt[g] += tt[g];
      run_nt[g] += nt[g] * rot_t;
      run_ng[g] += hip.rotation * ng[g] * rot_t;
    }
    // Shifting the CoM by the hip offset adds a constant m·p̂_hip term.
    run_ng[0] += d.link_mass[link] * skew(hip.position);
    run_mass += d.link_mass[link];

    const int p = link + 1;
    out.prefix_bb.push_back(trim(run_bb, 6, 6));
    out.prefix_bt.push_back(trim(run_bt, 6, p));
    out.prefix_tt.push_back(trim(run_tt, p, p));
    out.prefix_ntheta.push_back(trim(run_nt, p, 3));
    out.prefix_ng.push_back(trim(run_ng, 3, 3));
    out.prefix_mass.push_back(run_mass);
  }

  if (d.has_tip) {
    auto tj = to_slices(d.tip_jacobian, gamma);
    for (auto& s : tj) s.leftCols(6) = s.leftCols(6) * ad_hip_inv;
    out.tip_jacobian = from_slices(tj, 6, 6 + n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache serialization (little-endian, dense slices)

namespace {

constexpr char kMagic[4] = {'L', 'D', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw SchemaError("decomposition cache truncated");
  return v;
}

void write_block(std::ostream& out, const SparseCoeffs& sc, int gamma) {
  write_pod<std::uint32_t>(out, sc.rows);
  write_pod<std::uint32_t>(out, sc.cols);
  const auto slices = to_slices(sc, gamma);
  for (const auto& s : slices)
    for (int c = 0; c < s.cols(); ++c)
      for (int r = 0; r < s.rows(); ++r) write_pod<double>(out, s(r, c));
}

SparseCoeffs read_block(std::istream& in, int gamma) {
  const int rows = read_pod<std::uint32_t>(in);
  const int cols = read_pod<std::uint32_t>(in);
  std::vector<Eigen::MatrixXd> slices(gamma, Eigen::MatrixXd(rows, cols));
  for (auto& s : slices)
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) s(r, c) = read_pod<double>(in);
  return from_slices(slices, rows, cols);
}

}  // namespace

void save_decompositions(std::ostream& out, const std::vector<LegDecomposition>& entries) {
  out.write(kMagic, 4);
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& d : entries) {
    write_pod<std::uint64_t>(out, d.morphology_hash);
    write_pod<std::uint32_t>(out, d.dof);
    write_pod<std::uint32_t>(out, d.basis.size());
    write_pod<std::uint8_t>(out, d.has_tip ? 1 : 0);
    for (const TrigKey key : d.basis.keys()) write_pod<std::uint64_t>(out, key);
    for (int link = 0; link < d.dof; ++link) {
      write_block(out, d.link_bb[link], d.basis.size());
      write_block(out, d.link_bt[link], d.basis.size());
      write_block(out, d.link_tt[link], d.basis.size());
      write_block(out, d.link_ntheta[link], d.basis.size());
      write_block(out, d.link_ng[link], d.basis.size());
      write_pod<double>(out, d.link_mass[link]);
    }
    if (d.has_tip) write_block(out, d.tip_jacobian, d.basis.size());
  }
}

std::vector<LegDecomposition> load_decompositions(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw SchemaError("not a decomposition cache file");
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw SchemaError("unsupported decomposition cache version");

  const auto count = read_pod<std::uint32_t>(in);
  std::vector<LegDecomposition> entries;
  for (std::uint32_t e = 0; e < count; ++e) {
    LegDecomposition d;
    d.morphology_hash = read_pod<std::uint64_t>(in);
    d.dof = read_pod<std::uint32_t>(in);
    const int gamma = read_pod<std::uint32_t>(in);
    d.has_tip = read_pod<std::uint8_t>(in) != 0;
    std::vector<TrigKey> keys(gamma);
    for (auto& key : keys) key = read_pod<std::uint64_t>(in);
    d.basis = TrigBasis(d.dof, keys);
    if (d.basis.size() != gamma)
      throw SchemaError("decomposition cache basis is not derivative-closed");
    // The closure preserves the stored ordering only if the stored set was
    // already closed and sorted, which save_decompositions guarantees.
    for (int g = 0; g < gamma; ++g)
      if (d.basis.keys()[g] != keys[g])
        throw SchemaError("decomposition cache basis ordering mismatch");

    for (int link = 0; link < d.dof; ++link) {
      d.link_bb.push_back(read_block(in, gamma));
      d.link_bt.push_back(read_block(in, gamma));
      d.link_tt.push_back(read_block(in, gamma));
      d.link_ntheta.push_back(read_block(in, gamma));
      d.link_ng.push_back(read_block(in, gamma));
      d.link_mass.push_back(read_pod<double>(in));
    }
    if (d.has_tip) d.tip_jacobian = read_block(in, gamma);
    entries.push_back(std::move(d));
  }
  return entries;
}

void save_decompositions_file(const std::string& path,
                              const std::vector<LegDecomposition>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot open cache file for writing: " + path);
  save_decompositions(out, entries);
}

std::vector<LegDecomposition> load_decompositions_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open cache file: " + path);
  return load_decompositions(in);
}

std::vector<LegDecomposition> load_decompositions_checked(const std::string& path,
                                                          const RobotModel& model) {
  auto entries = load_decompositions_file(path);
  if (static_cast<int>(entries.size()) != model.catalog_size())
    throw SchemaError("decomposition cache entry count does not match the catalog");
  for (int a = 0; a < model.catalog_size(); ++a) {
    if (entries[a].morphology_hash != morphology_hash(model.catalog_entry(a)))
      throw SchemaError("decomposition cache hash mismatch for catalog entry " +
                        std::to_string(a));
  }
  return entries;
}

}  // namespace legdyn
