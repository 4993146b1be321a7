#pragma once

// Dense complex multi-index tensors, Hermitian matrices and unitary frames.
//
// Index conventions used throughout the library:
//   * a Hermitian metric is stored as the matrix G with G(k, l) = g_{k lbar};
//   * its inverse G^{-1} carries the raised components g^{i jbar} = G^{-1}(j, i),
//     so that sum_j g^{i jbar} g_{k jbar} = delta^i_k;
//   * a unitary frame is e_a = sum_k (L^{-1})(a, k) d/dz_k where G = L L^*.
//     Lower holomorphic slots transform with L^{-1}, upper holomorphic slots
//     with L^T, and the anti-holomorphic slots with the conjugates.

#include <array>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace curvlab {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

enum class Variance { HoloUp, HoloDown, AntiUp, AntiDown };

const char* to_string(Variance v);

struct Slot {
  std::size_t dim;
  Variance variance;
  bool operator==(const Slot&) const = default;
};

class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(std::vector<Slot> slots);
  ComplexTensor(std::vector<Slot> slots, std::vector<cplx> entries);

  /// All `rank` slots share one dimension.
  static ComplexTensor uniform(std::size_t dim, std::initializer_list<Variance> variances);

  std::size_t rank() const { return slots_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }
  const Slot& slot(std::size_t s) const { return slots_.at(s); }
  std::span<const cplx> entries() const { return data_; }
  std::span<cplx> entries() { return data_; }

  template <class... I>
  cplx& operator()(I... idx) {
    return data_[offset_of(static_cast<std::size_t>(idx)...)];
  }
  template <class... I>
  const cplx& operator()(I... idx) const {
    return data_[offset_of(static_cast<std::size_t>(idx)...)];
  }
  cplx& at(std::span<const std::size_t> idx);
  const cplx& at(std::span<const std::size_t> idx) const;

  double max_abs() const;
  double frobenius_norm() const;

  ComplexTensor& operator+=(const ComplexTensor& o);
  ComplexTensor& operator-=(const ComplexTensor& o);
  ComplexTensor& operator*=(cplx s);

 private:
  template <class... I>
  std::size_t offset_of(I... idx) const {
    const std::array<std::size_t, sizeof...(I)> ids{idx...};
    std::size_t off = 0;
    for (std::size_t s = 0; s < ids.size(); ++s) off += ids[s] * strides_[s];
    return off;
  }
  void init_strides();

  std::vector<Slot> slots_;
  std::vector<std::size_t> strides_;
  std::vector<cplx> data_;
};

ComplexTensor operator+(ComplexTensor a, const ComplexTensor& b);
ComplexTensor operator-(ComplexTensor a, const ComplexTensor& b);
ComplexTensor operator*(cplx s, ComplexTensor a);

/// Max-norm of a - b; shapes must agree.
double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b);

/// Contract `a` with `b` over the listed (slot of a, slot of b) pairs.
/// Paired slots must have equal dimension and opposite variance within the
/// same type (holo-up with holo-down, anti-up with anti-down). The result
/// carries the unpaired slots of `a` followed by those of `b`.
ComplexTensor contract(const ComplexTensor& a, const ComplexTensor& b,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs);
ComplexTensor contract(const ComplexTensor& a, const ComplexTensor& b,
                       std::initializer_list<std::pair<std::size_t, std::size_t>> pairs);

/// Moves one slot across the holomorphic/anti-holomorphic divide through the
/// metric: holo-up -> anti-down and anti-up -> holo-down via g, holo-down ->
/// anti-up and anti-down -> holo-up via g^{-1}.
ComplexTensor apply_metric(const ComplexTensor& t, std::size_t slot, const CMatrix& g);

/// Matrix as a (holo-down, anti-down) tensor and back.
ComplexTensor as_tensor(const CMatrix& m);
CMatrix as_matrix(const ComplexTensor& t);

class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  /// Checks conjugate symmetry to `tol` relative to max(1, max|m|), then
  /// stores the exactly symmetrized matrix.
  static HermitianMatrix from(const CMatrix& m, double tol = 1e-12);
  /// Hermitian part (m + m^*)/2, no check.
  static HermitianMatrix hermitian_part(const CMatrix& m);
  static HermitianMatrix identity(std::size_t n);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  cplx operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  RVector eigenvalues() const;
  double min_eigenvalue() const;
  bool is_positive_definite() const;

 private:
  explicit HermitianMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

/// Nonnegative Hermitian (1,1)-tensor xi^{a bbar} with its Frobenius norm.
struct PSDForm {
  HermitianMatrix xi;
  double norm = 0.0;

  /// Validates min eigenvalue >= -1e-12.
  static PSDForm make(const HermitianMatrix& xi);
  /// zeta zeta^* / |zeta|^2.
  static PSDForm rank_one(const CVector& zeta);
};

/// Clips negative eigenvalues to zero and rescales to unit Frobenius norm.
/// Throws Numerical when nothing survives the clip.
PSDForm psd_project(const HermitianMatrix& m);

class UnitaryFrame {
 public:
  /// Cholesky G = L L^*; throws Numerical if G is not positive-definite.
  static UnitaryFrame from_metric(const HermitianMatrix& g);

  std::size_t dim() const { return static_cast<std::size_t>(l_.rows()); }
  const CMatrix& L() const { return l_; }
  const CMatrix& L_inverse() const { return l_inv_; }

 private:
  CMatrix l_;
  CMatrix l_inv_;
};

ComplexTensor to_unitary_frame(const ComplexTensor& t, const UnitaryFrame& frame);
ComplexTensor from_unitary_frame(const ComplexTensor& t, const UnitaryFrame& frame);

/// Vector components: upper holomorphic index.
CVector vector_to_unitary_frame(const CVector& v, const UnitaryFrame& frame);
CVector vector_from_unitary_frame(const CVector& v, const UnitaryFrame& frame);

/// (holo-down, anti-down) matrices.
CMatrix form_to_unitary_frame(const CMatrix& m, const UnitaryFrame& frame);
CMatrix form_from_unitary_frame(const CMatrix& m, const UnitaryFrame& frame);

}  // namespace curvlab
