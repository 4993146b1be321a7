#include "curvlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "curvlab/error.hpp"

namespace curvlab {

const char* to_string(Variance v) {
  switch (v) {
    case Variance::HoloUp: return "holo-up";
    case Variance::HoloDown: return "holo-down";
    case Variance::AntiUp: return "anti-up";
    case Variance::AntiDown: return "anti-down";
  }
  return "?";
}

ComplexTensor::ComplexTensor(std::vector<Slot> slots) : slots_(std::move(slots)) {
  init_strides();
}

ComplexTensor::ComplexTensor(std::vector<Slot> slots, std::vector<cplx> entries)
    : slots_(std::move(slots)) {
  init_strides();
  require(entries.size() == data_.size(), "ComplexTensor: entry count does not match shape");
  data_ = std::move(entries);
}

ComplexTensor ComplexTensor::uniform(std::size_t dim, std::initializer_list<Variance> variances) {
  std::vector<Slot> slots;
  for (auto v : variances) slots.push_back({dim, v});
  return ComplexTensor(std::move(slots));
}

void ComplexTensor::init_strides() {
  strides_.assign(slots_.size(), 1);
  std::size_t total = 1;
  for (std::size_t s = slots_.size(); s-- > 0;) {
    strides_[s] = total;
    total *= slots_[s].dim;
  }
  data_.assign(total, cplx{0.0, 0.0});
}

cplx& ComplexTensor::at(std::span<const std::size_t> idx) {
  require(idx.size() == slots_.size(), "ComplexTensor::at: wrong index count");
  std::size_t off = 0;
  for (std::size_t s = 0; s < idx.size(); ++s) {
    require(idx[s] < slots_[s].dim, "ComplexTensor::at: index out of range");
    off += idx[s] * strides_[s];
  }
  return data_[off];
}

const cplx& ComplexTensor::at(std::span<const std::size_t> idx) const {
  return const_cast<ComplexTensor*>(this)->at(idx);
}

double ComplexTensor::max_abs() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

double ComplexTensor::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return std::sqrt(s);
}

ComplexTensor& ComplexTensor::operator+=(const ComplexTensor& o) {
  require(slots_ == o.slots_, "ComplexTensor +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ComplexTensor& ComplexTensor::operator-=(const ComplexTensor& o) {
  require(slots_ == o.slots_, "ComplexTensor -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ComplexTensor& ComplexTensor::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

ComplexTensor operator+(ComplexTensor a, const ComplexTensor& b) { return a += b; }
ComplexTensor operator-(ComplexTensor a, const ComplexTensor& b) { return a -= b; }
ComplexTensor operator*(cplx s, ComplexTensor a) { return a *= s; }

double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  require(a.size() == b.size(), "max_abs_diff: size mismatch");
  double m = 0.0;
  auto ea = a.entries();
  auto eb = b.entries();
  for (std::size_t i = 0; i < ea.size(); ++i) m = std::max(m, std::abs(ea[i] - eb[i]));
  return m;
}

namespace {

bool dual_pair(Variance a, Variance b) {
  return (a == Variance::HoloUp && b == Variance::HoloDown) ||
         (a == Variance::HoloDown && b == Variance::HoloUp) ||
         (a == Variance::AntiUp && b == Variance::AntiDown) ||
         (a == Variance::AntiDown && b == Variance::AntiUp);
}

// Advances a mixed-radix counter; returns false after wrapping around.
bool advance(std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
  for (std::size_t s = idx.size(); s-- > 0;) {
    if (++idx[s] < dims[s]) return true;
    idx[s] = 0;
  }
  return false;
}

ComplexTensor transform_slots(const ComplexTensor& t, const std::array<CMatrix, 4>& by_variance) {
  ComplexTensor cur = t;
  for (std::size_t s = 0; s < t.rank(); ++s) {
    const CMatrix& m = by_variance[static_cast<std::size_t>(t.slot(s).variance)];
    require(static_cast<std::size_t>(m.rows()) == t.slot(s).dim,
            "frame transform: slot dimension does not match frame");
    ComplexTensor next(cur.slots());
    std::vector<std::size_t> dims;
    for (const auto& sl : cur.slots()) dims.push_back(sl.dim);
    if (cur.size() == 0) return next;
    std::vector<std::size_t> idx(cur.rank(), 0);
    std::vector<std::size_t> src(cur.rank(), 0);
    do {
      cplx acc{0.0, 0.0};
      src = idx;
      for (std::size_t k = 0; k < dims[s]; ++k) {
        src[s] = k;
        acc += m(static_cast<Eigen::Index>(idx[s]), static_cast<Eigen::Index>(k)) * cur.at(src);
      }
      next.at(idx) = acc;
    } while (advance(idx, dims));
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

ComplexTensor contract(const ComplexTensor& a, const ComplexTensor& b,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  for (const auto& [sa, sb] : pairs) {
    require(sa < a.rank() && sb < b.rank(), "contract: slot out of range");
    require(!a_used[sa] && !b_used[sb], "contract: slot paired twice");
    a_used[sa] = b_used[sb] = true;
    if (a.slot(sa).dim != b.slot(sb).dim) {
      std::ostringstream os;
      os << "contract: dimension mismatch between slot " << sa << " and slot " << sb;
      fail(ErrorKind::Domain, os.str());
    }
    if (!dual_pair(a.slot(sa).variance, b.slot(sb).variance)) {
      std::ostringstream os;
      os << "contract: cannot pair " << to_string(a.slot(sa).variance) << " with "
         << to_string(b.slot(sb).variance) << " without a metric factor";
      fail(ErrorKind::Domain, os.str());
    }
  }
  std::vector<Slot> out_slots;
  std::vector<std::size_t> a_free, b_free;
  for (std::size_t s = 0; s < a.rank(); ++s)
    if (!a_used[s]) {
      out_slots.push_back(a.slot(s));
      a_free.push_back(s);
    }
  for (std::size_t s = 0; s < b.rank(); ++s)
    if (!b_used[s]) {
      out_slots.push_back(b.slot(s));
      b_free.push_back(s);
    }
  ComplexTensor out(out_slots);

  std::vector<std::size_t> out_dims, sum_dims;
  for (const auto& s : out_slots) out_dims.push_back(s.dim);
  for (const auto& p : pairs) sum_dims.push_back(a.slot(p.first).dim);

  std::vector<std::size_t> oi(out_dims.size(), 0), si(sum_dims.size(), 0);
  std::vector<std::size_t> ai(a.rank(), 0), bi(b.rank(), 0);
  if (out.size() == 0) return out;
  do {
    for (std::size_t q = 0; q < a_free.size(); ++q) ai[a_free[q]] = oi[q];
    for (std::size_t q = 0; q < b_free.size(); ++q) bi[b_free[q]] = oi[a_free.size() + q];
    cplx acc{0.0, 0.0};
    std::fill(si.begin(), si.end(), 0);
    do {
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        ai[pairs[q].first] = si[q];
        bi[pairs[q].second] = si[q];
      }
      acc += a.at(ai) * b.at(bi);
    } while (!sum_dims.empty() && advance(si, sum_dims));
    out.at(oi) = acc;
  } while (!out_dims.empty() && advance(oi, out_dims));
  return out;
}

ComplexTensor contract(const ComplexTensor& a, const ComplexTensor& b,
                       std::initializer_list<std::pair<std::size_t, std::size_t>> pairs) {
  const std::vector<std::pair<std::size_t, std::size_t>> v(pairs);
  return contract(a, b, std::span<const std::pair<std::size_t, std::size_t>>(v));
}

ComplexTensor apply_metric(const ComplexTensor& t, std::size_t slot, const CMatrix& g) {
  require(slot < t.rank(), "apply_metric: slot out of range");
  require(static_cast<std::size_t>(g.rows()) == t.slot(slot).dim, "apply_metric: dimension mismatch");
  const CMatrix g_inv = g.inverse();
  CMatrix m;
  Variance to{};
  switch (t.slot(slot).variance) {
    case Variance::HoloUp: m = g.transpose(); to = Variance::AntiDown; break;
    case Variance::AntiUp: m = g; to = Variance::HoloDown; break;
    case Variance::HoloDown: m = g_inv; to = Variance::AntiUp; break;
    case Variance::AntiDown: m = g_inv.transpose(); to = Variance::HoloUp; break;
  }
  std::vector<Slot> slots = t.slots();
  slots[slot].variance = to;
  ComplexTensor out(slots);
  std::vector<std::size_t> dims;
  for (const auto& s : slots) dims.push_back(s.dim);
  std::vector<std::size_t> idx(dims.size(), 0), src;
  do {
    cplx acc{0.0, 0.0};
    src = idx;
    for (std::size_t k = 0; k < dims[slot]; ++k) {
      src[slot] = k;
      acc += m(static_cast<Eigen::Index>(idx[slot]), static_cast<Eigen::Index>(k)) * t.at(src);
    }
    out.at(idx) = acc;
  } while (advance(idx, dims));
  return out;
}

ComplexTensor as_tensor(const CMatrix& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  ComplexTensor t = ComplexTensor::uniform(n, {Variance::HoloDown, Variance::AntiDown});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) t(i, j) = m(i, j);
  return t;
}

CMatrix as_matrix(const ComplexTensor& t) {
  require(t.rank() == 2, "as_matrix: rank-2 tensor required");
  CMatrix m(t.slot(0).dim, t.slot(1).dim);
  for (std::size_t i = 0; i < t.slot(0).dim; ++i)
    for (std::size_t j = 0; j < t.slot(1).dim; ++j) m(i, j) = t(i, j);
  return m;
}

HermitianMatrix HermitianMatrix::from(const CMatrix& m, double tol) {
  require(m.rows() == m.cols(), "HermitianMatrix: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (!(asym <= tol * scale)) {
    std::ostringstream os;
    os << "HermitianMatrix: conjugate-symmetry residual " << asym << " exceeds " << tol * scale;
    fail(ErrorKind::Numerical, os.str());
  }
  return HermitianMatrix((m + m.adjoint()) * 0.5);
}

HermitianMatrix HermitianMatrix::hermitian_part(const CMatrix& m) {
  require(m.rows() == m.cols(), "HermitianMatrix: matrix must be square");
  return HermitianMatrix((m + m.adjoint()) * 0.5);
}

HermitianMatrix HermitianMatrix::identity(std::size_t n) {
  return HermitianMatrix(CMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

RVector HermitianMatrix::eigenvalues() const {
  if (m_.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double HermitianMatrix::min_eigenvalue() const {
  const RVector ev = eigenvalues();
  return ev.size() ? ev.minCoeff() : 0.0;
}

bool HermitianMatrix::is_positive_definite() const { return dim() > 0 && min_eigenvalue() > 0.0; }

PSDForm PSDForm::make(const HermitianMatrix& xi) {
  if (xi.min_eigenvalue() < -1e-12) fail(ErrorKind::Domain, "PSDForm: xi is not positive semidefinite");
  return PSDForm{xi, xi.matrix().norm()};
}

PSDForm PSDForm::rank_one(const CVector& zeta) {
  const double n2 = zeta.squaredNorm();
  require(n2 > 0.0, "PSDForm::rank_one: zero vector");
  return make(HermitianMatrix::hermitian_part(zeta * zeta.adjoint() / n2));
}

PSDForm psd_project(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m.matrix());
  RVector ev = es.eigenvalues().cwiseMax(0.0);
  const double norm = ev.norm();
  if (!(norm > 1e-14)) fail(ErrorKind::Numerical, "psd_project: matrix vanishes after eigenvalue clipping");
  ev /= norm;
  const CMatrix& v = es.eigenvectors();
  const CMatrix p = v * ev.cast<cplx>().asDiagonal() * v.adjoint();
  return PSDForm{HermitianMatrix::hermitian_part(p), p.norm()};
}

UnitaryFrame UnitaryFrame::from_metric(const HermitianMatrix& g) {
  Eigen::LLT<CMatrix> llt(g.matrix());
  if (llt.info() != Eigen::Success) fail(ErrorKind::Numerical, "UnitaryFrame: metric is not positive-definite");
  UnitaryFrame f;
  f.l_ = llt.matrixL();
  for (Eigen::Index i = 0; i < f.l_.rows(); ++i)
    if (!(f.l_(i, i).real() > 0.0)) fail(ErrorKind::Numerical, "UnitaryFrame: singular Cholesky factor");
  const auto n = f.l_.rows();
  f.l_inv_ = f.l_.triangularView<Eigen::Lower>().solve(CMatrix::Identity(n, n));
  return f;
}

ComplexTensor to_unitary_frame(const ComplexTensor& t, const UnitaryFrame& frame) {
  const CMatrix& L = frame.L();
  const CMatrix& Li = frame.L_inverse();
  // order follows the Variance enumerators: HoloUp, HoloDown, AntiUp, AntiDown
  return transform_slots(t, {L.transpose(), Li, L.adjoint(), Li.conjugate()});
}

ComplexTensor from_unitary_frame(const ComplexTensor& t, const UnitaryFrame& frame) {
  const CMatrix& L = frame.L();
  const CMatrix& Li = frame.L_inverse();
  return transform_slots(t, {Li.transpose(), L, Li.adjoint(), L.conjugate()});
}

CVector vector_to_unitary_frame(const CVector& v, const UnitaryFrame& frame) {
  return frame.L().transpose() * v;
}

CVector vector_from_unitary_frame(const CVector& v, const UnitaryFrame& frame) {
  return frame.L_inverse().transpose() * v;
}

CMatrix form_to_unitary_frame(const CMatrix& m, const UnitaryFrame& frame) {
  return frame.L_inverse() * m * frame.L_inverse().adjoint();
}

CMatrix form_from_unitary_frame(const CMatrix& m, const UnitaryFrame& frame) {
  return frame.L() * m * frame.L().adjoint();
}

}  // namespace curvlab
