#pragma once

// Dense complex linear algebra on small multi-qubit registers.
//
// Qubit 0 is the most significant bit of a computational-basis index, so
// |q0 q1 ... q_{n-1}> has index sum_q q_k * 2^(n-1-k).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <bit>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qaeqec/errors.hpp"

namespace qaeqec {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Rng = std::mt19937_64;

inline constexpr int kMaxQubits = 12;
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kEigenFloor = -1e-9;
inline constexpr double kUnitaryTol = 1e-8;

inline Eigen::Index dim_of(int num_qubits) {
  if (num_qubits < 0 || num_qubits > kMaxQubits)
    throw SizeError("register of " + std::to_string(num_qubits) + " qubits exceeds limit " +
                    std::to_string(kMaxQubits));
  return Eigen::Index{1} << num_qubits;
}

inline int qubits_of(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw ArgumentError("dimension " + std::to_string(dim) + " is not a power of two");
  if (n > kMaxQubits) throw SizeError("dimension exceeds register limit");
  return n;
}

inline double max_abs(const ComplexMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const ComplexMatrix& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

inline bool is_unitary(const ComplexMatrix& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())) <= tol;
}

// ---------------------------------------------------------------------------
// Strong types

class PureState {
 public:
  PureState() = default;
  PureState(int num_qubits, ComplexVector amplitudes) : n_(num_qubits), amps_(std::move(amplitudes)) {
    if (amps_.size() != dim_of(n_)) throw ArgumentError("amplitude count does not match qubit count");
    if (std::abs(amps_.squaredNorm() - 1.0) > 1e-10) throw StateValidityError("pure state is not normalized");
  }

  /// Computational basis state from a bit string such as "0101".
  static PureState basis(const std::string& bits) {
    const int n = static_cast<int>(bits.size());
    ComplexVector v = ComplexVector::Zero(dim_of(n));
    Eigen::Index idx = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw ArgumentError("basis label must contain only 0 and 1");
      idx = 2 * idx + (c - '0');
    }
    v(idx) = 1.0;
    return PureState(n, std::move(v));
  }

  int num_qubits() const { return n_; }
  const ComplexVector& amplitudes() const { return amps_; }
  ComplexMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  int n_ = 0;
  ComplexVector amps_ = ComplexVector::Ones(1);
};

class DensityMatrix {
 public:
  DensityMatrix() : n_(0), m_(ComplexMatrix::Ones(1, 1)) {}
  DensityMatrix(int num_qubits, ComplexMatrix m) : n_(num_qubits), m_(std::move(m)) {
    const auto d = dim_of(n_);
    if (m_.rows() != d || m_.cols() != d) throw ArgumentError("density matrix dimension does not match qubit count");
  }

  static DensityMatrix from_pure(const PureState& psi) { return {psi.num_qubits(), psi.projector()}; }
  static DensityMatrix maximally_mixed(int n) {
    const auto d = dim_of(n);
    return {n, ComplexMatrix::Identity(d, d) / static_cast<double>(d)};
  }

  int num_qubits() const { return n_; }
  Eigen::Index dim() const { return m_.rows(); }
  const ComplexMatrix& matrix() const { return m_; }

  /// Throws StateValidityError unless Hermitian, unit trace and PSD.
  void validate() const {
    if (!is_hermitian(m_, kHermitianTol)) throw StateValidityError("density matrix is not Hermitian");
    if (std::abs(m_.trace() - cplx(1.0)) > kTraceTol) throw StateValidityError("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < kEigenFloor) throw StateValidityError("density matrix has a negative eigenvalue");
  }

 private:
  int n_;
  ComplexMatrix m_;
};

class Unitary {
 public:
  Unitary() : n_(0), u_(ComplexMatrix::Identity(1, 1)) {}
  Unitary(int num_qubits, ComplexMatrix u) : n_(num_qubits), u_(std::move(u)) {
    const auto d = dim_of(n_);
    if (u_.rows() != d || u_.cols() != d) throw ArgumentError("unitary dimension does not match qubit count");
    if (!is_unitary(u_)) throw StateValidityError("matrix is not unitary within 1e-8");
  }
  static Unitary identity(int n) { return {n, ComplexMatrix::Identity(dim_of(n), dim_of(n))}; }

  int num_qubits() const { return n_; }
  const ComplexMatrix& matrix() const { return u_; }
  Unitary adjoint() const { return {n_, u_.adjoint()}; }

 private:
  int n_;
  ComplexMatrix u_;
};

// ---------------------------------------------------------------------------
// Elementary gates

namespace gates {
inline ComplexMatrix I() { return ComplexMatrix::Identity(2, 2); }
inline ComplexMatrix X() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline ComplexMatrix Y() {
  ComplexMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
inline ComplexMatrix Z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
inline ComplexMatrix CNOT() {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
  return m;
}
inline ComplexMatrix SWAP() {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1;
  return m;
}
}  // namespace gates

// ---------------------------------------------------------------------------
// Tensor products and register bookkeeping

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto limit = Eigen::Index{1} << kMaxQubits;
  if (a.rows() * b.rows() > limit || a.cols() * b.cols() > limit)
    throw SizeError("kron result exceeds the " + std::to_string(kMaxQubits) + "-qubit register limit");
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return {a.num_qubits() + b.num_qubits(), kron(a.matrix(), b.matrix())};
}

namespace detail {

inline void check_targets(std::span<const int> targets, int n) {
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int t : targets) {
    if (t < 0 || t >= n) throw ArgumentError("qubit index " + std::to_string(t) + " out of range");
    if (seen[static_cast<std::size_t>(t)]) throw ArgumentError("duplicate qubit index " + std::to_string(t));
    seen[static_cast<std::size_t>(t)] = true;
  }
}

/// Index offsets of every configuration of `qubits` (first listed qubit = most significant).
inline std::vector<Eigen::Index> config_offsets(std::span<const int> qubits, int n) {
  const std::size_t m = qubits.size();
  std::vector<Eigen::Index> off(std::size_t{1} << m, 0);
  for (std::size_t c = 0; c < off.size(); ++c)
    for (std::size_t k = 0; k < m; ++k)
      if ((c >> (m - 1 - k)) & 1U) off[c] |= Eigen::Index{1} << (n - 1 - qubits[k]);
  return off;
}

inline std::vector<int> complement(std::span<const int> qubits, int n) {
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  for (int q : qubits) in[static_cast<std::size_t>(q)] = true;
  std::vector<int> rest;
  for (int q = 0; q < n; ++q)
    if (!in[static_cast<std::size_t>(q)]) rest.push_back(q);
  return rest;
}

inline bool is_identity_order(std::span<const int> targets, int n) {
  if (static_cast<int>(targets.size()) != n) return false;
  for (int k = 0; k < n; ++k)
    if (targets[static_cast<std::size_t>(k)] != k) return false;
  return true;
}

/// (U on targets, identity elsewhere) * x, without forming the embedded operator.
inline ComplexMatrix apply_left(const ComplexMatrix& u, std::span<const int> targets, int n, const ComplexMatrix& x) {
  if (is_identity_order(targets, n)) return u * x;
  const auto toff = config_offsets(targets, n);
  const auto rest = complement(targets, n);
  const auto roff = config_offsets(rest, n);
  const auto dm = static_cast<Eigen::Index>(toff.size());
  ComplexMatrix out(x.rows(), x.cols());
  ComplexMatrix block(dm, x.cols());
  ComplexMatrix res(dm, x.cols());
  for (auto base : roff) {
    for (Eigen::Index t = 0; t < dm; ++t) block.row(t) = x.row(base + toff[static_cast<std::size_t>(t)]);
    res.noalias() = u * block;
    for (Eigen::Index t = 0; t < dm; ++t) out.row(base + toff[static_cast<std::size_t>(t)]) = res.row(t);
  }
  return out;
}

/// U x U^dagger with U acting on `targets` of an n-qubit register. Works for any square x.
inline ComplexMatrix conjugate(const ComplexMatrix& u, std::span<const int> targets, int n, const ComplexMatrix& x) {
  ComplexMatrix y = apply_left(u, targets, n, x);
  return apply_left(u, targets, n, y.adjoint()).adjoint();
}

/// Partial trace keeping `keep` in the listed order (first listed = most significant).
inline ComplexMatrix trace_keep(const ComplexMatrix& x, int n, std::span<const int> keep) {
  const auto koff = config_offsets(keep, n);
  const auto rest = complement(keep, n);
  const auto roff = config_offsets(rest, n);
  const auto dk = static_cast<Eigen::Index>(koff.size());
  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (Eigen::Index a = 0; a < dk; ++a)
    for (Eigen::Index b = 0; b < dk; ++b) {
      cplx s = 0;
      for (auto r : roff) s += x(koff[static_cast<std::size_t>(a)] + r, koff[static_cast<std::size_t>(b)] + r);
      out(a, b) = s;
    }
  return out;
}

/// rho (x) |0..0><0..0| on `fresh` trailing qubits.
inline ComplexMatrix append_zeros(const ComplexMatrix& x, int fresh) {
  const Eigen::Index stride = Eigen::Index{1} << fresh;
  ComplexMatrix out = ComplexMatrix::Zero(x.rows() * stride, x.cols() * stride);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i * stride, j * stride) = x(i, j);
  return out;
}

/// <0..0| x |0..0> on `fresh` trailing qubits; the adjoint of append_zeros.
inline ComplexMatrix project_zeros(const ComplexMatrix& x, int fresh) {
  const Eigen::Index stride = Eigen::Index{1} << fresh;
  const Eigen::Index d = x.rows() / stride;
  ComplexMatrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = x(i * stride, j * stride);
  return out;
}

}  // namespace detail

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> discard) {
  const int n = rho.num_qubits();
  detail::check_targets(discard, n);
  const auto keep = detail::complement(discard, n);
  return {static_cast<int>(keep.size()), detail::trace_keep(rho.matrix(), n, keep)};
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<int> discard) {
  const std::vector<int> d(discard);
  return partial_trace(rho, std::span<const int>(d));
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const Unitary& u, std::span<const int> targets) {
  if (static_cast<int>(targets.size()) != u.num_qubits())
    throw ArgumentError("target count does not match unitary size");
  detail::check_targets(targets, rho.num_qubits());
  return {rho.num_qubits(), detail::conjugate(u.matrix(), targets, rho.num_qubits(), rho.matrix())};
}

inline DensityMatrix apply_unitary(const DensityMatrix& rho, const Unitary& u, std::initializer_list<int> targets) {
  const std::vector<int> t(targets);
  return apply_unitary(rho, u, std::span<const int>(t));
}

// ---------------------------------------------------------------------------
// Fidelity

namespace detail {
inline bool rank_one(const Eigen::VectorXd& evals) {
  const auto k = evals.size();
  if (k == 1) return true;
  // Eigen sorts ascending; everything below the top must vanish.
  return evals(k - 2) < 1e-10 && evals(k - 1) > 1.0 - 1e-9;
}
}  // namespace detail

/// Uhlmann fidelity (Tr sqrt(sqrt(r2) r1 sqrt(r2)))^2. Uses <psi|rho|psi> when either argument is pure.
inline double fidelity(const ComplexMatrix& rho1, const ComplexMatrix& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols() || rho1.rows() != rho1.cols())
    throw ArgumentError("fidelity requires equal square dimensions");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> e2(rho2);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> e1(rho1);
  if (e1.eigenvalues().minCoeff() < kEigenFloor || e2.eigenvalues().minCoeff() < kEigenFloor)
    throw StateValidityError("fidelity argument is not positive semidefinite");
  auto clamp = [](double f) { return std::clamp(f, 0.0, 1.0); };
  if (detail::rank_one(e2.eigenvalues())) {
    const ComplexVector psi = e2.eigenvectors().col(rho2.cols() - 1);
    return clamp((psi.adjoint() * rho1 * psi)(0, 0).real());
  }
  if (detail::rank_one(e1.eigenvalues())) {
    const ComplexVector psi = e1.eigenvectors().col(rho1.cols() - 1);
    return clamp((psi.adjoint() * rho2 * psi)(0, 0).real());
  }
  const Eigen::VectorXd s = e2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const ComplexMatrix root = e2.eigenvectors() * s.cast<cplx>().asDiagonal() * e2.eigenvectors().adjoint();
  const ComplexMatrix inner = root * rho1 * root;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> ei(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return clamp(tr * tr);
}

inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) { return fidelity(a.matrix(), b.matrix()); }

/// <psi|rho|psi>
inline double fidelity(const DensityMatrix& rho, const PureState& psi) {
  if (rho.dim() != psi.amplitudes().size()) throw ArgumentError("fidelity requires equal dimensions");
  return (psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes())(0, 0).real();
}

// ---------------------------------------------------------------------------
// Unitaries

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the R-diagonal phases removed.
inline Unitary haar_random_unitary(int num_qubits, Rng& rng) {
  const auto d = dim_of(num_qubits);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im) / std::sqrt(2.0);
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    const cplx rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= (a > 0 ? rjj / a : cplx(1.0));
  }
  return {num_qubits, std::move(q)};
}

/// exp(i * epsilon * K) for Hermitian K, via eigendecomposition.
inline ComplexMatrix exp_i_hermitian(const ComplexMatrix& k, double epsilon) {
  if (k.rows() != k.cols()) throw ArgumentError("exp_i_hermitian needs a square matrix");
  if (!is_hermitian(k, 1e-8)) throw ArgumentError("exp_i_hermitian needs a Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (k + k.adjoint()));
  ComplexVector phases(k.rows());
  for (Eigen::Index i = 0; i < k.rows(); ++i) phases(i) = std::exp(cplx(0.0, epsilon * es.eigenvalues()(i)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// Conjugates m by the qubit permutation sending qubit q to position perm[q].
inline ComplexMatrix permute_qubits(const ComplexMatrix& m, std::span<const int> perm) {
  const int n = qubits_of(m.rows());
  if (m.rows() != m.cols()) throw ArgumentError("permute_qubits needs a square matrix");
  if (static_cast<int>(perm.size()) != n) throw ArgumentError("permutation length does not match qubit count");
  detail::check_targets(perm, n);
  const auto d = m.rows();
  std::vector<Eigen::Index> map(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::Index j = 0;
    for (int q = 0; q < n; ++q)
      if ((i >> (n - 1 - q)) & 1) j |= Eigen::Index{1} << (n - 1 - perm[static_cast<std::size_t>(q)]);
    map[static_cast<std::size_t>(i)] = j;
  }
  ComplexMatrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]) = m(i, j);
  return out;
}

inline std::vector<int> inverse_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t q = 0; q < perm.size(); ++q) inv[static_cast<std::size_t>(perm[q])] = static_cast<int>(q);
  return inv;
}

}  // namespace qaeqec
