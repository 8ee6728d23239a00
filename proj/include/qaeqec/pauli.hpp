#pragma once

#include <string>
#include <string_view>

#include "qaeqec/linalg.hpp"

namespace qaeqec {

/// Tensor product of single-qubit Paulis written as a string over {I,X,Y,Z}; character k acts on qubit k.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::string ops) : ops_(std::move(ops)) {
    for (char c : ops_)
      if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z') throw ArgumentError("invalid Pauli character in '" + ops_ + "'");
  }
  static PauliString identity(int n) { return PauliString(std::string(static_cast<std::size_t>(n), 'I')); }
  /// Single-qubit Pauli `op` on qubit q of an n-qubit register.
  static PauliString single(int n, int q, char op) {
    std::string s(static_cast<std::size_t>(n), 'I');
    s[static_cast<std::size_t>(q)] = op;
    return PauliString(std::move(s));
  }

  int num_qubits() const { return static_cast<int>(ops_.size()); }
  const std::string& str() const { return ops_; }
  char operator[](int q) const { return ops_[static_cast<std::size_t>(q)]; }

  int weight() const {
    int w = 0;
    for (char c : ops_) w += (c != 'I');
    return w;
  }

  bool commutes_with(const PauliString& o) const {
    if (o.num_qubits() != num_qubits()) throw ArgumentError("Pauli strings of different length");
    int anti = 0;
    for (std::size_t k = 0; k < ops_.size(); ++k)
      anti += (ops_[k] != 'I' && o.ops_[k] != 'I' && ops_[k] != o.ops_[k]);
    return anti % 2 == 0;
  }

  /// Bit mask of qubits flipped (X or Y), in basis-index convention.
  Eigen::Index flip_mask() const {
    const int n = num_qubits();
    Eigen::Index m = 0;
    for (int q = 0; q < n; ++q)
      if (ops_[static_cast<std::size_t>(q)] == 'X' || ops_[static_cast<std::size_t>(q)] == 'Y') m |= Eigen::Index{1} << (n - 1 - q);
    return m;
  }

  /// Phase acquired by basis state |i> under this Pauli: P|i> = phase(i) |i ^ flip_mask>.
  cplx phase(Eigen::Index i) const {
    const int n = num_qubits();
    cplx ph = 1.0;
    for (int q = 0; q < n; ++q) {
      const bool bit = (i >> (n - 1 - q)) & 1;
      switch (ops_[static_cast<std::size_t>(q)]) {
        case 'Z': if (bit) ph = -ph; break;
        case 'Y': ph *= bit ? cplx(0, -1) : cplx(0, 1); break;
        default: break;
      }
    }
    return ph;
  }

  ComplexMatrix matrix() const {
    ComplexMatrix m = ComplexMatrix::Ones(1, 1);
    for (char c : ops_) {
      switch (c) {
        case 'X': m = kron(m, gates::X()); break;
        case 'Y': m = kron(m, gates::Y()); break;
        case 'Z': m = kron(m, gates::Z()); break;
        default: m = kron(m, gates::I()); break;
      }
    }
    return m;
  }

  ComplexVector apply(const ComplexVector& v) const {
    const Eigen::Index mask = flip_mask();
    ComplexVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i ^ mask) = phase(i) * v(i);
    return out;
  }

  /// P x P^dagger for any square x.
  ComplexMatrix conjugate(const ComplexMatrix& x) const {
    const Eigen::Index mask = flip_mask();
    const auto d = x.rows();
    std::vector<cplx> ph(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) ph[static_cast<std::size_t>(i)] = phase(i);
    ComplexMatrix out(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i)
        out(i ^ mask, j ^ mask) = ph[static_cast<std::size_t>(i)] * std::conj(ph[static_cast<std::size_t>(j)]) * x(i, j);
    return out;
  }

  /// Expectation value <psi|P|psi>.
  cplx expectation(const ComplexVector& psi) const { return psi.dot(apply(psi)); }

  bool operator==(const PauliString&) const = default;

 private:
  std::string ops_;
};

}  // namespace qaeqec
