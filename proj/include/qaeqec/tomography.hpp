#pragma once

// Process tomography in the normalized Pauli basis. Channels are probed with
// matrix units (exact in simulation), assembled into a Choi matrix and then
// expressed as chi_ij with Q(x) = sum_ij chi_ij E_i x E_j^dagger.

#include <functional>
#include <string>
#include <vector>

#include "qaeqec/codes.hpp"
#include "qaeqec/network.hpp"

namespace qaeqec {

/// Any linear map from 2^n_in x 2^n_in to 2^n_out x 2^n_out matrices.
using ChannelFn = std::function<ComplexMatrix(const ComplexMatrix&)>;

struct ProcessMatrix {
  int n_in = 0;
  int n_out = 0;
  ComplexMatrix chi;
};

/// Orthonormal operator basis of shape 2^n_out x 2^n_in. Square case: Pauli strings / sqrt(2^n), in
/// lexicographic I<X<Y<Z order. Rectangular case: a Pauli string on the shared leading qubits tensored
/// with computational kets (n_out > n_in) or bras (n_in > n_out) on the extra qubits.
inline std::vector<ComplexMatrix> operator_basis(int n_in, int n_out) {
  const int shared = std::min(n_in, n_out);
  const int extra = std::abs(n_out - n_in);
  const auto dim_shared = dim_of(shared);
  const auto dim_extra = dim_of(extra);
  const double norm = 1.0 / std::sqrt(static_cast<double>(dim_shared));
  std::vector<ComplexMatrix> basis;
  const std::size_t num_paulis = std::size_t{1} << (2 * shared);
  for (std::size_t p = 0; p < num_paulis; ++p) {
    std::string ops(static_cast<std::size_t>(shared), 'I');
    for (int q = 0; q < shared; ++q) ops[static_cast<std::size_t>(q)] = "IXYZ"[(p >> (2 * (shared - 1 - q))) & 3U];
    const ComplexMatrix pm = norm * PauliString(ops).matrix();
    for (Eigen::Index e = 0; e < dim_extra; ++e) {
      ComplexMatrix unit = ComplexMatrix::Zero(n_out >= n_in ? dim_extra : 1, n_out >= n_in ? 1 : dim_extra);
      unit(n_out >= n_in ? e : 0, n_out >= n_in ? 0 : e) = 1.0;
      basis.push_back(kron(pm, unit));
    }
  }
  return basis;
}

/// Choi matrix J = sum_jk Q(|j><k|) (x) |j><k|, output index most significant.
inline ComplexMatrix choi_matrix(const ChannelFn& channel, int n_in, int n_out) {
  const auto din = dim_of(n_in);
  const auto dout = dim_of(n_out);
  ComplexMatrix j = ComplexMatrix::Zero(din * dout, din * dout);
  for (Eigen::Index a = 0; a < din; ++a)
    for (Eigen::Index b = 0; b < din; ++b) {
      ComplexMatrix unit = ComplexMatrix::Zero(din, din);
      unit(a, b) = 1.0;
      const ComplexMatrix out = channel(unit);
      if (out.rows() != dout || out.cols() != dout) throw ArgumentError("channel output has unexpected dimension");
      for (Eigen::Index r = 0; r < dout; ++r)
        for (Eigen::Index c = 0; c < dout; ++c) j(r * din + a, c * din + b) = out(r, c);
    }
  return j;
}

/// Q(x) rebuilt from chi.
inline ComplexMatrix apply_chi(const ProcessMatrix& pm, const ComplexMatrix& x) {
  const auto basis = operator_basis(pm.n_in, pm.n_out);
  ComplexMatrix out = ComplexMatrix::Zero(dim_of(pm.n_out), dim_of(pm.n_out));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const ComplexMatrix left = basis[i] * x;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const cplx c = pm.chi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (c != cplx(0.0)) out += c * left * basis[k].adjoint();
    }
  }
  return out;
}

inline ProcessMatrix chi_matrix(const ChannelFn& channel, int n_in, int n_out) {
  const ComplexMatrix j = choi_matrix(channel, n_in, n_out);
  const auto basis = operator_basis(n_in, n_out);
  const auto dout = dim_of(n_out);
  const auto din = dim_of(n_in);
  // Row-major vectorization |A>> with index (out, in).
  ComplexMatrix v(din * dout, static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (Eigen::Index r = 0; r < dout; ++r)
      for (Eigen::Index c = 0; c < din; ++c) v(r * din + c, static_cast<Eigen::Index>(i)) = basis[i](r, c);
  ProcessMatrix pm{n_in, n_out, v.adjoint() * j * v};

  // Probe with a physical state outside the matrix-unit set; a linear channel must agree.
  Rng rng(0x5eed);
  const ComplexVector psi = haar_random_unitary(n_in, rng).matrix().col(0);
  const ComplexMatrix probe = psi * psi.adjoint();
  const ComplexMatrix direct = channel(probe);
  if (max_abs(direct - apply_chi(pm, probe)) > 1e-8)
    throw ConsistencyError("channel probe disagrees with its chi reconstruction; the map is not linear");
  return pm;
}

struct ChannelDistance {
  double max_abs = 0.0;        ///< primary metric: max |chi_a - chi_b|
  double choi_fidelity = 1.0;  ///< fidelity of the normalized Choi states
};

inline ChannelDistance channel_distance(const ProcessMatrix& a, const ProcessMatrix& b) {
  if (a.n_in != b.n_in || a.n_out != b.n_out) throw ArgumentError("process matrices of different shape");
  ChannelDistance d;
  d.max_abs = max_abs(a.chi - b.chi);
  const double da = a.chi.trace().real(), db = b.chi.trace().real();
  const ComplexMatrix ha = 0.5 * (a.chi + a.chi.adjoint()) / da;
  const ComplexMatrix hb = 0.5 * (b.chi + b.chi.adjoint()) / db;
  d.choi_fidelity = fidelity(ha, hb);
  return d;
}

// ---------------------------------------------------------------------------
// Channels and references

inline ChannelFn kraus_channel(std::vector<ComplexMatrix> kraus) {
  return [k = std::move(kraus)](const ComplexMatrix& x) {
    ComplexMatrix out = ComplexMatrix::Zero(k.front().rows(), k.front().rows());
    for (const auto& m : k) out += m * x * m.adjoint();
    return out;
  };
}

/// Channel of one member of a model (noise-free unless given).
inline ChannelFn model_channel(const Model& m, int member = 0, InternalNoise noise = {}) {
  return [&m, member, noise](const ComplexMatrix& x) {
    return detail::run_pipeline(m, m.members[static_cast<std::size_t>(member)], x, noise, nullptr);
  };
}

/// A single transition of a model as a channel.
inline ChannelFn transition_channel(const Model& m, const Transition& t) {
  return [&m, t](const ComplexMatrix& x) { return detail::run_transition(m, t, x, {}, nullptr); };
}

namespace detail {
inline ComplexMatrix ket_bra(const std::string& ket, const std::string& bra) {
  return PureState::basis(ket).amplitudes() * PureState::basis(bra).amplitudes().adjoint();
}
}  // namespace detail

/// Syndrome-based bit-flip recovery of the 3-qubit code.
inline std::vector<ComplexMatrix> recovery_kraus_3qc() {
  using detail::ket_bra;
  return {ket_bra("000", "000") + ket_bra("111", "111"), ket_bra("000", "001") + ket_bra("111", "110"),
          ket_bra("000", "100") + ket_bra("111", "011"), ket_bra("000", "010") + ket_bra("111", "101")};
}

/// Combined correction and compression 3 -> 1.
inline std::vector<ComplexMatrix> encoder_kraus_3qc() {
  using detail::ket_bra;
  return {ket_bra("0", "000") + ket_bra("1", "111"), ket_bra("0", "001") + ket_bra("1", "110"),
          ket_bra("0", "100") + ket_bra("1", "011"), ket_bra("0", "010") + ket_bra("1", "101")};
}

/// Reconstruction 1 -> 3.
inline std::vector<ComplexMatrix> decoder_kraus_3qc() {
  using detail::ket_bra;
  return {ket_bra("000", "0") + ket_bra("111", "1")};
}

inline ProcessMatrix reference_recovery_chi() { return chi_matrix(kraus_channel(recovery_kraus_3qc()), 3, 3); }
inline ProcessMatrix reference_encoder_chi() { return chi_matrix(kraus_channel(encoder_kraus_3qc()), 3, 1); }
inline ProcessMatrix reference_decoder_chi() { return chi_matrix(kraus_channel(decoder_kraus_3qc()), 1, 3); }

/// Recovery of any code's lookup table.
inline ProcessMatrix code_recovery_chi(const StabilizerCode& code) {
  return chi_matrix(kraus_channel(code.recovery_kraus()), code.num_qubits(), code.num_qubits());
}

}  // namespace qaeqec
