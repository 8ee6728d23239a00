#pragma once

// Noise processes as channels on density matrices, plus samplers drawing
// explicit error patterns for Monte Carlo validation.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "qaeqec/linalg.hpp"
#include "qaeqec/pauli.hpp"

namespace qaeqec {

namespace detail {

inline void check_probability(double p, double hi, const char* what) {
  if (!(p >= 0.0 && p <= hi)) throw ArgumentError(std::string(what) + " probability out of range");
}

/// x -> (1-lambda) x + lambda Tr_T(x) (x) I_T / 2^m. Self-adjoint in the Hilbert-Schmidt product.
inline ComplexMatrix mix_towards_identity(const ComplexMatrix& x, int n, std::span<const int> targets, double lambda) {
  if (lambda == 0.0) return x;
  const auto rest = complement(targets, n);
  const auto toff = config_offsets(targets, n);
  const auto roff = config_offsets(rest, n);
  const ComplexMatrix reduced = trace_keep(x, n, rest);
  const double inv = 1.0 / static_cast<double>(toff.size());
  ComplexMatrix out = (1.0 - lambda) * x;
  for (std::size_t a = 0; a < roff.size(); ++a)
    for (std::size_t b = 0; b < roff.size(); ++b) {
      const cplx v = lambda * inv * reduced(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      for (auto t : toff) out(roff[a] + t, roff[b] + t) += v;
    }
  return out;
}

}  // namespace detail

/// (1-p) rho + p X rho X, independently on each listed qubit.
inline ComplexMatrix bit_flip(const ComplexMatrix& rho, int n, double p, std::span<const int> qubits) {
  detail::check_probability(p, 1.0, "bit flip");
  detail::check_targets(qubits, n);
  ComplexMatrix out = rho;
  for (int q : qubits) {
    const auto x = PauliString::single(n, q, 'X');
    out = (1.0 - p) * out + p * x.conjugate(out);
  }
  return out;
}

inline DensityMatrix bit_flip(const DensityMatrix& rho, double p, std::span<const int> qubits) {
  return {rho.num_qubits(), bit_flip(rho.matrix(), rho.num_qubits(), p, qubits)};
}

inline std::vector<int> all_qubits(int n) {
  std::vector<int> q(static_cast<std::size_t>(n));
  std::iota(q.begin(), q.end(), 0);
  return q;
}

/// (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z), independently on each listed qubit.
inline ComplexMatrix depolarizing_single(const ComplexMatrix& rho, int n, double p, std::span<const int> qubits) {
  detail::check_probability(p, 1.0, "depolarizing");
  detail::check_targets(qubits, n);
  ComplexMatrix out = rho;
  for (int q : qubits) {
    ComplexMatrix acc = (1.0 - p) * out;
    for (char op : {'X', 'Y', 'Z'}) acc += (p / 3.0) * PauliString::single(n, q, op).conjugate(out);
    out = std::move(acc);
  }
  return out;
}

inline DensityMatrix depolarizing_single(const DensityMatrix& rho, double p, std::span<const int> qubits) {
  return {rho.num_qubits(), depolarizing_single(rho.matrix(), rho.num_qubits(), p, qubits)};
}

/// m-qubit depolarizing channel: every non-identity Pauli on the targets with probability p_n/(4^m-1).
/// Evaluated in its identity-mixing form with coefficient 4^m p_n / (4^m - 1).
inline ComplexMatrix depolarizing_multi(const ComplexMatrix& rho, int n, double p_n, std::span<const int> targets) {
  detail::check_targets(targets, n);
  const double four_m = std::pow(4.0, static_cast<double>(targets.size()));
  detail::check_probability(p_n, 1.0 - 1.0 / four_m + 1e-15, "multi-qubit depolarizing");
  return detail::mix_towards_identity(rho, n, targets, four_m * p_n / (four_m - 1.0));
}

inline DensityMatrix depolarizing_multi(const DensityMatrix& rho, double p_n, std::span<const int> targets) {
  return {rho.num_qubits(), depolarizing_multi(rho.matrix(), rho.num_qubits(), p_n, targets)};
}

// ---------------------------------------------------------------------------
// Spatially correlated bit flips on three qubits

/// Exchangeable joint law of three bit flips with marginal p and correlation ratio eta.
struct CorrelatedFlipDistribution {
  double p = 0.0;
  double eta = 1.0;
  double q0 = 1.0;  ///< no flip
  double q1 = 0.0;  ///< each specific single flip
  double q2 = 0.0;  ///< each specific pair
  double q3 = 0.0;  ///< all three

  /// Pr(flip on A | B flipped).
  double conditional() const { return (q2 + q3) / p; }

  /// Probability of a flip pattern given as a 3-bit mask.
  double pattern_probability(unsigned mask) const {
    switch (std::popcount(mask & 7U)) {
      case 0: return q0;
      case 1: return q1;
      case 2: return q2;
      default: return q3;
    }
  }
};

/// Closes the constraints with exchangeability: q1 = p(1-pc)^2, q2 = p pc (1-pc), q3 = p pc^2,
/// pc = eta p / (1 - p + eta p).
inline CorrelatedFlipDistribution correlated_flip_distribution(double p, double eta) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("correlated flip marginal p must lie in (0,1)");
  if (!(eta > 0.0)) throw ArgumentError("correlation strength eta must be positive");
  const double pc = eta * p / (1.0 - p + eta * p);
  CorrelatedFlipDistribution d;
  d.p = p;
  d.eta = eta;
  d.q1 = p * (1.0 - pc) * (1.0 - pc);
  d.q2 = p * pc * (1.0 - pc);
  d.q3 = p * pc * pc;
  d.q0 = 1.0 - p * (3.0 - 3.0 * pc + pc * pc);
  if (d.q0 < -1e-15)
    throw InfeasibleError("correlated flip parameters (p=" + std::to_string(p) + ", eta=" + std::to_string(eta) +
                          ") give a negative no-flip probability");
  d.q0 = std::max(d.q0, 0.0);
  return d;
}

/// Sum over the 8 flip patterns of probability times X-pattern conjugation.
inline DensityMatrix correlated_bit_flip(const DensityMatrix& rho, const CorrelatedFlipDistribution& dist) {
  if (rho.num_qubits() != 3) throw ArgumentError("correlated bit flip acts on exactly three qubits");
  ComplexMatrix out = ComplexMatrix::Zero(8, 8);
  for (unsigned mask = 0; mask < 8; ++mask) {
    std::string ops = "III";
    for (int q = 0; q < 3; ++q)
      if ((mask >> (2 - q)) & 1U) ops[static_cast<std::size_t>(q)] = 'X';
    out += dist.pattern_probability(mask) * PauliString(ops).conjugate(rho.matrix());
  }
  return {3, out};
}

// ---------------------------------------------------------------------------
// Erasures

/// A state after qubit loss, with the lost positions (indices into the original register).
struct ErasedState {
  DensityMatrix state;
  std::vector<int> positions;
};

inline ErasedState erase(const DensityMatrix& rho, std::span<const int> positions) {
  std::vector<int> pos(positions.begin(), positions.end());
  std::sort(pos.begin(), pos.end());
  return {partial_trace(rho, pos), pos};
}

// ---------------------------------------------------------------------------
// Collective dephasing

/// Gauss-Hermite discretization of a centered Gaussian over rotation angles.
struct DephasingQuadrature {
  double sigma = 1.0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch nodes for weight exp(-x^2), rescaled to N(0, sigma^2).
inline DephasingQuadrature make_dephasing_quadrature(double sigma, int num_nodes = 21) {
  if (sigma < 0.0) throw ArgumentError("dephasing sigma must be non-negative");
  if (num_nodes < 1) throw ArgumentError("quadrature needs at least one node");
  DephasingQuadrature q;
  q.sigma = sigma;
  if (sigma == 0.0 || num_nodes == 1) {
    q.nodes = {0.0};
    q.weights = {1.0};
    return q;
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(num_nodes, num_nodes);
  for (int k = 1; k < num_nodes; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  std::vector<double> raw(static_cast<std::size_t>(num_nodes));
  double total = 0;
  for (int k = 0; k < num_nodes; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    raw[static_cast<std::size_t>(k)] = v0 * v0;
    total += v0 * v0;
  }
  // Symmetrize: node k pairs with node N-1-k.
  for (int k = 0; k < num_nodes; ++k) {
    const int mirror = num_nodes - 1 - k;
    const double x = 0.5 * (es.eigenvalues()(k) - es.eigenvalues()(mirror));
    const double w = 0.5 * (raw[static_cast<std::size_t>(k)] + raw[static_cast<std::size_t>(mirror)]) / total;
    q.nodes.push_back(std::numbers::sqrt2 * sigma * x);
    q.weights.push_back(w);
  }
  return q;
}

namespace detail {
/// Multiplier applied to rho_ab, indexed by magnetization difference (m_a - m_b) + 2n.
inline std::vector<cplx> dephasing_factors(const DephasingQuadrature& quad, int n) {
  std::vector<cplx> f(static_cast<std::size_t>(4 * n + 1), 0.0);
  for (int delta = -2 * n; delta <= 2 * n; ++delta) {
    cplx s = 0;
    for (std::size_t j = 0; j < quad.nodes.size(); ++j)
      s += quad.weights[j] * std::exp(cplx(0.0, -0.5 * quad.nodes[j] * delta));
    f[static_cast<std::size_t>(delta + 2 * n)] = s;
  }
  return f;
}

inline ComplexMatrix collective_dephasing(const ComplexMatrix& x, int n, const DephasingQuadrature& quad, bool adjoint) {
  if (quad.nodes.empty() || quad.nodes.size() != quad.weights.size())
    throw ArgumentError("collective dephasing needs a non-empty quadrature");
  const auto f = dephasing_factors(quad, n);
  const auto d = x.rows();
  std::vector<int> mag(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) mag[static_cast<std::size_t>(i)] = n - 2 * std::popcount(static_cast<std::uint64_t>(i));
  ComplexMatrix out(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      const cplx fac = f[static_cast<std::size_t>(mag[static_cast<std::size_t>(i)] - mag[static_cast<std::size_t>(j)] + 2 * n)];
      out(i, j) = x(i, j) * (adjoint ? std::conj(fac) : fac);
    }
  return out;
}
}  // namespace detail

/// Weighted mixture of U(alpha) rho U(alpha)^dagger with U(alpha) = exp(-i alpha/2 sum_n Z_n).
inline DensityMatrix collective_dephasing(const DensityMatrix& rho, const DephasingQuadrature& quad) {
  return {rho.num_qubits(), detail::collective_dephasing(rho.matrix(), rho.num_qubits(), quad, false)};
}

// ---------------------------------------------------------------------------
// Samplers

enum class PauliNoiseKind { None, BitFlip, Depolarizing };

/// Draws an independent Pauli error on each listed qubit of an n-qubit register.
inline PauliString sample_pauli_errors(PauliNoiseKind kind, double p, int n, std::span<const int> qubits, Rng& rng) {
  std::string ops(static_cast<std::size_t>(n), 'I');
  if (kind == PauliNoiseKind::None || p == 0.0) return PauliString(ops);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int q : qubits) {
    const double r = u(rng);
    if (r >= p) continue;
    if (kind == PauliNoiseKind::BitFlip) {
      ops[static_cast<std::size_t>(q)] = 'X';
    } else {
      const double s = r / p;
      ops[static_cast<std::size_t>(q)] = s < 1.0 / 3.0 ? 'X' : (s < 2.0 / 3.0 ? 'Y' : 'Z');
    }
  }
  return PauliString(ops);
}

/// Draws a 3-bit flip pattern from the correlated law.
inline PauliString sample_correlated_flips(const CorrelatedFlipDistribution& dist, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  unsigned mask = 7;
  for (unsigned m = 0; m < 8; ++m) {
    r -= dist.pattern_probability(m);
    if (r < 0) {
      mask = m;
      break;
    }
  }
  std::string ops = "III";
  for (int q = 0; q < 3; ++q)
    if ((mask >> (2 - q)) & 1U) ops[static_cast<std::size_t>(q)] = 'X';
  return PauliString(ops);
}

/// Each qubit lost independently with probability p_loss; returns sorted lost positions.
inline std::vector<int> sample_losses(int n, double p_loss, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> lost;
  for (int q = 0; q < n; ++q)
    if (u(rng) < p_loss) lost.push_back(q);
  return lost;
}

}  // namespace qaeqec
