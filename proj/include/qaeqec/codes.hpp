#pragma once

// Small stabilizer codes: the 3-qubit repetition code, a 4-qubit erasure
// code and the 5-qubit perfect code, with lookup-table recovery maps.

#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qaeqec/linalg.hpp"
#include "qaeqec/noise.hpp"
#include "qaeqec/pauli.hpp"

namespace qaeqec {

/// Point on the logical Bloch sphere.
struct LogicalPoint {
  double theta = 0.0;
  double phi = 0.0;
};

class StabilizerCode {
 public:
  using RecoveryTable = std::map<unsigned, PauliString>;

  StabilizerCode(std::string name, std::vector<PauliString> generators, PauliString logical_x, PauliString logical_z)
      : name_(std::move(name)),
        n_(logical_x.num_qubits()),
        generators_(std::move(generators)),
        lx_(std::move(logical_x)),
        lz_(std::move(logical_z)) {
    for (const auto& g : generators_)
      if (g.num_qubits() != n_) throw ArgumentError("generator length differs from code length");
    build_basis();
    table_ = minimum_weight_table();
    build_kraus();
  }

  const std::string& name() const { return name_; }
  int num_qubits() const { return n_; }
  const std::vector<PauliString>& generators() const { return generators_; }
  const PauliString& logical_x() const { return lx_; }
  const PauliString& logical_z() const { return lz_; }
  const PureState& basis0() const { return basis0_; }
  const PureState& basis1() const { return basis1_; }
  const RecoveryTable& recovery_table() const { return table_; }
  const std::vector<ComplexMatrix>& recovery_kraus() const { return kraus_; }

  /// Y_L = i X_L Z_L.
  ComplexMatrix logical_y_matrix() const { return cplx(0, 1) * lx_.matrix() * lz_.matrix(); }

  /// Syndrome key: bit (m-1-k) set iff error anticommutes with generator k (generator 0 most significant).
  unsigned syndrome(const PauliString& error) const {
    unsigned key = 0;
    const auto m = generators_.size();
    for (std::size_t k = 0; k < m; ++k)
      if (!generators_[k].commutes_with(error)) key |= 1U << (m - 1 - k);
    return key;
  }

  /// Generator expectation values on a state, in generator order.
  std::vector<double> syndrome_values(const ComplexVector& psi) const {
    std::vector<double> s;
    for (const auto& g : generators_) s.push_back(g.expectation(psi).real());
    return s;
  }

  /// Copy of this code using a different syndrome -> correction table.
  StabilizerCode with_table(std::string name, RecoveryTable table) const {
    StabilizerCode c = *this;
    c.name_ = std::move(name);
    c.table_ = std::move(table);
    c.build_kraus();
    return c;
  }

  ComplexMatrix syndrome_projector(unsigned key) const {
    const auto d = dim_of(n_);
    ComplexMatrix p = ComplexMatrix::Identity(d, d);
    const auto m = generators_.size();
    for (std::size_t k = 0; k < m; ++k) {
      const double sign = ((key >> (m - 1 - k)) & 1U) ? -1.0 : 1.0;
      p = p * (0.5 * (ComplexMatrix::Identity(d, d) + sign * generators_[k].matrix()));
    }
    return p;
  }

  /// Throws StateValidityError if any structural invariant fails.
  void check_invariants() const {
    for (std::size_t a = 0; a < generators_.size(); ++a)
      for (std::size_t b = a + 1; b < generators_.size(); ++b)
        if (!generators_[a].commutes_with(generators_[b])) throw StateValidityError(name_ + ": generators do not commute");
    if (lx_.commutes_with(lz_)) throw StateValidityError(name_ + ": logical X and Z commute");
    for (const auto& g : generators_) {
      if (!g.commutes_with(lx_) || !g.commutes_with(lz_)) throw StateValidityError(name_ + ": logical operator not in normalizer");
      for (const auto* b : {&basis0_, &basis1_})
        if (std::abs(g.expectation(b->amplitudes()) - cplx(1.0)) > 1e-10)
          throw StateValidityError(name_ + ": basis state not stabilized");
    }
    const ComplexVector flipped = lx_.apply(basis0_.amplitudes());
    if (std::abs(std::abs(flipped.dot(basis1_.amplitudes())) - 1.0) > 1e-10)
      throw StateValidityError(name_ + ": X_L does not map |0_L> to |1_L>");
  }

 private:
  void build_basis() {
    const auto d = dim_of(n_);
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    ComplexMatrix proj = 0.5 * (id + lz_.matrix());
    for (const auto& g : generators_) proj = 0.5 * (id + g.matrix()) * proj;
    for (Eigen::Index fid = 0; fid < d; ++fid) {
      ComplexVector v = proj.col(fid);
      if (v.norm() < 1e-8) continue;
      v.normalize();
      for (Eigen::Index i = 0; i < d; ++i)
        if (std::abs(v(i)) > 1e-12) {
          v *= std::conj(v(i)) / std::abs(v(i));
          break;
        }
      basis0_ = PureState(n_, v);
      basis1_ = PureState(n_, lx_.apply(v));
      return;
    }
    throw StateValidityError(name_ + ": empty codespace");
  }

  /// Minimum-weight decoder; enumeration order (weight, positions, X<Y<Z) breaks ties toward low qubit index.
  RecoveryTable minimum_weight_table() const {
    RecoveryTable table;
    const unsigned num_syndromes = 1U << generators_.size();
    for (int w = 0; w <= n_ && table.size() < num_syndromes; ++w) {
      std::vector<int> pos(static_cast<std::size_t>(w));
      std::iota(pos.begin(), pos.end(), 0);
      auto next_combination = [&]() {
        int i = w - 1;
        while (i >= 0 && pos[static_cast<std::size_t>(i)] == n_ - w + i) --i;
        if (i < 0) return false;
        ++pos[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < w; ++j) pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(j - 1)] + 1;
        return true;
      };
      do {
        const auto combos = static_cast<unsigned>(std::pow(3, w));
        for (unsigned c = 0; c < combos; ++c) {
          std::string ops(static_cast<std::size_t>(n_), 'I');
          unsigned r = c;
          for (int k = w - 1; k >= 0; --k) {
            ops[static_cast<std::size_t>(pos[static_cast<std::size_t>(k)])] = "XYZ"[r % 3];
            r /= 3;
          }
          PauliString e(ops);
          table.try_emplace(syndrome(e), e);
        }
      } while (w > 0 && next_combination());
    }
    return table;
  }

  void build_kraus() {
    kraus_.clear();
    for (const auto& [key, corr] : table_) kraus_.push_back(corr.matrix() * syndrome_projector(key));
  }

  std::string name_;
  int n_;
  std::vector<PauliString> generators_;
  PauliString lx_, lz_;
  PureState basis0_, basis1_;
  RecoveryTable table_;
  std::vector<ComplexMatrix> kraus_;
};

inline StabilizerCode three_qubit_code() {
  return {"3qc", {PauliString("ZZI"), PauliString("IZZ")}, PauliString("XXX"), PauliString("ZZZ")};
}

/// Same codespace, but every nontrivial syndrome is read as the complementary two-qubit flip.
inline StabilizerCode three_qubit_code_alternative() {
  const auto base = three_qubit_code();
  StabilizerCode::RecoveryTable t;
  t.emplace(0b00U, PauliString("III"));
  t.emplace(0b01U, PauliString("XXI"));
  t.emplace(0b10U, PauliString("IXX"));
  t.emplace(0b11U, PauliString("XIX"));
  return base.with_table("3qc-alt", std::move(t));
}

inline StabilizerCode four_qubit_erasure_code() {
  return {"4qec", {PauliString("XXXX"), PauliString("ZZZZ"), PauliString("ZZII")}, PauliString("XXII"), PauliString("IZZI")};
}

inline StabilizerCode five_qubit_code() {
  return {"5qc",
          {PauliString("XZZXI"), PauliString("IXZZX"), PauliString("XIXZZ"), PauliString("ZXIXZ")},
          PauliString("XXXXX"),
          PauliString("ZZZZZ")};
}

inline StabilizerCode code_by_name(const std::string& name) {
  if (name == "3qc") return three_qubit_code();
  if (name == "3qc-alt") return three_qubit_code_alternative();
  if (name == "4qec") return four_qubit_erasure_code();
  if (name == "5qc") return five_qubit_code();
  throw ConfigError("unknown code '" + name + "' (expected 3qc, 4qec or 5qc)");
}

// ---------------------------------------------------------------------------

inline PureState logical_state(const StabilizerCode& code, const LogicalPoint& pt) {
  ComplexVector v = std::cos(pt.theta / 2) * code.basis0().amplitudes() +
                    std::exp(cplx(0, pt.phi)) * std::sin(pt.theta / 2) * code.basis1().amplitudes();
  v.normalize();
  return {code.num_qubits(), v};
}

/// Single-qubit analogue: cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.
inline PureState bloch_state(const LogicalPoint& pt) {
  ComplexVector v(2);
  v << std::cos(pt.theta / 2), std::exp(cplx(0, pt.phi)) * std::sin(pt.theta / 2);
  return {1, v};
}

inline LogicalPoint sample_bloch_uniform(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ph(0.0, 2 * std::numbers::pi);
  const double c = u(rng);
  return {std::acos(c), ph(rng)};
}

/// |0_L>, |1_L>, |+_L>, |-_L>, |+'_L>, |-'_L> (Z, X and Y eigenstates).
inline std::vector<PureState> cardinal_logical_states(const StabilizerCode& code) {
  const auto& z0 = code.basis0().amplitudes();
  const auto& z1 = code.basis1().amplitudes();
  const double r = 1.0 / std::numbers::sqrt2;
  const int n = code.num_qubits();
  return {code.basis0(),
          code.basis1(),
          PureState(n, r * (z0 + z1)),
          PureState(n, r * (z0 - z1)),
          PureState(n, r * (z0 + cplx(0, 1) * z1)),
          PureState(n, r * (z0 - cplx(0, 1) * z1))};
}

/// Single-qubit cardinal states in the same order.
inline std::vector<PureState> cardinal_states_single() {
  const double r = 1.0 / std::numbers::sqrt2;
  auto mk = [](cplx a, cplx b) {
    ComplexVector v(2);
    v << a, b;
    return PureState(1, v);
  };
  return {mk(1, 0), mk(0, 1), mk(r, r), mk(r, -r), mk(r, cplx(0, r)), mk(r, cplx(0, -r))};
}

/// Syndrome projection followed by the table's Pauli correction.
inline ComplexMatrix perfect_recovery(const StabilizerCode& code, const ComplexMatrix& rho) {
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (const auto& m : code.recovery_kraus()) out += m * rho * m.adjoint();
  return out;
}

inline DensityMatrix perfect_recovery(const StabilizerCode& code, const DensityMatrix& rho) {
  if (rho.num_qubits() != code.num_qubits()) throw ArgumentError("state size does not match code length");
  return {rho.num_qubits(), perfect_recovery(code, rho.matrix())};
}

struct Analytic3qc {
  double logical_error = 0.0;
  double mean_fidelity = 1.0;
};

/// p_L = 3p^2(1-p) + p^3 and the Bloch-averaged fidelity 1 - (2/3) p_L.
inline Analytic3qc analytic_3qc(double p) {
  const double pl = 3 * p * p * (1 - p) + p * p * p;
  return {pl, 1.0 - 2.0 / 3.0 * pl};
}

}  // namespace qaeqec
