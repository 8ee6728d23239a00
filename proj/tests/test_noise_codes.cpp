#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "qaeqec/codes.hpp"
#include "qaeqec/noise.hpp"

using namespace qaeqec;

namespace {

/// Applies a channel to every matrix unit and checks trace preservation and complete positivity via Choi.
template <class F>
void expect_cptp(F channel, int n_in, int n_out, const char* what) {
  const auto din = dim_of(n_in), dout = dim_of(n_out);
  ComplexMatrix choi = ComplexMatrix::Zero(din * dout, din * dout);
  for (Eigen::Index a = 0; a < din; ++a)
    for (Eigen::Index b = 0; b < din; ++b) {
      ComplexMatrix e = ComplexMatrix::Zero(din, din);
      e(a, b) = 1.0;
      const ComplexMatrix out = channel(e);
      ASSERT_EQ(out.rows(), dout) << what;
      EXPECT_NEAR(std::abs(out.trace() - (a == b ? cplx(1.0) : cplx(0.0))), 0.0, 1e-12) << what;
      for (Eigen::Index r = 0; r < dout; ++r)
        for (Eigen::Index c = 0; c < dout; ++c) choi(r * din + a, c * din + b) = out(r, c);
    }
  EXPECT_LT(max_abs(choi - choi.adjoint()), 1e-12) << what;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(choi);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12) << what;
}

}  // namespace

TEST(Noise, BitFlipMatchesKrausSum) {
  Rng rng(1);
  const ComplexMatrix rho = oracle::random_density(8, rng);
  const double p = 0.13;
  ComplexMatrix expect = ComplexMatrix::Zero(8, 8);
  for (unsigned mask = 0; mask < 8; ++mask) {
    std::string s = "III";
    double w = 1;
    for (int q = 0; q < 3; ++q) {
      const bool f = (mask >> q) & 1U;
      if (f) s[static_cast<std::size_t>(q)] = 'X';
      w *= f ? p : 1 - p;
    }
    const ComplexMatrix k = oracle::pauli_string(s);
    expect += w * k * rho * k;
  }
  EXPECT_LT(max_abs(bit_flip(rho, 3, p, all_qubits(3)) - expect), 1e-15);
}

TEST(Noise, DepolarizingSingleMatchesKraus) {
  Rng rng(2);
  const ComplexMatrix rho = oracle::random_density(4, rng);
  const double p = 0.2;
  ComplexMatrix expect = (1 - p) * rho;
  for (char c : {'X', 'Y', 'Z'}) {
    const ComplexMatrix k = oracle::pauli_string(std::string("I") + c);
    expect += p / 3 * k * rho * k.adjoint();
  }
  const std::vector<int> q{1};
  EXPECT_LT(max_abs(depolarizing_single(rho, 2, p, q) - expect), 1e-15);
}

TEST(Noise, TwoQubitDepolarizingMatchesSixteenTermKraus) {
  Rng rng(3);
  const ComplexMatrix rho = oracle::random_density(8, rng);
  const double p = 0.07;
  const std::vector<int> t{2, 0};
  ComplexMatrix expect = (1 - p) * rho;
  const std::string ops = "IXYZ";
  for (char a : ops)
    for (char b : ops) {
      if (a == 'I' && b == 'I') continue;
      std::string s = "III";
      s[2] = a;
      s[0] = b;
      const ComplexMatrix k = oracle::pauli_string(s);
      expect += p / 15 * k * rho * k.adjoint();
    }
  EXPECT_LT(max_abs(depolarizing_multi(rho, 3, p, t) - expect), 1e-15);
  EXPECT_THROW(depolarizing_multi(rho, 3, 0.95, t), ArgumentError);
}

TEST(Noise, ChannelsAreCptp) {
  const std::vector<int> q3 = all_qubits(3), q1{1}, q2{0, 2};
  expect_cptp([&](const ComplexMatrix& x) { return bit_flip(x, 3, 0.3, q3); }, 3, 3, "bit flip");
  expect_cptp([&](const ComplexMatrix& x) { return depolarizing_single(x, 3, 0.4, q3); }, 3, 3, "depolarizing");
  expect_cptp([&](const ComplexMatrix& x) { return depolarizing_multi(x, 3, 0.5, q2); }, 3, 3, "multi depolarizing");
  expect_cptp([&](const ComplexMatrix& x) { return depolarizing_multi(x, 3, 0.75, q1); }, 3, 3, "full depolarizing");
  const auto dist = correlated_flip_distribution(0.2, 4.0);
  expect_cptp([&](const ComplexMatrix& x) { return correlated_bit_flip(DensityMatrix(3, x), dist).matrix(); }, 3, 3, "correlated");
  const auto quad = make_dephasing_quadrature(1.0);
  expect_cptp([&](const ComplexMatrix& x) { return collective_dephasing(DensityMatrix(3, x), quad).matrix(); }, 3, 3, "dephasing");
  const std::vector<int> lost{1};
  expect_cptp([&](const ComplexMatrix& x) { return erase(DensityMatrix(3, x), lost).state.matrix(); }, 3, 2, "erasure");
}

TEST(Noise, CorrelatedDistributionConstraints) {
  for (double p : {0.05, 0.2, 0.4})
    for (double eta : {0.5, 1.0, 4.0, 16.0}) {
      const auto d = correlated_flip_distribution(p, eta);
      EXPECT_NEAR(d.q0 + 3 * d.q1 + 3 * d.q2 + d.q3, 1.0, 1e-14);
      EXPECT_NEAR(d.q1 + 2 * d.q2 + d.q3, p, 1e-14);  // marginal
      const double pc = eta * p / (1 - p + eta * p);
      EXPECT_NEAR(d.conditional(), pc, 1e-14);
      // Pr(A | B) / Pr(A | not B) = eta
      const double not_b = (d.q1 + d.q2) / (1 - p);
      EXPECT_NEAR(d.conditional() / not_b, eta, 1e-12);
    }
}

TEST(Noise, CorrelatedFrozenValues) {
  const auto indep = correlated_flip_distribution(0.2, 1.0);
  EXPECT_NEAR(indep.q0, 0.512, 1e-15);
  EXPECT_NEAR(indep.q1, 0.128, 1e-15);
  EXPECT_NEAR(indep.q2, 0.032, 1e-15);
  EXPECT_NEAR(indep.q3, 0.008, 1e-15);
  const auto eta4 = correlated_flip_distribution(0.2, 4.0);
  EXPECT_NEAR(eta4.conditional(), 0.5, 1e-15);
  EXPECT_NEAR(eta4.q1, 0.05, 1e-15);
  EXPECT_NEAR(eta4.q2, 0.05, 1e-15);
  EXPECT_NEAR(eta4.q3, 0.05, 1e-15);
  EXPECT_THROW(correlated_flip_distribution(0.0, 1.0), ArgumentError);
  EXPECT_THROW(correlated_flip_distribution(0.2, 0.0), ArgumentError);
}

TEST(Noise, CorrelatedIndependentLimitIsProductBitFlip) {
  Rng rng(4);
  const ComplexMatrix rho = oracle::random_density(8, rng);
  const auto d = correlated_flip_distribution(0.2, 1.0);
  EXPECT_LT(max_abs(correlated_bit_flip(DensityMatrix(3, rho), d).matrix() - bit_flip(rho, 3, 0.2, all_qubits(3))), 1e-15);
}

TEST(Noise, CollectiveDephasingSingleQubitCoherence) {
  const auto quad = make_dephasing_quadrature(1.0, 21);
  double wsum = 0;
  for (double w : quad.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-14);
  const double r = 1 / std::sqrt(2.0);
  ComplexVector plus(2);
  plus << r, r;
  const auto out = collective_dephasing(DensityMatrix::from_pure(PureState(1, plus)), quad);
  // E[cos a] for a ~ N(0,1) is exp(-1/2).
  EXPECT_NEAR(2 * out.matrix()(0, 1).real(), std::exp(-0.5), 1e-12);
  EXPECT_NEAR(out.matrix()(0, 1).imag(), 0.0, 1e-14);
}

TEST(Noise, CollectiveDephasingLeavesZeroMagnetizationInvariant) {
  // (|01> + i|10>)/sqrt2 spans the zero-magnetization sector.
  ComplexVector v = ComplexVector::Zero(4);
  v(1) = 1 / std::sqrt(2.0);
  v(2) = cplx(0, 1 / std::sqrt(2.0));
  const auto rho = DensityMatrix::from_pure(PureState(2, v));
  const auto out = collective_dephasing(rho, make_dephasing_quadrature(2.0));
  EXPECT_LT(max_abs(out.matrix() - rho.matrix()), 1e-14);
}

TEST(Noise, ErasureIsPartialTrace) {
  Rng rng(5);
  const ComplexMatrix rho = oracle::random_density(16, rng);
  const std::vector<int> lost{3, 1};
  const auto e = erase(DensityMatrix(4, rho), lost);
  EXPECT_EQ(e.positions, (std::vector<int>{1, 3}));
  EXPECT_LT(max_abs(e.state.matrix() - oracle::partial_trace(rho, 4, {1, 3})), 1e-15);
}

TEST(Noise, SamplersHaveTheRightRates) {
  Rng rng(6);
  const std::vector<int> q = all_qubits(3);
  const int n = 20000;
  int flips = 0, ys = 0;
  for (int i = 0; i < n; ++i) {
    const auto e = sample_pauli_errors(PauliNoiseKind::Depolarizing, 0.3, 3, q, rng);
    flips += e.weight();
    for (int k = 0; k < 3; ++k) ys += e[k] == 'Y';
  }
  EXPECT_NEAR(flips / (3.0 * n), 0.3, 0.01);
  EXPECT_NEAR(ys / (3.0 * n), 0.1, 0.006);
  const auto d = correlated_flip_distribution(0.2, 8.0);
  int triples = 0;
  for (int i = 0; i < n; ++i) triples += sample_correlated_flips(d, rng).weight() == 3;
  EXPECT_NEAR(triples / static_cast<double>(n), d.q3, 0.01);
  int lost = 0;
  for (int i = 0; i < n; ++i) lost += static_cast<int>(sample_losses(5, 0.4, rng).size());
  EXPECT_NEAR(lost / (5.0 * n), 0.4, 0.01);
}

TEST(Codes, StructuralInvariants) {
  for (const auto& name : {"3qc", "3qc-alt", "4qec", "5qc"}) {
    const auto c = code_by_name(name);
    EXPECT_NO_THROW(c.check_invariants()) << name;
    EXPECT_NEAR(std::abs(c.basis0().amplitudes().dot(c.basis1().amplitudes())), 0.0, 1e-12) << name;
  }
  EXPECT_THROW(code_by_name("7qc"), ConfigError);
}

TEST(Codes, ThreeQubitBasisAndTables) {
  const auto c = three_qubit_code();
  EXPECT_NEAR(std::abs(c.basis0().amplitudes()(0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(c.basis1().amplitudes()(7)), 1.0, 1e-15);
  EXPECT_EQ(c.recovery_table().at(0b10U).str(), "XII");
  EXPECT_EQ(c.recovery_table().at(0b11U).str(), "IXI");
  EXPECT_EQ(c.recovery_table().at(0b01U).str(), "IIX");
  const auto alt = three_qubit_code_alternative();
  EXPECT_EQ(alt.recovery_table().at(0b10U).str(), "IXX");
}

TEST(Codes, FiveQubitSyndromesAreABijectionOnSinglePaulis) {
  const auto c = five_qubit_code();
  std::set<unsigned> seen{c.syndrome(PauliString::identity(5))};
  for (int q = 0; q < 5; ++q)
    for (char op : {'X', 'Y', 'Z'}) seen.insert(c.syndrome(PauliString::single(5, q, op)));
  EXPECT_EQ(seen.size(), 16U);
  for (const auto& [key, corr] : c.recovery_table()) EXPECT_LE(corr.weight(), 1);
}

TEST(Codes, FiveQubitSingleAndDoubleXSyndromesAreDistinct) {
  // Allows a bit-flip-trained decoder to fix every single and double X.
  const auto c = five_qubit_code();
  std::set<unsigned> seen;
  int count = 0;
  for (unsigned m = 0; m < 32; ++m) {
    if (std::popcount(m) > 2) continue;
    std::string s(5, 'I');
    for (int q = 0; q < 5; ++q)
      if ((m >> q) & 1U) s[static_cast<std::size_t>(q)] = 'X';
    seen.insert(c.syndrome(PauliString(s)));
    ++count;
  }
  EXPECT_EQ(count, 16);
  EXPECT_EQ(seen.size(), 16U);
}

TEST(Codes, PerfectRecoveryFixesCorrectableErrors) {
  Rng rng(7);
  for (const auto& c : {three_qubit_code(), five_qubit_code()}) {
    const int n = c.num_qubits();
    const auto psi = logical_state(c, sample_bloch_uniform(rng));
    for (const auto& [key, corr] : c.recovery_table()) {
      const auto rho = DensityMatrix::from_pure(PureState(n, corr.apply(psi.amplitudes())));
      EXPECT_NEAR(fidelity(perfect_recovery(c, rho), psi), 1.0, 1e-12) << c.name() << " " << corr.str();
    }
    expect_cptp([&](const ComplexMatrix& x) { return perfect_recovery(c, x); }, n, n, "recovery");
  }
}

TEST(Codes, FourQubitCodeSurvivesAnySingleErasure) {
  // Every single-qubit marginal of a codeword is maximally mixed, and any
  // three-qubit remainder keeps the logical states distinguishable.
  const auto c = four_qubit_erasure_code();
  Rng rng(8);
  const auto psi = DensityMatrix::from_pure(logical_state(c, sample_bloch_uniform(rng)));
  for (int q = 0; q < 4; ++q) {
    std::vector<int> others;
    for (int k = 0; k < 4; ++k)
      if (k != q) others.push_back(k);
    const auto marg = partial_trace(psi, others);
    EXPECT_LT(max_abs(marg.matrix() - DensityMatrix::maximally_mixed(1).matrix()), 1e-12);
  }
  const auto z0 = DensityMatrix::from_pure(c.basis0()), z1 = DensityMatrix::from_pure(c.basis1());
  for (int q = 0; q < 4; ++q) {
    const std::vector<int> l{q};
    EXPECT_NEAR(fidelity(erase(z0, l).state, erase(z1, l).state), 0.0, 1e-12);
  }
}

TEST(Codes, AnalyticLogicalErrorFrozenValues) {
  const auto a = analytic_3qc(0.1);
  EXPECT_NEAR(a.logical_error, 0.028, 1e-15);
  EXPECT_NEAR(a.mean_fidelity, 0.9813333333333333, 1e-15);
  EXPECT_NEAR(analytic_3qc(0.5).logical_error, 0.5, 1e-15);
}

TEST(Codes, AnalyticLogicalErrorMatchesExactAverage) {
  // The Bloch average of F over Haar-random logical states equals 1 - (2/3) p_L.
  const auto c = three_qubit_code();
  const double p = 0.2;
  const std::vector<int> q = all_qubits(3);
  double acc = 0;
  const auto states = cardinal_logical_states(c);
  for (const auto& psi : states) {
    const auto noisy = bit_flip(DensityMatrix::from_pure(psi), p, q);
    acc += fidelity(perfect_recovery(c, noisy), psi);
  }
  // Cardinal states form a 2-design on the logical qubit.
  EXPECT_NEAR(acc / 6.0, analytic_3qc(p).mean_fidelity, 1e-12);
}

TEST(Codes, BlochSamplingIsUniform) {
  Rng rng(9);
  double z = 0, z2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(sample_bloch_uniform(rng).theta);
    z += c;
    z2 += c * c;
  }
  EXPECT_NEAR(z / n, 0.0, 0.02);
  EXPECT_NEAR(z2 / n, 1.0 / 3.0, 0.01);
}
