// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.
// Usage: acceptance [criterion numbers...]   (all eight when none are given)
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "qaeqec/config.hpp"
#include "qaeqec/experiments.hpp"

using namespace qaeqec;

namespace {

struct Check {
  bool pass = true;
  __attribute__((format(printf, 3, 4))) void expect(bool ok, const char* fmt, ...) {
    std::printf(ok ? "    ok    " : "    MISS  ");
    va_list args;
    va_start(args, fmt);
    std::vprintf(fmt, args);
    va_end(args);
    std::printf("\n");
    std::fflush(stdout);
    pass = pass && ok;
  }
};

double class_mean(const ValidationReport& r, const std::string& name) {
  for (const auto& c : r.classes)
    if (c.name == name) return c.count ? c.mean : std::numeric_limits<double>::quiet_NaN();
  return std::numeric_limits<double>::quiet_NaN();
}

/// Mean fidelity of a network output when a fixed Pauli pattern hits encoded states:
/// the six cardinal states plus Bloch-uniform ones.
double pattern_fidelity(const Model& m, const StabilizerCode& code, const PauliString& e, Rng& rng, int random_states = 50) {
  auto states = cardinal_logical_states(code);
  for (int i = 0; i < random_states; ++i) states.push_back(logical_state(code, sample_bloch_uniform(rng)));
  double acc = 0.0;
  for (const auto& psi : states) {
    const PureState in(code.num_qubits(), e.apply(psi.amplitudes()));
    acc += fidelity(forward(m, DensityMatrix::from_pure(in)), psi);
  }
  return acc / static_cast<double>(states.size());
}

std::string pattern(int n, std::initializer_list<std::pair<int, char>> hits) {
  std::string s(static_cast<std::size_t>(n), 'I');
  for (auto [q, c] : hits) s[static_cast<std::size_t>(q)] = c;
  return s;
}

// ---------------------------------------------------------------------------

std::map<double, TrainResult> fig3_models;

bool criterion1() {
  Check c;
  const auto code = three_qubit_code();
  for (double p : {0.05, 0.1, 0.2, 0.3}) {
    auto cfg = preset("fig3");
    cfg.noise.p = p;
    const auto r = train_qae(code, cfg.noise, cfg.training, cfg.batch_states, cfg.self_inverse, cfg.auto_threshold);
    Rng rng(derive_seed(cfg.seed, 0xA1));
    const auto rep = validate_qae(r.model, code, cfg.noise, 10000, rng);
    const double p_l = 3 * p * p * (1 - p) + p * p * p;
    const double expect = 1 - 2.0 / 3.0 * p_l;
    const double dev = std::abs(rep.mean_fidelity - expect);
    c.expect(dev <= 3 * rep.std_error, "p=%.2f mean %.6f expected %.6f |dev| %.2e <= 3se %.2e (cost %.5f, %d attempt(s))", p,
             rep.mean_fidelity, expect, dev, 3 * rep.std_error, r.final_cost, r.attempts);
    const double single = class_mean(rep, "single X");
    c.expect(single >= 0.9999, "p=%.2f single X class %.6f >= 0.9999", p, single);
    fig3_models.emplace(p, r);
  }
  return c.pass;
}

bool criterion2() {
  Check c;
  if (!fig3_models.count(0.1)) {
    auto cfg = preset("fig3");
    fig3_models.emplace(0.1, train_qae(three_qubit_code(), cfg.noise, cfg.training, cfg.batch_states, cfg.self_inverse, cfg.auto_threshold));
  }
  const auto& r = fig3_models.at(0.1);
  const auto d = channel_distance(chi_matrix(model_channel(r.model), 3, 3), reference_recovery_chi());
  c.expect(d.max_abs < 1e-3, "chi max-abs distance %.3e < 1e-3 (Choi fidelity %.8f, %d attempt(s))", d.max_abs, d.choi_fidelity,
           r.attempts);
  return c.pass;
}

bool criterion3() {
  Check c;
  const auto code = five_qubit_code();
  Rng rng(0x5C);
  {
    const auto cfg = preset("fig5a");
    const auto r = train_qae(code, cfg.noise, cfg.training, cfg.batch_states, cfg.self_inverse, cfg.auto_threshold);
    std::printf("    depolarizing training: cost %.5f, %d attempt(s), success %d\n", r.final_cost, r.attempts, r.success);
    double worst = 1.0;
    std::string worst_name;
    for (int q = 0; q < 5; ++q)
      for (char p : {'X', 'Y', 'Z'}) {
        const auto s = pattern(5, {{q, p}});
        const double f = pattern_fidelity(r.model, code, PauliString(s), rng);
        if (worst_name.empty() || f < worst) worst = f, worst_name = s;
      }
    c.expect(worst >= 0.999, "all 15 single Paulis corrected: worst %s %.6f >= 0.999", worst_name.c_str(), worst);
    Rng vr(derive_seed(cfg.seed, 0xA3));
    const auto rep = validate_qae(r.model, code, cfg.noise, 10000, vr);
    c.expect(class_mean(rep, "single Pauli") >= 0.999, "validation single Pauli class %.6f >= 0.999", class_mean(rep, "single Pauli"));
  }
  {
    const auto cfg = preset("fig5b");
    const auto r = train_qae(code, cfg.noise, cfg.training, cfg.batch_states, cfg.self_inverse, cfg.auto_threshold);
    std::printf("    bit-flip training: cost %.5f, %d attempt(s), success %d\n", r.final_cost, r.attempts, r.success);
    double worst1 = 1.0, worst2 = 1.0;
    for (int a = 0; a < 5; ++a) {
      worst1 = std::min(worst1, pattern_fidelity(r.model, code, PauliString(pattern(5, {{a, 'X'}})), rng));
      for (int b = a + 1; b < 5; ++b)
        worst2 = std::min(worst2, pattern_fidelity(r.model, code, PauliString(pattern(5, {{a, 'X'}, {b, 'X'}})), rng));
    }
    c.expect(worst1 >= 0.999, "all 5 single X corrected: worst %.6f >= 0.999", worst1);
    c.expect(worst2 >= 0.999, "all 10 double X corrected: worst %.6f >= 0.999", worst2);
  }
  return c.pass;
}

bool criterion4() {
  Check c;
  const auto cfg = preset("fig6");
  const double p = cfg.noise.p;
  const auto pts = correlated_noise_study(p, {1, 2, 8, 16}, cfg.training, 2000, cfg.batch_states);
  for (const auto& pt : pts) {
    const std::string want = pt.eta < critical_eta(p) ? "standard" : "alternative";
    c.expect(pt.strategy == want, "eta=%-4g %s (d_std %.3e, d_alt %.3e, cost %.5f) expected %s", pt.eta, pt.strategy.c_str(),
             pt.distance_standard, pt.distance_alternative, pt.training.final_cost, want.c_str());
  }
  const double eta_c = critical_eta(p);
  const auto at = analytic_strategy_fidelity(p, eta_c);
  c.expect(std::abs(eta_c - 4.0) < 1e-12, "critical eta %.15g == 4", eta_c);
  c.expect(std::abs(at.standard - at.alternative) < 1e-12, "curves equal at eta_c: %.15f vs %.15f", at.standard, at.alternative);
  const auto below = analytic_strategy_fidelity(p, 0.99 * eta_c), above = analytic_strategy_fidelity(p, 1.01 * eta_c);
  c.expect(below.standard > below.alternative && above.alternative > above.standard, "curves swap order across eta_c");
  return c.pass;
}

/// Mean fidelity on a double loss: one lost qubit is replaced by I/2 and the state goes to the member
/// for the other loss; the better of the two choices counts.
double double_loss_fidelity(const Model& coll, const StabilizerCode& code, int a, int b, Rng& rng) {
  const int n = code.num_qubits();
  auto states = cardinal_logical_states(code);
  for (int i = 0; i < 50; ++i) states.push_back(logical_state(code, sample_bloch_uniform(rng)));
  double best = 0.0;
  for (auto [keep_lost, mixed] : {std::pair{a, b}, std::pair{b, a}}) {
    const std::vector<int> lost{keep_lost}, mix{mixed};
    const int mem = coll.route(lost);
    double acc = 0.0;
    for (const auto& psi : states) {
      const ComplexMatrix x = detail::mix_towards_identity(DensityMatrix::from_pure(psi).matrix(), n, mix, 1.0);
      const auto in = erase(DensityMatrix(n, x), lost).state;
      acc += fidelity(forward(coll, in, {}, mem), psi);
    }
    best = std::max(best, acc / static_cast<double>(states.size()));
  }
  return best;
}

bool criterion5() {
  Check c;
  {
    const auto code = four_qubit_erasure_code();
    auto cfg = preset("fig8");
    const ErasureSetup s{1, 0.2, 0.0, NoiseKind::Depolarizing, 50};
    const auto r = erasure_collection(code, s, cfg.training, 10000);
    c.expect(r.success, "x-1-4 training succeeded");
    c.expect(class_mean(r.report, "no loss") >= 0.999, "x-1-4 no loss %.6f >= 0.999", class_mean(r.report, "no loss"));
    c.expect(class_mean(r.report, "one erasure") >= 0.999, "x-1-4 one erasure %.6f >= 0.999", class_mean(r.report, "one erasure"));
    Rng rng(0xD0);
    double best = 0.0, sum = 0.0;
    int count = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        const double f = double_loss_fidelity(r.model, code, a, b, rng);
        best = std::max(best, f);
        sum += f;
        ++count;
      }
    c.expect(best < 0.999, "x-1-4 fails on every double loss: best pattern %.6f, mean %.6f < 0.999", best, sum / count);
  }
  {
    const auto code = five_qubit_code();
    const auto cfg = preset("fig8");
    const auto r = erasure_collection(code, cfg.erasure, cfg.training, 10000);
    int attempts = 0;
    for (const auto& t : r.training) attempts += t.attempts;
    c.expect(r.success, "x-1-5 training succeeded (%d attempts over %zu members)", attempts, r.training.size());
    for (const char* cls : {"no loss, no Pauli", "no loss, single Pauli", "one erasure, no Pauli", "two erasures, no Pauli"})
      c.expect(class_mean(r.report, cls) >= 0.99, "x-1-5 %-24s %.6f >= 0.99", cls, class_mean(r.report, cls));
  }
  return c.pass;
}

bool criterion6() {
  Check c;
  const auto cfg = preset("appendixD");
  const auto r = encoding_discovery(cfg.discovery, cfg.training);
  c.expect(r.training.success && r.training.attempts <= cfg.training.max_restarts + 1, "finder trained in %d attempt(s), cost %.5f",
           r.training.attempts, r.training.final_cost);
  for (std::size_t i = 0; i < r.report.fidelity.size(); ++i)
    c.expect(r.report.fidelity[i] >= cfg.discovery.min_fidelity, "%-8s fidelity %.6f >= %.2f", r.report.labels[i].c_str(),
             r.report.fidelity[i], cfg.discovery.min_fidelity);
  c.expect(r.report.dfs_deviation < cfg.discovery.max_dfs_deviation, "DFS deviation %.3e < %.0e", r.report.dfs_deviation,
           cfg.discovery.max_dfs_deviation);
  for (std::size_t q = 0; q < r.report.marginal.size(); ++q)
    c.expect(r.report.marginal[q] >= cfg.discovery.min_marginal, "qubit %zu marginal fidelity to I/2 %.6f >= %.2f", q,
             r.report.marginal[q], cfg.discovery.min_marginal);
  return c.pass;
}

bool criterion7() {
  Check c;
  const std::size_t n = 100000;
  std::uint64_t stream = 0;
  for (double p_i : {0.1, 0.25, 0.5}) {
    Rng rng(derive_seed(0x7E, stream++));
    const auto pt = memory_point(p_i, 0.0, nullptr, n, rng);
    const double s = analytic_p_single(p_i), u = analytic_p_uncorr(p_i);
    c.expect(std::abs(pt.single.mean - s) <= 3 * pt.single.std_error, "p_i=%.2f single %.6f vs %.6f (3se %.1e)", p_i, pt.single.mean, s,
             3 * pt.single.std_error);
    c.expect(std::abs(pt.uncorr.mean - u) <= 3 * pt.uncorr.std_error, "p_i=%.2f uncorrected %.6f vs %.6f (3se %.1e)", p_i, pt.uncorr.mean,
             u, 3 * pt.uncorr.std_error);
    for (double p_n : {0.005, 0.01, 0.02}) {
      const auto q = memory_point(p_i, p_n, nullptr, n, rng);
      const double a = analytic_p_corr(p_i, p_n);
      const double tol = std::max(3 * q.corr.std_error, 2 * p_n * p_n);
      c.expect(std::abs(q.corr.mean - a) <= tol, "p_i=%.2f p_n=%.3f corrected %.6f vs first order %.6f |dev| %.2e <= %.2e", p_i, p_n,
               q.corr.mean, a, std::abs(q.corr.mean - a), tol);
    }
  }
  const double step = 0.0025, p_n_max = 0.05;
  const auto p_i_grid = linear_grid(0.02, 0.3, 0.02);
  const auto d = phase_diagram(p_i_grid, linear_grid(0.0, p_n_max, step), 10000, 0x7F);
  for (std::size_t i = 0; i < p_i_grid.size(); ++i) {
    for (bool versus_single : {true, false}) {
      const double crit = versus_single ? critical_pn_single(p_i_grid[i]) : critical_pn_logical(p_i_grid[i]);
      const auto b = empirical_boundary(d, i, versus_single, p_n_max);
      const bool ok = crit > p_n_max ? !(b.hi < crit - step) : (crit >= b.lo - step && crit <= b.hi + step);
      c.expect(ok, "p_i=%.2f boundary vs %-7s analytic %.5f empirical (%.4f, %.4f]", p_i_grid[i], versus_single ? "single" : "logical", crit,
               b.lo, b.hi);
    }
  }
  return c.pass;
}

// ---------------------------------------------------------------------------
// Property suites

std::vector<TrainingPair> random_pairs(const Model& m, Rng& rng) {
  std::vector<TrainingPair> v;
  for (std::size_t mem = 0; mem < m.members.size(); ++mem)
    for (int k = 0; k < 2; ++k) {
      const auto& pipe = m.members[mem];
      const int nin = pipeline_in_width(pipe), nout = pipeline_out_width(pipe);
      const ComplexMatrix a = haar_random_unitary(nin, rng).matrix();
      const ComplexMatrix col = a.leftCols(1);
      ComplexMatrix rho = 0.7 * col * col.adjoint() + 0.3 * ComplexMatrix::Identity(dim_of(nin), dim_of(nin)) / double(dim_of(nin));
      const ComplexVector target = haar_random_unitary(nout, rng).matrix().col(0);
      v.push_back({DensityMatrix(nin, rho), PureState(nout, target), static_cast<int>(mem)});
    }
  return v;
}

double gradient_gap(const Model& m, double p_n, Rng& rng) {
  const auto pairs = random_pairs(m, rng);
  const InternalNoise noise{p_n};
  const auto g = commutator_sums(m, pairs, noise);
  std::vector<ComplexMatrix> k;
  for (const auto& u : m.params) {
    const ComplexMatrix h = haar_random_unitary(qubits_of(u.rows()), rng).matrix();
    k.push_back(h + h.adjoint());
  }
  const double analytic = directional_derivative(g, k, pairs.size());
  const double e = 1e-5;
  const double numeric = (cost(perturb(m, k, e), pairs, noise) - cost(perturb(m, k, -e), pairs, noise)) / (2 * e);
  return std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-8);
}

/// Smallest Choi eigenvalue and worst trace defect of a channel.
std::pair<double, double> cptp_defects(const ChannelFn& f, int n_in, int n_out) {
  const ComplexMatrix choi = choi_matrix(f, n_in, n_out);
  const auto din = dim_of(n_in);
  double trace_defect = 0.0;
  for (Eigen::Index a = 0; a < din; ++a)
    for (Eigen::Index b = 0; b < din; ++b) {
      ComplexMatrix e = ComplexMatrix::Zero(din, din);
      e(a, b) = 1.0;
      trace_defect = std::max(trace_defect, std::abs(f(e).trace() - cplx(a == b ? 1.0 : 0.0)));
    }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ComplexMatrix(0.5 * (choi + choi.adjoint())));
  return {es.eigenvalues().minCoeff(), trace_defect};
}

bool criterion8() {
  Check c;
  Rng rng(0x8A);
  struct Arch {
    const char* name;
    Model model;
    double p_n;
  };
  std::vector<Arch> archs;
  archs.push_back({"3-1-3 self-inverse", make_model({{3, 1, 3}, true}, rng), 0.0});
  archs.push_back({"3-1-3 standard", make_model({{3, 1, 3}, false}, rng), 0.0});
  archs.push_back({"3-1-3 noisy", make_model({{3, 1, 3}, true}, rng), 0.02});
  archs.push_back({"5-1-5 self-inverse", make_model({{5, 1, 5}, true}, rng), 0.0});
  archs.push_back({"x-1-4 collection", make_erasure_collection(4, 1, rng), 0.0});
  archs.push_back({"x-1-5 collection", make_erasure_collection(5, 2, rng), 0.0});
  archs.push_back({"1-4-1 finder", make_encoding_finder(4, 1.0, rng), 0.0});
  for (const auto& a : archs) {
    const double gap = gradient_gap(a.model, a.p_n, rng);
    c.expect(gap < 1e-4, "gradient vs finite difference, %-20s relative gap %.2e", a.name, gap);
  }

  std::vector<std::pair<std::string, std::tuple<ChannelFn, int, int>>> channels;
  const auto q3 = all_qubits(3);
  const std::vector<int> q02{0, 2}, lost{1};
  const auto dist = correlated_flip_distribution(0.2, 4.0);
  const auto quad = make_dephasing_quadrature(1.0);
  channels.push_back({"bit flip", {[&](const ComplexMatrix& x) { return bit_flip(x, 3, 0.2, q3); }, 3, 3}});
  channels.push_back({"depolarizing", {[&](const ComplexMatrix& x) { return depolarizing_single(x, 3, 0.3, q3); }, 3, 3}});
  channels.push_back({"multi depolarizing", {[&](const ComplexMatrix& x) { return depolarizing_multi(x, 3, 0.4, q02); }, 3, 3}});
  channels.push_back({"correlated flips", {[&](const ComplexMatrix& x) { return correlated_bit_flip(DensityMatrix(3, x), dist).matrix(); }, 3, 3}});
  channels.push_back({"collective dephasing", {[&](const ComplexMatrix& x) { return collective_dephasing(DensityMatrix(3, x), quad).matrix(); }, 3, 3}});
  channels.push_back({"erasure", {[&](const ComplexMatrix& x) { return erase(DensityMatrix(3, x), lost).state.matrix(); }, 3, 2}});
  channels.push_back({"3qc recovery", {[&](const ComplexMatrix& x) { return perfect_recovery(three_qubit_code(), x); }, 3, 3}});
  const Model hand = hand_built_qae();
  channels.push_back({"noisy hand-built QAE", {model_channel(hand, 0, InternalNoise{0.05}), 3, 3}});
  channels.push_back({"random 3-1-3 QAE", {model_channel(archs[0].model), 3, 3}});
  channels.push_back({"collection member", {model_channel(archs[4].model, 2), 3, 4}});
  for (const auto& [name, ch] : channels) {
    const auto [min_eig, tr] = cptp_defects(std::get<0>(ch), std::get<1>(ch), std::get<2>(ch));
    c.expect(min_eig > -1e-10 && tr < 1e-10, "CPTP %-22s min Choi eigenvalue %.1e, trace defect %.1e", name.c_str(), min_eig, tr);
  }

  for (const auto& [name, ch] : channels) {
    const auto& [f, nin, nout] = ch;
    const auto pm = chi_matrix(f, nin, nout);
    const ComplexMatrix a = haar_random_unitary(nin, rng).matrix();
    const ComplexMatrix rho = a * ComplexMatrix(Eigen::VectorXd::LinSpaced(dim_of(nin), 1.0, 2.0).cast<cplx>().asDiagonal()) * a.adjoint() /
                              (1.5 * static_cast<double>(dim_of(nin)));
    const double err = max_abs(apply_chi(pm, rho) - f(rho));
    c.expect(err < 1e-8, "chi round trip %-22s %.1e", name.c_str(), err);
  }

  TrainingConfig cfg = preset("fig3").training;
  cfg.epochs = 20;
  cfg.max_restarts = 1;
  const NoiseSpec noise{NoiseKind::BitFlip, 0.1, 1.0};
  const auto t1 = train_qae(three_qubit_code(), noise, cfg, 3), t2 = train_qae(three_qubit_code(), noise, cfg, 3);
  c.expect(t1.model.params == t2.model.params && t1.history == t2.history, "training reruns are bit-identical");
  Rng v1(5), v2(5);
  const auto r1 = validate_qae(t1.model, three_qubit_code(), noise, 2000, v1);
  const auto r2 = validate_qae(t2.model, three_qubit_code(), noise, 2000, v2);
  c.expect(r1.mean_fidelity == r2.mean_fidelity && r1.std_error == r2.std_error, "validation reruns are bit-identical");
  const auto d1 = phase_diagram({0.1}, {0.0, 0.01}, 1000, 9), d2 = phase_diagram({0.1}, {0.0, 0.01}, 1000, 9);
  c.expect(d1.at(0, 1).corr.mean == d2.at(0, 1).corr.mean, "memory sweeps are bit-identical");
  return c.pass;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<bool()>>> criteria{
      {"3-qubit code reproduction", criterion1},   {"tomography convergence", criterion2},
      {"5-qubit code", criterion3},                {"correlated-noise adaptation", criterion4},
      {"erasure collections", criterion5},         {"encoding discovery", criterion6},
      {"noisy memory analytics", criterion7},      {"property suites", criterion8},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  std::vector<std::string> summary;
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    std::printf("criterion %d: %s\n", id, criteria[i].first);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[i].second();
    } catch (const std::exception& e) {
      std::printf("    error: %s\n", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char line[160];
    std::snprintf(line, sizeof line, "%s criterion %d: %s (%.0f s)", ok ? "PASS" : "FAIL", id, criteria[i].first, secs);
    std::printf("%s\n\n", line);
    std::fflush(stdout);
    summary.push_back(line);
    all = all && ok;
  }
  std::printf("summary\n");
  for (const auto& s : summary) std::printf("%s\n", s.c_str());
  return all ? 0 : 1;
}
