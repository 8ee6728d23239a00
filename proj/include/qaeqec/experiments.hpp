#pragma once

// Experiment drivers: validation of trained networks with per-error-class
// bookkeeping, the correlated-noise study, erasure collections, encoding
// discovery and the noisy-memory comparison with its closed forms.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qaeqec/codes.hpp"
#include "qaeqec/network.hpp"
#include "qaeqec/parallel.hpp"
#include "qaeqec/tomography.hpp"
#include "qaeqec/training.hpp"

namespace qaeqec {

// ---------------------------------------------------------------------------
// Noise specifications

enum class NoiseKind { None, BitFlip, Depolarizing, Correlated };

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::BitFlip: return "bitflip";
    case NoiseKind::Depolarizing: return "depolarizing";
    default: return "correlated";
  }
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::None;
  if (s == "bitflip") return NoiseKind::BitFlip;
  if (s == "depolarizing") return NoiseKind::Depolarizing;
  if (s == "correlated") return NoiseKind::Correlated;
  throw ConfigError("unknown noise kind '" + s + "' (expected none, bitflip, depolarizing or correlated)");
}

/// Independent single-qubit noise on every physical qubit, or correlated flips on three qubits.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::BitFlip;
  double p = 0.1;
  double eta = 1.0;  ///< correlation strength, correlated kind only

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise probability must lie in [0,1]");
    if (kind == NoiseKind::Correlated) {
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("correlated noise needs 0 < p < 1");
      if (!(eta > 0.0)) throw ConfigError("correlation strength must be positive");
    }
  }

  DensityMatrix apply(const DensityMatrix& rho) const {
    const auto q = all_qubits(rho.num_qubits());
    switch (kind) {
      case NoiseKind::None: return rho;
      case NoiseKind::BitFlip: return bit_flip(rho, p, q);
      case NoiseKind::Depolarizing: return depolarizing_single(rho, p, q);
      default: return correlated_bit_flip(rho, correlated_flip_distribution(p, eta));
    }
  }

  /// Explicit error pattern on n qubits.
  PauliString sample(int n, Rng& rng) const {
    if (kind == NoiseKind::Correlated) {
      if (n != 3) throw ArgumentError("correlated noise is defined on three qubits");
      return sample_correlated_flips(correlated_flip_distribution(p, eta), rng);
    }
    const auto q = all_qubits(n);
    const auto k = kind == NoiseKind::BitFlip ? PauliNoiseKind::BitFlip
                   : kind == NoiseKind::Depolarizing ? PauliNoiseKind::Depolarizing
                                                      : PauliNoiseKind::None;
    return sample_pauli_errors(k, p, n, q, rng);
  }
};

// ---------------------------------------------------------------------------
// Validation reports

namespace detail {
inline std::string count_word(int k) {
  static const char* words[] = {"no", "single", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve"};
  return k >= 0 && k <= 12 ? words[k] : std::to_string(k);
}
}  // namespace detail

/// Class label of an error pattern: "no error", "single X", "two X", ... or "single Pauli", ...
inline std::string pauli_class(int weight, NoiseKind kind) {
  if (weight == 0) return "no error";
  return detail::count_word(weight) + (kind == NoiseKind::Depolarizing ? " Pauli" : " X");
}

inline std::string loss_class(int losses) {
  if (losses == 0) return "no loss";
  if (losses == 1) return "one erasure";
  return detail::count_word(losses) + " erasures";
}

struct ClassStat {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct ValidationReport {
  NoiseSpec noise;
  std::size_t num_samples = 0;
  double mean_fidelity = 0.0;
  double std_error = 0.0;
  std::vector<ClassStat> classes;  ///< canonical order; classes may be empty
  std::size_t num_unrouted = 0;    ///< samples with no matching member, excluded from the statistics

  const ClassStat* find(const std::string& name) const {
    for (const auto& c : classes)
      if (c.name == name) return &c;
    return nullptr;
  }

  /// Mean of a non-empty class; throws otherwise.
  double class_mean(const std::string& name) const {
    const auto* c = find(name);
    if (!c || c->count == 0) throw ArgumentError("validation class '" + name + "' has no samples");
    return c->mean;
  }
};

struct Sample {
  double fidelity = 0.0;
  std::string cls;
  bool routed = true;
};

struct MeanStat {
  double mean = 0.0;
  double std_error = 0.0;
};

inline MeanStat mean_stat(const std::vector<double>& x) {
  MeanStat s;
  if (x.empty()) return s;
  double sum = 0.0;
  for (double v : x) sum += v;
  s.mean = sum / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  }
  return s;
}

/// Draws n samples on independent streams (seed, i) and aggregates them in index order.
template <class Draw>
ValidationReport aggregate_samples(std::size_t n, std::uint64_t seed, std::vector<std::string> order, Draw&& draw) {
  std::vector<Sample> samples(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    samples[i] = draw(rng);
  });
  ValidationReport r;
  std::vector<double> all;
  std::vector<std::vector<double>> by_class(order.size());
  for (const auto& s : samples) {
    if (!s.routed) {
      ++r.num_unrouted;
      continue;
    }
    all.push_back(s.fidelity);
    auto it = std::find(order.begin(), order.end(), s.cls);
    if (it == order.end()) {
      order.push_back(s.cls);
      by_class.emplace_back();
      it = order.end() - 1;
    }
    by_class[static_cast<std::size_t>(it - order.begin())].push_back(s.fidelity);
  }
  r.num_samples = all.size();
  const auto st = mean_stat(all);
  r.mean_fidelity = st.mean;
  r.std_error = st.std_error;
  for (std::size_t c = 0; c < order.size(); ++c) {
    const auto cs = mean_stat(by_class[c]);
    r.classes.push_back({order[c], by_class[c].size(), cs.mean, cs.std_error});
  }
  return r;
}

inline std::vector<std::string> pauli_class_order(int n, NoiseKind kind) {
  std::vector<std::string> order;
  for (int w = 0; w <= n; ++w) order.push_back(pauli_class(w, kind));
  return order;
}

/// Bloch-uniform logical states hit by sampled error patterns, passed through member 0 of the network,
/// compared with the noise-free state.
inline ValidationReport validate_qae(const Model& m, const StabilizerCode& code, const NoiseSpec& noise, std::size_t n_samples,
                                     Rng& rng, const InternalNoise& internal = {}) {
  noise.validate();
  const int n = code.num_qubits();
  if (m.members.empty() || pipeline_in_width(m.members[0]) != n || pipeline_out_width(m.members[0]) != n)
    throw ConfigError("network " + m.arch.label() + " does not match code " + code.name());
  const std::uint64_t seed = rng();
  auto r = aggregate_samples(n_samples, seed, pauli_class_order(n, noise.kind), [&](Rng& g) {
    const auto psi = logical_state(code, sample_bloch_uniform(g));
    const auto e = noise.sample(n, g);
    const PureState in(n, e.apply(psi.amplitudes()));
    const auto out = forward(m, DensityMatrix::from_pure(in), internal);
    return Sample{fidelity(out, psi), pauli_class(e.weight(), noise.kind), true};
  });
  r.noise = noise;
  return r;
}

// ---------------------------------------------------------------------------
// Training data

/// The first `count` cardinal logical states (3: |0>,|1>,|+>; 6: all Z, X and Y eigenstates).
inline std::vector<PureState> training_states(const StabilizerCode& code, int count) {
  if (count != 3 && count != 6) throw ConfigError("training batch must hold 3 or 6 cardinal states");
  auto s = cardinal_logical_states(code);
  s.resize(static_cast<std::size_t>(count));
  return s;
}

/// Noise channel applied to each clean state; the clean state is the target.
inline std::vector<TrainingPair> noisy_pairs(const std::vector<PureState>& states, const NoiseSpec& noise) {
  noise.validate();
  std::vector<TrainingPair> pairs;
  for (const auto& s : states) pairs.push_back({noise.apply(DensityMatrix::from_pure(s)), s, 0});
  return pairs;
}

/// Mean infidelity after the table recovery, minimized over the given tables.
inline double perfect_recovery_cost(const std::vector<StabilizerCode>& tables, const std::vector<TrainingPair>& pairs) {
  double best = 1.0;
  for (const auto& c : tables) {
    double f = 0.0;
    for (const auto& p : pairs) f += fidelity(perfect_recovery(c, p.input), p.target);
    best = std::min(best, 1.0 - f / static_cast<double>(pairs.size()));
  }
  return best;
}

/// Recovery tables a trained network may reasonably learn for this code.
inline std::vector<StabilizerCode> candidate_tables(const StabilizerCode& code) {
  std::vector<StabilizerCode> t{code};
  if (code.name() == "3qc") t.push_back(three_qubit_code_alternative());
  return t;
}

/// Restart threshold: best table-recovery cost on the training pairs plus a margin.
inline double auto_threshold(const StabilizerCode& code, const std::vector<TrainingPair>& pairs, double margin = 0.01) {
  return perfect_recovery_cost(candidate_tables(code), pairs) + margin;
}

/// Trains an n-1-n network on noisy cardinal states of a code.
inline TrainResult train_qae(const StabilizerCode& code, const NoiseSpec& noise, TrainingConfig cfg, int num_states,
                             bool self_inverse = true, bool use_auto_threshold = true) {
  const int n = code.num_qubits();
  const auto pairs = noisy_pairs(training_states(code, num_states), noise);
  if (use_auto_threshold) cfg.restart_threshold = auto_threshold(code, pairs);
  Rng rng(cfg.seed);
  const Model init = make_model({{n, 1, n}, self_inverse, MirrorSide::Front}, rng);
  return train(init, pairs, cfg);
}

// ---------------------------------------------------------------------------
// Correlated noise

struct StrategyCurves {
  double standard = 1.0;     ///< mean fidelity of the single-flip table
  double alternative = 1.0;  ///< mean fidelity of the complementary double-flip table
};

/// Bloch-averaged fidelity 1 - (2/3) p_L for both tables: p_L = 3 q2 + q3 (standard), 3 q1 + q3 (alternative).
inline StrategyCurves analytic_strategy_fidelity(double p, double eta) {
  const auto d = correlated_flip_distribution(p, eta);
  return {1.0 - 2.0 / 3.0 * (3 * d.q2 + d.q3), 1.0 - 2.0 / 3.0 * (3 * d.q1 + d.q3)};
}

/// Correlation strength where both tables perform equally.
inline double critical_eta(double p) { return (1.0 - p) / p; }

struct CorrelatedPoint {
  double eta = 1.0;
  TrainResult training;
  ValidationReport report;
  double distance_standard = 0.0;
  double distance_alternative = 0.0;
  std::string strategy;  ///< "standard" or "alternative", whichever chi is closer
  StrategyCurves analytic;
};

/// Labels a 3->3 channel by its nearest reference recovery.
inline std::string classify_strategy(const ProcessMatrix& chi, double* d_std = nullptr, double* d_alt = nullptr) {
  const double a = channel_distance(chi, code_recovery_chi(three_qubit_code())).max_abs;
  const double b = channel_distance(chi, code_recovery_chi(three_qubit_code_alternative())).max_abs;
  if (d_std) *d_std = a;
  if (d_alt) *d_alt = b;
  return a <= b ? "standard" : "alternative";
}

inline std::vector<CorrelatedPoint> correlated_noise_study(double p, const std::vector<double>& eta_grid, const TrainingConfig& cfg,
                                                           std::size_t n_samples, int num_states = 6) {
  const auto code = three_qubit_code();
  std::vector<CorrelatedPoint> out;
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    CorrelatedPoint pt;
    pt.eta = eta_grid[i];
    const NoiseSpec noise{NoiseKind::Correlated, p, pt.eta};
    TrainingConfig c = cfg;
    c.seed = derive_seed(cfg.seed, i);
    pt.training = train_qae(code, noise, c, num_states);
    Rng rng(derive_seed(c.seed, 0xC0DE));
    pt.report = validate_qae(pt.training.model, code, noise, n_samples, rng);
    pt.strategy = classify_strategy(chi_matrix(model_channel(pt.training.model), 3, 3), &pt.distance_standard, &pt.distance_alternative);
    pt.analytic = analytic_strategy_fidelity(p, pt.eta);
    out.push_back(std::move(pt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Erasure collections

struct ErasureSetup {
  int max_losses = 1;
  double p_loss = 0.2;
  double p_comp = 0.0;
  NoiseKind comp_kind = NoiseKind::Depolarizing;
  int copies = 50;

  void validate(int n) const {
    if (max_losses < 0 || max_losses >= n) throw ConfigError("max_losses must lie in [0, n)");
    if (!(p_loss >= 0.0 && p_loss <= 1.0) || !(p_comp >= 0.0 && p_comp <= 1.0)) throw ConfigError("probabilities must lie in [0,1]");
    if (copies < 1) throw ConfigError("copies must be at least 1");
    if (comp_kind == NoiseKind::Correlated) throw ConfigError("erasure runs use independent computational noise");
  }
};

/// copies x six cardinal states; each copy gets a sampled loss pattern and the computational noise channel.
/// Patterns beyond max_losses are dropped; members left without some cardinal state get one copy of it.
inline std::vector<TrainingPair> erasure_pairs(const Model& coll, const StabilizerCode& code, const ErasureSetup& s, Rng& rng) {
  const int n = code.num_qubits();
  const auto states = cardinal_logical_states(code);
  const NoiseSpec comp{s.comp_kind, s.p_comp, 1.0};
  auto make = [&](const PureState& psi, const std::vector<int>& lost) {
    const auto noisy = comp.apply(DensityMatrix::from_pure(psi));
    return TrainingPair{erase(noisy, lost).state, psi, coll.route(lost)};
  };
  std::vector<TrainingPair> pairs;
  std::vector<std::vector<bool>> seen(coll.members.size(), std::vector<bool>(states.size(), false));
  for (int c = 0; c < s.copies; ++c)
    for (std::size_t k = 0; k < states.size(); ++k) {
      const auto lost = sample_losses(n, s.p_loss, rng);
      if (static_cast<int>(lost.size()) > s.max_losses) continue;
      pairs.push_back(make(states[k], lost));
      seen[static_cast<std::size_t>(pairs.back().member)][k] = true;
    }
  for (std::size_t mem = 0; mem < coll.members.size(); ++mem)
    for (std::size_t k = 0; k < states.size(); ++k)
      if (!seen[mem][k]) pairs.push_back(make(states[k], coll.routes[mem]));
  return pairs;
}

/// Every member on its own loss pattern without computational noise, averaged over the cardinal states.
inline std::vector<double> clean_erasure_fidelities(const Model& coll, const StabilizerCode& code) {
  std::vector<double> f;
  const auto states = cardinal_logical_states(code);
  for (std::size_t mem = 0; mem < coll.members.size(); ++mem) {
    double acc = 0.0;
    for (const auto& psi : states) {
      const auto in = erase(DensityMatrix::from_pure(psi), coll.routes[mem]).state;
      acc += fidelity(forward(coll, in, {}, static_cast<int>(mem)), psi);
    }
    f.push_back(acc / static_cast<double>(states.size()));
  }
  return f;
}

inline ValidationReport validate_erasure_collection(const Model& coll, const StabilizerCode& code, const ErasureSetup& s,
                                                    std::size_t n_samples, Rng& rng) {
  const int n = code.num_qubits();
  const bool comp_on = s.comp_kind != NoiseKind::None && s.p_comp > 0.0;
  const NoiseSpec comp{s.comp_kind, s.p_comp, 1.0};
  std::vector<std::string> order;
  for (int l = 0; l <= s.max_losses; ++l) {
    if (!comp_on) {
      order.push_back(loss_class(l));
      continue;
    }
    for (int w = 0; w <= n - l; ++w)
      order.push_back(loss_class(l) + ", " + (w == 0 ? std::string("no Pauli") : detail::count_word(w) + " Pauli"));
  }
  const std::uint64_t seed = rng();
  auto r = aggregate_samples(n_samples, seed, order, [&](Rng& g) {
    const auto psi = logical_state(code, sample_bloch_uniform(g));
    const auto lost = sample_losses(n, s.p_loss, g);
    const auto e = comp.sample(n, g);
    const int member = coll.route(lost);
    if (member < 0) return Sample{0.0, "", false};
    int w = 0;
    for (int q = 0; q < n; ++q)
      if (e[q] != 'I' && std::find(lost.begin(), lost.end(), q) == lost.end()) ++w;
    const PureState hit(n, e.apply(psi.amplitudes()));
    const auto in = erase(DensityMatrix::from_pure(hit), lost).state;
    std::string cls = loss_class(static_cast<int>(lost.size()));
    if (comp_on) cls += ", " + (w == 0 ? std::string("no Pauli") : detail::count_word(w) + " Pauli");
    return Sample{fidelity(forward(coll, in, {}, member), psi), cls, true};
  });
  r.noise = comp;
  return r;
}

struct ErasureResult {
  Model model;
  std::vector<TrainResult> training;  ///< one per member; loss members are trained with the decoder frozen
  std::vector<double> clean_fidelity;
  ValidationReport report;
  bool success = false;
};

/// Loss-free member first, then each loss member on its own pairs against the frozen decoder. A loss
/// member restarts until it reproduces the cardinal states on its pattern (clean fidelity >= clean_target).
/// The loss members share no trainable slot, so separate runs keep one member's restarts from disturbing another.
inline ErasureResult erasure_collection(const StabilizerCode& code, const ErasureSetup& s, const TrainingConfig& cfg,
                                        std::size_t n_samples, double clean_target = 0.999) {
  const int n = code.num_qubits();
  s.validate(n);
  Rng rng(cfg.seed);
  Model coll = make_erasure_collection(n, s.max_losses, rng);
  const auto all = erasure_pairs(coll, code, s, rng);
  auto pairs_of = [&](std::size_t mem) {
    std::vector<TrainingPair> p;
    for (const auto& x : all)
      if (x.member == static_cast<int>(mem)) p.push_back(x);
    return p;
  };

  ErasureResult res;
  bool ok = true;
  for (std::size_t mem = 0; mem < coll.members.size(); ++mem) {
    const auto pairs = pairs_of(mem);
    if (pairs.empty()) {
      res.training.push_back({coll, {}, 1.0, 0, false});
      ok = false;
      continue;
    }
    std::vector<bool> mask(coll.params.size(), false);
    TrainingConfig c = cfg;
    AcceptFn accept;
    if (mem == 0) {
      mask[0] = true;
      c.restart_threshold = perfect_recovery_cost({code}, pairs) + 0.01;
    } else {
      mask[static_cast<std::size_t>(std::get<Transition>(coll.members[mem][0]).gates[0].slot)] = true;
      c.seed = derive_seed(cfg.seed, 0x100 + mem);
      c.restart_threshold = 1.0;
      accept = [&, mem](const Model& m, double) { return clean_erasure_fidelities(m, code)[mem] >= clean_target; };
    }
    res.training.push_back(train(coll, pairs, c, mask, accept));
    coll = res.training.back().model;
    ok = ok && res.training.back().success;
  }
  res.clean_fidelity = clean_erasure_fidelities(coll, code);
  Rng vrng(derive_seed(cfg.seed, 3));
  res.report = validate_erasure_collection(coll, code, s, n_samples, vrng);
  res.model = std::move(coll);
  res.success = ok;
  return res;
}

// ---------------------------------------------------------------------------
// Encoding discovery

struct DiscoverySetup {
  int n = 4;
  double sigma = 1.0;
  int nodes = 21;
  int copies = 50;
  std::size_t n_validation = 2000;
  std::size_t n_dfs = 100;
  std::size_t n_marginal = 2000;
  double min_fidelity = 0.99;
  double max_dfs_deviation = 1e-3;
  double min_marginal = 0.99;

  void validate() const {
    if (n < 2 || n > 6) throw ConfigError("encoding finder width must lie in [2, 6]");
    if (!(sigma >= 0.0)) throw ConfigError("dephasing sigma must be non-negative");
    if (nodes < 1 || nodes % 2 == 0) throw ConfigError("quadrature node count must be odd and positive");
    if (copies < 1) throw ConfigError("copies must be at least 1");
  }
};

struct DiscoveryReport {
  std::vector<std::string> labels;
  std::vector<double> fidelity;  ///< per member: no loss, then each single loss
  std::vector<double> fidelity_error;
  double dfs_deviation = 0.0;    ///< max over sampled logical states of |N(rho_L) - rho_L|_maxabs
  std::vector<double> marginal;  ///< per qubit: mean F(rho_i, I/2)

  bool passes(const DiscoverySetup& s) const {
    for (double f : fidelity)
      if (!(f >= s.min_fidelity)) return false;
    for (double f : marginal)
      if (!(f >= s.min_marginal)) return false;
    return dfs_deviation < s.max_dfs_deviation;
  }
};

/// Validation of a rearranged finder: encode, dephase, lose, correct, compare with the encoded state.
inline DiscoveryReport discovery_report(const Model& qae, const DiscoverySetup& s, std::uint64_t seed) {
  if (qae.kind != "qae-from-finder") throw ArgumentError("discovery_report expects a rearranged finder");
  const auto quad = make_dephasing_quadrature(s.sigma, s.nodes);
  const int n = s.n;
  auto logical = [&](Rng& g) {
    const auto psi = bloch_state(sample_bloch_uniform(g));
    return encode(qae, DensityMatrix::from_pure(psi));
  };
  DiscoveryReport r;
  r.labels = qae.labels;
  for (std::size_t mem = 0; mem < qae.members.size(); ++mem) {
    const auto rep = aggregate_samples(s.n_validation, derive_seed(seed, mem), {"all"}, [&](Rng& g) {
      const auto rho_l = logical(g);
      const auto in = erase(collective_dephasing(rho_l, quad), qae.routes[mem]).state;
      return Sample{fidelity(forward(qae, in, {}, static_cast<int>(mem)), rho_l), "all", true};
    });
    r.fidelity.push_back(rep.mean_fidelity);
    r.fidelity_error.push_back(rep.std_error);
  }
  Rng g(derive_seed(seed, 1000));
  for (std::size_t k = 0; k < s.n_dfs; ++k) {
    const auto rho_l = logical(g);
    r.dfs_deviation = std::max(r.dfs_deviation, max_abs(collective_dephasing(rho_l, quad).matrix() - rho_l.matrix()));
  }
  const auto mixed = DensityMatrix::maximally_mixed(1);
  for (int q = 0; q < n; ++q) {
    std::vector<int> others;
    for (int o = 0; o < n; ++o)
      if (o != q) others.push_back(o);
    const auto rep = aggregate_samples(s.n_marginal, derive_seed(seed, 2000 + static_cast<std::uint64_t>(q)), {"all"}, [&](Rng& gg) {
      return Sample{fidelity(partial_trace(logical(gg), others), mixed), "all", true};
    });
    r.marginal.push_back(rep.mean_fidelity);
  }
  return r;
}

/// copies x six single-qubit cardinal states, each routed to a uniformly drawn loss case.
inline std::vector<TrainingPair> finder_pairs(const Model& finder, int copies, Rng& rng) {
  const auto states = cardinal_states_single();
  std::uniform_int_distribution<int> pick(0, static_cast<int>(finder.members.size()) - 1);
  std::vector<TrainingPair> pairs;
  for (int c = 0; c < copies; ++c)
    for (const auto& s : states) pairs.push_back({DensityMatrix::from_pure(s), s, pick(rng)});
  return pairs;
}

struct DiscoveryResult {
  TrainResult training;
  Model qae;
  DiscoveryReport report;
  bool success = false;
};

/// Trains the 1-n-1 finder collection jointly, restarting until the rearranged QAE passes the
/// fidelity, DFS and marginal checks (on reduced sample counts), then reports at full size.
inline DiscoveryResult encoding_discovery(const DiscoverySetup& s, const TrainingConfig& cfg) {
  s.validate();
  Rng rng(cfg.seed);
  const Model finder = make_encoding_finder(s.n, s.sigma, rng, s.nodes);
  const auto pairs = finder_pairs(finder, s.copies, rng);
  DiscoverySetup quick = s;
  quick.n_validation = std::min<std::size_t>(s.n_validation, 200);
  quick.n_marginal = std::min<std::size_t>(s.n_marginal, 200);
  quick.n_dfs = std::min<std::size_t>(s.n_dfs, 20);
  const AcceptFn accept = [&](const Model& m, double) {
    return discovery_report(rearrange_to_qae(m), quick, derive_seed(cfg.seed, 7)).passes(quick);
  };
  DiscoveryResult res;
  res.training = train(finder, pairs, cfg, {}, accept);
  res.qae = rearrange_to_qae(res.training.model);
  res.report = discovery_report(res.qae, s, derive_seed(cfg.seed, 8));
  res.success = res.training.success && res.report.passes(s);
  return res;
}

// ---------------------------------------------------------------------------
// Noisy memory: closed forms

/// Bit-flip probability after two half-interval rounds.
inline double two_round_flip(double p_i) { return 2 * p_i * (1 - p_i); }

inline double analytic_p_single(double p_i) { return 1.0 - 4.0 / 3.0 * p_i * (1 - p_i); }

inline double analytic_p_uncorr(double p) {
  return 1 - 8 * p * p + 80.0 / 3 * std::pow(p, 3) - 40 * std::pow(p, 4) + 32 * std::pow(p, 5) - 32.0 / 3 * std::pow(p, 6);
}

/// First order in p_n.
inline double analytic_p_corr(double p, double p_n) {
  const double zeroth = 1 - 4 * p * p + 8.0 / 3 * std::pow(p, 3) + 12 * std::pow(p, 4) - 16 * std::pow(p, 5) + 16.0 / 3 * std::pow(p, 6);
  const double slope = 156.0 / 85 + 8.0 / 15 * p - 776.0 / 51 * p * p + 5312.0 / 765 * std::pow(p, 3) + 13408.0 / 255 * std::pow(p, 4) -
                       17152.0 / 255 * std::pow(p, 5) + 17152.0 / 765 * std::pow(p, 6);
  return zeroth - p_n * slope;
}

namespace detail {
inline double memory_denominator(double p) {
  return 351 + 102 * p - 2910 * p * p + 1328 * std::pow(p, 3) + 10056 * std::pow(p, 4) - 12864 * std::pow(p, 5) + 4288 * std::pow(p, 6);
}
}  // namespace detail

/// p_n where the noisy QAE falls behind a bare physical qubit.
inline double critical_pn_single(double p) {
  return 255 * (p - 4 * p * p + 2 * std::pow(p, 3) + 9 * std::pow(p, 4) - 12 * std::pow(p, 5) + 4 * std::pow(p, 6)) /
         detail::memory_denominator(p);
}

/// p_n where the noisy QAE falls behind the uncorrected logical qubit.
inline double critical_pn_logical(double p) {
  return 765 * (p * p - 6 * std::pow(p, 3) + 13 * std::pow(p, 4) - 12 * std::pow(p, 5) + 4 * std::pow(p, 6)) /
         detail::memory_denominator(p);
}

struct AnalyticMemory {
  double p_single = 1.0;
  double p_uncorr = 1.0;
  double p_corr = 1.0;
  double crit_single = 0.0;
  double crit_logical = 0.0;
};

inline AnalyticMemory analytic_memory(double p_i, double p_n) {
  return {analytic_p_single(p_i), analytic_p_uncorr(p_i), analytic_p_corr(p_i, p_n), critical_pn_single(p_i), critical_pn_logical(p_i)};
}

/// Output of the hand-built 3-1-3 network to first order in p_n, from its noise-free output rho_L:
/// one term per noisy position minus 3 rho_L.
inline ComplexMatrix first_order_noisy_output(const ComplexMatrix& rho_l, double p_n) {
  using detail::ket_bra;
  if (rho_l.rows() != 8) throw ArgumentError("first-order output is defined for 3-qubit states");
  const double l1 = 256.0 / 255.0 * p_n, l2 = 16.0 / 15.0 * p_n;
  auto keep_as = [&](const ComplexMatrix& x, std::initializer_list<const char*> proj, int keep_qubits, int mixed) {
    ComplexMatrix red = ComplexMatrix::Zero(dim_of(keep_qubits), dim_of(keep_qubits));
    for (const char* b : proj) {
      const ComplexVector v = PureState::basis(b).amplitudes();
      // <b| on the trailing qubits.
      ComplexMatrix bra = kron(ComplexMatrix::Identity(dim_of(keep_qubits), dim_of(keep_qubits)), ComplexMatrix(v.adjoint()));
      red += bra * x * bra.adjoint();
    }
    return kron(red, ComplexMatrix::Identity(dim_of(mixed), dim_of(mixed)) / static_cast<double>(dim_of(mixed)));
  };
  const ComplexMatrix n1 = (1 - l1) * rho_l + l1 * 0.5 * (ket_bra("000", "000") + ket_bra("111", "111"));
  const ComplexMatrix n2 =
      (1 - l2) * rho_l + l2 * 0.25 * (ket_bra("000", "000") + ket_bra("011", "011") + ket_bra("100", "100") + ket_bra("111", "111"));
  const ComplexMatrix n3 = (1 - l2) * rho_l + l2 * keep_as(rho_l, {"00", "11"}, 1, 2);
  const ComplexMatrix n4 = (1 - l2) * rho_l + l2 * keep_as(rho_l, {"0", "1"}, 2, 1);
  return n1 + n2 + n3 + n4 - 3 * rho_l;
}

// ---------------------------------------------------------------------------
// Noisy memory: Monte Carlo

/// A qubit channel stored as the images of the four matrix units.
struct LogicalChannel {
  std::array<ComplexMatrix, 4> images;

  static LogicalChannel from(const ChannelFn& f) {
    LogicalChannel c;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        ComplexMatrix u = ComplexMatrix::Zero(2, 2);
        u(a, b) = 1.0;
        c.images[static_cast<std::size_t>(2 * a + b)] = f(u);
      }
    return c;
  }

  ComplexMatrix operator()(const ComplexMatrix& rho) const {
    return rho(0, 0) * images[0] + rho(0, 1) * images[1] + rho(1, 0) * images[2] + rho(1, 1) * images[3];
  }
};

/// Logical channel of the encoded memory: encode, idle (bit flip p_i), optional noisy QAE, idle, perfect
/// recovery, then read back in the code basis. The recovered state lies in the codespace, so the fidelity
/// to the encoded state equals the logical fidelity.
inline LogicalChannel encoded_memory_channel(const Model* qae, double p_i, double p_n) {
  const auto code = three_qubit_code();
  ComplexMatrix v(8, 2);
  v.col(0) = code.basis0().amplitudes();
  v.col(1) = code.basis1().amplitudes();
  const auto q = all_qubits(3);
  return LogicalChannel::from([&](const ComplexMatrix& x) {
    ComplexMatrix r = bit_flip(ComplexMatrix(v * x * v.adjoint()), 3, p_i, q);
    if (qae) r = detail::run_pipeline(*qae, qae->members[0], r, InternalNoise{p_n}, nullptr);
    r = bit_flip(r, 3, p_i, q);
    r = perfect_recovery(code, r);
    return ComplexMatrix(v.adjoint() * r * v);
  });
}

inline LogicalChannel single_qubit_memory_channel(double p_i) {
  const std::vector<int> q{0};
  return LogicalChannel::from([&](const ComplexMatrix& x) { return bit_flip(x, 1, two_round_flip(p_i), q); });
}

struct MemoryPoint {
  double p_i = 0.0;
  double p_n = 0.0;
  MeanStat single, uncorr, corr;
  MeanStat corr_minus_single, corr_minus_uncorr;  ///< paired differences (same sampled states)
  std::string region;  ///< corrected-best, between, corrected-worst or ambiguous
};

namespace detail {
/// +1 significantly positive, -1 significantly negative, 0 otherwise (3 standard errors).
inline int significant_sign(const MeanStat& d) {
  const double tol = std::max(3 * d.std_error, 1e-12);
  if (d.mean > tol) return 1;
  if (d.mean < -tol) return -1;
  return 0;
}
}  // namespace detail

inline std::string classify_region(const MemoryPoint& pt) {
  const int a = detail::significant_sign(pt.corr_minus_single);
  const int b = detail::significant_sign(pt.corr_minus_uncorr);
  if (a == 1 && b == 1) return "corrected-best";
  if (a == -1 && b == -1) return "corrected-worst";
  if (a * b == -1) return "between";
  return "ambiguous";
}

/// Three memory scenarios evaluated on the same Bloch-uniform states. `qae` defaults to the hand-built network.
inline MemoryPoint memory_point(double p_i, double p_n, const Model* qae, std::size_t n_samples, Rng& rng) {
  if (!(p_i >= 0.0 && p_i <= 1.0) || !(p_n >= 0.0 && p_n <= 1.0)) throw ConfigError("memory noise strengths must lie in [0,1]");
  if (n_samples == 0) throw ConfigError("memory point needs at least one sample");
  static const Model hand_built = hand_built_qae();
  if (!qae) qae = &hand_built;
  if (pipeline_in_width(qae->members[0]) != 3 || pipeline_out_width(qae->members[0]) != 3)
    throw ConfigError("memory experiment needs a 3-qubit network");
  const auto c_single = single_qubit_memory_channel(p_i);
  const auto c_uncorr = encoded_memory_channel(nullptr, p_i, p_n);
  const auto c_corr = encoded_memory_channel(qae, p_i, p_n);
  std::vector<double> fs(n_samples), fu(n_samples), fc(n_samples), d1(n_samples), d2(n_samples);
  const std::uint64_t seed = rng();
  parallel_for(n_samples, [&](std::size_t i) {
    Rng g(derive_seed(seed, i));
    const ComplexVector psi = bloch_state(sample_bloch_uniform(g)).amplitudes();
    const ComplexMatrix rho = psi * psi.adjoint();
    auto fid = [&](const LogicalChannel& c) { return std::clamp((psi.adjoint() * c(rho) * psi)(0, 0).real(), 0.0, 1.0); };
    fs[i] = fid(c_single);
    fu[i] = fid(c_uncorr);
    fc[i] = fid(c_corr);
    d1[i] = fc[i] - fs[i];
    d2[i] = fc[i] - fu[i];
  });
  MemoryPoint pt;
  pt.p_i = p_i;
  pt.p_n = p_n;
  pt.single = mean_stat(fs);
  pt.uncorr = mean_stat(fu);
  pt.corr = mean_stat(fc);
  pt.corr_minus_single = mean_stat(d1);
  pt.corr_minus_uncorr = mean_stat(d2);
  pt.region = classify_region(pt);
  return pt;
}

struct PhaseDiagram {
  std::vector<double> p_i_grid, p_n_grid;
  std::vector<MemoryPoint> points;  ///< p_i outer, p_n inner
  std::vector<AnalyticMemory> boundaries;  ///< one per p_i (p_n = 0)

  const MemoryPoint& at(std::size_t i, std::size_t j) const { return points[i * p_n_grid.size() + j]; }
};

inline std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ConfigError("grid needs step > 0 and hi >= lo");
  std::vector<double> g;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) g.push_back(lo + static_cast<double>(k) * step);
  return g;
}

/// Each grid point draws from its own stream derived from (seed, point index).
inline PhaseDiagram phase_diagram(const std::vector<double>& p_i_grid, const std::vector<double>& p_n_grid, std::size_t n_samples,
                                  std::uint64_t seed, const Model* qae = nullptr) {
  PhaseDiagram d{p_i_grid, p_n_grid, {}, {}};
  for (std::size_t i = 0; i < p_i_grid.size(); ++i) {
    for (std::size_t j = 0; j < p_n_grid.size(); ++j) {
      Rng rng(derive_seed(seed, i * p_n_grid.size() + j));
      d.points.push_back(memory_point(p_i_grid[i], p_n_grid[j], qae, n_samples, rng));
    }
    d.boundaries.push_back(analytic_memory(p_i_grid[i], 0.0));
  }
  return d;
}

/// Where along a p_i column the corrected memory stops being at least as good as a reference:
/// hi is the first p_n with a significant loss, lo the grid value just below it.
struct EmpiricalBoundary {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
};

inline EmpiricalBoundary empirical_boundary(const PhaseDiagram& d, std::size_t i, bool versus_single, double p_n_max) {
  EmpiricalBoundary b;
  for (std::size_t j = 0; j < d.p_n_grid.size() && d.p_n_grid[j] <= p_n_max + 1e-12; ++j) {
    const auto& pt = d.at(i, j);
    const int s = detail::significant_sign(versus_single ? pt.corr_minus_single : pt.corr_minus_uncorr);
    if (s == -1) {
      b.hi = d.p_n_grid[j];
      break;
    }
    b.lo = d.p_n_grid[j];
  }
  return b;
}

}  // namespace qaeqec
