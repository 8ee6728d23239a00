#pragma once

// Supervised training of network models: fidelity cost, backpropagated update
// matrices, Nadam on the update matrices and the epoch/minibatch/restart loop.

#include <functional>
#include <optional>
#include <vector>

#include "qaeqec/network.hpp"
#include "qaeqec/parallel.hpp"

namespace qaeqec {

struct TrainingPair {
  DensityMatrix input;
  PureState target;
  int member = 0;
};

/// Nadam: entrywise moments on the real and imaginary parts of K. Plain: U <- exp(i eps K) U.
enum class OptimizerKind { Nadam, Plain };

struct TrainingConfig {
  double epsilon = 0.1;
  int epochs = 200;
  int minibatch_size = 3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  OptimizerKind optimizer = OptimizerKind::Nadam;
  /// Normalize by the running maximum of the bias-corrected second moment. Without it the
  /// normalizer decays once gradients vanish and the step grows until the iteration oscillates.
  bool amsgrad = true;
  int max_restarts = 10;
  double restart_threshold = 0.05;
  std::uint64_t seed = 1;
  InternalNoise noise;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("learning rate must be positive");
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (minibatch_size < 1) throw ConfigError("minibatch size must be at least 1");
    if (max_restarts < 0) throw ConfigError("max_restarts must be non-negative");
    if (optimizer != OptimizerKind::Plain && !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
      throw ConfigError("Nadam betas must lie in [0,1)");
  }
};

// ---------------------------------------------------------------------------
// Cost

namespace detail {
inline void check_pair(const Model& m, const TrainingPair& p) {
  if (p.member < 0 || p.member >= static_cast<int>(m.members.size())) throw ArgumentError("training pair names an unknown member");
  const auto& pipe = m.members[static_cast<std::size_t>(p.member)];
  if (p.input.num_qubits() != pipeline_in_width(pipe)) throw ArgumentError("training input width does not match network");
  if (p.target.num_qubits() != pipeline_out_width(pipe)) throw ArgumentError("training target width does not match network");
}

inline double pair_fidelity(const Model& m, const TrainingPair& p, const InternalNoise& noise) {
  const ComplexMatrix out = run_pipeline(m, m.members[static_cast<std::size_t>(p.member)], p.input.matrix(), noise, nullptr);
  const auto& t = p.target.amplitudes();
  return (t.adjoint() * out * t)(0, 0).real();
}
}  // namespace detail

/// 1 - mean fidelity between outputs and targets.
inline double cost(const Model& m, const std::vector<TrainingPair>& pairs, const InternalNoise& noise = {}) {
  if (pairs.empty()) throw ArgumentError("cost needs at least one pair");
  std::vector<double> f(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    detail::check_pair(m, pairs[i]);
    f[i] = detail::pair_fidelity(m, pairs[i], noise);
  });
  double s = 0;
  for (double v : f) s += v;
  return 1.0 - s / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Gradients

/// Per-slot sum over pairs of the traced commutators [forward state, backpropagated effect],
/// mirrored gates folded back onto their slot. Each entry is anti-Hermitian; the cost derivative
/// along U_s -> exp(i e K_s) U_s is -(1/N) sum_s Re Tr[i K_s G_s].
inline std::vector<ComplexMatrix> commutator_sums(const Model& m, const std::vector<TrainingPair>& batch,
                                                  const InternalNoise& noise = {}) {
  std::vector<std::vector<ComplexMatrix>> per_pair(batch.size());
  parallel_for(batch.size(), [&](std::size_t idx) {
    const auto& pair = batch[idx];
    detail::check_pair(m, pair);
    const auto& pipe = m.members[static_cast<std::size_t>(pair.member)];
    auto& acc = per_pair[idx];
    acc.resize(m.params.size());

    detail::Tape tape;
    detail::run_pipeline(m, pipe, pair.input.matrix(), noise, &tape);

    ComplexMatrix sigma = pair.target.projector();
    std::size_t tp = tape.size();
    for (auto st = pipe.rbegin(); st != pipe.rend(); ++st) {
      if (const auto* t = std::get_if<Transition>(&*st)) {
        const int n = t->register_size();
        ComplexMatrix eff = kron(ComplexMatrix::Identity(dim_of(t->in), dim_of(t->in)), sigma);
        for (auto g = t->gates.rbegin(); g != t->gates.rend(); ++g) {
          if (noise.active()) eff = depolarizing_multi(eff, n, noise.p_n, g->targets);
          const ComplexMatrix& r = tape[--tp];
          const ComplexMatrix comm = r * eff - eff * r;
          ComplexMatrix loc = detail::trace_keep(comm, n, g->targets);
          const auto& u = m.params[static_cast<std::size_t>(g->slot)];
          if (g->mirrored) loc = -(u * loc * u.adjoint());
          auto& slot_acc = acc[static_cast<std::size_t>(g->slot)];
          if (slot_acc.size() == 0) slot_acc = ComplexMatrix::Zero(u.rows(), u.cols());
          slot_acc += loc;
          eff = detail::conjugate(detail::gate_matrix(m, *g).adjoint(), g->targets, n, eff);
        }
        sigma = detail::project_zeros(eff, t->out);
      } else if (const auto* e = std::get_if<EraseStage>(&*st)) {
        sigma = detail::embed_identity(sigma, e->width, e->positions);
      } else {
        sigma = detail::collective_dephasing(sigma, qubits_of(sigma.rows()), std::get<DephaseStage>(*st).quad, true);
      }
    }
  });
  std::vector<ComplexMatrix> g(m.params.size());
  for (std::size_t s = 0; s < g.size(); ++s) g[s] = ComplexMatrix::Zero(m.params[s].rows(), m.params[s].cols());
  for (const auto& acc : per_pair)
    for (std::size_t s = 0; s < acc.size(); ++s)
      if (acc[s].size() != 0) g[s] += acc[s];
  return g;
}

/// Hermitian update matrices K_s = i 2^{m_s} / (2N) G_s, zero for slots the batch never touches.
inline std::vector<ComplexMatrix> update_matrices(const Model& m, const std::vector<TrainingPair>& batch,
                                                  const InternalNoise& noise = {}) {
  if (batch.empty()) throw ArgumentError("update_matrices needs a non-empty minibatch");
  auto g = commutator_sums(m, batch, noise);
  const double n = static_cast<double>(batch.size());
  for (auto& k : g) {
    k = cplx(0, 1) * (static_cast<double>(k.rows()) / (2.0 * n)) * k;
    k = 0.5 * (k + k.adjoint()).eval();
  }
  return g;
}

/// Same as update_matrices; decoder matrices of a self-inverse network are never free parameters,
/// their contribution is folded into the encoder slot they mirror.
inline std::vector<ComplexMatrix> update_matrices_self_inverse(const Model& m, const std::vector<TrainingPair>& batch,
                                                               const InternalNoise& noise = {}) {
  if (!m.arch.self_inverse) throw ArgumentError("network is not self-inverse");
  return update_matrices(m, batch, noise);
}

/// dC/de for the simultaneous move U_s -> exp(i e K_s) U_s, from commutator sums over N pairs.
inline double directional_derivative(const std::vector<ComplexMatrix>& g, const std::vector<ComplexMatrix>& k, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < g.size(); ++i) s += (cplx(0, 1) * (k[i] * g[i]).trace()).real();
  return -s / static_cast<double>(n);
}

/// Moves every slot by exp(i e K_s).
inline Model perturb(const Model& m, const std::vector<ComplexMatrix>& k, double e) {
  Model out = m;
  for (std::size_t s = 0; s < out.params.size(); ++s) out.params[s] = exp_i_hermitian(k[s], e) * out.params[s];
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

struct OptimizerState {
  std::vector<ComplexMatrix> m;      ///< first moment (real and imaginary parts together)
  std::vector<Eigen::MatrixXd> v_re;  ///< second moment of real parts
  std::vector<Eigen::MatrixXd> v_im;  ///< second moment of imaginary parts
  std::vector<Eigen::MatrixXd> vmax_re, vmax_im;  ///< running maxima of the corrected second moments
  long step = 0;

  explicit OptimizerState(const Model& model) {
    for (const auto& u : model.params) {
      m.push_back(ComplexMatrix::Zero(u.rows(), u.cols()));
      v_re.push_back(Eigen::MatrixXd::Zero(u.rows(), u.cols()));
      v_im.push_back(Eigen::MatrixXd::Zero(u.rows(), u.cols()));
      vmax_re.push_back(Eigen::MatrixXd::Zero(u.rows(), u.cols()));
      vmax_im.push_back(Eigen::MatrixXd::Zero(u.rows(), u.cols()));
    }
  }
};

/// One optimizer step on the trainable slots. Nadam mixes the entries of K, the result is made
/// Hermitian again and applied as U <- exp(i eps K~) U.
inline void nadam_step(Model& model, OptimizerState& st, const std::vector<ComplexMatrix>& k, const TrainingConfig& cfg,
                       const std::vector<bool>& trainable = {}) {
  if (k.size() != model.params.size()) throw ArgumentError("one update matrix per slot required");
  for (const auto& x : k)
    if (!is_hermitian(x, 1e-8)) throw ArgumentError("update matrix is not Hermitian");
  ++st.step;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (std::size_t s = 0; s < k.size(); ++s) {
    if (!trainable.empty() && !trainable[s]) continue;
    ComplexMatrix step;
    if (cfg.optimizer == OptimizerKind::Plain) {
      step = k[s];
    } else {
      const Eigen::MatrixXd gr = k[s].real(), gi = k[s].imag();
      st.m[s] = b1 * st.m[s] + (1.0 - b1) * k[s];
      st.v_re[s] = b2 * st.v_re[s] + (1.0 - b2) * gr.cwiseAbs2();
      st.v_im[s] = b2 * st.v_im[s] + (1.0 - b2) * gi.cwiseAbs2();
      const ComplexMatrix num = (b1 / c1) * st.m[s] + ((1.0 - b1) / c1) * k[s];
      if (cfg.amsgrad) {
        st.vmax_re[s] = st.vmax_re[s].cwiseMax(st.v_re[s] / c2);
        st.vmax_im[s] = st.vmax_im[s].cwiseMax(st.v_im[s] / c2);
      }
      const Eigen::MatrixXd den_re = (cfg.amsgrad ? st.vmax_re[s] : Eigen::MatrixXd(st.v_re[s] / c2)).cwiseSqrt().array() + cfg.adam_eps;
      const Eigen::MatrixXd den_im = (cfg.amsgrad ? st.vmax_im[s] : Eigen::MatrixXd(st.v_im[s] / c2)).cwiseSqrt().array() + cfg.adam_eps;
      step.resize(num.rows(), num.cols());
      step.real() = num.real().cwiseQuotient(den_re);
      step.imag() = num.imag().cwiseQuotient(den_im);
      step = 0.5 * (step + step.adjoint()).eval();
    }
    model.params[s] = exp_i_hermitian(step, cfg.epsilon) * model.params[s];
  }
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainResult {
  Model model;
  std::vector<double> history;  ///< cost before training, then after each epoch
  double final_cost = 1.0;
  int attempts = 0;
  bool success = false;
};

/// Extra acceptance test for a finished attempt; the cost threshold alone is used when empty.
using AcceptFn = std::function<bool(const Model&, double final_cost)>;

/// Trains a single attempt from the given parameters; no restarts.
inline TrainResult train_once(Model model, const std::vector<TrainingPair>& pairs, const TrainingConfig& cfg,
                              const std::vector<bool>& trainable, Rng& rng) {
  TrainResult res;
  OptimizerState st(model);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  res.history.push_back(cost(model, pairs, cfg.noise));
  for (int ep = 0; ep < cfg.epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch_size));
      std::vector<TrainingPair> mb;
      for (std::size_t i = start; i < stop; ++i) mb.push_back(pairs[order[i]]);
      nadam_step(model, st, update_matrices(model, mb, cfg.noise), cfg, trainable);
    }
    res.history.push_back(cost(model, pairs, cfg.noise));
  }
  res.final_cost = res.history.back();
  res.model = std::move(model);
  res.attempts = 1;
  return res;
}

/// Epoch loop with restarts. Attempt 0 starts from the given parameters; later attempts redraw the
/// trainable slots from a fresh stream. Returns the best attempt; success says whether it was accepted.
inline TrainResult train(const Model& init, const std::vector<TrainingPair>& pairs, const TrainingConfig& cfg,
                         std::vector<bool> trainable = {}, const AcceptFn& accept = {}) {
  cfg.validate();
  if (pairs.empty()) throw ArgumentError("training needs at least one pair");
  if (trainable.empty()) trainable.assign(init.params.size(), true);
  if (trainable.size() != init.params.size()) throw ArgumentError("trainable mask length must equal the slot count");
  auto accepted = [&](const TrainResult& r) {
    if (r.final_cost > cfg.restart_threshold) return false;
    return !accept || accept(r.model, r.final_cost);
  };
  std::optional<TrainResult> best;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(attempt)));
    Model start = init;
    if (attempt > 0)
      for (std::size_t s = 0; s < start.params.size(); ++s)
        if (trainable[s]) start.params[s] = haar_random_unitary(start.slot_qubits(static_cast<int>(s)), rng).matrix();
    auto r = train_once(std::move(start), pairs, cfg, trainable, rng);
    r.success = accepted(r);
    r.attempts = attempt + 1;
    const bool better = !best || (r.success && !best->success) || (r.success == best->success && r.final_cost < best->final_cost);
    if (better) best = std::move(r);
    best->attempts = attempt + 1;
    if (best->success) break;
  }
  return std::move(*best);
}

}  // namespace qaeqec
