#pragma once

// Dissipative quantum neural networks.
//
// A transition k-1 -> k appends n_k fresh |0> qubits at the register tail,
// applies one unitary per output neuron (acting on all of layer k-1 plus that
// neuron) and traces out layer k-1. Networks here are built from a shared
// parameter store of unitaries ("slots") and one or more pipelines of stages
// that reference those slots, so collections of networks can share a decoder
// and self-inverse networks can reuse encoder matrices as decoder adjoints.

#include <algorithm>
#include <numeric>
#include <optional>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

#include "qaeqec/linalg.hpp"
#include "qaeqec/noise.hpp"

namespace qaeqec {

/// Which half of a self-inverse network owns the stored matrices.
enum class MirrorSide { Front, Back };

struct Architecture {
  std::vector<int> widths;
  bool self_inverse = false;
  MirrorSide mirror = MirrorSide::Front;

  int num_transitions() const { return static_cast<int>(widths.size()) - 1; }

  std::string label() const {
    std::string s;
    for (std::size_t i = 0; i < widths.size(); ++i) s += (i ? "-" : "") + std::to_string(widths[i]);
    return s;
  }

  void validate() const {
    if (widths.size() < 2) throw ArgumentError("architecture needs at least two layers");
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < 1) throw ArgumentError("layer widths must be positive");
      if (i > 0 && widths[i - 1] + widths[i] > kMaxQubits) throw SizeError("transition register exceeds qubit limit");
    }
    if (self_inverse) {
      if (widths.size() % 2 == 0) throw ArgumentError("self-inverse architecture needs an odd number of layers");
      for (std::size_t i = 0; i < widths.size() / 2; ++i)
        if (widths[i] != widths[widths.size() - 1 - i]) throw ArgumentError("self-inverse architecture must be a palindrome");
    }
  }
};

struct Gate {
  int slot = 0;
  bool mirrored = false;     ///< use the adjoint of the slot matrix
  std::vector<int> targets;  ///< positions in the transition register [old in | new out]
};

struct Transition {
  int in = 0;
  int out = 0;
  std::vector<Gate> gates;
  int register_size() const { return in + out; }
};

/// Loss of qubits at known positions (partial trace).
struct EraseStage {
  int width = 0;
  std::vector<int> positions;
};

struct DephaseStage {
  DephasingQuadrature quad;
};

using Stage = std::variant<Transition, EraseStage, DephaseStage>;
using Pipeline = std::vector<Stage>;

/// Depolarizing noise on each gate's qubits right after that gate.
struct InternalNoise {
  double p_n = 0.0;
  bool active() const { return p_n > 0.0; }
};

// ---------------------------------------------------------------------------
// Layout

/// Transition whose neuron j is driven by slot first_slot + j on targets [0..in-1, in+j].
inline Transition standard_transition(int in, int out, int first_slot) {
  Transition t{in, out, {}};
  for (int j = 0; j < out; ++j) {
    Gate g{first_slot + j, false, {}};
    for (int i = 0; i < in; ++i) g.targets.push_back(i);
    g.targets.push_back(in + j);
    t.gates.push_back(std::move(g));
  }
  return t;
}

/// The reverse transition built from adjoints of a stored one, applied in reverse neuron order.
/// Old qubits of the stored register become the fresh tail, and its fresh qubits become the input.
inline Transition mirrored_transition(const Transition& stored) {
  const int a = stored.in;
  const int b = stored.out;
  Transition t{b, a, {}};
  for (auto it = stored.gates.rbegin(); it != stored.gates.rend(); ++it) {
    Gate g{it->slot, !it->mirrored, {}};
    for (int q : it->targets) g.targets.push_back(q < a ? b + q : q - a);
    t.gates.push_back(std::move(g));
  }
  return t;
}

/// Neuron index (1-based) of the decoder matrix that mirrors neuron j of an n_k-wide layer.
inline int mirrored_neuron_index(int n_k, int j) { return n_k + 1 - j; }

struct Layout {
  Pipeline pipeline;
  std::vector<int> slot_qubits;
};

inline Layout build_layout(const Architecture& arch, int first_slot = 0) {
  arch.validate();
  const int T = arch.num_transitions();
  Layout lay;
  std::vector<std::optional<Transition>> trans(static_cast<std::size_t>(T));
  int next = first_slot;
  auto add_standard = [&](int t) {
    const int in = arch.widths[static_cast<std::size_t>(t)];
    const int out = arch.widths[static_cast<std::size_t>(t) + 1];
    trans[static_cast<std::size_t>(t)] = standard_transition(in, out, next);
    for (int j = 0; j < out; ++j) lay.slot_qubits.push_back(in + 1);
    next += out;
  };
  if (!arch.self_inverse) {
    for (int t = 0; t < T; ++t) add_standard(t);
  } else if (arch.mirror == MirrorSide::Front) {
    for (int t = 0; t < T / 2; ++t) add_standard(t);
    for (int t = T / 2; t < T; ++t) trans[static_cast<std::size_t>(t)] = mirrored_transition(*trans[static_cast<std::size_t>(T - 1 - t)]);
  } else {
    for (int t = T / 2; t < T; ++t) add_standard(t);
    for (int t = 0; t < T / 2; ++t) trans[static_cast<std::size_t>(t)] = mirrored_transition(*trans[static_cast<std::size_t>(T - 1 - t)]);
  }
  for (auto& t : trans) lay.pipeline.emplace_back(std::move(*t));
  return lay;
}

inline int pipeline_in_width(const Pipeline& p) {
  if (p.empty()) throw ArgumentError("empty pipeline");
  return std::visit(
      [](const auto& s) -> int {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Transition>) return s.in;
        else if constexpr (std::is_same_v<S, EraseStage>) return s.width;
        else return -1;
      },
      p.front());
}

inline int pipeline_out_width(const Pipeline& p) {
  int w = -1;
  for (const auto& st : p)
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Transition>) w = s.out;
          else if constexpr (std::is_same_v<S, EraseStage>) w = s.width - static_cast<int>(s.positions.size());
        },
        st);
  return w;
}

// ---------------------------------------------------------------------------
// Model

/// Parameter store plus the pipelines ("members") that read from it.
struct Model {
  Architecture arch;
  std::string kind = "qae";
  std::vector<ComplexMatrix> params;
  std::vector<Pipeline> members;
  std::vector<std::vector<int>> routes;  ///< erasure positions handled by each member
  std::vector<std::string> labels;
  Pipeline encoder;  ///< optional logical encoding map (rearranged finders)

  int num_slots() const { return static_cast<int>(params.size()); }
  int slot_qubits(int s) const { return qubits_of(params[static_cast<std::size_t>(s)].rows()); }

  /// Member handling a given sorted loss pattern, or -1.
  int route(const std::vector<int>& lost) const {
    for (std::size_t i = 0; i < routes.size(); ++i)
      if (routes[i] == lost) return static_cast<int>(i);
    return -1;
  }

  void check_unitarity(double tol = kUnitaryTol) const {
    for (std::size_t s = 0; s < params.size(); ++s)
      if (!is_unitary(params[s], tol)) throw StateValidityError("slot " + std::to_string(s) + " is not unitary");
  }
};

inline Model make_model(const Architecture& arch, Rng& rng) {
  auto lay = build_layout(arch);
  Model m;
  m.arch = arch;
  for (int q : lay.slot_qubits) m.params.push_back(haar_random_unitary(q, rng).matrix());
  m.members.push_back(std::move(lay.pipeline));
  m.routes.push_back({});
  m.labels.push_back("main");
  return m;
}

inline Model identity_model(const Architecture& arch) {
  auto lay = build_layout(arch);
  Model m;
  m.arch = arch;
  for (int q : lay.slot_qubits) m.params.push_back(ComplexMatrix::Identity(dim_of(q), dim_of(q)));
  m.members.push_back(std::move(lay.pipeline));
  m.routes.push_back({});
  m.labels.push_back("main");
  return m;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace detail {

/// Adjoint of tracing out `positions`: x on the kept qubits tensored with identity on the erased ones.
inline ComplexMatrix embed_identity(const ComplexMatrix& x, int width, std::span<const int> positions) {
  const auto keep = complement(positions, width);
  const auto koff = config_offsets(keep, width);
  const auto eoff = config_offsets(positions, width);
  const auto d = dim_of(width);
  ComplexMatrix out = ComplexMatrix::Zero(d, d);
  for (std::size_t a = 0; a < koff.size(); ++a)
    for (std::size_t b = 0; b < koff.size(); ++b) {
      const cplx v = x(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      for (auto e : eoff) out(koff[a] + e, koff[b] + e) = v;
    }
  return out;
}

inline ComplexMatrix gate_matrix(const Model& m, const Gate& g) {
  const auto& u = m.params[static_cast<std::size_t>(g.slot)];
  return g.mirrored ? ComplexMatrix(u.adjoint()) : u;
}

/// Register state right after each gate (before that gate's noise), in execution order.
using Tape = std::vector<ComplexMatrix>;

inline ComplexMatrix run_transition(const Model& m, const Transition& t, const ComplexMatrix& x, const InternalNoise& noise,
                                    Tape* tape) {
  if (x.rows() != dim_of(t.in)) throw ArgumentError("transition input width mismatch");
  const int n = t.register_size();
  ComplexMatrix r = append_zeros(x, t.out);
  for (const auto& g : t.gates) {
    r = conjugate(gate_matrix(m, g), g.targets, n, r);
    if (tape) tape->push_back(r);
    if (noise.active()) r = depolarizing_multi(r, n, noise.p_n, g.targets);
  }
  std::vector<int> keep(static_cast<std::size_t>(t.out));
  std::iota(keep.begin(), keep.end(), t.in);
  return trace_keep(r, n, keep);
}

inline ComplexMatrix run_pipeline(const Model& m, const Pipeline& p, const ComplexMatrix& x, const InternalNoise& noise,
                                  Tape* tape) {
  ComplexMatrix cur = x;
  for (const auto& st : p) {
    if (const auto* t = std::get_if<Transition>(&st)) {
      cur = run_transition(m, *t, cur, noise, tape);
    } else if (const auto* e = std::get_if<EraseStage>(&st)) {
      if (cur.rows() != dim_of(e->width)) throw ArgumentError("erasure stage width mismatch");
      cur = trace_keep(cur, e->width, complement(e->positions, e->width));
    } else {
      const auto& d = std::get<DephaseStage>(st);
      cur = collective_dephasing(cur, qubits_of(cur.rows()), d.quad, false);
    }
  }
  return cur;
}

}  // namespace detail

inline DensityMatrix forward(const Model& m, const DensityMatrix& rho, const InternalNoise& noise = {}, int member = 0) {
  if (member < 0 || member >= static_cast<int>(m.members.size())) throw ArgumentError("member index out of range");
  const auto& p = m.members[static_cast<std::size_t>(member)];
  if (rho.num_qubits() != pipeline_in_width(p)) throw ArgumentError("input width does not match network");
  const ComplexMatrix out = detail::run_pipeline(m, p, rho.matrix(), noise, nullptr);
  return {qubits_of(out.rows()), out};
}

/// One layer-to-layer map with explicit per-neuron unitaries (applied in ascending neuron order).
inline DensityMatrix layer_map(const DensityMatrix& rho_prev, const std::vector<Unitary>& neurons, const InternalNoise& noise = {}) {
  const int in = rho_prev.num_qubits();
  const int out = static_cast<int>(neurons.size());
  if (out < 1) throw ArgumentError("layer needs at least one neuron");
  Model tmp;
  for (const auto& u : neurons) {
    if (u.num_qubits() != in + 1) throw ArgumentError("neuron unitary must act on the previous layer plus one qubit");
    tmp.params.push_back(u.matrix());
  }
  const ComplexMatrix r = detail::run_transition(tmp, standard_transition(in, out, 0), rho_prev.matrix(), noise, nullptr);
  return {out, r};
}

/// A transition with its matrices resolved.
struct MaterializedTransition {
  int in = 0;
  int out = 0;
  std::vector<ComplexMatrix> unitaries;
  std::vector<std::vector<int>> targets;
};

/// Decoder half of a self-inverse network as explicit matrices: adjoints of the stored encoder
/// matrices, applied in reverse neuron order with the register roles exchanged.
inline std::vector<MaterializedTransition> build_self_inverse_decoder(const Model& m) {
  if (!m.arch.self_inverse) throw ArgumentError("network is not self-inverse");
  std::vector<MaterializedTransition> out;
  const auto& p = m.members.front();
  const int T = m.arch.num_transitions();
  const bool front = m.arch.mirror == MirrorSide::Front;
  for (int k = front ? T / 2 : 0; k < (front ? T : T / 2); ++k) {
    const auto& t = std::get<Transition>(p[static_cast<std::size_t>(k)]);
    MaterializedTransition mt{t.in, t.out, {}, {}};
    for (const auto& g : t.gates) {
      mt.unitaries.push_back(detail::gate_matrix(m, g));
      mt.targets.push_back(g.targets);
    }
    out.push_back(std::move(mt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hand-built 3-1-3 recovery network

namespace detail {
/// (q1,q2,q3,h) -> (q1^q2, q2^q3, h, maj(q1,q2,q3)): both syndromes, then the majority into the hidden neuron.
inline ComplexMatrix syndrome_majority_unitary() {
  ComplexMatrix u = ComplexMatrix::Zero(16, 16);
  for (int i = 0; i < 16; ++i) {
    const int q1 = (i >> 3) & 1, q2 = (i >> 2) & 1, q3 = (i >> 1) & 1, h = i & 1;
    const int maj = (q1 + q2 + q3) >= 2 ? 1 : 0;
    const int j = ((q1 ^ q2) << 3) | ((q2 ^ q3) << 2) | (h << 1) | maj;
    u(j, i) = 1.0;
  }
  return u;
}
}  // namespace detail

/// Standard (independent-decoder) 3-1-3 network whose noiseless channel is the 3-qubit bit-flip recovery:
/// syndrome/majority extraction into the hidden qubit, then CNOT, CNOT, SWAP fan-out.
inline Model hand_built_qae() {
  const Architecture arch{{3, 1, 3}, false, MirrorSide::Front};
  auto lay = build_layout(arch);
  Model m;
  m.arch = arch;
  m.kind = "qae";
  m.params = {detail::syndrome_majority_unitary(), gates::CNOT(), gates::CNOT(), gates::SWAP()};
  m.members.push_back(std::move(lay.pipeline));
  m.routes.push_back({});
  m.labels.push_back("main");
  return m;
}

// ---------------------------------------------------------------------------
// Collections

/// x-1-n erasure collection: a self-inverse n-1-n network for the loss-free case plus one
/// (n-|L|)->1 encoder per loss pattern L with up to max_losses positions, all sharing the decoder.
inline Model make_erasure_collection(int n, int max_losses, Rng& rng) {
  if (max_losses < 0 || max_losses >= n) throw ArgumentError("max_losses must lie in [0, n)");
  const Architecture arch{{n, 1, n}, true, MirrorSide::Front};
  Model m = make_model(arch, rng);
  m.kind = "erasure-collection";
  m.labels = {"no loss"};
  const Transition decoder = std::get<Transition>(m.members[0][1]);
  for (int k = 1; k <= max_losses; ++k) {
    std::vector<bool> pick(static_cast<std::size_t>(n), false);
    std::fill(pick.begin(), pick.begin() + k, true);
    do {
      std::vector<int> lost;
      for (int q = 0; q < n; ++q)
        if (pick[static_cast<std::size_t>(q)]) lost.push_back(q);
      const int slot = m.num_slots();
      m.params.push_back(haar_random_unitary(n - k + 1, rng).matrix());
      m.members.push_back({standard_transition(n - k, 1, slot), decoder});
      std::string label = "lost";
      for (int q : lost) label += " " + std::to_string(q);
      m.labels.push_back(label);
      m.routes.push_back(std::move(lost));
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return m;
}

/// 1-n-1 encoding finder collection: member 0 is the self-inverse network D then E_0 = D^-1 with
/// collective dephasing in between; member i>0 additionally loses qubit i-1 and uses its own E_i.
inline Model make_encoding_finder(int n, double sigma, Rng& rng, int quadrature_nodes = 21) {
  const Architecture arch{{1, n, 1}, true, MirrorSide::Back};
  Model m = make_model(arch, rng);
  m.kind = "finder";
  const auto quad = make_dephasing_quadrature(sigma, quadrature_nodes);
  const Transition d = std::get<Transition>(m.members[0][0]);
  const Transition e0 = std::get<Transition>(m.members[0][1]);
  m.members[0] = {d, DephaseStage{quad}, e0};
  m.labels = {"no loss"};
  for (int q = 0; q < n; ++q) {
    const int slot = m.num_slots();
    m.params.push_back(haar_random_unitary(n, rng).matrix());
    m.members.push_back({d, DephaseStage{quad}, EraseStage{n, {q}}, standard_transition(n - 1, 1, slot)});
    m.routes.push_back({q});
    m.labels.push_back("lost " + std::to_string(q));
  }
  return m;
}

/// Swaps encoder and decoder of a trained finder: member i becomes E_i followed by D, and D is kept as
/// the logical encoding map. No parameters change.
inline Model rearrange_to_qae(const Model& finder) {
  if (finder.kind != "finder") throw ArgumentError("rearrange_to_qae expects an encoding-finder collection");
  Model q;
  const int n = finder.arch.widths[1];
  q.arch = Architecture{{n, 1, n}, true, MirrorSide::Front};
  q.kind = "qae-from-finder";
  q.params = finder.params;
  q.routes = finder.routes;
  q.labels = finder.labels;
  const Transition d = std::get<Transition>(finder.members[0].front());
  q.encoder = {d};
  for (const auto& mem : finder.members) {
    const Transition e = std::get<Transition>(mem.back());
    q.members.push_back({e, d});
  }
  return q;
}

/// Logical state produced by a model's encoding map.
inline DensityMatrix encode(const Model& m, const DensityMatrix& rho) {
  if (m.encoder.empty()) throw ArgumentError("model has no encoding map");
  const ComplexMatrix out = detail::run_pipeline(m, m.encoder, rho.matrix(), {}, nullptr);
  return {qubits_of(out.rows()), out};
}

}  // namespace qaeqec
