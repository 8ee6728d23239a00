#pragma once

// Run configuration: named presets with the published hyperparameters, JSON
// overrides with schema checks, and the resolved form used for hashing.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qaeqec/experiments.hpp"
#include "qaeqec/io.hpp"

namespace qaeqec {

struct MemoryConfig {
  std::vector<double> p_i_grid = linear_grid(0.0, 0.5, 0.025);
  std::vector<double> p_n_grid = linear_grid(0.0, 0.2, 0.01);
  std::size_t n_samples = 10000;
  std::optional<std::pair<double, double>> point;  ///< single-point mode (p_i, p_n)
};

struct RunConfig {
  std::string preset = "fig3";
  std::string mode = "qae";  ///< qae, correlated, erasure or finder
  std::string code = "3qc";
  bool self_inverse = true;
  NoiseSpec noise{NoiseKind::BitFlip, 0.1, 1.0};
  TrainingConfig training;
  bool auto_threshold = true;
  int batch_states = 3;
  std::size_t n_samples = 10000;
  double internal_noise = 0.0;
  std::vector<double> eta_grid;
  ErasureSetup erasure;
  DiscoverySetup discovery;
  MemoryConfig memory;
  std::string model_path;  ///< input model for validate / tomo / memory
  std::uint64_t seed = 1;

  void validate() const {
    static const std::set<std::string> modes{"qae", "correlated", "erasure", "finder"};
    if (!modes.count(mode)) throw ConfigError("unknown mode '" + mode + "'");
    code_by_name(code);
    noise.validate();
    training.validate();
    if (batch_states != 3 && batch_states != 6) throw ConfigError("batch_states must be 3 or 6");
    if (!(internal_noise >= 0.0 && internal_noise <= 1.0)) throw ConfigError("internal_noise must lie in [0,1]");
    if (mode == "correlated") {
      if (code != "3qc") throw ConfigError("correlated mode needs the 3qc code");
      if (eta_grid.empty()) throw ConfigError("correlated mode needs a non-empty eta_grid");
    }
    if (mode == "erasure") erasure.validate(code_by_name(code).num_qubits());
    if (mode == "finder") discovery.validate();
    for (double p : memory.p_i_grid)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("memory p_i grid outside [0,1]");
    for (double p : memory.p_n_grid)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("memory p_n grid outside [0,1]");
  }
};

/// Published hyperparameters per figure.
inline RunConfig preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  auto& t = c.training;
  if (name == "fig3") {
    c.code = "3qc";
    c.noise = {NoiseKind::BitFlip, 0.1, 1.0};
    t.epsilon = 0.1, t.epochs = 200, t.minibatch_size = 3;
    c.batch_states = 3;
  } else if (name == "fig5a" || name == "fig5b") {
    c.code = "5qc";
    c.noise = {name == "fig5a" ? NoiseKind::Depolarizing : NoiseKind::BitFlip, 0.1, 1.0};
    t.epsilon = 0.2, t.epochs = 200, t.minibatch_size = 2;
    c.batch_states = 6;
  } else if (name == "fig6") {
    c.mode = "correlated";
    c.code = "3qc";
    c.noise = {NoiseKind::Correlated, 0.2, 1.0};
    c.eta_grid = {1, 2, 4, 8, 16};
    t.epsilon = 0.1, t.epochs = 200, t.minibatch_size = 3;
    c.batch_states = 6;
  } else if (name == "fig8") {
    c.mode = "erasure";
    c.code = "5qc";
    c.noise = {NoiseKind::Depolarizing, 0.1, 1.0};
    c.erasure = {2, 0.4, 0.1, NoiseKind::Depolarizing, 50};
    t.epsilon = 0.1, t.epochs = 200, t.minibatch_size = 3;
    c.batch_states = 6;
  } else if (name == "appendixD") {
    c.mode = "finder";
    c.noise = {NoiseKind::None, 0.0, 1.0};
    c.discovery = DiscoverySetup{};
    t.epsilon = 0.1, t.epochs = 150, t.minibatch_size = 100;
    c.auto_threshold = false;
    t.restart_threshold = 0.01;
    c.batch_states = 6;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected fig3, fig5a, fig5b, fig6, fig8 or appendixD)");
  }
  return c;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::vector<double> read_grid(const json& g) {
  if (g.is_array()) return g.get<std::vector<double>>();
  reject_unknown(g, {"lo", "hi", "step"}, "grid");
  return linear_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("step").get<double>());
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "nadam") return OptimizerKind::Nadam;
  if (s == "plain") return OptimizerKind::Plain;
  throw ConfigError("unknown optimizer '" + s + "' (expected nadam or plain)");
}

}  // namespace detail

/// Applies a JSON object of overrides. The "preset" key, when present, selects the base first.
inline RunConfig config_from_json(const json& j, std::optional<std::string> preset_override = {}) {
  using detail::read;
  RunConfig c;
  try {
    detail::reject_unknown(j, {"version", "preset", "mode", "code", "self_inverse", "noise", "training", "batch_states", "n_samples",
                               "internal_noise", "eta_grid", "erasure", "discovery", "memory", "model", "seed"},
                           "config");
    if (j.contains("version") && j.at("version").get<int>() != 1) throw ConfigError("unsupported config version");
    std::string name = preset_override ? *preset_override : j.value("preset", std::string("fig3"));
    c = preset(name);
    read(j, "mode", c.mode);
    read(j, "code", c.code);
    read(j, "self_inverse", c.self_inverse);
    read(j, "batch_states", c.batch_states);
    read(j, "n_samples", c.n_samples);
    read(j, "internal_noise", c.internal_noise);
    read(j, "model", c.model_path);
    read(j, "seed", c.seed);
    if (j.contains("eta_grid")) c.eta_grid = detail::read_grid(j.at("eta_grid"));
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      detail::reject_unknown(n, {"kind", "p", "eta"}, "noise");
      if (n.contains("kind")) c.noise.kind = noise_kind_from_string(n.at("kind").get<std::string>());
      read(n, "p", c.noise.p);
      read(n, "eta", c.noise.eta);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      detail::reject_unknown(t, {"epsilon", "epochs", "minibatch_size", "beta1", "beta2", "adam_eps", "optimizer", "amsgrad", "max_restarts",
                                 "restart_threshold"},
                             "training");
      auto& tc = c.training;
      read(t, "epsilon", tc.epsilon);
      read(t, "epochs", tc.epochs);
      read(t, "minibatch_size", tc.minibatch_size);
      read(t, "beta1", tc.beta1);
      read(t, "beta2", tc.beta2);
      read(t, "adam_eps", tc.adam_eps);
      read(t, "amsgrad", tc.amsgrad);
      read(t, "max_restarts", tc.max_restarts);
      if (t.contains("optimizer")) tc.optimizer = detail::optimizer_from_string(t.at("optimizer").get<std::string>());
      if (t.contains("restart_threshold")) {
        const auto& r = t.at("restart_threshold");
        if (r.is_string()) {
          if (r.get<std::string>() != "auto") throw ConfigError("restart_threshold must be a number or \"auto\"");
          c.auto_threshold = true;
        } else {
          c.auto_threshold = false;
          tc.restart_threshold = r.get<double>();
        }
      }
    }
    if (j.contains("erasure")) {
      const auto& e = j.at("erasure");
      detail::reject_unknown(e, {"max_losses", "p_loss", "p_comp", "comp_kind", "copies"}, "erasure");
      read(e, "max_losses", c.erasure.max_losses);
      read(e, "p_loss", c.erasure.p_loss);
      read(e, "p_comp", c.erasure.p_comp);
      read(e, "copies", c.erasure.copies);
      if (e.contains("comp_kind")) c.erasure.comp_kind = noise_kind_from_string(e.at("comp_kind").get<std::string>());
    }
    if (j.contains("discovery")) {
      const auto& d = j.at("discovery");
      detail::reject_unknown(d, {"n", "sigma", "nodes", "copies", "n_validation", "n_dfs", "n_marginal"}, "discovery");
      auto& s = c.discovery;
      read(d, "n", s.n);
      read(d, "sigma", s.sigma);
      read(d, "nodes", s.nodes);
      read(d, "copies", s.copies);
      read(d, "n_validation", s.n_validation);
      read(d, "n_dfs", s.n_dfs);
      read(d, "n_marginal", s.n_marginal);
    }
    if (j.contains("memory")) {
      const auto& m = j.at("memory");
      detail::reject_unknown(m, {"p_i", "p_n", "n_samples", "point"}, "memory");
      if (m.contains("p_i")) c.memory.p_i_grid = detail::read_grid(m.at("p_i"));
      if (m.contains("p_n")) c.memory.p_n_grid = detail::read_grid(m.at("p_n"));
      read(m, "n_samples", c.memory.n_samples);
      if (m.contains("point")) {
        const auto pt = m.at("point").get<std::vector<double>>();
        if (pt.size() != 2) throw ConfigError("memory point must be [p_i, p_n]");
        c.memory.point = std::make_pair(pt[0], pt[1]);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  return c;
}

/// Fully resolved config, used for output headers and the config hash.
inline json config_to_json(const RunConfig& c) {
  const auto& t = c.training;
  json mem = {{"p_i", c.memory.p_i_grid}, {"p_n", c.memory.p_n_grid}, {"n_samples", c.memory.n_samples}};
  if (c.memory.point) mem["point"] = {c.memory.point->first, c.memory.point->second};
  return {{"version", 1},
          {"preset", c.preset},
          {"mode", c.mode},
          {"code", c.code},
          {"self_inverse", c.self_inverse},
          {"noise", {{"kind", to_string(c.noise.kind)}, {"p", c.noise.p}, {"eta", c.noise.eta}}},
          {"training",
           {{"epsilon", t.epsilon},
            {"epochs", t.epochs},
            {"minibatch_size", t.minibatch_size},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"adam_eps", t.adam_eps},
            {"optimizer", t.optimizer == OptimizerKind::Nadam ? "nadam" : "plain"},
            {"amsgrad", t.amsgrad},
            {"max_restarts", t.max_restarts},
            {"restart_threshold", c.auto_threshold ? json("auto") : json(t.restart_threshold)}}},
          {"batch_states", c.batch_states},
          {"n_samples", c.n_samples},
          {"internal_noise", c.internal_noise},
          {"eta_grid", c.eta_grid},
          {"erasure",
           {{"max_losses", c.erasure.max_losses},
            {"p_loss", c.erasure.p_loss},
            {"p_comp", c.erasure.p_comp},
            {"comp_kind", to_string(c.erasure.comp_kind)},
            {"copies", c.erasure.copies}}},
          {"discovery",
           {{"n", c.discovery.n},
            {"sigma", c.discovery.sigma},
            {"nodes", c.discovery.nodes},
            {"copies", c.discovery.copies},
            {"n_validation", c.discovery.n_validation},
            {"n_dfs", c.discovery.n_dfs},
            {"n_marginal", c.discovery.n_marginal}}},
          {"memory", mem},
          {"model", c.model_path},
          {"seed", c.seed}};
}

inline std::uint64_t config_hash(const RunConfig& c) { return fnv1a64(config_to_json(c).dump()); }

}  // namespace qaeqec
