// Command-line front end: train, validate, tomo, memory, discover.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qaeqec/config.hpp"

namespace fs = std::filesystem;
using namespace qaeqec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitNumerical = 4;

struct Options {
  std::string config_path;
  std::string preset_name;
  std::string model_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

RunConfig resolve(const Options& o, const std::string& default_preset) {
  RunConfig c;
  std::optional<std::string> p;
  if (!o.preset_name.empty()) p = o.preset_name;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config file " + o.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!p && !j.contains("preset")) p = default_preset;
    c = config_from_json(j, p);
  } else {
    c = preset(p ? *p : default_preset);
  }
  if (o.seed) c.seed = *o.seed;
  if (!o.model_path.empty()) c.model_path = o.model_path;
  c.training.seed = c.seed;
  c.validate();
  return c;
}

std::string out_path(const Options& o, const std::string& name) { return (fs::path(o.out_dir) / name).string(); }

ModelMetadata metadata(const TrainResult& r, const RunConfig& c) {
  return {r.final_cost, c.training.epochs, r.attempts, c.seed, c.preset};
}

void write_history(const Options& o, const std::string& name, const RunConfig& c, const TrainResult& r) {
  CsvWriter w(out_path(o, name), "train", config_hash(c), c.seed, {"epoch", "cost"});
  for (std::size_t e = 0; e < r.history.size(); ++e) w.row({e, r.history[e]});
}

void write_validation(const Options& o, const std::string& name, const std::string& command, const RunConfig& c,
                      const ValidationReport& r) {
  std::vector<std::string> cols{"p", "mean_fidelity", "std_error", "num_samples"};
  for (const auto& cl : r.classes) {
    cols.push_back(cl.name);
    cols.push_back(cl.name + " n");
  }
  CsvWriter w(out_path(o, name), command, config_hash(c), c.seed, cols);
  if (r.num_samples == 0) return;
  std::vector<CsvWriter::Cell> row{r.noise.p, r.mean_fidelity, r.std_error, r.num_samples};
  for (const auto& cl : r.classes) {
    row.emplace_back(cl.count ? fmt_double(cl.mean) : std::string());
    row.emplace_back(cl.count);
  }
  w.row(row);
}

void print_report(const ValidationReport& r) {
  std::printf("mean fidelity %.6f +- %.2g over %zu samples\n", r.mean_fidelity, r.std_error, r.num_samples);
  for (const auto& cl : r.classes)
    if (cl.count) std::printf("  %-28s %.6f  (n=%zu)\n", cl.name.c_str(), cl.mean, cl.count);
}

void write_discovery(const Options& o, const RunConfig& c, const DiscoveryReport& r) {
  CsvWriter w(out_path(o, "discovery.csv"), "discover", config_hash(c), c.seed,
              {"case", "fidelity", "std_error", "marginal_fidelity", "dfs_deviation"});
  for (std::size_t i = 0; i < r.fidelity.size(); ++i) {
    const std::string marg = i == 0 ? std::string() : fmt_double(r.marginal[i - 1]);
    w.row({r.labels[i], r.fidelity[i], r.fidelity_error[i], marg, r.dfs_deviation});
  }
  std::printf("DFS deviation %.3g\n", r.dfs_deviation);
  for (std::size_t i = 0; i < r.fidelity.size(); ++i)
    std::printf("  %-10s fidelity %.5f%s\n", r.labels[i].c_str(), r.fidelity[i],
                i ? (", marginal " + fmt_double(r.marginal[i - 1]).substr(0, 7)).c_str() : "");
}

int run_discovery(const Options& o, const RunConfig& c) {
  const auto res = encoding_discovery(c.discovery, c.training);
  save_model(out_path(o, "finder.qaemodel.json"), res.training.model, metadata(res.training, c));
  save_model(out_path(o, "qae.qaemodel.json"), res.qae, metadata(res.training, c));
  write_history(o, "history.csv", c, res.training);
  write_discovery(o, c, res.report);
  if (!res.success) {
    std::fprintf(stderr, "encoding discovery did not meet its acceptance checks after %d attempts\n", res.training.attempts);
    return kExitTraining;
  }
  return kExitOk;
}

int cmd_train(const Options& o) {
  const auto c = resolve(o, "fig3");
  const auto code = code_by_name(c.code);
  if (c.mode == "qae") {
    const auto r = train_qae(code, c.noise, c.training, c.batch_states, c.self_inverse, c.auto_threshold);
    save_model(out_path(o, "model.qaemodel.json"), r.model, metadata(r, c));
    write_history(o, "history.csv", c, r);
    std::printf("final cost %.6g after %d attempt(s)\n", r.final_cost, r.attempts);
    if (!r.success) {
      std::fprintf(stderr, "training did not reach the restart threshold\n");
      return kExitTraining;
    }
    return kExitOk;
  }
  if (c.mode == "correlated") {
    const auto pts = correlated_noise_study(c.noise.p, c.eta_grid, c.training, c.n_samples, c.batch_states);
    CsvWriter w(out_path(o, "correlated.csv"), "train", config_hash(c), c.seed,
                {"eta", "mean_fidelity", "std_error", "distance_standard", "distance_alternative", "strategy", "analytic_standard",
                 "analytic_alternative", "final_cost", "success"});
    bool ok = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      save_model(out_path(o, "model_eta" + std::to_string(i) + ".qaemodel.json"), p.training.model, metadata(p.training, c));
      w.row({p.eta, p.report.mean_fidelity, p.report.std_error, p.distance_standard, p.distance_alternative, p.strategy,
             p.analytic.standard, p.analytic.alternative, p.training.final_cost, p.training.success ? 1 : 0});
      std::printf("eta %-6g %-11s fidelity %.5f\n", p.eta, p.strategy.c_str(), p.report.mean_fidelity);
      ok = ok && p.training.success;
    }
    std::printf("analytic crossover eta_c = %.6g\n", critical_eta(c.noise.p));
    return ok ? kExitOk : kExitTraining;
  }
  if (c.mode == "erasure") {
    const auto r = erasure_collection(code, c.erasure, c.training, c.n_samples);
    int attempts = 0;
    for (const auto& t : r.training) attempts += t.attempts;
    save_model(out_path(o, "model.qaemodel.json"), r.model,
               {r.training[0].final_cost, c.training.epochs, attempts, c.seed, c.preset});
    write_validation(o, "validation.csv", "train", c, r.report);
    CsvWriter w(out_path(o, "members.csv"), "train", config_hash(c), c.seed,
                {"member", "clean_fidelity", "final_cost", "attempts", "success"});
    for (std::size_t i = 0; i < r.clean_fidelity.size(); ++i)
      w.row({r.model.labels[i], r.clean_fidelity[i], r.training[i].final_cost, r.training[i].attempts, r.training[i].success ? 1 : 0});
    print_report(r.report);
    return r.success ? kExitOk : kExitTraining;
  }
  return run_discovery(o, c);
}

int cmd_validate(const Options& o) {
  const auto c = resolve(o, "fig3");
  if (c.model_path.empty()) throw ConfigError("validate needs a model (--model or \"model\" in the config)");
  const Model m = load_model(c.model_path);
  Rng rng(c.seed);
  if (m.kind == "qae-from-finder") {
    DiscoverySetup s = c.discovery;
    s.n = m.arch.widths[1];
    s.n_validation = c.n_samples;
    write_discovery(o, c, discovery_report(m, s, c.seed));
    return kExitOk;
  }
  const auto code = code_by_name(c.code);
  ValidationReport r;
  if (m.kind == "erasure-collection") {
    if (pipeline_out_width(m.members[0]) != code.num_qubits()) throw ConfigError("collection does not match code " + code.name());
    r = validate_erasure_collection(m, code, c.erasure, c.n_samples, rng);
  } else {
    r = validate_qae(m, code, c.noise, c.n_samples, rng, InternalNoise{c.internal_noise});
  }
  write_validation(o, "validation.csv", "validate", c, r);
  print_report(r);
  return kExitOk;
}

void write_chi(const Options& o, const std::string& name, const RunConfig& c, const ProcessMatrix& pm) {
  CsvWriter w(out_path(o, name), "tomo", config_hash(c), c.seed, {"i", "j", "re", "im"});
  for (Eigen::Index i = 0; i < pm.chi.rows(); ++i)
    for (Eigen::Index j = 0; j < pm.chi.cols(); ++j)
      w.row({static_cast<std::size_t>(i), static_cast<std::size_t>(j), pm.chi(i, j).real(), pm.chi(i, j).imag()});
}

int cmd_tomo(const Options& o) {
  const auto c = resolve(o, "fig3");
  if (c.model_path.empty()) throw ConfigError("tomo needs a model (--model or \"model\" in the config)");
  const Model m = load_model(c.model_path);
  const int n_in = pipeline_in_width(m.members[0]);
  const int n_out = pipeline_out_width(m.members[0]);
  const auto chi = chi_matrix(model_channel(m), n_in, n_out);
  write_chi(o, "chi.csv", c, chi);

  CsvWriter w(out_path(o, "tomo_summary.csv"), "tomo", config_hash(c), c.seed, {"reference", "max_abs", "choi_fidelity"});
  auto report = [&](const std::string& name, const ProcessMatrix& ref) {
    const auto d = channel_distance(chi, ref);
    w.row({name, d.max_abs, d.choi_fidelity});
    std::printf("%-16s max|dchi| %.3e  Choi fidelity %.6f\n", name.c_str(), d.max_abs, d.choi_fidelity);
  };
  if (n_in == n_out) {
    for (const char* name : {"3qc", "3qc-alt", "4qec", "5qc"}) {
      const auto code = code_by_name(name);
      if (code.num_qubits() == n_in) report(name, code_recovery_chi(code));
    }
  }
  const auto dout = dim_of(n_out);
  report("fixed-output", chi_matrix(
                             [dout](const ComplexMatrix& x) {
                               ComplexMatrix r = ComplexMatrix::Zero(dout, dout);
                               r(0, 0) = x.trace();
                               return r;
                             },
                             n_in, n_out));
  const auto& pipe = m.members[0];
  if (pipe.size() == 2 && std::holds_alternative<Transition>(pipe[0]) && std::holds_alternative<Transition>(pipe[1])) {
    const auto& enc = std::get<Transition>(pipe[0]);
    const auto& dec = std::get<Transition>(pipe[1]);
    write_chi(o, "chi_encoder.csv", c, chi_matrix(transition_channel(m, enc), enc.in, enc.out));
    write_chi(o, "chi_decoder.csv", c, chi_matrix(transition_channel(m, dec), dec.in, dec.out));
  }
  return kExitOk;
}

int cmd_memory(const Options& o) {
  const auto c = resolve(o, "fig3");
  std::optional<Model> trained;
  if (!c.model_path.empty()) trained = load_model(c.model_path);
  const Model* qae = trained ? &*trained : nullptr;
  const std::vector<std::string> cols{"p_i", "p_n", "P_single", "se_single", "P_uncorr", "se_uncorr", "P_corr", "se_corr", "region"};
  auto row = [](CsvWriter& w, const MemoryPoint& p) {
    w.row({p.p_i, p.p_n, p.single.mean, p.single.std_error, p.uncorr.mean, p.uncorr.std_error, p.corr.mean, p.corr.std_error, p.region});
  };
  if (c.memory.point) {
    Rng rng(c.seed);
    const auto p = memory_point(c.memory.point->first, c.memory.point->second, qae, c.memory.n_samples, rng);
    CsvWriter w(out_path(o, "memory_point.csv"), "memory", config_hash(c), c.seed, cols);
    row(w, p);
    std::printf("P_single %.5f  P_uncorr %.5f  P_corr %.5f  (%s)\n", p.single.mean, p.uncorr.mean, p.corr.mean, p.region.c_str());
    return kExitOk;
  }
  const auto d = phase_diagram(c.memory.p_i_grid, c.memory.p_n_grid, c.memory.n_samples, c.seed, qae);
  CsvWriter w(out_path(o, "phase_grid.csv"), "memory", config_hash(c), c.seed, cols);
  for (const auto& p : d.points) row(w, p);
  CsvWriter b(out_path(o, "boundaries.csv"), "memory", config_hash(c), c.seed, {"p_i", "p_n_crit_single", "p_n_crit_logical"});
  for (std::size_t i = 0; i < d.p_i_grid.size(); ++i) b.row({d.p_i_grid[i], d.boundaries[i].crit_single, d.boundaries[i].crit_logical});
  std::printf("%zu grid points written\n", d.points.size());
  return kExitOk;
}

int cmd_discover(const Options& o) { return run_discovery(o, resolve(o, "appendixD")); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum autoencoders for error correction: training, validation, tomography and memory studies"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "JSON run configuration");
  app.add_option("--preset", o.preset_name, "fig3, fig5a, fig5b, fig6, fig8 or appendixD");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--threads", o.threads, "worker cap")->check(CLI::PositiveNumber);
  app.add_option("--model", o.model_path, "input .qaemodel.json for validate, tomo and memory");
  int (*handler)(const Options&) = nullptr;
  app.add_subcommand("train", "train a network or collection")->callback([&] { handler = cmd_train; });
  app.add_subcommand("validate", "validate a trained model")->callback([&] { handler = cmd_validate; });
  app.add_subcommand("tomo", "process tomography of a model")->callback([&] { handler = cmd_tomo; });
  app.add_subcommand("memory", "noisy-memory phase diagram")->callback([&] { handler = cmd_memory; });
  app.add_subcommand("discover", "train an encoding finder")->callback([&] { handler = cmd_discover; });
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  try {
    default_threads() = o.threads;
    fs::create_directories(o.out_dir);
    return handler(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SizeError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const StateValidityError& e) {
    std::fprintf(stderr, "numerical invariant violated: %s\n", e.what());
    return kExitNumerical;
  } catch (const ConsistencyError& e) {
    std::fprintf(stderr, "numerical invariant violated: %s\n", e.what());
    return kExitNumerical;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
