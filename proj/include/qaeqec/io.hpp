#pragma once

// Model files (.qaemodel.json), CSV emission and the config hash.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qaeqec/network.hpp"

namespace qaeqec {

inline constexpr const char* kArtifactVersion = "qaeqec-1.0";
inline constexpr int kModelFormatVersion = 1;

using json = nlohmann::json;

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// 17 significant digits, enough to round-trip a double.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

/// Header line "# <version> command=<cmd> config_hash=<hex> seed=<n>", then a column line, then rows.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& command, std::uint64_t config_hash, std::uint64_t seed,
            const std::vector<std::string>& columns)
      : out_(path), columns_(columns.size()) {
    if (!out_) throw ConfigError("cannot open output file " + path);
    out_ << "# " << kArtifactVersion << " command=" << command << " config_hash=" << hex64(config_hash) << " seed=" << seed << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  /// Cells are either numbers (formatted with 17 digits) or text.
  struct Cell {
    std::string text;
    Cell(double v) : text(fmt_double(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(std::size_t v) : text(std::to_string(v)) {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
  };

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_) throw ArgumentError("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i].text;
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

// ---------------------------------------------------------------------------
// Model serialization

namespace detail {

inline json matrix_to_json(const ComplexMatrix& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline ComplexMatrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 1 || cols < 1 || data.size() != static_cast<std::size_t>(rows * cols)) throw ConfigError("matrix entry count mismatch");
  ComplexMatrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) m(r, c) = cplx(data[k].at(0).get<double>(), data[k].at(1).get<double>());
  return m;
}

inline json stage_to_json(const Stage& st) {
  if (const auto* t = std::get_if<Transition>(&st)) {
    json gates = json::array();
    for (const auto& g : t->gates) gates.push_back({{"slot", g.slot}, {"mirrored", g.mirrored}, {"targets", g.targets}});
    return {{"type", "transition"}, {"in", t->in}, {"out", t->out}, {"gates", gates}};
  }
  if (const auto* e = std::get_if<EraseStage>(&st)) return {{"type", "erase"}, {"width", e->width}, {"positions", e->positions}};
  const auto& d = std::get<DephaseStage>(st);
  return {{"type", "dephase"}, {"sigma", d.quad.sigma}, {"nodes", d.quad.nodes}, {"weights", d.quad.weights}};
}

inline Stage stage_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "transition") {
    Transition t{j.at("in").get<int>(), j.at("out").get<int>(), {}};
    for (const auto& g : j.at("gates"))
      t.gates.push_back({g.at("slot").get<int>(), g.at("mirrored").get<bool>(), g.at("targets").get<std::vector<int>>()});
    return t;
  }
  if (type == "erase") return EraseStage{j.at("width").get<int>(), j.at("positions").get<std::vector<int>>()};
  if (type == "dephase") {
    DephasingQuadrature q{j.at("sigma").get<double>(), j.at("nodes").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>()};
    if (q.nodes.size() != q.weights.size() || q.nodes.empty()) throw ConfigError("dephasing quadrature is malformed");
    return DephaseStage{q};
  }
  throw ConfigError("unknown stage type '" + type + "'");
}

inline json pipeline_to_json(const Pipeline& p) {
  json a = json::array();
  for (const auto& st : p) a.push_back(stage_to_json(st));
  return a;
}

inline Pipeline pipeline_from_json(const json& j) {
  Pipeline p;
  for (const auto& st : j) p.push_back(stage_from_json(st));
  return p;
}

/// Structural checks: slot references, register widths and stage chaining.
inline void check_model_structure(const Model& m) {
  auto check_pipe = [&](const Pipeline& p) {
    int width = -1;
    for (const auto& st : p) {
      if (const auto* t = std::get_if<Transition>(&st)) {
        if (width >= 0 && width != t->in) throw ConfigError("pipeline stages do not chain");
        for (const auto& g : t->gates) {
          if (g.slot < 0 || g.slot >= m.num_slots()) throw ConfigError("gate references a missing slot");
          if (static_cast<int>(g.targets.size()) != m.slot_qubits(g.slot)) throw ConfigError("gate target count does not match its slot");
          for (int q : g.targets)
            if (q < 0 || q >= t->register_size()) throw ConfigError("gate target outside its register");
        }
        width = t->out;
      } else if (const auto* e = std::get_if<EraseStage>(&st)) {
        if (width >= 0 && width != e->width) throw ConfigError("pipeline stages do not chain");
        for (int q : e->positions)
          if (q < 0 || q >= e->width) throw ConfigError("erasure position outside its register");
        width = e->width - static_cast<int>(e->positions.size());
      }
    }
  };
  if (m.members.empty()) throw ConfigError("model has no members");
  if (m.routes.size() != m.members.size() || m.labels.size() != m.members.size())
    throw ConfigError("members, routes and labels differ in length");
  for (const auto& p : m.members) check_pipe(p);
  if (!m.encoder.empty()) check_pipe(m.encoder);
}

}  // namespace detail

/// Training metadata stored alongside the parameters.
struct ModelMetadata {
  double final_cost = 0.0;
  int epochs = 0;
  int attempts = 0;
  std::uint64_t seed = 0;
  std::string preset;
};

inline json model_to_json(const Model& m, const ModelMetadata& meta = {}) {
  json params = json::array();
  for (const auto& p : m.params) params.push_back(detail::matrix_to_json(p));
  json members = json::array();
  for (std::size_t i = 0; i < m.members.size(); ++i)
    members.push_back({{"label", m.labels[i]}, {"route", m.routes[i]}, {"stages", detail::pipeline_to_json(m.members[i])}});
  return {{"format", "qaemodel"},
          {"version", kModelFormatVersion},
          {"kind", m.kind},
          {"architecture",
           {{"widths", m.arch.widths}, {"self_inverse", m.arch.self_inverse}, {"mirror", m.arch.mirror == MirrorSide::Front ? "front" : "back"}}},
          {"params", params},
          {"members", members},
          {"encoder", detail::pipeline_to_json(m.encoder)},
          {"metadata",
           {{"final_cost", meta.final_cost}, {"epochs", meta.epochs}, {"attempts", meta.attempts}, {"seed", meta.seed}, {"preset", meta.preset}}}};
}

/// Parses and validates a model; throws ConfigError on schema problems and StateValidityError
/// when a stored matrix is not unitary.
inline Model model_from_json(const json& j, ModelMetadata* meta = nullptr) {
  Model m;
  try {
    if (j.at("format").get<std::string>() != "qaemodel") throw ConfigError("not a qaemodel file");
    if (j.at("version").get<int>() != kModelFormatVersion) throw ConfigError("unsupported model format version");
    m.kind = j.at("kind").get<std::string>();
    const auto& a = j.at("architecture");
    m.arch.widths = a.at("widths").get<std::vector<int>>();
    m.arch.self_inverse = a.at("self_inverse").get<bool>();
    const auto mirror = a.at("mirror").get<std::string>();
    if (mirror != "front" && mirror != "back") throw ConfigError("mirror must be front or back");
    m.arch.mirror = mirror == "front" ? MirrorSide::Front : MirrorSide::Back;
    for (const auto& p : j.at("params")) {
      auto mat = detail::matrix_from_json(p);
      if (mat.rows() != mat.cols()) throw ConfigError("slot matrix is not square");
      qubits_of(mat.rows());
      m.params.push_back(std::move(mat));
    }
    for (const auto& mem : j.at("members")) {
      m.labels.push_back(mem.at("label").get<std::string>());
      m.routes.push_back(mem.at("route").get<std::vector<int>>());
      m.members.push_back(detail::pipeline_from_json(mem.at("stages")));
    }
    m.encoder = detail::pipeline_from_json(j.at("encoder"));
    if (meta) {
      const auto& md = j.at("metadata");
      meta->final_cost = md.at("final_cost").get<double>();
      meta->epochs = md.at("epochs").get<int>();
      meta->attempts = md.at("attempts").get<int>();
      meta->seed = md.at("seed").get<std::uint64_t>();
      meta->preset = md.at("preset").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  } catch (const SizeError& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  detail::check_model_structure(m);
  m.check_unitarity();
  return m;
}

inline void save_model(const std::string& path, const Model& m, const ModelMetadata& meta = {}) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write model file " + path);
  out << model_to_json(m, meta).dump(1) << "\n";
}

inline Model load_model(const std::string& path, ModelMetadata* meta = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("model file " + path + " is not valid JSON: " + e.what());
  }
  return model_from_json(j, meta);
}

}  // namespace qaeqec
