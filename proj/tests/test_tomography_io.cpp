#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "qaeqec/config.hpp"
#include "qaeqec/io.hpp"
#include "qaeqec/tomography.hpp"

using namespace qaeqec;

namespace {

/// Random CPTP map given by k Kraus operators: blocks of a Haar isometry.
std::vector<ComplexMatrix> random_kraus(int n_in, int n_out, int k_qubits, Rng& rng) {
  const auto din = dim_of(n_in), dout = dim_of(n_out);
  const int total = n_out + k_qubits;
  const ComplexMatrix u = haar_random_unitary(total, rng).matrix();
  const auto k = dim_of(k_qubits);
  std::vector<ComplexMatrix> ops;
  for (Eigen::Index a = 0; a < k; ++a) ops.push_back(u.block(a * dout, 0, dout, din));
  return ops;
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST(Tomography, ChiRoundTripsRandomChannels) {
  Rng rng(1);
  for (auto [nin, nout] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {3, 1}, {1, 3}, {2, 1}}) {
    const auto kraus = random_kraus(nin, nout, 2, rng);
    const auto channel = kraus_channel(kraus);
    const auto pm = chi_matrix(channel, nin, nout);
    EXPECT_LT(max_abs(pm.chi - pm.chi.adjoint()), 1e-12);
    const ComplexMatrix rho = oracle::random_density(dim_of(nin), rng);
    EXPECT_LT(max_abs(apply_chi(pm, rho) - channel(rho)), 1e-8) << nin << "->" << nout;
    // Trace preservation makes the chi trace equal to the input dimension.
    EXPECT_NEAR(pm.chi.trace().real(), static_cast<double>(dim_of(nin)), 1e-10);
  }
}

TEST(Tomography, OperatorBasisIsOrthonormal) {
  for (auto [nin, nout] : std::vector<std::pair<int, int>>{{2, 2}, {3, 1}, {1, 3}}) {
    const auto b = operator_basis(nin, nout);
    EXPECT_EQ(b.size(), static_cast<std::size_t>(dim_of(nin) * dim_of(nout)));
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        EXPECT_NEAR(std::abs((b[i].adjoint() * b[j]).trace() - cplx(i == j ? 1.0 : 0.0)), 0.0, 1e-13);
  }
}

TEST(Tomography, IdentityAndPauliChannels) {
  const ChannelFn id = [](const ComplexMatrix& x) { return x; };
  const auto chi_id = chi_matrix(id, 2, 2);
  EXPECT_NEAR(chi_id.chi(0, 0).real(), 4.0, 1e-12);
  EXPECT_NEAR(std::abs(chi_id.chi.sum() - cplx(4.0)), 0.0, 1e-12);
  const auto chi_x = chi_matrix(kraus_channel({gates::X()}), 1, 1);
  EXPECT_NEAR(chi_x.chi(1, 1).real(), 2.0, 1e-12);
  const auto id1 = chi_matrix(id, 1, 1);
  EXPECT_NEAR(channel_distance(id1, chi_x).max_abs, 2.0, 1e-12);
  EXPECT_NEAR(channel_distance(id1, chi_x).choi_fidelity, 0.0, 1e-12);
  EXPECT_NEAR(channel_distance(id1, id1).choi_fidelity, 1.0, 1e-12);
  EXPECT_THROW(channel_distance(id1, chi_id), ArgumentError);
}

TEST(Tomography, NonlinearMapIsRejected) {
  const ChannelFn squash = [](const ComplexMatrix& x) { return ComplexMatrix(x * x); };
  EXPECT_THROW(chi_matrix(squash, 1, 1), ConsistencyError);
}

TEST(Tomography, EncoderThenDecoderIsTheRecovery) {
  const auto enc = kraus_channel(encoder_kraus_3qc());
  const auto dec = kraus_channel(decoder_kraus_3qc());
  const ChannelFn both = [&](const ComplexMatrix& x) { return dec(enc(x)); };
  EXPECT_LT(channel_distance(chi_matrix(both, 3, 3), reference_recovery_chi()).max_abs, 1e-12);
  EXPECT_LT(channel_distance(code_recovery_chi(three_qubit_code()), reference_recovery_chi()).max_abs, 1e-12);
  EXPECT_EQ(reference_encoder_chi().chi.rows(), 16);
}

TEST(Tomography, ModelChannelOfHandBuiltTransitions) {
  const Model m = hand_built_qae();
  const auto& pipe = m.members[0];
  const auto enc = chi_matrix(transition_channel(m, std::get<Transition>(pipe[0])), 3, 1);
  const auto dec = chi_matrix(transition_channel(m, std::get<Transition>(pipe[1])), 1, 3);
  EXPECT_LT(channel_distance(enc, reference_encoder_chi()).max_abs, 1e-12);
  EXPECT_LT(channel_distance(dec, reference_decoder_chi()).max_abs, 1e-12);
}

TEST(Io, Fnv1aTestVectors) {
  EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
  EXPECT_EQ(hex64(fnv1a64("foobar")), "85944171f73967e8");
}

TEST(Io, DoublesRoundTripThroughText) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.9813333333333333}) EXPECT_EQ(std::stod(fmt_double(v)), v);
}

TEST(Io, CsvHeaderAndRows) {
  const auto path = temp_path("qaeqec_test.csv");
  {
    CsvWriter w(path, "validate", 0xabcULL, 7, {"p", "mean_fidelity", "label"});
    w.row({0.1, 1, "x"});
    EXPECT_THROW(w.row({0.1}), ArgumentError);
  }
  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 3U);
  EXPECT_EQ(lines[0], "# qaeqec-1.0 command=validate config_hash=0000000000000abc seed=7");
  EXPECT_EQ(lines[1], "p,mean_fidelity,label");
  EXPECT_EQ(lines[2], "0.10000000000000001,1,x");
  std::filesystem::remove(path);
}

TEST(Io, ModelRoundTripIsBitIdentical) {
  Rng rng(2);
  for (const Model& m : {make_model({{3, 1, 3}, true}, rng), make_model({{2, 3, 1, 3, 2}, false}, rng), make_erasure_collection(4, 1, rng),
                         rearrange_to_qae(make_encoding_finder(3, 1.0, rng))}) {
    ModelMetadata meta{0.0123, 200, 2, 99, "fig3"};
    const auto path = temp_path("qaeqec_model.qaemodel.json");
    save_model(path, m, meta);
    ModelMetadata back;
    const Model r = load_model(path, &back);
    EXPECT_EQ(r.params, m.params);
    EXPECT_EQ(r.labels, m.labels);
    EXPECT_EQ(r.routes, m.routes);
    EXPECT_EQ(r.kind, m.kind);
    EXPECT_EQ(back.seed, 99U);
    EXPECT_EQ(back.final_cost, 0.0123);
    // The reloaded model computes the same outputs.
    const int n = pipeline_in_width(m.members[0]);
    const DensityMatrix rho(n, oracle::random_density(dim_of(n), rng));
    EXPECT_EQ(forward(r, rho).matrix(), forward(m, rho).matrix());
    std::filesystem::remove(path);
  }
}

TEST(Io, CorruptModelsAreRejected) {
  Rng rng(3);
  const Model m = make_model({{3, 1, 3}, true}, rng);
  json j = model_to_json(m);
  json broken = j;
  broken["params"][0]["data"][0][0] = 5.0;
  EXPECT_THROW(model_from_json(broken), StateValidityError);
  json wrong_version = j;
  wrong_version["version"] = 2;
  EXPECT_THROW(model_from_json(wrong_version), ConfigError);
  json missing = j;
  missing.erase("members");
  EXPECT_THROW(model_from_json(missing), ConfigError);
  json bad_slot = j;
  bad_slot["members"][0]["stages"][0]["gates"][0]["slot"] = 3;
  EXPECT_THROW(model_from_json(bad_slot), ConfigError);
  json odd_dim = j;
  odd_dim["params"][0] = detail::matrix_to_json(ComplexMatrix::Identity(3, 3));
  EXPECT_THROW(model_from_json(odd_dim), ConfigError);
  EXPECT_THROW(load_model(temp_path("qaeqec_missing_file.json")), ConfigError);
}

TEST(Config, PresetsResolve) {
  for (const char* name : {"fig3", "fig5a", "fig5b", "fig6", "fig8", "appendixD"}) EXPECT_NO_THROW(preset(name).validate()) << name;
  const auto c = preset("fig6");
  EXPECT_EQ(c.mode, "correlated");
  EXPECT_EQ(c.eta_grid, (std::vector<double>{1, 2, 4, 8, 16}));
  EXPECT_EQ(preset("fig3").training.minibatch_size, 3);
  EXPECT_EQ(preset("fig5a").code, "5qc");
  EXPECT_THROW(preset("fig9"), ConfigError);
}

TEST(Config, JsonOverridesAndSchemaChecks) {
  const auto c = config_from_json(json::parse(R"({"preset": "fig3", "noise": {"p": 0.2}, "training": {"epochs": 10,
      "restart_threshold": 0.3}, "memory": {"p_n": {"lo": 0, "hi": 0.02, "step": 0.01}}, "seed": 5})"));
  EXPECT_EQ(c.noise.p, 0.2);
  EXPECT_EQ(c.training.epochs, 10);
  EXPECT_FALSE(c.auto_threshold);
  EXPECT_EQ(c.training.restart_threshold, 0.3);
  EXPECT_EQ(c.memory.p_n_grid.size(), 3U);
  EXPECT_EQ(c.seed, 5U);
  EXPECT_THROW(config_from_json(json::parse(R"({"nosie": {}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"training": {"lr": 0.1}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"training": {"epochs": "many"}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"noise": {"kind": "amplitude"}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"version": 3})")), ConfigError);
  auto bad = config_from_json(json::parse(R"({"batch_states": 4})"));
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, HashTracksResolvedValues) {
  const auto a = preset("fig3");
  auto b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.training.epochs = 201;
  EXPECT_NE(config_hash(a), config_hash(b));
  const auto round = config_from_json(config_to_json(a));
  EXPECT_EQ(config_hash(round), config_hash(a));
}
