// Train a 3-1-3 autoencoder on bit-flip noise, validate it and compare its channel with the recovery map.
#include <cstdio>

#include "qaeqec/experiments.hpp"

using namespace qaeqec;

int main() {
  const auto code = three_qubit_code();
  const NoiseSpec noise{NoiseKind::BitFlip, 0.1, 1.0};
  TrainingConfig cfg;
  cfg.epochs = 200;
  cfg.minibatch_size = 3;
  const auto r = train_qae(code, noise, cfg, 3);
  std::printf("final cost %.5f after %d attempt(s)\n", r.final_cost, r.attempts);

  Rng rng(42);
  const auto rep = validate_qae(r.model, code, noise, 5000, rng);
  const double p = noise.p, p_l = 3 * p * p * (1 - p) + p * p * p;
  std::printf("mean fidelity %.5f +- %.5f (table recovery: %.5f)\n", rep.mean_fidelity, rep.std_error, 1 - 2.0 / 3.0 * p_l);
  for (const auto& c : rep.classes) std::printf("  %-12s %.6f (n=%zu)\n", c.name.c_str(), c.mean, c.count);

  const auto d = channel_distance(chi_matrix(model_channel(r.model), 3, 3), reference_recovery_chi());
  std::printf("chi distance to the recovery map %.2e\n", d.max_abs);
}
