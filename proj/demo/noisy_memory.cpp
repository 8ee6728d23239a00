// A qubit stored for two idle rounds: bare, encoded, and encoded with a noisy autoencoder in between.
#include <cstdio>

#include "qaeqec/experiments.hpp"

using namespace qaeqec;

int main() {
  const double p_i = 0.1;
  std::printf("p_i = %.2f: the autoencoder beats the bare qubit below p_n = %.4f and the plain code below %.4f\n", p_i,
              critical_pn_single(p_i), critical_pn_logical(p_i));
  std::printf("%6s %10s %10s %10s %10s  %s\n", "p_n", "single", "encoded", "corrected", "1st order", "region");
  Rng rng(7);
  for (double p_n : {0.0, 0.005, 0.01, 0.02, 0.05}) {
    const auto pt = memory_point(p_i, p_n, nullptr, 20000, rng);
    std::printf("%6.3f %10.5f %10.5f %10.5f %10.5f  %s\n", p_n, pt.single.mean, pt.uncorr.mean, pt.corr.mean, analytic_p_corr(p_i, p_n),
                pt.region.c_str());
  }
}
