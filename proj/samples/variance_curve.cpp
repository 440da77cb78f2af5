// Annulus variance of the linearized corrector: spectral formula next to a
// Monte Carlo estimate, for a power-law spectrum.

#include <cstdio>

#include "homoglab/homoglab.hpp"

int main() {
  using namespace homoglab;
  const SpectrumSpec spec{SpectrumKind::PowerLaw, 1.0, 1.0};
  const auto g = TorusGrid::make(2, 256);
  const std::vector<double> radii{4, 8, 16, 32, 64};
  const auto ex = linearized_variance_exact(spec, g, radii);
  const auto mc = linearized_variance_mc(spec, g, radii, 64, 3);
  std::printf("regime %s\n%6s %12s %12s %10s\n", to_string(ex.regime), "R", "exact", "mc", "stderr");
  for (std::size_t i = 0; i < radii.size(); ++i) std::printf("%6.0f %12.6f %12.6f %10.6f\n", radii[i], ex.values[i], mc.values[i], mc.std_errors[i]);
}
