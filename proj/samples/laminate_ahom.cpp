// Homogenized matrix of a two-phase layered medium against the harmonic and
// arithmetic means of the phases.

#include <cstdio>

#include "homoglab/homoglab.hpp"

int main() {
  using namespace homoglab;
  const int L = 128;
  const double lo = 0.2, hi = 1.0;
  const auto g = TorusGrid::make(2, L);
  ScalarField alpha(g);
  for (std::size_t i = 0; i < g.size(); ++i) alpha[i] = g.coords(i)[0] < L / 2 ? lo : hi;

  const auto c = compute_corrector(CoefficientField::isotropic(alpha), SolveOptions{1e-11});
  std::printf("ahom      = [[%.10f, %.2e], [%.2e, %.10f]]\n", c.ahom_sample(0, 0), c.ahom_sample(0, 1), c.ahom_sample(1, 0), c.ahom_sample(1, 1));
  std::printf("harmonic  = %.10f\narithmetic = %.10f\n", 2.0 * lo * hi / (lo + hi), 0.5 * (lo + hi));
  std::printf("iterations %d, %d\n", c.solver_iterations[0], c.solver_iterations[1]);
}
