// Decay of the gradient response to a localized dipole forcing in a
// homogeneous medium.

#include <cstdio>

#include "homoglab/homoglab.hpp"

int main() {
  using namespace homoglab;
  const auto g = TorusGrid::make(2, 512);
  const auto a = CoefficientField::constant(g, Eigen::MatrixXd::Identity(2, 2));
  const auto sol = helmholtz_decay_probe(a, {ProbeKind::LemmaLEap, 4.0, 1.0}, {8, 16, 32, 64});
  const auto& rep = sol.report;
  std::printf("%6s %14s %14s\n", "R", "rms |grad v|", "envelope");
  for (std::size_t i = 0; i < rep.series.size(); ++i) std::printf("%6.0f %14.6e %14.6e\n", rep.series[i].scale, rep.series[i].value, rep.predicted[i]);
  std::printf("fitted slope %.3f (law %s)\n", rep.fit.exponent, rep.predicted_law.c_str());
}
