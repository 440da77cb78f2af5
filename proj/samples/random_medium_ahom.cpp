// Monte Carlo estimate of the homogenized matrix for a transformed Gaussian
// medium. Usage: sample_random_medium_ahom [L] [N] [beta]

#include <cstdio>
#include <cstdlib>

#include "homoglab/homoglab.hpp"

int main(int argc, char** argv) {
  using namespace homoglab;
  const int L = argc > 1 ? std::atoi(argv[1]) : 64;
  const std::size_t N = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 8;
  const double beta = argc > 3 ? std::atof(argv[3]) : 1.0;
  try {
    const auto g = TorusGrid::make(2, L);
    const SpectrumSpec spec{SpectrumKind::PowerLaw, beta, 1.0};
    const TransformSpec tr{0.2, 1.0, TransformShape::Tanh};
    std::vector<Eigen::MatrixXd> samples;
    for (std::uint32_t s = 0; s < N; ++s) {
      const auto a = lipschitz_transform(sample_gaussian_field(spec, g, derive_seed(1, s)), tr);
      samples.push_back(compute_corrector(a).ahom_sample);
      std::printf("sample %2u  a11 %.6f  a22 %.6f  a12 %+.2e\n", s, samples.back()(0, 0), samples.back()(1, 1), samples.back()(0, 1));
    }
    const auto est = summarize_ahom(samples);
    std::printf("mean a11 %.6f +- %.6f, a22 %.6f +- %.6f\n", est.mean(0, 0), est.std_error(0, 0), est.mean(1, 1), est.std_error(1, 1));
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
