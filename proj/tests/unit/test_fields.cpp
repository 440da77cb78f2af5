#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

#include "homoglab/fields.hpp"
#include "homoglab/serialize.hpp"

using namespace homoglab;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1.0) / v.size());
}

}  // namespace

TEST(Spectrum, NormalizedToAmplitude) {
  for (auto kind : {SpectrumKind::PowerLaw, SpectrumKind::LorentzianCovariance, SpectrumKind::WhiteNoise}) {
    const auto g = TorusGrid::make(2, 64, 0.5);
    const SpectrumSpec spec{kind, 1.0, 2.5};
    const auto c = discrete_spectrum(spec, g);
    double total = 0.0;
    for_each_frequency(g, [&](std::size_t i, const Frequency& f, double mult) {
      if (f.is_zero()) {
        EXPECT_EQ(c[i], 0.0);
      }
      EXPECT_GE(c[i], 0.0);
      total += mult * c[i];
    });
    EXPECT_NEAR(total / g.volume(), 2.5, 1e-12);
  }
}

TEST(Spectrum, PowerLawShape) {
  const auto g = TorusGrid::make(2, 32);
  const auto c = discrete_spectrum({SpectrumKind::PowerLaw, 0.5, 1.0}, g);
  double ref = 0.0;
  for_each_frequency(g, [&](std::size_t i, const Frequency& f, double) {
    if (f.n[0] == 1 && f.n[1] == 0) ref = c[i] / std::pow(laplacian_symbol(g, f), -0.75);
  });
  for_each_frequency(g, [&](std::size_t i, const Frequency& f, double) {
    if (!f.is_zero()) EXPECT_NEAR(c[i], ref * std::pow(laplacian_symbol(g, f), -0.75), 1e-12 * c[i]);
  });
}

TEST(Spectrum, InvalidSpecs) {
  const auto g = TorusGrid::make(2, 16);
  EXPECT_THROW(discrete_spectrum({SpectrumKind::PowerLaw, 2.0, 1.0}, g), Error);
  EXPECT_THROW(discrete_spectrum({SpectrumKind::PowerLaw, 0.0, 1.0}, g), Error);
  EXPECT_THROW(discrete_spectrum({SpectrumKind::WhiteNoise, 1.0, -1.0}, g), Error);
}

TEST(Gaussian, Deterministic) {
  const auto g = TorusGrid::make(2, 64);
  const SpectrumSpec spec{SpectrumKind::PowerLaw, 1.0, 1.0};
  const auto a = sample_gaussian_field(spec, g, 42);
  const auto b = sample_gaussian_field(spec, g, 42);
  const auto c = sample_gaussian_field(spec, g, 43);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), g.size() * sizeof(double)), 0);
  EXPECT_NE(std::memcmp(a.data(), c.data(), g.size() * sizeof(double)), 0);
}

TEST(Gaussian, ZeroAmplitudeGivesZero) {
  const auto g = TorusGrid::make(2, 32);
  EXPECT_EQ(max_abs(sample_gaussian_field({SpectrumKind::PowerLaw, 1.0, 0.0}, g, 1)), 0.0);
}

TEST(Gaussian, PointVarianceEqualsAmplitude) {
  // E omega(x)^2 = sum_{k != 0} c_h / (L h)^d, the normalization target.
  for (auto kind : {SpectrumKind::PowerLaw, SpectrumKind::LorentzianCovariance, SpectrumKind::WhiteNoise}) {
    const auto g = TorusGrid::make(2, 64);
    std::vector<double> v;
    for (std::uint32_t s = 0; s < 200; ++s) {
      const auto w = sample_gaussian_field({kind, 1.0, 1.7}, g, derive_seed(9, s));
      v.push_back(dot(w, w) / static_cast<double>(g.size()));
    }
    EXPECT_NEAR(mean_of(v), 1.7, 4.0 * stderr_of(v));
  }
}

TEST(Gaussian, WhiteNoiseDecorrelates) {
  const auto g = TorusGrid::make(2, 16);
  std::vector<ScalarField> samples;
  for (std::uint32_t s = 0; s < 1000; ++s) samples.push_back(sample_gaussian_field({SpectrumKind::WhiteNoise, 1.0, 1.0}, g, derive_seed(3, s)));
  const std::vector<Coord> lags{{2, 0, 0}, {0, 3, 0}, {2, 2, 0}, {5, 1, 0}};
  for (const auto& e : covariance_estimate(samples, lags)) EXPECT_LE(std::abs(e.estimate), 4.0 / std::sqrt(1000.0));
}

TEST(Gaussian, PowerLawCovarianceDecay) {
  // Exact discrete covariance c(x) = sum_k c_h(k) e^{ikx} / (L h)^d from the spectrum.
  // Zero-mode removal bends the ratio c(x)/c(2x) away from 2^beta at lags near L/8,
  // so the shape check uses lags up to L/32.
  const auto g = TorusGrid::make(2, 1024);
  const SpectrumSpec spec{SpectrumKind::PowerLaw, 1.0, 1.0};
  const auto chat = discrete_spectrum(spec, g);
  Spectrum s(g);
  for (std::size_t i = 0; i < chat.size(); ++i) s[i] = chat[i];
  const ScalarField exact = inverse_fft(s);
  EXPECT_NEAR(exact[0], 1.0, 1e-12);
  auto at = [&](int r) { return exact[g.index({r, 0, 0})]; };
  for (int r : {4, 8, 16}) EXPECT_NEAR(at(r) / at(2 * r), 2.0, 0.3) << r;
  EXPECT_NEAR(std::log(at(32) / at(4)) / std::log(8.0), -1.0, 0.2);

  // The sampled fields reproduce it.
  std::vector<ScalarField> samples;
  for (std::uint32_t k = 0; k < 24; ++k) samples.push_back(sample_gaussian_field(spec, g, derive_seed(17, k)));
  std::vector<Coord> lags;
  for (int r : {0, 4, 8, 16, 32}) lags.push_back({r, 0, 0});
  for (const auto& e : covariance_estimate(samples, lags)) EXPECT_NEAR(e.estimate, at(e.lag[0]), 4.0 * e.std_error) << e.lag[0];
}

TEST(Covariance, ZeroFieldsAndLagZero) {
  const auto g = TorusGrid::make(2, 16);
  std::vector<ScalarField> zeros(4, ScalarField(g));
  const std::vector<Coord> lags{{0, 0, 0}, {1, 0, 0}};
  for (const auto& e : covariance_estimate(zeros, lags)) {
    EXPECT_EQ(e.estimate, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
  }
  std::vector<ScalarField> unit;
  for (std::uint32_t s = 0; s < 50; ++s) unit.push_back(white_noise(g, 5, s));
  const auto e0 = covariance_estimate(unit, lags)[0];
  EXPECT_NEAR(e0.estimate, 1.0, 4.0 * e0.std_error + 1.0 / g.size());
}

TEST(Transform, ConstantContrastZero) {
  const auto g = TorusGrid::make(2, 16);
  const auto a = lipschitz_transform(white_noise(g, 1), {0.3, 0.0, TransformShape::Tanh});
  for (std::size_t c = 0; c < g.size(); ++c) {
    EXPECT_EQ(a(c, 0, 0), 0.65);
    EXPECT_EQ(a(c, 1, 1), 0.65);
    EXPECT_EQ(a(c, 0, 1), 0.0);
  }
}

TEST(Transform, Saturation) {
  const auto g = TorusGrid::make(1, 4);
  ScalarField w(g);
  w[0] = 1e300;
  w[1] = -1e300;
  const auto a = lipschitz_transform(w, {0.2, 1.0, TransformShape::Clamp});
  EXPECT_EQ(a(0, 0, 0), 1.0);
  EXPECT_NEAR(a(1, 0, 0), 0.2, 1e-15);
  EXPECT_NEAR(a(2, 0, 0), 0.6, 1e-15);
}

TEST(Transform, PointwiseBoundsOnManyCells) {
  const auto g = TorusGrid::make(2, 1024);
  const auto w = sample_gaussian_field({SpectrumKind::PowerLaw, 1.0, 1.0}, g, 8);
  for (auto shape : {TransformShape::Clamp, TransformShape::Tanh}) {
    const auto a = lipschitz_transform(w, {0.2, 3.0, shape});
    const auto rep = check_admissibility(a, 0.2);
    EXPECT_TRUE(rep.ok);
    EXPECT_LE(rep.max_operator_norm, 1.0);
    EXPECT_GE(rep.min_symmetric_eigenvalue, 0.2 - 1e-15);
  }
  // Lipschitz in omega with constant (1 - lambda) h / 2.
  const TransformSpec t{0.2, 0.1, TransformShape::Tanh};
  for (double x = -5; x < 5; x += 0.37) EXPECT_LE(std::abs(lipschitz_value(x + 1e-3, t) - lipschitz_value(x, t)), 0.4 * 0.1 * 1e-3 + 1e-15);
}

TEST(Admissibility, DetectsViolations) {
  const auto g = TorusGrid::make(2, 8);
  Eigen::Matrix2d m;
  m << 1.2, 0.0, 0.0, 0.5;
  auto a = CoefficientField::constant(g, Eigen::Matrix2d::Identity() * 0.5);
  a.set_matrix(3, m);
  const auto rep = check_admissibility(a, 0.2);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.violating_cells, 1u);
}

TEST(Inclusions, EmptyAndFull) {
  const auto g = TorusGrid::make(2, 32);
  InclusionSpec spec{0.0, 2.0, Eigen::Matrix2d::Identity() * 0.2, Eigen::Matrix2d::Identity(), 0.2};
  const auto a = sample_poisson_inclusions(spec, g, 1);
  EXPECT_EQ(inclusion_volume_fraction(a, spec.a_in), 0.0);
  spec.intensity = 1.0;
  spec.radius = 64.0;
  const auto b = sample_poisson_inclusions(spec, g, 1);
  EXPECT_EQ(inclusion_volume_fraction(b, spec.a_in), 1.0);
}

TEST(Inclusions, BooleanCoverage) {
  const auto g = TorusGrid::make(2, 64);
  const double R = 3.0, rho = 0.025;
  const InclusionSpec spec{rho, R, Eigen::Matrix2d::Identity() * 0.2, Eigen::Matrix2d::Identity(), 0.2};
  std::vector<double> f;
  for (std::uint32_t s = 0; s < 200; ++s) f.push_back(inclusion_volume_fraction(sample_poisson_inclusions(spec, g, derive_seed(2, s)), spec.a_in));
  const double want = 1.0 - std::exp(-rho * std::numbers::pi * R * R);
  EXPECT_NEAR(mean_of(f), want, 3.0 * stderr_of(f));
}

TEST(Inclusions, DeterministicAndValidated) {
  const auto g = TorusGrid::make(2, 32);
  InclusionSpec spec{0.05, 2.0, Eigen::Matrix2d::Identity() * 0.2, Eigen::Matrix2d::Identity(), 0.2};
  const auto a = sample_poisson_inclusions(spec, g, 7);
  const auto b = sample_poisson_inclusions(spec, g, 7);
  EXPECT_EQ(std::memcmp(a.entry(0, 0).data(), b.entry(0, 0).data(), g.size() * sizeof(double)), 0);
  spec.a_in = Eigen::Matrix2d::Identity() * 0.1;
  EXPECT_THROW(sample_poisson_inclusions(spec, g, 7), Error);
}

TEST(Serialize, CoefficientRoundTrip) {
  const auto g = TorusGrid::make(3, 8, 0.25);
  const auto a = lipschitz_transform(white_noise(g, 4), {0.3, 1.0, TransformShape::Tanh});
  const std::string path = ::testing::TempDir() + "coef.hglf";
  write_record(path, to_record(a));
  const auto b = coefficient_from_record(read_record(path));
  EXPECT_TRUE(b.grid() == g);
  for (int j = 0; j < 3; ++j)
    for (int l = 0; l < 3; ++l) EXPECT_EQ(std::memcmp(a.entry(j, l).data(), b.entry(j, l).data(), g.size() * sizeof(double)), 0);
}
