#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homoglab/scaling.hpp"

using namespace homoglab;

namespace {

ScalarField cosine_mode(const TorusGrid& g, int axis, double phase = 0.0) {
  ScalarField u(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    u[i] = std::cos(2.0 * std::numbers::pi * g.coords(i)[axis] / g.side() + phase);
  return u;
}

ScalarField random_scalar(const TorusGrid& g, std::uint64_t seed) {
  PhiloxStream rng(seed, 1, Purpose::Test);
  ScalarField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = rng.normal();
  return u;
}

CoefficientField gaussian_medium(const TorusGrid& g, std::uint64_t seed, double lambda = 0.2, double contrast = 1.0) {
  const auto omega = sample_gaussian_field({SpectrumKind::PowerLaw, 1.0, 1.0}, g, seed);
  return lipschitz_transform(omega, {lambda, contrast, TransformShape::Clamp});
}

double max_rel_curl(const VectorField& F) {
  double c = 0.0;
  for (int j = 0; j < F.dim(); ++j)
    for (int k = j + 1; k < F.dim(); ++k) c = std::max(c, max_abs(discrete_curl(F, j, k)));
  return c / std::max(max_abs(F), 1e-300);
}

}  // namespace

TEST(Laws, PiStarBranches) {
  EXPECT_DOUBLE_EQ(pi_star(16.0, 1.0, 2), 16.0);
  EXPECT_DOUBLE_EQ(pi_star(10.0, 3.0, 2), 100.0);
  EXPECT_NEAR(pi_star(std::exp(2.0), 2.0, 2), std::exp(4.0) / 2.0, 1e-12);
  EXPECT_NEAR(pi_star(std::exp(2.0), 2.0, 2), 27.299, 1e-3);
  EXPECT_THROW(pi_star(1.5, 2.0, 2), Error);
}

TEST(Laws, MuStarBranches) {
  EXPECT_DOUBLE_EQ(mu_star(3.0, 1.0, 2), 2.0);
  for (double r : {0.0, 5.0, 1e3}) EXPECT_EQ(mu_star(r, 3.0, 3), 1.0);
  EXPECT_NEAR(mu_star(0.0, 2.0, 2), 0.6931471805599453, 1e-15);
  EXPECT_NEAR(mu_star(10.0, 2.0, 3), std::sqrt(std::log(12.0)), 1e-15);
  EXPECT_NEAR(mu_star(10.0, 2.5, 2), std::sqrt(std::log(12.0)), 1e-15);
}

TEST(Laws, MuAlphaBranches) {
  EXPECT_NEAR(mu_alpha_d(0.0, 2.0, 2), std::log(2.0), 1e-15);
  EXPECT_EQ(mu_alpha_d(100.0, 4.0, 3), 1.0);
  EXPECT_NEAR(mu_alpha_d(8.0, 1.0, 2), 3.0, 1e-14);
}

TEST(Laws, MuStarAgreesWithMuAlpha) {
  for (int d : {2, 3})
    for (double b : {0.25, 1.0, 1.5, 2.0, 2.5, 4.0})
      for (double r : {0.0, 1.0, 2.5, 16.0, 1000.0}) {
        const double u = mu_star(r, b, d), v = mu_alpha_d(r, b, d);
        EXPECT_NEAR(u, v, 1e-13 * u) << d << " " << b << " " << r;
      }
  for (double r : {0.0, 7.0}) EXPECT_NEAR(mu_star(r, 0.5, 1), mu_alpha_d(r, 0.5, 1), 1e-13);
}

TEST(Laws, MonotoneAndPositive) {
  for (int d : {1, 2, 3})
    for (double b : {0.5, 1.0, 2.0, 3.0}) {
      if (d == 1 && b >= 2.0) continue;
      double prev_mu = 0.0, prev_pi = 0.0;
      for (double r = 2.0; r < 500.0; r *= 1.3) {
        const double m = mu_star(r, b, d), p = pi_star(r, b, d);
        EXPECT_GT(m, 0.0);
        EXPECT_GE(m, prev_mu);
        if (!(b == d && r < 3.0)) EXPECT_GE(p, prev_pi);
        prev_mu = m;
        prev_pi = p;
      }
    }
}

TEST(Laws, OneDimensionalCriticalBranchUndefined) {
  EXPECT_THROW(mu_star(4.0, 2.0, 1), Error);
  EXPECT_THROW(mu_alpha_d(4.0, 3.0, 1), Error);
}

TEST(Laws, ScalingLawDispatch) {
  ScalingLaw law{LawKind::MuAlphaD, 0.0, 2, 1.0};
  EXPECT_NEAR(law(8.0), 3.0, 1e-14);
  law = {LawKind::PiStar, 1.0, 2, 0.0};
  EXPECT_DOUBLE_EQ(law(16.0), 16.0);
}

TEST(G1, RadialDerivativeAtUnitRadius) {
  EXPECT_NEAR(g1_radial_derivative(1.0, 2), 1.0 / (2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(g1_radial_derivative(0.5, 3), 0.5 / (3.0 * 4.0 * std::numbers::pi / 3.0), 1e-15);
}

TEST(G1, ZeroCentreVanishes) {
  const auto g = TorusGrid::make(2, 64);
  const auto f = make_g1({0, 0, 0}, 4.0, g);
  EXPECT_EQ(max_abs(f.field), 0.0);
}

TEST(G1, DivergenceIdentity) {
  const auto g = TorusGrid::make(2, 128);
  const double r = 6.0;
  const Coord x{10, -7, 0};
  const auto f = make_g1(x, r, g);
  const auto offs = ball_offsets(g, r);
  ScalarField target = indicator(g, x, offs, false) - indicator(g, {0, 0, 0}, offs, false);
  target *= 1.0 / static_cast<double>(offs.size());
  const ScalarField w = averaging_weight(f);
  EXPECT_LE(norm(w - target) / norm(target), 1e-8);
}

TEST(G1, PairingGivesBallAverageDifference) {
  const auto g = TorusGrid::make(2, 64, 0.5);
  const double r = 3.0;
  const Coord x{8, 3, 0};
  for (const auto shift : {std::array<double, 3>{0, 0, 0}, corner_shift(0, 1)}) {
    const auto f = make_g1(x, r, g, shift);
    const auto phi = random_scalar(g, 3);
    const auto offs = ball_offsets(g, r, shift);
    const double lhs = integrate(discrete_gradient(phi), f.field);
    const double rhs = average_over(phi, x, offs) - average_over(phi, {0, 0, 0}, offs);
    EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(rhs)));
  }
}

TEST(G1, CurlFree) {
  const auto g3 = TorusGrid::make(3, 32);
  EXPECT_LE(max_rel_curl(make_g1({3, 2, -1}, 3.0, g3).field), 1e-10);
  const auto g2 = TorusGrid::make(2, 128);
  EXPECT_LE(max_rel_curl(make_g1({20, 0, 0}, 8.0, g2, corner_shift(0, 1)).field), 1e-10);
}

TEST(G1, DipoleBoundWithFrozenConstant) {
  for (int d : {2, 3}) {
    const auto g = TorusGrid::make(d, d == 2 ? 256 : 64);
    for (double r : {2.0, 4.0, 8.0}) {
      if (d == 3 && r > 4.0) continue;
      Coord x{static_cast<int>(r), 0, 0};
      const auto f = make_g1(x, r, g);
      double worst = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        double m2 = 0.0;
        for (int j = 0; j < d; ++j) m2 += f.field[j][i] * f.field[j][i];
        const double y = g.distance_to_origin(g.coords(i), {0.5, 0.5, 0.5});
        worst = std::max(worst, std::sqrt(m2) / (r * std::pow(y + r, -d)));
      }
      EXPECT_LE(worst, g1_bound_constant(d)) << "d=" << d << " r=" << r;
    }
  }
}

TEST(G1, GeometryErrorWhenTooLarge) {
  const auto g = TorusGrid::make(2, 64);
  EXPECT_THROW(make_g1({12, 0, 0}, 6.0, g), Error);
  try {
    make_g1({12, 0, 0}, 6.0, g);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GeometryError);
  }
}

TEST(G2, UnitRadiusVanishes) {
  const auto g = TorusGrid::make(2, 64);
  EXPECT_EQ(max_abs(make_g2(1.0, g).field), 0.0);
}

TEST(G2, ExactlyZeroOutsideBall) {
  const auto g = TorusGrid::make(2, 128);
  const double r = 9.5;
  const auto f = make_g2(r, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    for (int j = 0; j < 2; ++j) {
      Coord n = c;
      ++n[j];
      if (g.distance_to_origin(c) >= r && g.distance_to_origin(n) >= r) ASSERT_EQ(f.field[j][i], 0.0);
    }
  }
}

TEST(G2, RadialProfileMatchesIntegratedIdentity) {
  const double r = 6.0;
  for (int d : {2, 3}) {
    const double vbr = unit_ball_volume(d) * std::pow(r, d);
    for (double rho : {0.3, 0.9, 1.5, 3.0, 5.9}) {
      const double e = 1e-6;
      const double num = (g2_potential(rho + e, r, d) - g2_potential(rho - e, r, d)) / (2 * e);
      const double want = rho <= 1.0 ? rho / (d * vbr) * (1.0 - std::pow(r, d)) : rho / (d * vbr) * (1.0 - std::pow(r / rho, d));
      EXPECT_NEAR(num, want, 1e-7) << d << " " << rho;
    }
    EXPECT_NEAR(g2_potential(r - 1e-12, r, d), 0.0, 1e-9);
  }
}

TEST(G2, PairingWithSmoothTest) {
  const auto g = TorusGrid::make(2, 128);
  const double r = 16.0;
  const auto f = make_g2(r, g);
  const auto phi = cosine_mode(g, 0);
  const double lhs = integrate(discrete_gradient(phi), f.field);
  const double rhs = dot(phi, averaging_weight(f)) * g.cell_volume();
  EXPECT_NEAR(lhs, rhs, 1e-6 * std::abs(rhs));
  // The discrete weight reproduces the two ball averages up to lattice resolution.
  const double cont = average_over(phi, {0, 0, 0}, ball_offsets(g, 1.0)) - average_over(phi, {0, 0, 0}, ball_offsets(g, r));
  EXPECT_NEAR(lhs, cont, 0.05 * std::abs(cont));
}

TEST(G2, CurlFreeAndBounded) {
  const auto g = TorusGrid::make(2, 128);
  const auto f = make_g2(12.0, g);
  EXPECT_LE(max_rel_curl(f.field), 1e-10);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = g.distance_to_origin(g.coords(i));
    for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(f.field[j][i]) / std::pow(1.0 + y, -1.0));
  }
  EXPECT_LE(worst, g2_bound_constant(2));
}

TEST(SkewTransform, RejectsEqualIndices) {
  const auto g = TorusGrid::make(2, 32);
  const auto f = make_g1({2, 0, 0}, 2.0, g);
  EXPECT_THROW(sigma_average_transform(f, 1, 1), Error);
  EXPECT_THROW(sigma_average_transform(f, 0, 2), Error);
}

TEST(SkewTransform, MatrixPattern) {
  const auto g = TorusGrid::make(3, 8);
  AveragingField f{AveragingKind::G1Dipole, 1.0, {0, 0, 0}, {0, 0, 0}, ScalarField(g), VectorField(g)};
  f.field[0] = random_scalar(g, 9);
  const auto s = sigma_average_transform(f, 0, 1);
  EXPECT_EQ(max_abs(s.field[0]), 0.0);
  EXPECT_EQ(max_abs(s.field[2]), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    EXPECT_EQ(s.field[1][i], -f.field[0].at({c[0] - 1, c[1], c[2]}));
  }
}

TEST(SkewTransform, SigmaIdentityOnSampledMedium) {
  const auto g = TorusGrid::make(2, 64);
  SolveOptions opts;
  opts.tol = 1e-10;
  const auto c = compute_corrector(gaussian_medium(g, 11), opts);
  const auto f = make_g1({6, 4, 0}, 5.0, g, corner_shift(0, 1));
  const auto sg = sigma_average_transform(f, 0, 1);
  for (int i = 0; i < 2; ++i) {
    const double lhs = integrate_sigma(c, i, 0, 1, f);
    const double rhs = integrate(c.q[static_cast<std::size_t>(i)], sg.field);
    const double scale = l2_norm(c.q[static_cast<std::size_t>(i)]) * l2_norm(f.field);
    EXPECT_NEAR(lhs, rhs, 10 * opts.tol * scale) << i;
  }
}

TEST(Fit, ExactPowers) {
  std::vector<SeriesPoint> s;
  for (double r : {2.0, 4.0, 8.0, 16.0}) s.push_back({r, r * r, 0.0, 2});
  auto f = fit_power_law(s);
  EXPECT_NEAR(f.exponent, 2.0, 1e-12);
  EXPECT_NEAR(f.exponent_stderr, 0.0, 1e-10);
  for (auto& p : s) p.value = 5.0;
  f = fit_power_law(s);
  EXPECT_NEAR(f.exponent, 0.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 5.0, 1e-12);
}

TEST(Fit, NoisySyntheticSeries) {
  PhiloxStream rng(4, 0, Purpose::Test);
  std::vector<SeriesPoint> s;
  for (double r = 2.0; s.size() < 6; r *= 2.0) {
    const double v = std::pow(r, -0.5) * (1.0 + 0.05 * rng.normal());
    s.push_back({r, v, 0.05 * v, 10});
  }
  const auto f = fit_power_law(s);
  EXPECT_TRUE(f.weighted);
  EXPECT_NEAR(f.exponent, -0.5, 0.1);
  EXPECT_LT(f.exponent_stderr, 0.05);
}

TEST(Fit, DegenerateSeries) {
  std::vector<SeriesPoint> s{{1, 1, 0, 2}, {2, 2, 0, 2}};
  EXPECT_THROW(fit_power_law(s), Error);
  s.push_back({4, 0.0, 0, 2});
  try {
    fit_power_law(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateSeries);
  }
}

TEST(Campaign, DeterministicMediumIsDegenerate) {
  CampaignSetup setup;
  setup.grid = TorusGrid::make(2, 32);
  setup.samples = 8;
  setup.sampler = [&](std::uint32_t) {
    return lipschitz_transform(ScalarField(setup.grid, 0.3), {0.2, 0.0, TransformShape::Clamp});
  };
  const auto rep = measure_average_decay(setup, {2.0, 3.0, 4.0}, {{1, 0, 0}, {0, 1, 0}});
  for (const auto& p : rep.series) EXPECT_EQ(p.value, 0.0);
  EXPECT_FALSE(rep.fit_valid);
  EXPECT_NE(rep.fit_note.find("DegenerateSeries"), std::string::npos);
  const auto gr = measure_corrector_growth(setup, {2.0, 3.0, 4.0});
  for (const auto& p : gr.series) EXPECT_EQ(p.value, 0.0);
}

TEST(Campaign, ThreadCountDoesNotChangeResults) {
  CampaignSetup setup;
  setup.grid = TorusGrid::make(2, 32);
  setup.samples = 8;
  setup.sampler = [&](std::uint32_t s) { return gaussian_medium(setup.grid, derive_seed(5, s)); };
  setup.threads = 1;
  const auto a = measure_corrector_growth(setup, {2.0, 3.0, 4.0});
  const auto b = measure_average_decay(setup, {2.0, 3.0, 4.0}, {{1, 0, 0}});
  setup.threads = 4;
  const auto c = measure_corrector_growth(setup, {2.0, 3.0, 4.0});
  const auto d = measure_average_decay(setup, {2.0, 3.0, 4.0}, {{1, 0, 0}});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.series[i].value, c.series[i].value);
    EXPECT_EQ(a.series[i].std_error, c.series[i].std_error);
    EXPECT_EQ(b.series[i].value, d.series[i].value);
    EXPECT_EQ(b.series[i].std_error, d.series[i].std_error);
    EXPECT_GT(a.series[i].value, 0.0);
  }
}

TEST(Campaign, FailedSamplesAreReported) {
  CampaignSetup setup;
  setup.grid = TorusGrid::make(2, 32);
  setup.samples = 8;
  setup.sampler = [&](std::uint32_t s) {
    if (s == 3) fail(ErrorKind::InvalidSpec, "synthetic failure");
    return gaussian_medium(setup.grid, derive_seed(5, s));
  };
  const auto rep = measure_corrector_growth(setup, {2.0, 3.0, 4.0});
  EXPECT_EQ(rep.samples_ok, 7u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].first, 3u);
}

TEST(Campaign, RadiiOutsideRangeRejected) {
  CampaignSetup setup;
  setup.grid = TorusGrid::make(2, 32);
  setup.sampler = [&](std::uint32_t) { return CoefficientField::constant(setup.grid, Eigen::MatrixXd::Identity(2, 2)); };
  EXPECT_THROW(measure_corrector_growth(setup, {1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(measure_corrector_growth(setup, {2.0, 3.0, 5.0}), Error);
}

TEST(Helmholtz, LEapSlopeForIdentity) {
  const auto g = TorusGrid::make(2, 1024);
  const auto a = CoefficientField::constant(g, Eigen::MatrixXd::Identity(2, 2));
  const auto sol = helmholtz_decay_probe(a, {ProbeKind::LemmaLEap, 4.0, 1.0}, {16, 32, 64, 128});
  ASSERT_TRUE(sol.report.fit_valid);
  EXPECT_NEAR(sol.report.fit.exponent, -2.0, 0.2);
}

TEST(Helmholtz, LEasAxisProfile) {
  const auto g = TorusGrid::make(2, 1024);
  const auto a = CoefficientField::constant(g, Eigen::MatrixXd::Identity(2, 2));
  const double r = 2.0;
  const auto sol = helmholtz_decay_probe(a, {ProbeKind::LemmaLEas, r, 0.0}, {16, 32, 64});
  for (const auto& p : las_axis_profile(sol.grad_v, r, {16, 32})) {
    EXPECT_NEAR(p.measured, p.exact, 0.1 * std::abs(p.exact)) << p.rho;
  }
}

TEST(Helmholtz, ExactProfileLeadingOrder) {
  // For large rho the exact profile approaches (d-1) log(rho)/rho^d up to O(rho^{-d}).
  for (int d : {2, 3}) {
    const double r = 1.0;
    for (double rho : {1e3, 1e6}) {
      const double lead = (d - 1) * std::log(rho) / std::pow(rho, d);
      const double diff = las_axis_gradient(rho, r, d) - lead;
      EXPECT_LE(std::abs(diff) * std::pow(rho, d), 2.0);
    }
  }
}
